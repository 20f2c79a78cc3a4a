//! Manual throughput probe for the end-to-end training budget; run with
//! `cargo test --test timing_probe -- --ignored --nocapture`.

use std::time::Instant;

use srmesh::model::{build_autoencoder, train, TrainConfig};
use srmesh::patch::{build_layout, extract_patches};
use srmesh::remesh::{simplify, subdivide};
use srmesh::synth;

#[test]
#[ignore]
fn training_epoch_throughput() {
    // Same per-epoch workload shape as the desk-scale experiment: ~110
    // patches per frame, 36 frames, 3x augmentation.
    let frames = synth::bent_cylinder_sequence(36, 16);
    let template = &frames[0];
    let (normalized, _) = template.normalize_unit_cube().unwrap();
    let base = simplify(&normalized, 110, 0.1).unwrap().mesh;
    let sr = subdivide(&base, 3).unwrap();
    let layout = build_layout(&sr, 2).unwrap();
    let mut patches = Vec::new();
    for frame in &frames {
        let (norm, _) = frame.normalize_unit_cube().unwrap();
        // Reuse the template hierarchy; geometry differences are irrelevant
        // for throughput.
        let positions: Vec<_> = sr
            .fine_positions
            .iter()
            .map(|p| {
                let scale = 0.98 + 0.04 * (norm.vertices[0].x.abs() % 1.0);
                nalgebra::Point3::from(p.coords * scale)
            })
            .collect();
        patches.extend(extract_patches(&sr, &layout, &positions).unwrap());
    }
    println!("dataset: {} patches (x3 augmented in training)", patches.len());
    let mut model = build_autoencoder(0);
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 100,
        learning_rate: 0.001,
        augment: true,
        seed: 0,
        train_fraction: 1.0,
    };
    let start = Instant::now();
    let report = train(&mut model, &patches, &cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "3 epochs in {elapsed:.1}s -> {:.1}s/epoch, 500 epochs ~ {:.0}s; {} batches/epoch",
        elapsed / 3.0,
        elapsed / 3.0 * 500.0,
        report.batches_per_epoch
    );
}
