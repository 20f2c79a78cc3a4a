//! End-to-end checks of the command-line interface, driving the built
//! binary on small synthetic inputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use srmesh::mesh::save_mesh;
use srmesh::remesh::SemiRegularMesh;
use srmesh::synth;

fn srmesh_bin() -> &'static str {
    env!("CARGO_BIN_EXE_srmesh")
}

fn run(args: &[&str]) -> Output {
    Command::new(srmesh_bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_fast_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(
        &path,
        r#"{
            "target_base_faces": 60,
            "level": 3,
            "pad_width": 2,
            "fit": {"samples": 600, "steps": 40, "learning_rate": 1.0},
            "train": {"epochs": 2, "batch_size": 50, "learning_rate": 0.002},
            "seed": 7
        }"#,
    )
    .unwrap();
    path
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn usage_error_exits_1() {
    let output = run(&["no-such-command"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn bad_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"unknown_key": 5}"#).unwrap();
    let sphere = dir.path().join("sphere.obj");
    save_mesh(&synth::icosphere(2), &sphere).unwrap();
    let out = dir.path().join("out.srm");
    let output = run(&[
        "remesh",
        sphere.to_str().unwrap(),
        out.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn non_manifold_requires_force() {
    let dir = tempfile::tempdir().unwrap();
    // Three triangles on one shared edge.
    let mesh = srmesh::TriMesh::new(
        vec![
            srmesh::nalgebra::Point3::new(0.0, 0.0, 0.0),
            srmesh::nalgebra::Point3::new(1.0, 0.0, 0.0),
            srmesh::nalgebra::Point3::new(0.5, 1.0, 0.0),
            srmesh::nalgebra::Point3::new(0.5, -1.0, 0.5),
            srmesh::nalgebra::Point3::new(0.5, 0.0, 1.0),
        ],
        vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
    )
    .unwrap();
    let path = dir.path().join("nm.obj");
    save_mesh(&mesh, &path).unwrap();
    let out = dir.path().join("nm.srm");
    let cfg = write_fast_config(dir.path());
    let output = run(&[
        "remesh",
        path.to_str().unwrap(),
        out.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(!out.exists());
}

/// Full pipeline: remesh a sphere template, transfer to a small bent
/// sequence, train, reconstruct, embed, eval.
#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_fast_config(dir.path());
    let cfg = cfg.to_str().unwrap();

    // Frames: a 6-frame bent cylinder sequence, one class.
    let frames_dir = dir.path().join("frames").join("cyl");
    fs::create_dir_all(&frames_dir).unwrap();
    let frames = synth::bent_cylinder_sequence(6, 6);
    for (t, frame) in frames.iter().enumerate() {
        save_mesh(frame, frames_dir.join(format!("frame_{t:03}.obj"))).unwrap();
    }

    // remesh the first frame as template.
    let template_srm = dir.path().join("template.srm");
    let output = run(&[
        "remesh",
        frames_dir.join("frame_000.obj").to_str().unwrap(),
        template_srm.to_str().unwrap(),
        "--config",
        cfg,
    ]);
    assert!(
        output.status.success(),
        "remesh failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = stdout_of(&output);
    assert!(stdout.contains("chamfer"), "remesh must print the final chamfer");
    let sr = SemiRegularMesh::load_srm(&template_srm).unwrap();
    assert!(sr.base.face_count() <= 60);
    assert_eq!(sr.level, 3);

    // transfer to all frames.
    let srm_dir = dir.path().join("srm").join("cyl");
    let output = run(&[
        "transfer",
        template_srm.to_str().unwrap(),
        frames_dir.to_str().unwrap(),
        srm_dir.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "transfer failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let srm_files: Vec<_> = fs::read_dir(&srm_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(srm_files.len(), 6);

    // Frame 0 is the template mesh itself, so the transferred positions
    // must equal the library's own projection of the fit onto it.
    let frame0 = SemiRegularMesh::load_srm(srm_dir.join("frame_000.srm")).unwrap();
    let template = SemiRegularMesh::load_srm(&template_srm).unwrap();
    let frame0_mesh = srmesh::load_mesh(frames_dir.join("frame_000.obj")).unwrap();
    let param = srmesh::remesh::project_parametrize(&template, &frame0_mesh);
    let expected = srmesh::remesh::apply_parametrization(&param, &frame0_mesh).unwrap();
    for (a, b) in frame0.fine_positions.iter().zip(&expected) {
        assert!((a - b).norm() < 1e-12);
    }
    // And the projection residual itself stays bounded for a short fit.
    let mut worst = 0.0f64;
    for (a, b) in frame0.fine_positions.iter().zip(&template.fine_positions) {
        worst = worst.max((a - b).norm());
    }
    assert!(worst < 0.5, "worst {worst}");

    // train on the sequence.
    let ckpt = dir.path().join("model.ckpt");
    let glob_pattern = format!("{}/*.srm", srm_dir.display());
    let output = run(&["train", &glob_pattern, "--out", ckpt.to_str().unwrap(), "--config", cfg]);
    assert!(
        output.status.success(),
        "train failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(ckpt.exists());
    assert!(dir.path().join("model.loss.csv").exists());

    // reconstruct.
    let recon_dir = dir.path().join("recon");
    let output = run(&[
        "reconstruct",
        ckpt.to_str().unwrap(),
        &glob_pattern,
        "--out",
        recon_dir.to_str().unwrap(),
        "--config",
        cfg,
    ]);
    assert!(
        output.status.success(),
        "reconstruct failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(recon_dir.join("frame_000_recon.obj").exists());
    assert!(recon_dir.join("frame_000_faces.csv").exists());

    // embed: 6 rows x (patches * 8 + 2) columns.
    let emb = dir.path().join("emb.csv");
    let output = run(&[
        "embed",
        ckpt.to_str().unwrap(),
        &glob_pattern,
        "--out",
        emb.to_str().unwrap(),
        "--config",
        cfg,
    ]);
    assert!(
        output.status.success(),
        "embed failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = fs::read_to_string(&emb).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7); // header + 6 frames
    let expected_cols = template.base.face_count() * 8 + 2;
    assert_eq!(lines[0].split(',').count(), expected_cols);

    // eval prints one class row and is deterministic.
    let output1 = run(&["eval", ckpt.to_str().unwrap(), &glob_pattern, "--config", cfg]);
    assert!(output1.status.success());
    let output2 = run(&["eval", ckpt.to_str().unwrap(), &glob_pattern, "--config", cfg]);
    let s1 = stdout_of(&output1);
    assert_eq!(s1, stdout_of(&output2));
    assert!(s1.contains("cyl"), "eval output:\n{s1}");
    assert!(s1.contains("Mesh Class"));
}
