//! `srmesh`: remesh deforming surface meshes into semi-regular meshes,
//! train the patch autoencoder, reconstruct sequences, and export
//! embeddings.
//!
//! Exit codes: 0 success, 1 usage, 2 data validation, 3 numerical
//! failure.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use srmesh::mesh::{load_mesh, save_mesh, TriMesh};
use srmesh::model::{
    build_autoencoder, embed_sequence, load_checkpoint, reconstruct_sequence, save_checkpoint,
    train,
};
use srmesh::remesh::{
    apply_parametrization, fit_semiregular, project_parametrize, simplify, subdivide,
    SemiRegularMesh, CHAMFER_EVAL_SAMPLES,
};
use srmesh::{Error, Result};

use config::PipelineConfig;

#[derive(Parser)]
#[command(
    name = "srmesh",
    version,
    about = "Semi-regular remeshing and patch-based mesh autoencoding"
)]
struct Cli {
    /// JSON pipeline configuration (defaults used when absent).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master random seed; overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simplify, subdivide, and fit one mesh into a .srm file.
    Remesh {
        /// Input mesh (OBJ or OFF).
        input: PathBuf,
        /// Output .srm path.
        output: PathBuf,
        /// Proceed even when the input has non-manifold edges.
        #[arg(long)]
        force: bool,
    },
    /// Transfer a template remeshing to every frame of a sequence.
    Transfer {
        /// Fitted template .srm.
        template_srm: PathBuf,
        /// Directory of frame meshes sharing the template's topology.
        frames_dir: PathBuf,
        /// Output directory for per-frame .srm files.
        out_dir: PathBuf,
        /// Irregular mesh to parametrize against (default: first frame).
        #[arg(long)]
        template_mesh: Option<PathBuf>,
    },
    /// Train the autoencoder on .srm files (globs allowed).
    Train {
        srm_glob: Vec<String>,
        /// Checkpoint output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct .srm frames with a trained model.
    Reconstruct {
        checkpoint: PathBuf,
        srm_glob: Vec<String>,
        /// Output directory (OBJ + per-face error CSV per frame).
        #[arg(long)]
        out: PathBuf,
    },
    /// Export concatenated patch latents and their 2D PCA projection.
    Embed {
        checkpoint: PathBuf,
        srm_glob: Vec<String>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a per-class reconstruction error table.
    Eval {
        checkpoint: PathBuf,
        srm_glob: Vec<String>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap's own code (2) is reserved for data errors here.
            let code = if e.use_stderr() { 1 } else { 0 };
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Diverged { .. } | Error::NanLoss { .. } => 3,
        _ => 2,
    }
}

fn load_config(cli_config: &Option<PathBuf>, cli_seed: &Option<u64>) -> Result<PipelineConfig> {
    let cfg = match cli_config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let seed = cli_seed.unwrap_or(cfg.seed);
    Ok(cfg.with_seed(seed))
}

fn expand_globs(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for pattern in patterns {
        if pattern.contains(['*', '?', '[']) {
            let matches =
                glob::glob(pattern).map_err(|e| Error::Invalid(format!("bad glob: {e}")))?;
            for entry in matches {
                files.push(entry.map_err(|e| Error::Invalid(e.to_string()))?);
            }
        } else {
            files.push(PathBuf::from(pattern));
        }
    }
    files.sort();
    files.dedup();
    if files.is_empty() {
        return Err(Error::Invalid("no input files matched".into()));
    }
    Ok(files)
}

/// Mesh class of a file: its parent directory name.
fn class_of(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "default".into())
}

fn load_frames(files: &[PathBuf]) -> Result<Vec<SemiRegularMesh>> {
    files.iter().map(SemiRegularMesh::load_srm).collect()
}

fn check_consistent_levels(frames: &[SemiRegularMesh]) -> Result<()> {
    if let Some(first) = frames.first() {
        for f in frames {
            if f.level != first.level {
                return Err(Error::Invalid(format!(
                    "mixed subdivision levels: {} and {}",
                    first.level, f.level
                )));
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.config, &cli.seed)?;
    match cli.command {
        Command::Remesh {
            input,
            output,
            force,
        } => cmd_remesh(&cfg, &input, &output, force),
        Command::Transfer {
            template_srm,
            frames_dir,
            out_dir,
            template_mesh,
        } => cmd_transfer(&template_srm, &frames_dir, &out_dir, template_mesh.as_deref()),
        Command::Train { srm_glob, out } => cmd_train(&cfg, &srm_glob, &out),
        Command::Reconstruct {
            checkpoint,
            srm_glob,
            out,
        } => cmd_reconstruct(&cfg, &checkpoint, &srm_glob, &out),
        Command::Embed {
            checkpoint,
            srm_glob,
            out,
        } => cmd_embed(&cfg, &checkpoint, &srm_glob, &out),
        Command::Eval {
            checkpoint,
            srm_glob,
        } => cmd_eval(&cfg, &checkpoint, &srm_glob),
    }
}

fn cmd_remesh(cfg: &PipelineConfig, input: &Path, output: &Path, force: bool) -> Result<()> {
    let mesh = load_mesh(input)?;
    let report = mesh.topology_report();
    println!(
        "input: {} vertices, {} faces | boundary edges {}, non-manifold edges {}, Euler characteristic {}",
        mesh.vertex_count(),
        mesh.face_count(),
        report.boundary_edges,
        report.non_manifold_edges,
        report.euler_characteristic
    );
    if report.non_manifold_edges > 0 && !force {
        return Err(Error::TopologyMismatch(format!(
            "{} non-manifold edges; rerun with --force to proceed",
            report.non_manifold_edges
        )));
    }
    // The fit runs in normalized coordinates for scale-independent
    // behavior; the result is mapped back before writing.
    let (normalized, transform) = mesh.normalize_unit_cube()?;
    let simplified = simplify(&normalized, cfg.target_base_faces, cfg.simplify_lambda_edge)?;
    if !simplified.reached_target {
        eprintln!(
            "warning: target of {} faces unreachable; stopped at {}",
            cfg.target_base_faces,
            simplified.mesh.face_count()
        );
    }
    let sr = subdivide(&simplified.mesh, cfg.level)?;
    let (fitted, fit_report) = fit_semiregular(&sr, &normalized, &cfg.fit)?;
    let base = TriMesh::new(
        fitted
            .base
            .vertices
            .iter()
            .map(|p| transform.invert(p))
            .collect(),
        fitted.base.faces.clone(),
    )?;
    let out_sr = SemiRegularMesh {
        base,
        level: fitted.level,
        fine_positions: fitted
            .fine_positions
            .iter()
            .map(|p| transform.invert(p))
            .collect(),
        patch_grids: fitted.patch_grids.clone(),
    };
    out_sr.save_srm(output)?;
    let base_report = out_sr.base.topology_report();
    println!(
        "base: {} faces | boundary edges {}, non-manifold edges {}, Euler characteristic {}",
        out_sr.base.face_count(),
        base_report.boundary_edges,
        base_report.non_manifold_edges,
        base_report.euler_characteristic
    );
    println!(
        "fit: loss {:.6e} -> {:.6e} | chamfer (normalized, {} samples) {:.6e}",
        fit_report.initial_loss, fit_report.final_loss, CHAMFER_EVAL_SAMPLES, fit_report.final_chamfer
    );
    println!("wrote {}", output.display());
    Ok(())
}

fn mesh_files_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("obj") | Some("off") | Some("OBJ") | Some("OFF")
            )
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Invalid(format!(
            "no .obj/.off frames in {}",
            dir.display()
        )));
    }
    Ok(files)
}

fn cmd_transfer(
    template_srm: &Path,
    frames_dir: &Path,
    out_dir: &Path,
    template_mesh: Option<&Path>,
) -> Result<()> {
    let sr = SemiRegularMesh::load_srm(template_srm)?;
    let frames = mesh_files_in(frames_dir)?;
    let template = match template_mesh {
        Some(path) => load_mesh(path)?,
        None => load_mesh(&frames[0])?,
    };
    let param = project_parametrize(&sr, &template);

    // Base vertices are fine vertices too; recover the mapping from the
    // patch corners so base geometry follows the transfer.
    let n = sr.n();
    let mut base_to_fine = vec![0u32; sr.base.vertex_count()];
    for (f, face) in sr.base.faces.iter().enumerate() {
        let grid = &sr.patch_grids[f];
        base_to_fine[face[0] as usize] = grid.get(0, 0);
        base_to_fine[face[1] as usize] = grid.get(n, 0);
        base_to_fine[face[2] as usize] = grid.get(0, n);
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for frame_path in &frames {
        let frame = load_mesh(frame_path)?;
        let positions = apply_parametrization(&param, &frame).map_err(|e| {
            Error::TopologyMismatch(format!("{}: {e}", frame_path.display()))
        })?;
        let base = TriMesh::new(
            base_to_fine
                .iter()
                .map(|&v| positions[v as usize])
                .collect(),
            sr.base.faces.clone(),
        )?;
        let out_sr = SemiRegularMesh {
            base,
            level: sr.level,
            fine_positions: positions,
            patch_grids: sr.patch_grids.clone(),
        };
        let stem = frame_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "frame".into());
        out_sr.save_srm(out_dir.join(format!("{stem}.srm")))?;
    }
    println!("wrote {} .srm frames to {}", frames.len(), out_dir.display());
    Ok(())
}

/// Extracts normalized patches from every frame.
fn frames_to_patches(
    frames: &[SemiRegularMesh],
    pad: u32,
) -> Result<Vec<srmesh::patch::PatchGrid>> {
    let mut patches = Vec::new();
    for frame in frames {
        let fine = frame.fine_mesh();
        let (normalized, _) = fine.normalize_unit_cube()?;
        let layout = srmesh::patch::build_layout(frame, pad)?;
        patches.extend(srmesh::patch::extract_patches(
            frame,
            &layout,
            &normalized.vertices,
        )?);
    }
    Ok(patches)
}

fn cmd_train(cfg: &PipelineConfig, patterns: &[String], out: &Path) -> Result<()> {
    let files = expand_globs(patterns)?;
    let mut by_class: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for file in files {
        by_class.entry(class_of(&file)).or_default().push(file);
    }
    let mut train_frames = Vec::new();
    for (class, files) in &by_class {
        let split = ((files.len() as f64) * cfg.train.train_fraction).floor() as usize;
        let split = split.clamp(1, files.len());
        println!(
            "class {class}: {} frames, first {split} for training",
            files.len()
        );
        train_frames.extend(load_frames(&files[..split])?);
    }
    check_consistent_levels(&train_frames)?;
    if train_frames.iter().any(|f| f.level != cfg.level) {
        return Err(Error::Invalid(format!(
            "srm level differs from configured level {}",
            cfg.level
        )));
    }
    let patches = frames_to_patches(&train_frames, cfg.pad_width)?;
    println!(
        "training on {} patches ({} frames), {} epochs, batch {}, lr {}, augmentation {}",
        patches.len(),
        train_frames.len(),
        cfg.train.epochs,
        cfg.train.batch_size,
        cfg.train.learning_rate,
        if cfg.train.augment { "on" } else { "off" }
    );
    let mut model = build_autoencoder(cfg.train.seed);
    let report = train(&mut model, &patches, &cfg.train)?;
    save_checkpoint(&model, None, &report.loss_history, out)?;
    let loss_csv = out.with_extension("loss.csv");
    let mut csv = String::from("epoch,loss\n");
    for (epoch, loss) in report.loss_history.iter().enumerate() {
        csv.push_str(&format!("{epoch},{loss}\n"));
    }
    fs::write(&loss_csv, csv).map_err(|e| Error::io(&loss_csv, e))?;
    println!(
        "final training loss {:.6e}; wrote {} and {}",
        report.loss_history.last().unwrap(),
        out.display(),
        loss_csv.display()
    );
    Ok(())
}

fn cmd_reconstruct(
    cfg: &PipelineConfig,
    checkpoint: &Path,
    patterns: &[String],
    out: &Path,
) -> Result<()> {
    let (model, _, _) = load_checkpoint(checkpoint)?;
    let files = expand_globs(patterns)?;
    let frames = load_frames(&files)?;
    check_consistent_levels(&frames)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let results = reconstruct_sequence(&model, &frames, cfg.pad_width)?;
    for ((path, frame), result) in files.iter().zip(&frames).zip(&results) {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "frame".into());
        let mesh = TriMesh {
            vertices: result.positions.clone(),
            faces: frame.fine_faces(),
        };
        save_mesh(&mesh, out.join(format!("{stem}_recon.obj")))?;
        let mut csv = String::from("face,error\n");
        for (f, e) in result.per_face_error.iter().enumerate() {
            csv.push_str(&format!("{f},{e}\n"));
        }
        let csv_path = out.join(format!("{stem}_faces.csv"));
        fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
        println!(
            "{stem}: interior MSE {:.6e}, vertex MSE {:.6e}",
            result.interior_mse, result.vertex_mse
        );
    }
    println!("wrote {} reconstructions to {}", results.len(), out.display());
    Ok(())
}

fn cmd_embed(
    cfg: &PipelineConfig,
    checkpoint: &Path,
    patterns: &[String],
    out: &Path,
) -> Result<()> {
    let (model, _, _) = load_checkpoint(checkpoint)?;
    let files = expand_globs(patterns)?;
    let frames = load_frames(&files)?;
    check_consistent_levels(&frames)?;
    let embedding = embed_sequence(&model, &frames, cfg.pad_width)?;
    let (rows, cols) = (embedding.latents.nrows(), embedding.latents.ncols());
    let mut csv = String::new();
    for c in 0..cols {
        csv.push_str(&format!("latent_{c},"));
    }
    csv.push_str("pca_0,pca_1\n");
    for r in 0..rows {
        for c in 0..cols {
            csv.push_str(&format!("{},", embedding.latents[(r, c)]));
        }
        csv.push_str(&format!(
            "{},{}\n",
            embedding.projection[(r, 0)],
            embedding.projection[(r, 1)]
        ));
    }
    fs::write(out, csv).map_err(|e| Error::io(out, e))?;
    println!(
        "wrote {rows} x {} embedding to {} (explained variance {:.4}, {:.4})",
        cols + 2,
        out.display(),
        embedding.explained_variance[0],
        embedding.explained_variance[1]
    );
    Ok(())
}

fn cmd_eval(cfg: &PipelineConfig, checkpoint: &Path, patterns: &[String]) -> Result<()> {
    let (model, _, _) = load_checkpoint(checkpoint)?;
    let files = expand_globs(patterns)?;
    let mut by_class: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for file in files {
        by_class.entry(class_of(&file)).or_default().push(file);
    }
    println!("{:<24} {:>10} {:>24}", "Mesh Class", "#Vertices", "MSE (mean +- std)");
    for (class, files) in &by_class {
        let frames = load_frames(files)?;
        check_consistent_levels(&frames)?;
        let results = reconstruct_sequence(&model, &frames, cfg.pad_width)?;
        let mses: Vec<f64> = results.iter().map(|r| r.interior_mse).collect();
        let mean = mses.iter().sum::<f64>() / mses.len() as f64;
        let std = (mses.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / mses.len() as f64)
            .sqrt();
        println!(
            "{:<24} {:>10} {:>14.5} + {:.4}",
            class,
            frames[0].fine_positions.len(),
            mean,
            std
        );
    }
    Ok(())
}
