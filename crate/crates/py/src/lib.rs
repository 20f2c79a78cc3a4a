//! Python bindings: the mesh types and the full remesh/train/reconstruct
//! pipeline, exposed in-process.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use srmesh::mesh::TriMesh;
use srmesh::model::{
    build_autoencoder, embed_sequence, load_checkpoint, reconstruct_sequence, save_checkpoint,
    train, Autoencoder, TrainConfig,
};
use srmesh::nalgebra::Point3;
use srmesh::remesh::{
    apply_parametrization, chamfer_avg, fit_semiregular, project_parametrize, simplify,
    subdivide, FitConfig, SemiRegularMesh,
};

fn to_py_err(e: srmesh::Error) -> PyErr {
    match e {
        srmesh::Error::Diverged { .. } | srmesh::Error::NanLoss { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn points_from(vertices: Vec<(f64, f64, f64)>) -> Vec<Point3<f64>> {
    vertices
        .into_iter()
        .map(|(x, y, z)| Point3::new(x, y, z))
        .collect()
}

/// A triangular surface mesh.
#[pyclass(name = "TriMesh", skip_from_py_object)]
#[derive(Clone)]
struct PyTriMesh {
    inner: TriMesh,
}

#[pymethods]
impl PyTriMesh {
    #[new]
    fn new(vertices: Vec<(f64, f64, f64)>, faces: Vec<(u32, u32, u32)>) -> PyResult<Self> {
        let mesh = TriMesh::new(
            points_from(vertices),
            faces.into_iter().map(|(a, b, c)| [a, b, c]).collect(),
        )
        .map_err(to_py_err)?;
        Ok(PyTriMesh { inner: mesh })
    }

    /// Loads an OBJ or OFF file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyTriMesh {
            inner: srmesh::load_mesh(path).map_err(to_py_err)?,
        })
    }

    /// Writes OBJ with 6-decimal coordinates.
    fn save(&self, path: &str) -> PyResult<()> {
        srmesh::save_mesh(&self.inner, path).map_err(to_py_err)
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn face_count(&self) -> usize {
        self.inner.face_count()
    }

    fn vertices(&self) -> Vec<(f64, f64, f64)> {
        self.inner.vertices.iter().map(|p| (p.x, p.y, p.z)).collect()
    }

    fn faces(&self) -> Vec<(u32, u32, u32)> {
        self.inner.faces.iter().map(|f| (f[0], f[1], f[2])).collect()
    }

    /// (boundary_edges, non_manifold_edges, euler_characteristic).
    fn topology_report(&self) -> (usize, usize, i64) {
        let r = self.inner.topology_report();
        (r.boundary_edges, r.non_manifold_edges, r.euler_characteristic)
    }

    fn one_ring(&self, v: u32) -> Vec<u32> {
        self.inner.one_ring(v)
    }

    fn vertex_degree(&self, v: u32) -> usize {
        self.inner.vertex_degree(v)
    }

    /// Returns (normalized mesh, scale, translation).
    fn normalize_unit_cube(&self) -> PyResult<(PyTriMesh, f64, (f64, f64, f64))> {
        let (mesh, t) = self.inner.normalize_unit_cube().map_err(to_py_err)?;
        Ok((
            PyTriMesh { inner: mesh },
            t.scale,
            (t.translation.x, t.translation.y, t.translation.z),
        ))
    }

    /// Area-weighted surface samples, deterministic per seed.
    fn sample_surface(&self, n: usize, seed: u64) -> PyResult<Vec<(f64, f64, f64)>> {
        let pts = srmesh::mesh::sample_surface(&self.inner, n, seed).map_err(to_py_err)?;
        Ok(pts.iter().map(|p| (p.x, p.y, p.z)).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "TriMesh({} vertices, {} faces)",
            self.inner.vertex_count(),
            self.inner.face_count()
        )
    }
}

/// A base mesh with its subdivision hierarchy and fine geometry.
#[pyclass(name = "SemiRegularMesh", skip_from_py_object)]
#[derive(Clone)]
struct PySemiRegularMesh {
    inner: SemiRegularMesh,
}

#[pymethods]
impl PySemiRegularMesh {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PySemiRegularMesh {
            inner: SemiRegularMesh::load_srm(path).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save_srm(path).map_err(to_py_err)
    }

    #[getter]
    fn level(&self) -> u32 {
        self.inner.level
    }

    #[getter]
    fn patch_count(&self) -> usize {
        self.inner.patch_grids.len()
    }

    fn base(&self) -> PyTriMesh {
        PyTriMesh {
            inner: self.inner.base.clone(),
        }
    }

    fn fine_mesh(&self) -> PyTriMesh {
        PyTriMesh {
            inner: self.inner.fine_mesh(),
        }
    }

    fn fine_positions(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .fine_positions
            .iter()
            .map(|p| (p.x, p.y, p.z))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "SemiRegularMesh(level {}, {} patches, {} fine vertices)",
            self.inner.level,
            self.inner.patch_grids.len(),
            self.inner.fine_positions.len()
        )
    }
}

/// Greedy quadric-error simplification to at most `target_faces` faces.
#[pyfunction]
#[pyo3(signature = (mesh, target_faces, lambda_edge = 0.1))]
fn simplify_mesh(mesh: &PyTriMesh, target_faces: usize, lambda_edge: f64) -> PyResult<PyTriMesh> {
    let result = simplify(&mesh.inner, target_faces, lambda_edge).map_err(to_py_err)?;
    Ok(PyTriMesh { inner: result.mesh })
}

/// Midpoint subdivision into a semi-regular mesh.
#[pyfunction]
fn subdivide_mesh(base: &PyTriMesh, level: u32) -> PyResult<PySemiRegularMesh> {
    Ok(PySemiRegularMesh {
        inner: subdivide(&base.inner, level).map_err(to_py_err)?,
    })
}

#[allow(clippy::too_many_arguments)]
#[pyfunction]
#[pyo3(signature = (sr, target, samples = 5000, steps = 2000, learning_rate = 1.0,
    w_chamfer = 1.0, w_edge = 1.0, w_normal = 0.01, w_laplacian = 0.1, seed = 0))]
fn fit(
    sr: &PySemiRegularMesh,
    target: &PyTriMesh,
    samples: usize,
    steps: usize,
    learning_rate: f64,
    w_chamfer: f64,
    w_edge: f64,
    w_normal: f64,
    w_laplacian: f64,
    seed: u64,
) -> PyResult<(PySemiRegularMesh, f64, f64)> {
    let cfg = FitConfig {
        samples,
        steps,
        learning_rate,
        w_chamfer,
        w_edge,
        w_normal,
        w_laplacian,
        seed,
        fixed_samples: false,
    };
    let (fitted, report) = fit_semiregular(&sr.inner, &target.inner, &cfg).map_err(to_py_err)?;
    Ok((
        PySemiRegularMesh { inner: fitted },
        report.final_loss,
        report.final_chamfer,
    ))
}

/// Average chamfer distance between two point sets.
#[pyfunction]
fn chamfer(a: Vec<(f64, f64, f64)>, b: Vec<(f64, f64, f64)>) -> PyResult<f64> {
    chamfer_avg(&points_from(a), &points_from(b)).map_err(to_py_err)
}

/// Projects a semi-regular mesh onto `template` and re-evaluates the
/// barycentric coordinates on `deformed` (same topology as the template).
#[pyfunction]
fn transfer_positions(
    sr: &PySemiRegularMesh,
    template: &PyTriMesh,
    deformed: &PyTriMesh,
) -> PyResult<PySemiRegularMesh> {
    let param = project_parametrize(&sr.inner, &template.inner);
    let positions = apply_parametrization(&param, &deformed.inner).map_err(to_py_err)?;
    Ok(PySemiRegularMesh {
        inner: sr.inner.with_positions(positions),
    })
}

fn collect_frames(frames: &Bound<'_, PyAny>) -> PyResult<Vec<SemiRegularMesh>> {
    let mut out = Vec::new();
    for item in frames.try_iter()? {
        let item = item?;
        let sr: PyRef<PySemiRegularMesh> = item.extract()?;
        out.push(sr.inner.clone());
    }
    if out.is_empty() {
        return Err(PyValueError::new_err("no frames given"));
    }
    Ok(out)
}

/// The fixed patch autoencoder (18184 trainable scalars).
#[pyclass(name = "Autoencoder")]
struct PyAutoencoder {
    inner: Autoencoder<f32>,
    loss_history: Vec<f64>,
}

#[pymethods]
impl PyAutoencoder {
    #[new]
    #[pyo3(signature = (seed = 0))]
    fn new(seed: u64) -> Self {
        PyAutoencoder {
            inner: build_autoencoder(seed),
            loss_history: Vec::new(),
        }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let (model, _, manifest) = load_checkpoint(path).map_err(to_py_err)?;
        Ok(PyAutoencoder {
            inner: model,
            loss_history: manifest.loss_history,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_checkpoint(&self.inner, None, &self.loss_history, path).map_err(to_py_err)
    }

    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    fn layer_param_counts(&self) -> Vec<usize> {
        self.inner.layer_param_counts().to_vec()
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    #[getter]
    fn loss_history(&self) -> Vec<f64> {
        self.loss_history.clone()
    }

    /// Trains on the patches of the given frames; returns per-epoch loss.
    #[pyo3(signature = (frames, epochs = 500, batch_size = 100, learning_rate = 0.001,
        augment = true, seed = 0, pad_width = 2))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &mut self,
        frames: &Bound<'_, PyAny>,
        epochs: usize,
        batch_size: usize,
        learning_rate: f64,
        augment: bool,
        seed: u64,
        pad_width: u32,
    ) -> PyResult<Vec<f64>> {
        let frames = collect_frames(frames)?;
        let mut patches = Vec::new();
        for frame in &frames {
            let fine = frame.fine_mesh();
            let (normalized, _) = fine.normalize_unit_cube().map_err(to_py_err)?;
            let layout = srmesh::patch::build_layout(frame, pad_width).map_err(to_py_err)?;
            patches.extend(
                srmesh::patch::extract_patches(frame, &layout, &normalized.vertices)
                    .map_err(to_py_err)?,
            );
        }
        let cfg = TrainConfig {
            epochs,
            batch_size,
            learning_rate,
            augment,
            seed,
            train_fraction: 1.0,
        };
        let report = train(&mut self.inner, &patches, &cfg).map_err(to_py_err)?;
        self.loss_history = report.loss_history.clone();
        Ok(report.loss_history)
    }

    /// Reconstructs one frame; returns (positions, interior_mse, vertex_mse).
    fn reconstruct(
        &self,
        frame: &PySemiRegularMesh,
    ) -> PyResult<(Vec<(f64, f64, f64)>, f64, f64)> {
        let results =
            reconstruct_sequence(&self.inner, std::slice::from_ref(&frame.inner), 2)
                .map_err(to_py_err)?;
        let r = &results[0];
        Ok((
            r.positions.iter().map(|p| (p.x, p.y, p.z)).collect(),
            r.interior_mse,
            r.vertex_mse,
        ))
    }

    /// Concatenated patch latents plus 2D PCA for a sequence:
    /// (latents rows, projection rows, explained variance ratios).
    fn embed(
        &self,
        frames: &Bound<'_, PyAny>,
    ) -> PyResult<(Vec<Vec<f64>>, Vec<(f64, f64)>, Vec<f64>)> {
        let frames = collect_frames(frames)?;
        let embedding = embed_sequence(&self.inner, &frames, 2).map_err(to_py_err)?;
        let latents = (0..embedding.latents.nrows())
            .map(|r| embedding.latents.row(r).iter().copied().collect())
            .collect();
        let projection = (0..embedding.projection.nrows())
            .map(|r| (embedding.projection[(r, 0)], embedding.projection[(r, 1)]))
            .collect();
        Ok((latents, projection, embedding.explained_variance))
    }

    fn __repr__(&self) -> String {
        format!("Autoencoder({} parameters)", self.inner.param_count())
    }
}

#[pymodule]
fn srmesh_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTriMesh>()?;
    m.add_class::<PySemiRegularMesh>()?;
    m.add_class::<PyAutoencoder>()?;
    m.add_function(wrap_pyfunction!(simplify_mesh, m)?)?;
    m.add_function(wrap_pyfunction!(subdivide_mesh, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(chamfer, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_positions, m)?)?;
    Ok(())
}
