//! Sequence embeddings: concatenated patch latents per timestep and their
//! PCA projection.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::patch::{build_layout, extract_patches};
use crate::remesh::SemiRegularMesh;

use super::reconstruct::encode_patches;
use super::{Autoencoder, LATENT_DIM};

/// Timesteps-by-features latent matrix with its 2D PCA projection.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    /// Row `t`: the concatenated 8-dimensional patch latents of frame `t`,
    /// patches in ascending base-face order.
    pub latents: DMatrix<f64>,
    pub projection: DMatrix<f64>,
    pub explained_variance: Vec<f64>,
}

/// Principal components of a data matrix.
#[derive(Debug, Clone)]
pub struct PcaResult {
    /// Rows projected onto the top components (centered data).
    pub projection: DMatrix<f64>,
    /// One component per row, unit length, largest-magnitude entry
    /// positive.
    pub components: DMatrix<f64>,
    /// Ratio of each retained eigenvalue to the total variance,
    /// non-increasing, in [0, 1].
    pub explained_variance: Vec<f64>,
}

/// Encodes every frame and stacks the concatenated patch latents.
pub fn concat_latents(
    model: &Autoencoder<f32>,
    frames: &[SemiRegularMesh],
    pad: u32,
) -> Result<DMatrix<f64>> {
    if frames.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(frames.len());
    for frame in frames {
        let fine = frame.fine_mesh();
        let (normalized, _) = fine.normalize_unit_cube()?;
        let layout = build_layout(frame, pad)?;
        let patches = extract_patches(frame, &layout, &normalized.vertices)?;
        rows.push(encode_patches(model, &patches)?);
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::ShapeMismatch(
            "frames have differing patch counts".into(),
        ));
    }
    debug_assert_eq!(cols % LATENT_DIM, 0);
    Ok(DMatrix::from_fn(frames.len(), cols, |r, c| rows[r][c]))
}

/// PCA via eigendecomposition of the column-centered covariance
/// (normalized by `rows - 1`). Components are sorted by descending
/// eigenvalue; each is signed so its largest-magnitude entry is positive.
pub fn pca_project(data: &DMatrix<f64>, k: usize) -> Result<PcaResult> {
    let rows = data.nrows();
    if rows < 2 || rows < k {
        return Err(Error::TooFewTimesteps {
            needed: k.max(2),
            got: rows,
        });
    }
    let d = data.ncols();
    let k = k.min(d);
    let means = DVector::from_fn(d, |c, _| data.column(c).sum() / rows as f64);
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= means.transpose();
    }
    let covariance = centered.transpose() * &centered / (rows as f64 - 1.0);
    let eigen = nalgebra::SymmetricEigen::new(covariance);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let total: f64 = eigen.eigenvalues.iter().map(|&l| l.max(0.0)).sum();

    let mut components = DMatrix::zeros(k, d);
    let mut explained = Vec::with_capacity(k);
    for (row, &src) in order.iter().take(k).enumerate() {
        let mut component = eigen.eigenvectors.column(src).clone_owned();
        // Sign convention: flip so the largest-magnitude entry is positive
        // (first such index on ties).
        let mut best = 0usize;
        for i in 0..d {
            if component[i].abs() > component[best].abs() {
                best = i;
            }
        }
        if component[best] < 0.0 {
            component = -component;
        }
        components.row_mut(row).copy_from(&component.transpose());
        let ratio = if total > 0.0 {
            eigen.eigenvalues[src].max(0.0) / total
        } else {
            0.0
        };
        explained.push(ratio);
    }
    let projection = centered * components.transpose();
    Ok(PcaResult {
        projection,
        components,
        explained_variance: explained,
    })
}

/// Embeds a sequence: latents plus 2D PCA.
pub fn embed_sequence(
    model: &Autoencoder<f32>,
    frames: &[SemiRegularMesh],
    pad: u32,
) -> Result<EmbeddingMatrix> {
    let latents = concat_latents(model, frames, pad)?;
    let pca = pca_project(&latents, 2)?;
    Ok(EmbeddingMatrix {
        latents,
        projection: pca.projection,
        explained_variance: pca.explained_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Small dense symmetric eigensolver (cyclic Jacobi), used as an
    /// independent oracle for the PCA path.
    fn jacobi_eigen(mut a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
        let n = a.nrows();
        let mut v = DMatrix::<f64>::identity(n, n);
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[(p, q)].abs() < 1e-18 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let eigenvalues = (0..n).map(|i| a[(i, i)]).collect();
        (eigenvalues, v)
    }

    #[test]
    fn rank_one_matrix_has_unit_first_ratio() {
        let direction = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let data = DMatrix::from_fn(6, 4, |r, c| (r as f64 - 2.5) * direction[c]);
        let pca = pca_project(&data, 2).unwrap();
        assert!((pca.explained_variance[0] - 1.0).abs() < 1e-12);
        assert!(pca.explained_variance[1].abs() < 1e-12);
    }

    #[test]
    fn matches_jacobi_oracle_on_random_matrix() {
        let mut rng = crate::rng::stream(21, "pca-test", 0);
        let data = DMatrix::from_fn(48, 16, |_, _| rng.gen::<f64>() - 0.5);
        let pca = pca_project(&data, 2).unwrap();

        // Oracle: covariance + Jacobi eigendecomposition.
        let rows = data.nrows() as f64;
        let means = DVector::from_fn(16, |c, _| data.column(c).sum() / rows);
        let mut centered = data.clone();
        for mut row in centered.row_iter_mut() {
            row -= means.transpose();
        }
        let cov = centered.transpose() * &centered / (rows - 1.0);
        let (eigenvalues, vectors) = jacobi_eigen(cov);
        let mut order: Vec<usize> = (0..16).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        for (row, &src) in order.iter().take(2).enumerate() {
            let mut component = vectors.column(src).clone_owned();
            let mut best = 0;
            for i in 0..16 {
                if component[i].abs() > component[best].abs() {
                    best = i;
                }
            }
            if component[best] < 0.0 {
                component = -component;
            }
            let expected = &centered * &component;
            for r in 0..48 {
                assert!(
                    (pca.projection[(r, row)] - expected[r]).abs() < 1e-8,
                    "row {r} comp {row}"
                );
            }
        }
    }

    #[test]
    fn ratios_non_increasing_and_projection_orthogonal() {
        let mut rng = crate::rng::stream(22, "pca-test", 1);
        let data = DMatrix::from_fn(30, 10, |_, c| (c as f64 + 1.0) * (rng.gen::<f64>() - 0.5));
        let pca = pca_project(&data, 2).unwrap();
        assert!(pca.explained_variance[0] >= pca.explained_variance[1]);
        assert!(pca.explained_variance.iter().all(|&r| (0.0..=1.0).contains(&r)));
        let dot = pca.components.row(0).dot(&pca.components.row(1));
        assert!(dot.abs() < 1e-10);
    }

    #[test]
    fn row_permutation_invariance() {
        let mut rng = crate::rng::stream(23, "pca-test", 2);
        let data = DMatrix::from_fn(12, 6, |_, _| rng.gen::<f64>() - 0.5);
        let pca = pca_project(&data, 2).unwrap();
        let perm: Vec<usize> = vec![5, 0, 11, 3, 8, 1, 10, 2, 7, 4, 9, 6];
        let permuted = DMatrix::from_fn(12, 6, |r, c| data[(perm[r], c)]);
        let pca2 = pca_project(&permuted, 2).unwrap();
        for r in 0..12 {
            for k in 0..2 {
                assert!((pca2.projection[(r, k)] - pca.projection[(perm[r], k)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn too_few_rows_rejected() {
        let data = DMatrix::from_element(1, 4, 1.0);
        assert!(matches!(
            pca_project(&data, 2),
            Err(Error::TooFewTimesteps { .. })
        ));
    }
}
