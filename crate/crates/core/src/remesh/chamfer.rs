//! Average chamfer distance between point sets.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{sample_surface, TriMesh};

use super::kdtree::KdTree3;

/// Symmetric average of squared nearest-neighbor distances:
/// `mean_x min_y |x-y|^2 + mean_y min_x |x-y|^2`.
///
/// Queries run in parallel but are summed in index order, so the result is
/// independent of the thread schedule.
pub fn chamfer_avg(s1: &[Point3<f64>], s2: &[Point3<f64>]) -> Result<f64> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let tree1 = KdTree3::build(s1);
    let tree2 = KdTree3::build(s2);
    let d12: Vec<f64> = s1.par_iter().map(|p| tree2.nearest(p).1).collect();
    let d21: Vec<f64> = s2.par_iter().map(|p| tree1.nearest(p).1).collect();
    Ok(d12.iter().sum::<f64>() / s1.len() as f64 + d21.iter().sum::<f64>() / s2.len() as f64)
}

/// Chamfer value plus its gradient with respect to the points of `s2`,
/// treating nearest-neighbor assignments as locally constant.
pub fn chamfer_with_grad(
    s1: &[Point3<f64>],
    s2: &[Point3<f64>],
) -> Result<(f64, Vec<Vector3<f64>>)> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let tree1 = KdTree3::build(s1);
    chamfer_with_grad_prebuilt(s1, &tree1, s2)
}

/// As [`chamfer_with_grad`] but reusing a prebuilt tree over `s1`; the
/// fitting loop queries the same target set every step.
pub fn chamfer_with_grad_prebuilt(
    s1: &[Point3<f64>],
    tree1: &KdTree3,
    s2: &[Point3<f64>],
) -> Result<(f64, Vec<Vector3<f64>>)> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let tree2 = KdTree3::build(s2);
    let hits: Vec<(usize, f64)> = s1.par_iter().map(|p| tree2.nearest(p)).collect();
    let back: Vec<(usize, f64)> = s2.par_iter().map(|p| tree1.nearest(p)).collect();

    let inv1 = 1.0 / s1.len() as f64;
    let inv2 = 1.0 / s2.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![Vector3::zeros(); s2.len()];
    for (x, &(j, d)) in s1.iter().zip(&hits) {
        value += d * inv1;
        grad[j] += 2.0 * inv1 * (s2[j] - x);
    }
    for (k, &(i, d)) in back.iter().enumerate() {
        value += d * inv2;
        grad[k] += 2.0 * inv2 * (s2[k] - s1[i]);
    }
    Ok((value, grad))
}

/// Chamfer distance between fresh area-uniform samples of two surfaces;
/// used for reporting fit quality with a sample size independent of the
/// optimization's.
pub fn eval_chamfer(a: &TriMesh, b: &TriMesh, n: usize, seed: u64) -> Result<f64> {
    let sa = sample_surface(a, n, seed)?;
    let sb = sample_surface(b, n, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    chamfer_avg(&sa, &sb)
}
