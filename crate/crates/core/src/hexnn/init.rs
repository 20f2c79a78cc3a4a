//! Weight initialization.

use rand::Rng;

use super::Real;

/// Fills a parameter block uniformly from `(-a, a)` with
/// `a = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Real>(
    out: &mut [T],
    fan_in: usize,
    fan_out: usize,
    rng: &mut impl Rng,
) {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in out {
        *v = T::from_f64((rng.gen::<f64>() * 2.0 - 1.0) * a);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_and_deterministic() {
        let mut a = vec![0.0f32; 912];
        let mut b = vec![0.0f32; 912];
        glorot_uniform(&mut a, 57, 304, &mut crate::rng::stream(4, "init", 0));
        glorot_uniform(&mut b, 57, 304, &mut crate::rng::stream(4, "init", 0));
        assert_eq!(a, b);
        let bound = (6.0f64 / (57 + 304) as f64).sqrt() as f32;
        assert!(a.iter().all(|&v| v.abs() < bound));
        assert!(a.iter().any(|&v| v != 0.0));
    }
}
