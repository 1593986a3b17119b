//! Seeded sample generators for validators and the verification suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::structure::FinslerStructure;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniformly distributed unit vector.
pub fn unit_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

/// Uniformly distributed point of the ball of the given radius.
pub fn ball_point<R: Rng>(n: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let dir = unit_vector(n, rng);
    let r = radius * rng.gen::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|c| c * r).collect()
}

/// Random line elements `(x, y)` with `x` in the ball of radius `radius`,
/// inside the metric domain with boundary defect at least `min_defect`, and
/// `|y|` in `[0.5, 2]`.
pub fn line_elements(metric: &dyn FinslerStructure, count: usize, radius: f64, min_defect: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = metric.dim();
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = ball_point(n, radius, &mut r);
        if metric.boundary_defect(&x).is_some_and(|phi| phi < min_defect) {
            continue;
        }
        let scale = r.gen_range(0.5..2.0);
        let y = unit_vector(n, &mut r).into_iter().map(|c| c * scale).collect();
        out.push((x, y));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Klein;

    #[test]
    fn samples_are_reproducible_and_inside() {
        let k = Klein::new(3).unwrap();
        let a = line_elements(&k, 20, 0.95, 0.05, 7);
        let b = line_elements(&k, 20, 0.95, 0.05, 7);
        assert_eq!(a, b);
        for (x, y) in &a {
            assert!(x.iter().map(|v| v * v).sum::<f64>() < 0.95);
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((0.5..2.0).contains(&ny));
        }
    }
}
