//! Tensor-product central differences with Richardson extrapolation.

use super::EngineConfig;
use crate::error::{FinslerError, Result};

/// Per-variable step sizes for one mixed partial.
#[derive(Debug, Clone, PartialEq)]
pub struct FdPlan {
    pub steps: Vec<f64>,
}

impl FdPlan {
    /// Steps for a point `z = (x, y)` with `n` x-coordinates.
    ///
    /// The base step is `ε^(1/(p + 2 + 2L))` for total order `p` and `L`
    /// Richardson levels, scaled by `max(1, |x_i|)` for x-coordinates and by
    /// `|y|` for y-coordinates.
    pub fn new(z: &[f64], n: usize, orders: &[u8], cfg: &EngineConfig) -> Self {
        let p: usize = orders.iter().map(|&d| d as usize).sum();
        let base = cfg
            .base_step
            .unwrap_or_else(|| f64::EPSILON.powf(1.0 / (p + 2 + 2 * cfg.richardson_levels) as f64));
        let ynorm = z[n..].iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let steps = z
            .iter()
            .enumerate()
            .map(|(i, v)| if i < n { base * v.abs().max(1.0) } else { base * ynorm.max(v.abs()) })
            .collect();
        FdPlan { steps }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// One second-order accurate central estimate with step multiplier `scale`.
fn central_once<F>(f: &F, z: &[f64], orders: &[u8], steps: &[f64], scale: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let active: Vec<usize> = (0..z.len()).filter(|&i| orders[i] > 0).collect();
    let mut counters = vec![0usize; active.len()];
    let mut acc: Option<Vec<f64>> = None;
    loop {
        let mut point = z.to_vec();
        let mut weight = 1.0;
        for (slot, &var) in active.iter().enumerate() {
            let d = orders[var] as usize;
            let j = counters[slot];
            let h = steps[var] * scale;
            point[var] += (d as f64 / 2.0 - j as f64) * h;
            let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
            weight *= sign * binomial(d, j) / h.powi(d as i32);
        }
        let v = f(&point)?;
        match acc.as_mut() {
            None => acc = Some(v.iter().map(|c| c * weight).collect()),
            Some(a) => {
                for (s, c) in a.iter_mut().zip(&v) {
                    *s += c * weight;
                }
            }
        }
        // advance the mixed-radix counter
        let mut slot = 0;
        loop {
            if slot == active.len() {
                return acc.ok_or_else(|| FinslerError::InvalidArgument("empty stencil".into()));
            }
            counters[slot] += 1;
            if counters[slot] <= orders[active[slot]] as usize {
                break;
            }
            counters[slot] = 0;
            slot += 1;
        }
    }
}

/// Mixed partial of a vector-valued function of `z` with Richardson
/// extrapolation over step halving.
pub fn central_mixed<F>(f: &F, z: &[f64], orders: &[u8], plan: &FdPlan, cfg: &EngineConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if orders.iter().all(|&d| d == 0) {
        return f(z);
    }
    let levels = cfg.richardson_levels;
    let mut table: Vec<Vec<Vec<f64>>> = Vec::with_capacity(levels + 1);
    for i in 0..=levels {
        let scale = 0.5f64.powi(i as i32);
        let mut row = vec![central_once(f, z, orders, &plan.steps, scale)?];
        for j in 1..=i {
            let factor = 4f64.powi(j as i32) - 1.0;
            let prev = &table[i - 1][j - 1];
            let cur = &row[j - 1];
            row.push(cur.iter().zip(prev).map(|(c, p)| c + (c - p) / factor).collect());
        }
        table.push(row);
    }
    let best = table[levels][levels].clone();
    if levels > 0 {
        let prev = &table[levels - 1][levels - 1];
        let magnitude = best.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let diff = best.iter().zip(prev).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / magnitude;
        if diff > cfg.target_accuracy {
            return Err(FinslerError::Accuracy {
                what: "Richardson extrapolation".into(),
                achieved: diff,
            });
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn third_derivative_of_sine() {
        let cfg = EngineConfig::finite_difference();
        let z = [0.3];
        let plan = FdPlan::new(&z, 1, &[3], &cfg);
        let d = central_mixed(&|p: &[f64]| Ok(vec![p[0].sin()]), &z, &[3], &plan, &cfg).unwrap();
        assert!((d[0] + 0.3f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn mixed_second_derivative_of_product() {
        let cfg = EngineConfig::finite_difference();
        let z = [0.5, 2.0];
        let plan = FdPlan::new(&z, 2, &[1, 1], &cfg);
        let d = central_mixed(&|p: &[f64]| Ok(vec![(p[0] * p[1]).exp()]), &z, &[1, 1], &plan, &cfg).unwrap();
        let expected = (1.0 + 1.0) * 1f64.exp(); // (1 + xy) e^{xy}
        assert!((d[0] - expected).abs() < 1e-8);
    }

    #[test]
    fn disagreement_triggers_accuracy_error() {
        let cfg = EngineConfig {
            base_step: Some(0.5),
            target_accuracy: 1e-12,
            ..EngineConfig::finite_difference()
        };
        let z = [0.0];
        let plan = FdPlan::new(&z, 1, &[2], &cfg);
        let r = central_mixed(&|p: &[f64]| Ok(vec![(5.0 * p[0]).cos()]), &z, &[2], &plan, &cfg);
        assert!(matches!(r, Err(FinslerError::Accuracy { .. })));
    }
}
