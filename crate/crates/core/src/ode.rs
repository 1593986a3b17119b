//! Adaptive Dormand–Prince 5(4) integration with stored nodes.
//!
//! A right-hand side signals leaving its admissible region by returning
//! [`FinslerError::Domain`]; the integrator then shrinks the step and, once
//! the step underflows, stops with [`Termination::Boundary`].

use crate::error::{FinslerError, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; chosen from the interval length when `None`.
    pub h_init: Option<f64>,
    /// Largest step magnitude.
    pub h_max: f64,
    /// Smallest step magnitude relative to `max(1, |t|)`.
    pub h_min_rel: f64,
    /// Domain-limited steps below this (relative to `max(1, |t|)`) end the
    /// integration at the boundary.
    pub h_boundary_rel: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-11,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            h_min_rel: 1e-13,
            h_boundary_rel: 1e-10,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    /// The right-hand side left its domain and the step underflowed.
    Boundary,
}

/// Accepted nodes of an integration, in the order they were produced.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub status: Termination,
}

impl OdeSolution {
    pub fn last(&self) -> (f64, &[f64]) {
        let i = self.t.len() - 1;
        (self.t[i], &self.y[i])
    }
}

fn axpy(y: &[f64], h: f64, coeffs: &[f64], k: &[Vec<f64>]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, ki) in coeffs.iter().zip(k) {
        if *c != 0.0 {
            for (o, v) in out.iter_mut().zip(ki) {
                *o += h * c * v;
            }
        }
    }
    out
}

/// One Dormand–Prince step; returns the 5th-order solution, the embedded
/// error estimate and the derivative at the new point.
fn step<F>(f: &F, t: f64, y: &[f64], k1: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    k.push(k1.to_vec());
    for s in 1..6 {
        let ys = axpy(y, h, &A[s][..s], &k);
        k.push(f(t + C[s] * h, &ys)?);
    }
    let y_new = axpy(y, h, &A[6][..6], &k);
    k.push(f(t + h, &y_new)?);
    let err = (0..y.len()).map(|i| h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>()).collect();
    Ok((y_new, err, k.pop().expect("seven stages")))
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
pub fn integrate<F>(f: &F, t0: f64, y0: &[f64], t_end: f64, opts: &OdeOptions) -> Result<OdeSolution>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    match integrate_partial(f, t0, y0, t_end, opts) {
        (sol, None) => Ok(sol),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`integrate`], but on failure also returns the accepted steps.
pub fn integrate_partial<F>(f: &F, t0: f64, y0: &[f64], t_end: f64, opts: &OdeOptions) -> (OdeSolution, Option<FinslerError>)
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let mut sol = OdeSolution {
        t: vec![t0],
        y: vec![y0.to_vec()],
        status: Termination::Completed,
    };
    if t_end == t0 {
        return (sol, None);
    }
    let dir = (t_end - t0).signum();
    let span = (t_end - t0).abs();
    let mut h = opts.h_init.unwrap_or(span * 1e-2).min(span).min(opts.h_max);
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = match f(t, &y) {
        Ok(k) => k,
        Err(e) => return (sol, Some(e)),
    };
    let mut steps = 0;
    while (t_end - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return (sol, Some(FinslerError::Stiffness { at: t }));
        }
        let h_min = opts.h_min_rel * t.abs().max(1.0);
        let last = h >= (t_end - t).abs();
        let hs = if last { (t_end - t).abs() } else { h };
        match step(f, t, &y, &k1, dir * hs) {
            Ok((y_new, err, k_new)) => {
                let norm = (err
                    .iter()
                    .zip(y.iter().zip(&y_new))
                    .map(|(e, (a, b))| {
                        let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
                        (e / sc).powi(2)
                    })
                    .sum::<f64>()
                    / y.len() as f64)
                    .sqrt();
                if norm <= 1.0 {
                    t = if last { t_end } else { t + dir * hs };
                    y = y_new;
                    k1 = k_new;
                    sol.t.push(t);
                    sol.y.push(y.clone());
                    let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                    h = (hs * factor).min(opts.h_max);
                } else {
                    h = hs * (0.9 * norm.powf(-0.2)).clamp(0.1, 0.9);
                    if !(h >= h_min) {
                        log::debug!("step rejected down to {h:e} at t = {t}, error norm {norm:e}");
                        return (sol, Some(FinslerError::Stiffness { at: t }));
                    }
                }
            }
            Err(FinslerError::Domain { .. }) => {
                h = hs * 0.5;
                if h < opts.h_boundary_rel * t.abs().max(1.0) {
                    sol.status = Termination::Boundary;
                    return (sol, None);
                }
            }
            Err(e) => return (sol, Some(e)),
        }
    }
    (sol, None)
}

/// Nodes of a two-sided integration from a common initial point, sorted by
/// `t`. Dense evaluation always starts from the node nearest the initial
/// point on the same side, mirroring how the nodes were produced.
#[derive(Debug, Clone)]
pub struct Track {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    /// Index of the initial node.
    pub origin: usize,
}

impl Track {
    pub fn two_sided(backward: OdeSolution, forward: OdeSolution) -> Self {
        let origin = backward.t.len() - 1;
        let mut t: Vec<f64> = backward.t.into_iter().rev().collect();
        let mut y: Vec<Vec<f64>> = backward.y.into_iter().rev().collect();
        t.extend(forward.t.into_iter().skip(1));
        y.extend(forward.y.into_iter().skip(1));
        Track { t, y, origin }
    }

    pub fn t0(&self) -> f64 {
        self.t[self.origin]
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    pub fn anchor(&self, t: f64) -> usize {
        if t >= self.t0() {
            self.t.partition_point(|&s| s <= t).saturating_sub(1).max(self.origin)
        } else {
            self.t.partition_point(|&s| s < t).min(self.origin)
        }
    }

    /// Dense value at `t`, integrated from node `anchor`.
    pub fn eval_from<F>(&self, f: &F, anchor: usize, t: f64, substeps: usize) -> Result<Vec<f64>>
    where
        F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
    {
        advance_fixed(f, self.t[anchor], &self.y[anchor], t, substeps)
    }

    pub fn eval<F>(&self, f: &F, t: f64, substeps: usize) -> Result<Vec<f64>>
    where
        F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
    {
        let (lo, hi) = self.range();
        let slack = 1e-12 * (hi - lo).max(1.0);
        if t < lo - slack || t > hi + slack {
            return Err(FinslerError::InvalidArgument(format!("t = {t} outside [{lo}, {hi}]")));
        }
        self.eval_from(f, self.anchor(t), t, substeps)
    }
}

/// Advances from `(t, y)` to `t_target` with `substeps` fixed 5th-order steps.
///
/// Used for dense evaluation between stored nodes; the result is a smooth
/// function of `t_target`.
pub fn advance_fixed<F>(f: &F, t: f64, y: &[f64], t_target: f64, substeps: usize) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    if t_target == t {
        return Ok(y.to_vec());
    }
    let h = (t_target - t) / substeps as f64;
    let mut tt = t;
    let mut yy = y.to_vec();
    for _ in 0..substeps {
        let k1 = f(tt, &yy)?;
        let (y_new, _, _) = step(f, tt, &yy, &k1, h)?;
        yy = y_new;
        tt += h;
    }
    Ok(yy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_forward_and_backward() {
        let f = |_t: f64, y: &[f64]| Ok(vec![y[1], -y[0]]);
        for end in [10.0, -10.0] {
            let sol = integrate(&f, 0.0, &[0.0, 1.0], end, &OdeOptions::default()).unwrap();
            let (t, y) = sol.last();
            assert_eq!(t, end);
            assert!((y[0] - end.sin()).abs() < 1e-9);
            assert!((y[1] - end.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn domain_exit_stops_at_boundary() {
        // y' = 1 on y < 1
        let f = |_t: f64, y: &[f64]| {
            if y[0] >= 1.0 {
                Err(FinslerError::Domain { point: y.to_vec() })
            } else {
                Ok(vec![1.0])
            }
        };
        let sol = integrate(&f, 0.0, &[0.0], 5.0, &OdeOptions::default()).unwrap();
        assert_eq!(sol.status, Termination::Boundary);
        let (t, y) = sol.last();
        assert!(y[0] < 1.0 && y[0] > 1.0 - 1e-9, "{t} {y:?}");
    }

    #[test]
    fn fixed_advance_matches_closed_form() {
        let f = |_t: f64, y: &[f64]| Ok(vec![y[0]]);
        let y = advance_fixed(&f, 0.0, &[1.0], 0.3, 8).unwrap();
        assert!((y[0] - 0.3f64.exp()).abs() < 1e-10);
    }
}
