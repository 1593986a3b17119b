//! Numeric abstraction shared by plain `f64` evaluation and truncated Taylor jets.
//!
//! Closed-form metrics are written once against [`Scalar`]; evaluating them on
//! [`Jet`](crate::diffengine::Jet) values yields every partial derivative up to
//! the jet order in a single pass.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Value of the zeroth-order term.
    fn value(&self) -> f64;
    /// A constant with the same shape as `self`.
    fn constant_like(&self, v: f64) -> Self;

    fn recip(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn ln(&self) -> Self;
    fn exp(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn abs(&self) -> Self;

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }

    fn tan(&self) -> Self {
        self.sin() / self.cos()
    }

    fn tanh(&self) -> Self {
        // (e^{2t} - 1) / (e^{2t} + 1), rewritten to avoid overflow for t > 0
        let v = self.value();
        if v >= 0.0 {
            let e = (-(self.clone() * 2.0)).exp();
            (-(e.clone()) + 1.0) / (e + 1.0)
        } else {
            let e = (self.clone() * 2.0).exp();
            (e.clone() - 1.0) / (e + 1.0)
        }
    }

    fn zero_like(&self) -> Self {
        self.constant_like(0.0)
    }
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn constant_like(&self, v: f64) -> Self {
        v
    }
    fn recip(&self) -> Self {
        1.0 / *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn tan(&self) -> Self {
        f64::tan(*self)
    }
    fn tanh(&self) -> Self {
        f64::tanh(*self)
    }
}

/// Euclidean inner product of two equally long slices.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = a[0].clone() * b[0].clone();
    for (u, v) in a.iter().zip(b).skip(1) {
        acc = acc + u.clone() * v.clone();
    }
    acc
}

/// Quadratic form `v^T m v` for a constant matrix given row-major.
pub fn quadratic_form<S: Scalar>(m: &[Vec<f64>], u: &[S], v: &[S]) -> S {
    let mut acc = u[0].zero_like();
    for (i, row) in m.iter().enumerate() {
        for (j, &mij) in row.iter().enumerate() {
            if mij != 0.0 {
                acc = acc + u[i].clone() * v[j].clone() * mij;
            }
        }
    }
    acc
}

/// Solves `m z = rhs` by Gaussian elimination with partial pivoting on the
/// zeroth-order terms. Works for both plain numbers and jets.
pub fn solve<S: Scalar>(mut m: Vec<Vec<S>>, mut rhs: Vec<S>) -> Option<Vec<S>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| {
            m[a][col]
                .value()
                .abs()
                .partial_cmp(&m[b][col].value().abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot][col].value().abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = m[col][col].recip();
        for row in col + 1..n {
            let factor = m[row][col].clone() * inv.clone();
            for k in col..n {
                let t = m[col][k].clone() * factor.clone();
                m[row][k] = m[row][k].clone() - t;
            }
            let t = rhs[col].clone() * factor;
            rhs[row] = rhs[row].clone() - t;
        }
    }
    let mut z: Vec<S> = rhs.clone();
    for row in (0..n).rev() {
        let mut acc = rhs[row].clone();
        for k in row + 1..n {
            acc = acc - m[row][k].clone() * z[k].clone();
        }
        z[row] = acc / m[row][row].clone();
    }
    Some(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let m = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let z = solve(m, vec![3.0, 5.0]).unwrap();
        assert!((z[0] - 0.8).abs() < 1e-14);
        assert!((z[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn singular_system_is_rejected() {
        let m = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve(m, vec![1.0, 1.0]).is_none());
    }

    #[test]
    fn generic_tanh_matches_std() {
        for t in [-3.0, -0.2, 0.0, 0.7, 5.0] {
            let generic = <f64 as Scalar>::tanh(&t);
            assert!((generic - t.tanh()).abs() < 1e-15);
        }
    }
}
