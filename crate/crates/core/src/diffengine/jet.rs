//! Truncated multivariate Taylor polynomials (forward-mode jets).
//!
//! A [`Jet`] stores the Taylor coefficients `c_α = ∂^α f / α!` of a function
//! around a base point, for every multi-index `α` of total degree up to the
//! layout order. Arithmetic propagates the expansion exactly (up to rounding),
//! so derivatives of order five and beyond stay at machine accuracy.
//!
//! Differentiating a jet lowers its *valid* order by one: coefficients above
//! the valid order are kept at zero and never read.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::scalar::Scalar;

const NONE: u32 = u32::MAX;

/// Monomial bookkeeping for a fixed number of variables and order.
#[derive(Debug)]
pub struct Layout {
    nvars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    degree_start: Vec<usize>,
    succ: Vec<Vec<u32>>,
    mul_start: Vec<usize>,
    pairs: Vec<(u32, u32)>,
    index: HashMap<Vec<u8>, usize>,
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        let mut exps: Vec<Vec<u8>> = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for deg in 0..=order {
            degree_start.push(exps.len());
            let mut current = vec![0u8; nvars];
            enumerate_degree(nvars, deg, 0, &mut current, &mut exps);
        }
        degree_start.push(exps.len());

        let index: HashMap<Vec<u8>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();

        let succ = exps
            .iter()
            .map(|e| {
                (0..nvars)
                    .map(|v| {
                        let mut next = e.clone();
                        next[v] += 1;
                        index.get(&next).map_or(NONE, |&i| i as u32)
                    })
                    .collect()
            })
            .collect();

        let degrees: Vec<usize> = exps.iter().map(|e| e.iter().map(|&d| d as usize).sum()).collect();
        let mut by_result: Vec<Vec<(u32, u32)>> = vec![Vec::new(); exps.len()];
        for i in 0..exps.len() {
            for j in 0..exps.len() {
                if degrees[i] + degrees[j] > order {
                    continue;
                }
                let sum: Vec<u8> = exps[i].iter().zip(&exps[j]).map(|(a, b)| a + b).collect();
                by_result[index[&sum]].push((i as u32, j as u32));
            }
        }
        let mut mul_start = Vec::with_capacity(exps.len() + 1);
        let mut pairs = Vec::new();
        for list in by_result {
            mul_start.push(pairs.len());
            pairs.extend(list);
        }
        mul_start.push(pairs.len());

        Layout {
            nvars,
            order,
            exps,
            degree_start,
            succ,
            mul_start,
            pairs,
            index,
        }
    }

    /// Shared layout for `nvars` variables up to total degree `order`.
    pub fn get(nvars: usize, order: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet layout cache poisoned");
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn end_of_degree(&self, deg: usize) -> usize {
        self.degree_start[deg.min(self.order) + 1]
    }
}

fn enumerate_degree(nvars: usize, remaining: usize, pos: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos + 1 == nvars {
        current[pos] = remaining as u8;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for d in (0..=remaining).rev() {
        current[pos] = d as u8;
        enumerate_degree(nvars, remaining - d, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// A truncated Taylor expansion in `layout.nvars()` variables.
#[derive(Clone, Debug)]
pub struct Jet {
    layout: Arc<Layout>,
    valid: usize,
    coef: Vec<f64>,
}

impl Jet {
    pub fn constant(layout: &Arc<Layout>, v: f64) -> Jet {
        let mut coef = vec![0.0; layout.len()];
        coef[0] = v;
        Jet {
            layout: layout.clone(),
            valid: layout.order,
            coef,
        }
    }

    /// The independent variable `var`, expanded around `v`.
    pub fn variable(layout: &Arc<Layout>, v: f64, var: usize) -> Jet {
        let mut j = Jet::constant(layout, v);
        if layout.order >= 1 {
            j.coef[layout.succ[0][var] as usize] = 1.0;
        }
        j
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// Highest total order whose coefficients are exact.
    pub fn valid_order(&self) -> usize {
        self.valid
    }

    /// Taylor coefficient for multi-index `alpha`.
    pub fn coefficient(&self, alpha: &[u8]) -> f64 {
        let deg: usize = alpha.iter().map(|&d| d as usize).sum();
        assert!(deg <= self.valid, "requested order {deg} exceeds valid order {}", self.valid);
        self.layout.index.get(alpha).map_or(0.0, |&i| self.coef[i])
    }

    /// Partial derivative `∂^alpha f` at the base point.
    pub fn derivative(&self, alpha: &[u8]) -> f64 {
        let fact: f64 = alpha.iter().map(|&d| (1..=d as u32).product::<u32>() as f64).product();
        self.coefficient(alpha) * fact
    }

    /// Derivative with respect to one variable, returned as a jet of one lower order.
    pub fn diff(&self, var: usize) -> Jet {
        assert!(self.valid >= 1, "cannot differentiate an order-0 jet");
        let valid = self.valid - 1;
        let end = self.layout.end_of_degree(valid);
        let mut coef = vec![0.0; self.layout.len()];
        for (idx, slot) in coef.iter_mut().enumerate().take(end) {
            let next = self.layout.succ[idx][var];
            if next != NONE {
                *slot = (self.layout.exps[idx][var] as f64 + 1.0) * self.coef[next as usize];
            }
        }
        Jet {
            layout: self.layout.clone(),
            valid,
            coef,
        }
    }

    /// Mixed partial derivative as a jet.
    pub fn diff_many(&self, vars: &[usize]) -> Jet {
        let mut j = self.clone();
        for &v in vars {
            j = j.diff(v);
        }
        j
    }

    fn truncated(mut self, valid: usize) -> Jet {
        if valid < self.valid {
            let end = self.layout.end_of_degree(valid);
            for c in &mut self.coef[end..] {
                *c = 0.0;
            }
            self.valid = valid;
        }
        self
    }

    fn mul_ref(&self, other: &Jet) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.layout, &other.layout));
        let valid = self.valid.min(other.valid);
        let end = self.layout.end_of_degree(valid);
        let mut coef = vec![0.0; self.layout.len()];
        let l = &self.layout;
        for (k, slot) in coef.iter_mut().enumerate().take(end) {
            let mut acc = 0.0;
            for &(i, j) in &l.pairs[l.mul_start[k]..l.mul_start[k + 1]] {
                acc += self.coef[i as usize] * other.coef[j as usize];
            }
            *slot = acc;
        }
        Jet {
            layout: self.layout.clone(),
            valid,
            coef,
        }
    }

    /// Evaluates `Σ_m series[m] h^m` where `h` is the non-constant part of `self`.
    fn compose(&self, series: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coef[0] = 0.0;
        let top = self.valid.min(series.len() - 1);
        let mut acc = Jet::constant(&self.layout, series[top]).truncated(self.valid);
        for m in (0..top).rev() {
            acc = acc.mul_ref(&h);
            acc.coef[0] += series[m];
        }
        acc
    }
}

fn binomial_half(m: usize) -> f64 {
    // C(1/2, m)
    let mut c = 1.0;
    for i in 0..m {
        c *= (0.5 - i as f64) / (i as f64 + 1.0);
    }
    c
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        self.coef[0]
    }

    fn constant_like(&self, v: f64) -> Self {
        Jet::constant(&self.layout, v)
    }

    fn recip(&self) -> Self {
        let c = self.coef[0];
        let series: Vec<f64> = (0..=self.valid).map(|m| (-1.0f64).powi(m as i32) / c.powi(m as i32 + 1)).collect();
        self.compose(&series)
    }

    fn sqrt(&self) -> Self {
        let c = self.coef[0];
        let s = c.sqrt();
        let series: Vec<f64> = (0..=self.valid).map(|m| binomial_half(m) * s / c.powi(m as i32)).collect();
        self.compose(&series)
    }

    fn ln(&self) -> Self {
        let c = self.coef[0];
        let mut series = vec![c.ln()];
        for m in 1..=self.valid {
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            series.push(sign / (m as f64 * c.powi(m as i32)));
        }
        self.compose(&series)
    }

    fn exp(&self) -> Self {
        let e = self.coef[0].exp();
        let mut series = Vec::with_capacity(self.valid + 1);
        let mut fact = 1.0;
        for m in 0..=self.valid {
            if m > 0 {
                fact *= m as f64;
            }
            series.push(e / fact);
        }
        self.compose(&series)
    }

    fn sin(&self) -> Self {
        let (s, c) = self.coef[0].sin_cos();
        let cycle = [s, c, -s, -c];
        let mut series = Vec::with_capacity(self.valid + 1);
        let mut fact = 1.0;
        for m in 0..=self.valid {
            if m > 0 {
                fact *= m as f64;
            }
            series.push(cycle[m % 4] / fact);
        }
        self.compose(&series)
    }

    fn cos(&self) -> Self {
        let (s, c) = self.coef[0].sin_cos();
        let cycle = [c, -s, -c, s];
        let mut series = Vec::with_capacity(self.valid + 1);
        let mut fact = 1.0;
        for m in 0..=self.valid {
            if m > 0 {
                fact *= m as f64;
            }
            series.push(cycle[m % 4] / fact);
        }
        self.compose(&series)
    }

    fn abs(&self) -> Self {
        if self.coef[0] < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let valid = self.valid.min(rhs.valid);
        let mut out = self.truncated(valid);
        let end = out.layout.end_of_degree(valid);
        for (a, b) in out.coef[..end].iter_mut().zip(&rhs.coef[..end]) {
            *a += b;
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let valid = self.valid.min(rhs.valid);
        let mut out = self.truncated(valid);
        let end = out.layout.end_of_degree(valid);
        for (a, b) in out.coef[..end].iter_mut().zip(&rhs.coef[..end]) {
            *a -= b;
        }
        out
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_ref(&rhs)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self.mul_ref(&rhs.recip())
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for c in &mut self.coef {
            *c = -*c;
        }
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coef[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coef[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        for c in &mut self.coef {
            *c *= rhs;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(mut self, rhs: f64) -> Jet {
        for c in &mut self.coef {
            *c /= rhs;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn layout_counts_monomials() {
        // C(m + K, K)
        assert_eq!(Layout::get(2, 3).len(), 10);
        assert_eq!(Layout::get(4, 4).len(), 70);
        assert_eq!(Layout::get(6, 6).len(), 924);
    }

    #[test]
    fn polynomial_mixed_partial_is_exact() {
        // f = x0 * x1^3, ∂x0 ∂x1^3 f = 6
        let l = Layout::get(2, 4);
        let x0 = Jet::variable(&l, 0.7, 0);
        let x1 = Jet::variable(&l, -1.3, 1);
        let f = x0 * x1.clone() * x1.clone() * x1;
        assert!(close(f.derivative(&[1, 3]), 6.0, 1e-14));
        assert!(close(f.derivative(&[0, 3]), 6.0 * 0.7, 1e-14));
    }

    #[test]
    fn elementary_functions_match_known_derivatives() {
        let l = Layout::get(1, 5);
        let t = 0.4;
        let x = Jet::variable(&l, t, 0);
        let e = x.exp();
        for k in 0..=5u8 {
            assert!(close(e.derivative(&[k]), t.exp(), 1e-14));
        }
        let s = x.sin();
        assert!(close(s.derivative(&[3]), -t.cos(), 1e-14));
        let lg = x.ln();
        assert!(close(lg.derivative(&[2]), -1.0 / (t * t), 1e-13));
        let r = x.sqrt();
        assert!(close(r.derivative(&[1]), 0.5 / t.sqrt(), 1e-14));
        let inv = x.recip();
        assert!(close(inv.derivative(&[4]), 24.0 / t.powi(5), 1e-13));
        let th = x.tanh();
        let sech2 = 1.0 / t.cosh().powi(2);
        assert!(close(th.derivative(&[1]), sech2, 1e-14));
        assert!(close(th.derivative(&[2]), -2.0 * t.tanh() * sech2, 1e-13));
    }

    #[test]
    fn differentiation_lowers_valid_order() {
        let l = Layout::get(2, 3);
        let x = Jet::variable(&l, 1.0, 0);
        let y = Jet::variable(&l, 2.0, 1);
        let f = x.clone() * x * y;
        let fx = f.diff(0);
        assert_eq!(fx.valid_order(), 2);
        // ∂x (x^2 y) = 2xy, then ∂y -> 2x
        assert!(close(fx.derivative(&[0, 0]), 4.0, 1e-15));
        assert!(close(fx.derivative(&[0, 1]), 2.0, 1e-15));
        let mixed = fx.diff(1);
        assert!(close(mixed.value(), 2.0, 1e-15));
    }

    #[test]
    fn quotient_rule_through_division() {
        let l = Layout::get(1, 4);
        let x = Jet::variable(&l, 0.3, 0);
        // f = x / (1 + x^2)
        let f = x.clone() / (x.clone() * x.clone() + 1.0);
        let t: f64 = 0.3;
        let d1 = (1.0 - t * t) / (1.0 + t * t).powi(2);
        assert!(close(f.derivative(&[1]), d1, 1e-14));
    }
}
