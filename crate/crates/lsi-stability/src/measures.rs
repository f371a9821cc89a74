//! Reference measures and Gaussian quadrature.
//!
//! Three normalizations of the Gaussian measure appear throughout, all with
//! unit mass:
//!
//! * `MuPi`:  dmu = e^{-pi |x|^2} dx, per-axis variance 1/(2 pi);
//! * `MassM`: dm = 2^{n/2} e^{-2 pi |x|^2} dx, per-axis variance 1/(4 pi);
//! * `Gamma`: dgamma = (2 pi)^{-n/2} e^{-|x|^2/2} dx, per-axis variance 1.
//!
//! A [`QuadratureRule`] is a tensor-product Gauss-Hermite rule stored in the
//! standard-normal base; [`integrate`] rescales nodes per measure. One rule
//! therefore serves all three measures at a given (dim, order). Node sums run
//! in a fixed lexicographic order with Neumaier-compensated accumulation, so
//! results are bit-stable across runs and thread counts.

use crate::fields::ScalarField;
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Dimension cap for the whole toolkit. Tensor rules grow like order^dim, and
/// every studied family lives in n <= 3.
pub const MAX_DIM: usize = 3;

/// The three Gaussian normalizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum MeasureKind {
    /// dmu = e^{-pi |x|^2} dx
    MuPi,
    /// dm = 2^{n/2} e^{-2 pi |x|^2} dx
    MassM,
    /// Standard Gaussian dgamma = (2 pi)^{-n/2} e^{-|x|^2/2} dx
    Gamma,
}

impl MeasureKind {
    /// Per-axis standard deviation.
    pub fn sigma(self) -> f64 {
        use std::f64::consts::PI;
        match self {
            MeasureKind::MuPi => 1.0 / (2.0 * PI).sqrt(),
            MeasureKind::MassM => 0.5 / PI.sqrt(),
            MeasureKind::Gamma => 1.0,
        }
    }

    /// Total mass; all three are probability measures.
    pub fn mass(self) -> f64 {
        1.0
    }

    /// Closed-form second moment of |x|^2 in dimension `dim`.
    pub fn m2_one(self, dim: usize) -> f64 {
        let n = dim as f64;
        n * self.sigma().powi(2)
    }

    /// Closed-form fourth moment of |x|^4 in dimension `dim`.
    pub fn m4_one(self, dim: usize) -> f64 {
        let n = dim as f64;
        n * (n + 2.0) * self.sigma().powi(4)
    }
}

/// Neumaier-compensated accumulator. Addition order is fixed by the caller;
/// the compensation keeps node sums exact to within one ulp of the result.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Tensor-product Gauss-Hermite rule in the standard-normal base.
///
/// Only the per-axis nodes and weights are stored; tensor points are
/// enumerated lazily in lexicographic order, which keeps an order-256 rule in
/// three dimensions at a few kilobytes instead of half a gigabyte.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    dim: usize,
    order: usize,
    axis_nodes: Vec<f64>,
    axis_weights: Vec<f64>,
}

/// Default per-dimension order: exact enough for every built-in family while
/// keeping the 3-d tensor grid small.
pub fn default_order(dim: usize) -> usize {
    match dim {
        1 => 60,
        2 => 40,
        _ => 24,
    }
}

/// Build a rule with `order^dim` points.
pub fn build_rule(dim: usize, order: usize) -> Result<QuadratureRule> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::Parameter(format!(
            "dim must be in 1..={MAX_DIM}, got {dim}"
        )));
    }
    if !(8..=256).contains(&order) {
        return Err(Error::Parameter(format!(
            "order must be in 8..=256, got {order}"
        )));
    }
    let (axis_nodes, axis_weights) = hermite_axis(order);
    Ok(QuadratureRule {
        dim,
        order,
        axis_nodes,
        axis_weights,
    })
}

/// Evaluate the orthonormal Hermite polynomials of the standard normal at x:
/// returns (p_{n-1}(x), p_n(x), sum_{k<n} p_k(x)^2). Recurrence:
/// p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1).
fn orthonormal_hermite_scan(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    let mut sum_sq = 1.0f64;
    for k in 0..n {
        let kf = k as f64;
        let next = (x * cur - kf.sqrt() * prev) / (kf + 1.0).sqrt();
        prev = cur;
        cur = next;
        if k + 1 < n {
            sum_sq += cur * cur;
        }
    }
    (prev, cur, sum_sq)
}

/// One-dimensional Gauss-Hermite nodes/weights for the standard normal.
///
/// Node seeds come from the eigenvalues of the Jacobi matrix (Golub-Welsch);
/// each is then polished by Newton's method on p_n and the weight recomputed
/// from the Christoffel function, w_i = 1 / sum_{k<n} p_k(x_i)^2. Dense
/// eigensolvers lose all relative accuracy in the ~1e-45 extreme weights,
/// and integrands that grow toward the tail (wide Gaussians) amplify exactly
/// those nodes; the Christoffel form stays accurate there. Nodes are sorted
/// ascending and symmetrized about 0, so odd integrands cancel to machine
/// precision.
fn hermite_axis(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        // Orthonormal recurrence in the standard-normal base: off-diagonal
        // sqrt(k), eigenvalues are the nodes directly.
        let b = (k as f64).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    // Exact +/- symmetry; the middle node of an odd rule becomes exactly 0.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let mut weights = vec![0.0f64; n];
    for i in 0..n.div_ceil(2) {
        let j = n - 1 - i;
        let mut x = nodes[j];
        if x > 0.0 {
            // Two Newton steps on p_n; p_n'(x) = sqrt(n) p_{n-1}(x).
            for _ in 0..2 {
                let (pm, pn, _) = orthonormal_hermite_scan(n, x);
                x -= pn / ((n as f64).sqrt() * pm);
            }
            nodes[j] = x;
            nodes[i] = -x;
        }
        let (_, _, sum_sq) = orthonormal_hermite_scan(n, x);
        let w = 1.0 / sum_sq;
        weights[i] = w;
        weights[j] = w;
    }
    (nodes, weights)
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Total number of tensor points, order^dim.
    pub fn len(&self) -> usize {
        self.order.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis nodes in the standard-normal base.
    pub fn axis_nodes(&self) -> &[f64] {
        &self.axis_nodes
    }

    /// Per-axis weights; they sum to 1.
    pub fn axis_weights(&self) -> &[f64] {
        &self.axis_weights
    }

    /// Visit every tensor node in lexicographic order. `x` is pre-scaled by
    /// `sigma`, `w` is the product weight.
    pub(crate) fn visit(
        &self,
        sigma: f64,
        mut f: impl FnMut(&[f64], f64) -> Result<()>,
    ) -> Result<()> {
        let n = self.order;
        let mut idx = [0usize; MAX_DIM];
        let mut x = [0.0f64; MAX_DIM];
        loop {
            let mut w = 1.0;
            for d in 0..self.dim {
                x[d] = sigma * self.axis_nodes[idx[d]];
                w *= self.axis_weights[idx[d]];
            }
            f(&x[..self.dim], w)?;
            // lexicographic increment
            let mut d = self.dim;
            loop {
                if d == 0 {
                    return Ok(());
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < n {
                    break;
                }
                idx[d] = 0;
            }
        }
    }
}

/// Integrate a plain closure against `kind` using `rule`.
pub fn integrate_fn(
    kind: MeasureKind,
    rule: &QuadratureRule,
    g: impl FnMut(&[f64]) -> f64,
) -> Result<f64> {
    let mut g = g;
    let mut acc = CompensatedSum::new();
    rule.visit(kind.sigma(), |x, w| {
        let v = g(x);
        if !v.is_finite() {
            return Err(Error::Evaluation { node: x.to_vec() });
        }
        acc.add(w * v);
        Ok(())
    })?;
    Ok(acc.value())
}

/// Integrate several integrands in one sweep over the nodes, sharing field
/// evaluations. `g` fills `out` with the integrand values at `x`.
pub fn integrate_many<const K: usize>(
    kind: MeasureKind,
    rule: &QuadratureRule,
    mut g: impl FnMut(&[f64], &mut [f64; K]),
) -> Result<[f64; K]> {
    let mut acc = [CompensatedSum::new(); K];
    let mut vals = [0.0f64; K];
    rule.visit(kind.sigma(), |x, w| {
        g(x, &mut vals);
        for (a, &v) in acc.iter_mut().zip(vals.iter()) {
            if !v.is_finite() {
                return Err(Error::Evaluation { node: x.to_vec() });
            }
            a.add(w * v);
        }
        Ok(())
    })?;
    Ok(acc.map(|a| a.value()))
}

/// Integrate a scalar field against `kind`.
pub fn integrate(g: &ScalarField, kind: MeasureKind, rule: &QuadratureRule) -> Result<f64> {
    if g.dim() != rule.dim() {
        return Err(Error::DimensionMismatch {
            expected: rule.dim(),
            got: g.dim(),
        });
    }
    integrate_fn(kind, rule, |x| g.value(x))
}

/// Pull a field on the mu side back to a gamma-density:
/// f(x) = |u|^2(x / sqrt(2 pi)). For unit-norm `u`, `f` integrates to 1
/// against gamma, and int |grad f|^2/f dgamma = (2/pi) int |grad u|^2 dmu.
pub fn u_to_gamma_density(u: &ScalarField) -> ScalarField {
    let scale = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let label = format!("gamma_density({})", u.label());
    let uv = u.clone();
    let ug = u.clone();
    let value = move |x: &[f64]| {
        let y: Vec<f64> = x.iter().map(|&c| c * scale).collect();
        uv.value(&y).powi(2)
    };
    let grad = move |x: &[f64]| {
        let y: Vec<f64> = x.iter().map(|&c| c * scale).collect();
        let uval = ug.value(&y);
        let mut dg = ug.grad(&y);
        for c in dg.iter_mut() {
            *c *= 2.0 * uval * scale;
        }
        dg
    };
    if u.has_grad() {
        ScalarField::with_grad(u.dim(), label, value, grad)
    } else {
        ScalarField::new(u.dim(), label, value)
    }
}

/// Rescale a field on the mu side to the dm side: w(x) = u(sqrt(2) x).
/// Mass and entropy integrals against dm match those of `u` against dmu.
pub fn u_to_m_field(u: &ScalarField) -> ScalarField {
    let s = std::f64::consts::SQRT_2;
    let label = format!("m_field({})", u.label());
    let uv = u.clone();
    let ug = u.clone();
    let value = move |x: &[f64]| {
        let y: Vec<f64> = x.iter().map(|&c| c * s).collect();
        uv.value(&y)
    };
    let grad = move |x: &[f64]| {
        let y: Vec<f64> = x.iter().map(|&c| c * s).collect();
        let mut dg = ug.grad(&y);
        for c in dg.iter_mut() {
            *c *= s;
        }
        dg
    };
    if u.has_grad() {
        ScalarField::with_grad(u.dim(), label, value, grad)
    } else {
        ScalarField::new(u.dim(), label, value)
    }
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn double_factorial(k: u32) -> f64 {
        let mut v = 1.0f64;
        let mut i = k as i64;
        while i > 1 {
            v *= i as f64;
            i -= 2;
        }
        v
    }

    proptest! {
        // Gauss-Hermite exactness: an order-m rule integrates monomials up to
        // degree 2m-1 to the exact Gaussian moment.
        #[test]
        fn monomials_integrate_exactly(degree in 0usize..16, kind_idx in 0usize..3) {
            let kind = [MeasureKind::MuPi, MeasureKind::MassM, MeasureKind::Gamma][kind_idx];
            let rule = build_rule(1, 8).unwrap();
            let got = integrate_fn(kind, &rule, |x| x[0].powi(degree as i32)).unwrap();
            let expect = if degree == 0 {
                1.0
            } else if degree % 2 == 1 {
                0.0
            } else {
                double_factorial(degree as u32 - 1) * kind.sigma().powi(degree as i32)
            };
            let tol = 1e-12 * expect.abs().max(1.0);
            prop_assert!((got - expect).abs() <= tol, "deg {degree}: {got} vs {expect}");
        }
    }
}
