//! One-dimensional optimal transport against the standard Gaussian.
//!
//! Everything in this module works on densities f relative to gamma =
//! N(0, 1): the monotone rearrangement T = G^{-1} o F (which is the
//! Brenier map in one dimension), the transport defect integrals that the
//! optimal-transport proof of the logarithmic Sobolev inequality
//! produces, the Wasserstein distances W1 and W2, and a mixture blow-up
//! scan exhibiting densities whose deficit is tiny while their transport
//! cost stays of order one.
//!
//! Quadrature strategy: every integral runs over composite Gauss-Legendre
//! panels spanning `[-TRUNCATION, TRUNCATION]`, with an analytic Gaussian
//! tail correction outside the window. The gamma mass beyond |x| = 12 is
//! about 1.8e-33, irrelevant at double precision, but the correction
//! keeps the cumulative function strictly monotone through the tails.
//! Gauss-Hermite rules are deliberately avoided here: the map integrands
//! are not entire, and Hermite convergence on them stalls near 1e-6.
//!
//! Integrands containing absolute values get special treatment: a panel
//! whose nodes bracket a sign change is re-integrated with the panel
//! split at the bisected root. Plain Gauss-Legendre loses six to seven
//! digits at such a kink; splitting restores full accuracy.

use std::f64::consts::{PI, SQRT_2};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{gamma_mixture, ScalarField};
use crate::functionals::{xlogx, InequalityReport};
use crate::measures::CompensatedSum;

/// Half-width of the quadrature window. The gamma mass outside is about
/// 1.8e-33 and is replaced by the analytic tail correction.
pub const TRUNCATION: f64 = 12.0;

/// Equal panels spanning the window.
const PANELS: usize = 400;

/// Gauss-Legendre order inside each panel.
const GL_ORDER: usize = 16;

/// Bracket half-width for the quantile bisection. Phi(-39) is below
/// every cumulative value the truncated pipeline can produce.
const QUANTILE_BRACKET: f64 = 39.0;

/// Densities may dip this far below zero before the builder rejects them;
/// anything in (-floor, 0) is treated as an evaluation rounding artifact.
const DENSITY_FLOOR: f64 = 1e-12;

/// Allowed deviation of the total mass of f dgamma from one.
const MASS_TOL: f64 = 1e-6;

/// Required agreement between the CDF-difference and map-based W1 formulas.
const W1_AGREEMENT: f64 = 1e-6;

/// Tolerance on the two defect inequalities.
const DEFECT_TOL: f64 = 1e-7;

/// Tolerance on the W1 upper bound.
const W1_BOUND_TOL: f64 = 1e-6;

/// A detected sign change is only re-integrated when skipping it could
/// move the integral by more than this; tinier crossings are roundoff
/// noise (for example F - G on the flat density is +-1e-16 everywhere).
const KINK_IMPACT_FLOOR: f64 = 1e-16;

const SQRT_TWO_PI: f64 = 2.5066282746310005024157652848110;

/// Standard normal density.
fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / SQRT_TWO_PI
}

/// Standard normal cumulative function via the complementary error
/// function, accurate to full double precision in both tails.
pub fn std_normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / SQRT_2)
}

/// Standard normal quantile for p in (0, 1).
///
/// Bisection narrows the bracket `[-39, 39]` until Newton can take over;
/// each Newton step stays bracket-guarded, which keeps the far tails
/// (where an unguarded Newton diverges) robust. Twenty Newton iterations
/// are capped; the step tolerance is 1e-13 relative to the abscissa.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!(
            "quantile argument must lie strictly inside (0, 1), got {p}"
        )));
    }
    if p > 0.5 {
        // 1 - p is exact here (both operands lie in [1/2, 1]), so the
        // reflected problem keeps full relative precision in the tail mass.
        Ok(-quantile_impl(1.0 - p, None))
    } else {
        Ok(quantile_impl(p, None))
    }
}

/// Quantile core; assumes 0 < p < 1. A hint (for example the map value at
/// the previous, nearby abscissa) skips the bisection phase.
fn quantile_impl(p: f64, hint: Option<f64>) -> f64 {
    let mut lo = -QUANTILE_BRACKET;
    let mut hi = QUANTILE_BRACKET;
    // A hint only narrows the starting bracket; it is never trusted as a
    // Newton start. In the far tails a start on the wrong side of the root
    // advances by only ~1/|x| per iteration, so a trusted hint can exhaust
    // the iteration budget several units away from the root.
    if let Some(h) = hint {
        if h > lo && h < hi {
            if std_normal_cdf(h) < p {
                lo = h;
            } else {
                hi = h;
            }
        }
    }
    let mut x = {
        while hi - lo > 0.25 {
            let mid = 0.5 * (lo + hi);
            if std_normal_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    for _ in 0..20 {
        let residual = std_normal_cdf(x) - p;
        if residual < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let raw = x - residual / std_normal_pdf(x);
        if raw == x {
            // The Newton step is below one ulp: converged.
            return x;
        }
        let mut next = raw;
        if !next.is_finite() {
            next = 0.5 * (lo + hi);
        } else if next <= lo {
            // Clamp overshoots to the bracket edge; if we are already
            // sitting on that edge, fall back to one bisection step.
            next = if x == lo { 0.5 * (lo + hi) } else { lo };
        } else if next >= hi {
            next = if x == hi { 0.5 * (lo + hi) } else { hi };
        }
        let done = (next - x).abs() <= 1e-13 * (1.0 + x.abs());
        x = next;
        if done {
            break;
        }
    }
    x
}

/// Nodes and weights of the k-point Gauss-Legendre rule on [-1, 1],
/// exact for polynomials of degree 2k - 1. Newton refinement from the
/// Tricomi cosine seeds; weights via 2 / ((1 - x^2) P_k'(x)^2).
pub(crate) fn legendre_rule(k: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(k >= 2, "Gauss-Legendre order must be at least 2");
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k / 2 {
        // i-th root counted from +1.
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        for _ in 0..12 {
            let (p, d) = legendre_scan(k, x);
            let step = p / d;
            x -= step;
            if step.abs() <= 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_scan(k, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        weights[i] = w;
        nodes[k - 1 - i] = x;
        weights[k - 1 - i] = w;
    }
    if k % 2 == 1 {
        // The middle node is exactly zero by symmetry.
        let (_, d) = legendre_scan(k, 0.0);
        nodes[k / 2] = 0.0;
        weights[k / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// (P_k(x), P_k'(x)) by the three-term recurrence. The derivative formula
/// divides by x^2 - 1, which is safe: all Legendre roots are interior.
fn legendre_scan(k: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = x;
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0) * x * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    let d = k as f64 * (x * cur - prev) / (x * x - 1.0);
    (cur, d)
}

/// Cumulative distribution function of f dgamma.
///
/// Built once per density: panel masses over `[-TRUNCATION, TRUNCATION]`
/// with compensated prefix sums from both ends, plus the Gaussian tail
/// corrections f(-L) Phi(t) below the window and f(L) Phi(-t) above it.
/// Keeping cumulative sums from both ends lets the upper tail of 1 - F
/// be evaluated without cancellation, which the map inversion needs.
pub struct SourceCdf {
    field: ScalarField,
    edges: Vec<f64>,
    /// cum_left[p] = tail mass + panels strictly left of panel p.
    cum_left: Vec<f64>,
    /// cum_right[p] = panels at or right of panel p + upper tail mass.
    cum_right: Vec<f64>,
    f_low: f64,
    f_high: f64,
    mass: f64,
    gl_nodes: Vec<f64>,
    gl_weights: Vec<f64>,
}

impl SourceCdf {
    fn build(field: &ScalarField) -> Result<SourceCdf> {
        if field.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: field.dim(),
            });
        }
        let (gl_nodes, gl_weights) = legendre_rule(GL_ORDER);
        let mut edges = Vec::with_capacity(PANELS + 1);
        for p in 0..=PANELS {
            edges.push(-TRUNCATION + 2.0 * TRUNCATION * p as f64 / PANELS as f64);
        }
        let mut panel_mass = vec![0.0; PANELS];
        for p in 0..PANELS {
            let center = 0.5 * (edges[p] + edges[p + 1]);
            let half = 0.5 * (edges[p + 1] - edges[p]);
            let mut acc = CompensatedSum::new();
            for (t, w) in gl_nodes.iter().zip(&gl_weights) {
                let x = center + half * t;
                let v = screened_value(field, x)?;
                acc.add(w * half * v * std_normal_pdf(x));
            }
            panel_mass[p] = acc.value();
        }
        let f_low = screened_value(field, -TRUNCATION)?;
        let f_high = screened_value(field, TRUNCATION)?;
        let tail = std_normal_cdf(-TRUNCATION);
        let mut acc = CompensatedSum::new();
        acc.add(f_low * tail);
        let mut cum_left = vec![0.0; PANELS + 1];
        cum_left[0] = acc.value();
        for p in 0..PANELS {
            acc.add(panel_mass[p]);
            cum_left[p + 1] = acc.value();
        }
        let mut acc = CompensatedSum::new();
        acc.add(f_high * tail);
        let mut cum_right = vec![0.0; PANELS + 1];
        cum_right[PANELS] = acc.value();
        for p in (0..PANELS).rev() {
            acc.add(panel_mass[p]);
            cum_right[p] = acc.value();
        }
        let mass = cum_left[PANELS] + f_high * tail;
        if !mass.is_finite() || (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::Normalization(format!(
                "density mass under gamma is {mass}, expected 1 within {MASS_TOL}"
            )));
        }
        Ok(SourceCdf {
            field: field.clone(),
            edges,
            cum_left,
            cum_right,
            f_low,
            f_high,
            mass,
            gl_nodes,
            gl_weights,
        })
    }

    /// Total mass of f dgamma (tail corrections included).
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// F(t), the cumulative mass of f dgamma on (-inf, t].
    pub fn eval(&self, t: f64) -> f64 {
        if t <= -TRUNCATION {
            return self.f_low * std_normal_cdf(t);
        }
        if t >= TRUNCATION {
            return self.mass - self.f_high * std_normal_cdf(-t);
        }
        let p = self.panel_index(t);
        self.cum_left[p] + self.partial(self.edges[p], t)
    }

    /// mass - F(t), accumulated from the right so the upper tail keeps
    /// full relative accuracy instead of cancelling against 1.
    pub fn upper(&self, t: f64) -> f64 {
        if t >= TRUNCATION {
            return self.f_high * std_normal_cdf(-t);
        }
        if t <= -TRUNCATION {
            return self.mass - self.f_low * std_normal_cdf(t);
        }
        let p = self.panel_index(t);
        self.cum_right[p + 1] + self.partial(t, self.edges[p + 1])
    }

    /// T(t) = Phi^{-1}(F(t)); switches to the complementary branch above
    /// the median so both tails of the map stay accurate.
    pub fn map_value(&self, t: f64) -> Result<f64> {
        self.map_value_hinted(t, None)
    }

    fn map_value_hinted(&self, t: f64, hint: Option<f64>) -> Result<f64> {
        let lower = self.eval(t);
        if !lower.is_finite() {
            return Err(Error::Evaluation { node: vec![t] });
        }
        if lower <= 0.0 {
            // Complete underflow of the lower tail; clamp to the bracket.
            return Ok(-QUANTILE_BRACKET);
        }
        if lower <= 0.5 {
            return Ok(quantile_impl(lower, hint));
        }
        let q = self.upper(t) + (1.0 - self.mass);
        if !q.is_finite() {
            return Err(Error::Evaluation { node: vec![t] });
        }
        if q <= 0.0 {
            return Ok(QUANTILE_BRACKET);
        }
        Ok(-quantile_impl(q, hint.map(|h| -h)))
    }

    fn panel_index(&self, t: f64) -> usize {
        let width = 2.0 * TRUNCATION / PANELS as f64;
        (((t + TRUNCATION) / width) as usize).min(PANELS - 1)
    }

    /// Partial-panel integral of f dgamma over [lo, hi].
    fn partial(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut acc = CompensatedSum::new();
        for (t, w) in self.gl_nodes.iter().zip(&self.gl_weights) {
            let x = center + half * t;
            let v = self.field.value(&[x]).max(0.0);
            acc.add(w * half * v * std_normal_pdf(x));
        }
        acc.value()
    }
}

/// Evaluate the density at one point, rejecting non-finite values and
/// genuine negativity; sub-floor dips are clamped to zero.
fn screened_value(field: &ScalarField, x: f64) -> Result<f64> {
    let v = field.value(&[x]);
    if !v.is_finite() {
        return Err(Error::Evaluation { node: vec![x] });
    }
    if v < -DENSITY_FLOOR {
        return Err(Error::Negativity {
            node: vec![x],
            value: v,
        });
    }
    Ok(v.max(0.0))
}

/// A plain scalar cumulative-distribution function (the target side G).
pub type TargetCdf = fn(f64) -> f64;

/// Build the pair (F, G): F for f dgamma via panel quadrature with tail
/// corrections, G the standard normal cumulative function.
pub fn cdf_pair(f: &ScalarField) -> Result<(SourceCdf, TargetCdf)> {
    Ok((SourceCdf::build(f)?, std_normal_cdf))
}

/// The monotone rearrangement T = G^{-1} o F sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct TransportMap1D {
    /// Sample abscissae, uniform and ascending over the window.
    pub grid: Vec<f64>,
    /// T at `grid`; non-decreasing.
    pub t_values: Vec<f64>,
    /// The source gamma-density.
    pub f: ScalarField,
}

/// Sample the monotone rearrangement of f dgamma onto gamma at
/// `grid_size` uniform abscissae across the window.
pub fn brenier_map_1d(f: &ScalarField, grid_size: usize) -> Result<TransportMap1D> {
    if grid_size < 64 {
        return Err(Error::Parameter(format!(
            "transport grid needs at least 64 points, got {grid_size}"
        )));
    }
    let cdf = SourceCdf::build(f)?;
    let step = 2.0 * TRUNCATION / (grid_size - 1) as f64;
    let mut grid = Vec::with_capacity(grid_size);
    let mut t_values: Vec<f64> = Vec::with_capacity(grid_size);
    let mut hint = None;
    for i in 0..grid_size {
        let x = -TRUNCATION + step * i as f64;
        let mut t = cdf.map_value_hinted(x, hint)?;
        // Clamp away sub-ulp inversion wobble so the samples stay
        // non-decreasing even across perfectly flat stretches of F.
        if let Some(&prev) = t_values.last() {
            t = t.max(prev);
        }
        hint = Some(t);
        grid.push(x);
        t_values.push(t);
    }
    Ok(TransportMap1D {
        grid,
        t_values,
        f: f.clone(),
    })
}

/// Transport-side report for one density: deficit, Fisher information,
/// the two defect integrals, both Wasserstein distances, and the bound
/// checks the proof chain asserts.
#[derive(Debug, Clone, Serialize)]
pub struct TransportReport1D {
    /// delta(f) = I(f)/2 - Ent(f), the logarithmic Sobolev deficit.
    pub delta: f64,
    /// I(f), the relative Fisher information.
    pub fisher: f64,
    /// Integral of |T - x + (ln f)'|^2 f dgamma.
    pub defect_l2: f64,
    /// Integral of |T - x + (ln f)'| f dgamma.
    pub defect_l1: f64,
    /// W1(f dgamma, gamma) by the CDF-difference formula.
    pub w1: f64,
    /// W2(f dgamma, gamma) by the map formula.
    pub w2: f64,
    /// defect_l2 <= 2 delta, defect_l1 <= sqrt(2 delta), and
    /// w1 <= sqrt(2 delta) + sqrt(I).
    pub bounds: Vec<InequalityReport>,
}

/// One quadrature node of a transport sweep with everything the
/// integrands need cached: the density, its derivative, the cumulative
/// value and the map value.
#[derive(Clone, Copy)]
struct Node {
    x: f64,
    /// Gauss-Legendre weight already scaled by the panel half-width.
    w: f64,
    gamma: f64,
    f: f64,
    fp: f64,
    cap_f: f64,
    t: f64,
}

struct Sweep {
    field: ScalarField,
    cdf: SourceCdf,
    nodes: Vec<Node>,
    with_grad: bool,
}

fn sample_node(
    cdf: &SourceCdf,
    field: &ScalarField,
    x: f64,
    w: f64,
    with_grad: bool,
    hint: Option<f64>,
) -> Result<Node> {
    let mut f = field.value(&[x]);
    if !f.is_finite() {
        return Err(Error::Evaluation { node: vec![x] });
    }
    let fp = if with_grad {
        // The defect integrands divide by f, so the density must be
        // strictly positive wherever (ln f)' is sampled.
        if f <= 0.0 {
            return Err(Error::SingularFisher { node: vec![x] });
        }
        let d = field.grad(&[x])[0];
        if !d.is_finite() {
            return Err(Error::Evaluation { node: vec![x] });
        }
        d
    } else {
        f = f.max(0.0);
        0.0
    };
    let cap_f = cdf.eval(x);
    let t = cdf.map_value_hinted(x, hint)?;
    Ok(Node {
        x,
        w,
        gamma: std_normal_pdf(x),
        f,
        fp,
        cap_f,
        t,
    })
}

fn build_sweep(field: &ScalarField, with_grad: bool) -> Result<Sweep> {
    if with_grad {
        field.require_grad()?;
    }
    let cdf = SourceCdf::build(field)?;
    let mut nodes = Vec::with_capacity(PANELS * GL_ORDER);
    let mut hint = None;
    for p in 0..PANELS {
        let center = 0.5 * (cdf.edges[p] + cdf.edges[p + 1]);
        let half = 0.5 * (cdf.edges[p + 1] - cdf.edges[p]);
        for (t, w) in cdf.gl_nodes.iter().zip(&cdf.gl_weights) {
            let node = sample_node(&cdf, field, center + half * t, w * half, with_grad, hint)?;
            hint = Some(node.t);
            nodes.push(node);
        }
    }
    Ok(Sweep {
        field: field.clone(),
        cdf,
        nodes,
        with_grad,
    })
}

impl Sweep {
    fn node_at(&self, x: f64, hint: Option<f64>) -> Result<Node> {
        sample_node(&self.cdf, &self.field, x, 0.0, self.with_grad, hint)
    }

    /// Integral of |signed| * weight dx over the window.
    ///
    /// Panels whose nodes bracket a sign change of `signed` are
    /// re-integrated with the panel split at the bisected root, but only
    /// when skipping the split could shift the result above the impact
    /// floor: sub-roundoff crossings (noise around an identically zero
    /// integrand) are left alone.
    fn abs_integral(
        &self,
        signed: impl Fn(&Node) -> f64,
        weight: impl Fn(&Node) -> f64,
    ) -> Result<f64> {
        let mut contrib = vec![0.0; PANELS];
        for (p, slot) in contrib.iter_mut().enumerate() {
            let mut acc = CompensatedSum::new();
            for n in &self.nodes[p * GL_ORDER..(p + 1) * GL_ORDER] {
                acc.add(n.w * signed(n).abs() * weight(n));
            }
            *slot = acc.value();
        }
        let mut roots: Vec<Vec<f64>> = vec![Vec::new(); PANELS];
        for pair in self.nodes.windows(2) {
            let (s0, s1) = (signed(&pair[0]), signed(&pair[1]));
            if (s0 < 0.0) == (s1 < 0.0) {
                continue;
            }
            let impact =
                (s1 - s0).abs() * (pair[1].x - pair[0].x) * weight(&pair[0]).max(weight(&pair[1]));
            if impact <= KINK_IMPACT_FLOOR {
                continue;
            }
            let root = self.bisect_root(&signed, &pair[0], &pair[1])?;
            roots[self.cdf.panel_index(root)].push(root);
        }
        for (p, panel_roots) in roots.iter_mut().enumerate() {
            if panel_roots.is_empty() {
                continue;
            }
            panel_roots.sort_by(f64::total_cmp);
            let mut cuts = vec![self.cdf.edges[p]];
            cuts.extend(panel_roots.iter().copied());
            cuts.push(self.cdf.edges[p + 1]);
            let mut acc = CompensatedSum::new();
            let mut hint = None;
            for seg in cuts.windows(2) {
                let (lo, hi) = (seg[0], seg[1]);
                if hi <= lo {
                    continue;
                }
                let center = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo);
                for (t, w) in self.cdf.gl_nodes.iter().zip(&self.cdf.gl_weights) {
                    let n = self.node_at(center + half * t, hint)?;
                    hint = Some(n.t);
                    acc.add(w * half * signed(&n).abs() * weight(&n));
                }
            }
            contrib[p] = acc.value();
        }
        let mut total = CompensatedSum::new();
        for c in contrib {
            total.add(c);
        }
        Ok(total.value())
    }

    fn bisect_root(
        &self,
        signed: &impl Fn(&Node) -> f64,
        left: &Node,
        right: &Node,
    ) -> Result<f64> {
        let negative_left = signed(left) < 0.0;
        let mut lo = left.x;
        let mut hi = right.x;
        let mut hint = Some(left.t);
        for _ in 0..60 {
            if hi - lo <= 1e-12 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let n = self.node_at(mid, hint)?;
            hint = Some(n.t);
            if (signed(&n) < 0.0) == negative_left {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Full defect pipeline; also returns the second moment of f dgamma,
/// which the blow-up scan converts to mu coordinates.
fn transport_pipeline(field: &ScalarField) -> Result<(TransportReport1D, f64)> {
    let sweep = build_sweep(field, true)?;
    let mut ent = CompensatedSum::new();
    let mut fisher_acc = CompensatedSum::new();
    let mut w2sq = CompensatedSum::new();
    let mut defl2 = CompensatedSum::new();
    let mut m2 = CompensatedSum::new();
    for n in &sweep.nodes {
        let fg = n.f * n.gamma * n.w;
        ent.add(xlogx(n.f) * n.gamma * n.w);
        fisher_acc.add(n.fp * n.fp / n.f * n.gamma * n.w);
        let disp = n.t - n.x;
        w2sq.add(disp * disp * fg);
        let defect = disp + n.fp / n.f;
        defl2.add(defect * defect * fg);
        m2.add(n.x * n.x * fg);
    }
    let mass = sweep.cdf.mass();
    let entropy = ent.value() - mass * mass.ln();
    let fisher = fisher_acc.value();
    let delta = 0.5 * fisher - entropy;
    let defect_l2 = defl2.value();
    let defect_l1 = sweep.abs_integral(|n| n.t - n.x + n.fp / n.f, |n| n.f * n.gamma)?;
    let w1_map = sweep.abs_integral(|n| n.t - n.x, |n| n.f * n.gamma)?;
    let w1 = sweep.abs_integral(|n| n.cap_f - std_normal_cdf(n.x), |_| 1.0)?;
    if (w1 - w1_map).abs() > W1_AGREEMENT {
        return Err(Error::Degenerate(format!(
            "W1 formulas disagree: CDF form {w1} vs map form {w1_map}"
        )));
    }
    let root_2d = (2.0 * delta).max(0.0).sqrt();
    let bounds = vec![
        InequalityReport::new("defect_l2", defect_l2, 2.0 * delta, DEFECT_TOL),
        InequalityReport::new("defect_l1", defect_l1, root_2d, DEFECT_TOL),
        InequalityReport::new(
            "w1_upper",
            w1,
            root_2d + fisher.max(0.0).sqrt(),
            W1_BOUND_TOL,
        ),
    ];
    let report = TransportReport1D {
        delta,
        fisher,
        defect_l2,
        defect_l1,
        w1,
        w2: w2sq.value().max(0.0).sqrt(),
        bounds,
    };
    Ok((report, m2.value()))
}

/// Deficit, Fisher information, defect integrals, Wasserstein distances
/// and the proof-chain bound checks for one gamma-density.
pub fn transport_defect(f: &ScalarField) -> Result<TransportReport1D> {
    Ok(transport_pipeline(f)?.0)
}

/// (W1, W2) between f dgamma and gamma. W1 uses the CDF-difference
/// formula and is cross-checked at runtime against the map-based
/// integral; W2 comes from the map displacement. No gradient needed.
pub fn wasserstein_1d(f: &ScalarField) -> Result<(f64, f64)> {
    let sweep = build_sweep(f, false)?;
    let mut w2sq = CompensatedSum::new();
    for n in &sweep.nodes {
        let disp = n.t - n.x;
        w2sq.add(disp * disp * n.f * n.gamma * n.w);
    }
    let w1_map = sweep.abs_integral(|n| n.t - n.x, |n| n.f * n.gamma)?;
    let w1 = sweep.abs_integral(|n| n.cap_f - std_normal_cdf(n.x), |_| 1.0)?;
    if (w1 - w1_map).abs() > W1_AGREEMENT {
        return Err(Error::Degenerate(format!(
            "W1 formulas disagree: CDF form {w1} vs map form {w1_map}"
        )));
    }
    Ok((w1, w2sq.value().max(0.0).sqrt()))
}

/// The headline transport bound W1 <= sqrt(2 delta) + sqrt(I).
pub fn w1_upper_bound_check(f: &ScalarField) -> Result<InequalityReport> {
    let report = transport_defect(f)?;
    Ok(report
        .bounds
        .into_iter()
        .find(|b| b.name == "w1_upper")
        .expect("the defect pipeline always emits the W1 bound"))
}

/// One cell of the blow-up scan over gamma-mixtures.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupRow {
    pub eps: f64,
    pub b: f64,
    pub delta: f64,
    pub fisher: f64,
    pub w1: f64,
    /// Gradient energy of u(x) = sqrt(f(sqrt(2 pi) x)) under mu, which is
    /// exactly (pi/2) I(f).
    pub grad_energy_mu: f64,
    /// Second moment of u^2 dmu, which is m2(f dgamma) / (2 pi).
    pub m2_mu: f64,
}

fn blowup_row(eps: f64, b: f64) -> Result<BlowupRow> {
    let f = gamma_mixture(eps, b)?;
    let (report, m2_gamma) = transport_pipeline(&f)?;
    Ok(BlowupRow {
        eps,
        b,
        delta: report.delta,
        fisher: report.fisher,
        w1: report.w1,
        grad_energy_mu: 0.5 * PI * report.fisher,
        m2_mu: m2_gamma / (2.0 * PI),
    })
}

/// Run the full transport pipeline over the (eps, b) mixture grid.
///
/// Rows come back in grid order (eps outer, b inner). Cells are
/// independent pure pipelines, so they are computed concurrently; the
/// output ordering and the values themselves do not depend on the
/// scheduling.
pub fn blowup_scan(eps_grid: &[f64], b_grid: &[f64]) -> Result<Vec<BlowupRow>> {
    let cells: Vec<(f64, f64)> = eps_grid
        .iter()
        .flat_map(|&eps| b_grid.iter().map(move |&b| (eps, b)))
        .collect();
    let slots: Mutex<Vec<Option<Result<BlowupRow>>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .clamp(1, cells.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let row = blowup_row(cells[i].0, cells[i].1);
                slots.lock().expect("scan worker panicked")[i] = Some(row);
            });
        }
    });
    slots
        .into_inner()
        .expect("scan worker panicked")
        .into_iter()
        .map(|slot| slot.expect("every cell is claimed by exactly one worker"))
        .collect()
}
