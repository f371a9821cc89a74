//! Scalar fields on R^n and the built-in trial families.
//!
//! A [`ScalarField`] bundles a pointwise evaluator with an optional analytic
//! gradient behind `Arc`s, so fields clone cheaply and can be shared across
//! threads. Every built-in constructor attaches its exact gradient; fields
//! assembled from bare closures can be upgraded with
//! [`finite_diff_gradient`].

use crate::measures::QuadratureRule;
use crate::{Error, Result};
use std::f64::consts::PI;
use std::sync::Arc;

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A scalar field u: R^dim -> R with an optional gradient.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    label: String,
    value: Arc<ValueFn>,
    grad: Option<Arc<GradFn>>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("has_grad", &self.grad.is_some())
            .finish()
    }
}

impl ScalarField {
    /// Field from a value closure alone; no gradient attached.
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            dim,
            label: label.into(),
            value: Arc::new(value),
            grad: None,
        }
    }

    /// Field with an analytic gradient.
    pub fn with_grad(
        dim: usize,
        label: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            dim,
            label: label.into(),
            value: Arc::new(value),
            grad: Some(Arc::new(grad)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_grad(&self) -> bool {
        self.grad.is_some()
    }

    /// Evaluate the field. `x` must have length `dim`.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.value)(x)
    }

    /// Evaluate the gradient. Panics if none is attached; use
    /// [`ScalarField::try_grad`] or [`finite_diff_gradient`] for fields built
    /// from bare closures.
    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        match &self.grad {
            Some(g) => g(x),
            None => panic!("field '{}' has no gradient attached", self.label),
        }
    }

    /// Gradient, or a `MissingGradient` error naming the field.
    pub fn try_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.grad {
            Some(g) => Ok(g(x)),
            None => Err(Error::MissingGradient(self.label.clone())),
        }
    }

    /// Error unless a gradient is attached; functionals that need derivatives
    /// call this up front so the failure names the field, not a node.
    pub fn require_grad(&self) -> Result<()> {
        if self.grad.is_some() {
            Ok(())
        } else {
            Err(Error::MissingGradient(self.label.clone()))
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > crate::measures::MAX_DIM {
        return Err(Error::Parameter(format!(
            "dim must be in 1..={}, got {dim}",
            crate::measures::MAX_DIM
        )));
    }
    Ok(())
}

/// Gaussian trial field u_a(x) = (2a+1)^{n/4} e^{-a pi |x|^2}.
///
/// Unit norm in L^2(mu) for every a > -1/2; a = 0 is the constant 1 and
/// a -> -1/2 or a -> infinity are the blow-up ends of the family.
pub fn gaussian_trial(a: f64, dim: usize) -> Result<ScalarField> {
    check_dim(dim)?;
    if !a.is_finite() || a <= -0.5 {
        return Err(Error::Parameter(format!(
            "gaussian trial width must satisfy a > -1/2, got {a}"
        )));
    }
    let n = dim as f64;
    let amp = (2.0 * a + 1.0).powf(n / 4.0);
    let value = move |x: &[f64]| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        amp * (-a * PI * r2).exp()
    };
    let grad = move |x: &[f64]| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        let u = amp * (-a * PI * r2).exp();
        x.iter().map(|&c| -2.0 * a * PI * c * u).collect()
    };
    Ok(ScalarField::with_grad(
        dim,
        format!("gauss(a={a})"),
        value,
        grad,
    ))
}

/// Extremal field c e^{a . x}; these are exactly the equality cases of the
/// deficit functional. Squared L^2(mu) norm: c^2 e^{|a|^2 / pi}.
pub fn exp_tilt(c: f64, a: &[f64]) -> Result<ScalarField> {
    check_dim(a.len())?;
    if !c.is_finite() || c == 0.0 {
        return Err(Error::Parameter(format!(
            "tilt amplitude must be finite and nonzero, got {c}"
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("tilt direction must be finite".into()));
    }
    let avec: Vec<f64> = a.to_vec();
    let ag = avec.clone();
    let dim = a.len();
    let label = format!(
        "tilt(c={c},a=[{}])",
        avec.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    let value = move |x: &[f64]| {
        let dot: f64 = avec.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
        c * dot.exp()
    };
    let grad = move |x: &[f64]| {
        let dot: f64 = ag.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
        let u = c * dot.exp();
        ag.iter().map(|&ai| ai * u).collect()
    };
    Ok(ScalarField::with_grad(dim, label, value, grad))
}

/// Value of the degree-k Hermite polynomial orthonormal in L^2(mu),
/// h_k(x) = H_k(sqrt(pi) x) / sqrt(2^k k!), via the stable three-term
/// recurrence h_{k+1} = sqrt(2 pi/(k+1)) x h_k - sqrt(k/(k+1)) h_{k-1}.
pub fn hermite_h(k: usize, x: f64) -> f64 {
    let mut prev = 1.0f64;
    if k == 0 {
        return prev;
    }
    let mut cur = (2.0 * PI).sqrt() * x;
    for j in 1..k {
        let jf = j as f64;
        let next = (2.0 * PI / (jf + 1.0)).sqrt() * x * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// One-dimensional Hermite perturbation of the constant field,
/// u = (1 + eps h_k) / sqrt(1 + eps^2), without any sign constraint.
///
/// Unit norm in L^2(mu) by orthonormality, for every eps. Odd k or large eps
/// make u change sign; callers that need a positive representative should go
/// through [`hermite_perturb`].
pub fn hermite_field(k: usize, eps: f64) -> Result<ScalarField> {
    if k == 0 || k > 10 {
        return Err(Error::Parameter(format!(
            "hermite degree must be in 1..=10, got {k}"
        )));
    }
    if !eps.is_finite() {
        return Err(Error::Parameter(format!(
            "hermite amplitude must be finite, got {eps}"
        )));
    }
    let norm = (1.0 + eps * eps).sqrt();
    let value = move |x: &[f64]| (1.0 + eps * hermite_h(k, x[0])) / norm;
    // h_k' = sqrt(2 pi k) h_{k-1}.
    let dcoef = eps * (2.0 * PI * k as f64).sqrt() / norm;
    let grad = move |x: &[f64]| vec![dcoef * hermite_h(k - 1, x[0])];
    Ok(ScalarField::with_grad(
        1,
        format!("hermite(k={k},eps={eps})"),
        value,
        grad,
    ))
}

/// [`hermite_field`] plus a positivity screen: the field must be strictly
/// positive at every mu-scaled node of `rule`, else the parameters are
/// rejected. This catches amplitudes large enough to push the perturbation
/// through zero inside the quadrature window.
pub fn hermite_perturb(k: usize, eps: f64, rule: &QuadratureRule) -> Result<ScalarField> {
    if rule.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: rule.dim(),
        });
    }
    let u = hermite_field(k, eps)?;
    let sigma = crate::measures::MeasureKind::MuPi.sigma();
    for &t in rule.axis_nodes() {
        let x = sigma * t;
        let v = u.value(&[x]);
        if v <= 0.0 {
            return Err(Error::Parameter(format!(
                "hermite(k={k},eps={eps}) is not positive: u({x}) = {v}"
            )));
        }
    }
    Ok(u)
}

/// Gamma-density mixture f = (1-eps) + eps e^{b x - b^2/2} in one dimension.
///
/// Both summands integrate to 1 against gamma, so f is a probability density
/// with f >= 1 - eps > 0 everywhere.
pub fn gamma_mixture(eps: f64, b: f64) -> Result<ScalarField> {
    if !eps.is_finite() || !(0.0..1.0).contains(&eps) {
        return Err(Error::Parameter(format!(
            "mixture weight must satisfy 0 <= eps < 1, got {eps}"
        )));
    }
    if !b.is_finite() {
        return Err(Error::Parameter(format!(
            "mixture shift must be finite, got {b}"
        )));
    }
    let value = move |x: &[f64]| (1.0 - eps) + eps * (b * x[0] - 0.5 * b * b).exp();
    let grad = move |x: &[f64]| vec![eps * b * (b * x[0] - 0.5 * b * b).exp()];
    Ok(ScalarField::with_grad(
        1,
        format!("mix(eps={eps},b={b})"),
        value,
        grad,
    ))
}

/// Shift, tilt and rescale an existing field:
/// v(x) = s u(x - x0) e^{a . x}.
///
/// This is the general off-manifold deformation used to exercise the
/// recentering reduction; with u = 1 it degenerates to a pure extremal.
pub fn shift_tilt(u: &ScalarField, x0: &[f64], a: &[f64], s: f64) -> Result<ScalarField> {
    let dim = u.dim();
    if x0.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x0.len(),
        });
    }
    if a.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: a.len(),
        });
    }
    if !s.is_finite() || s == 0.0 {
        return Err(Error::Parameter(format!(
            "scale must be finite and nonzero, got {s}"
        )));
    }
    if x0.iter().chain(a.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Parameter("shift and tilt must be finite".into()));
    }
    let label = format!(
        "shifted({},x0=[{}],a=[{}],s={s})",
        u.label(),
        x0.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(","),
        a.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    let x0v = x0.to_vec();
    let av = a.to_vec();
    let uv = u.clone();
    let value = move |x: &[f64]| {
        let y: Vec<f64> = x.iter().zip(&x0v).map(|(xi, x0i)| xi - x0i).collect();
        let dot: f64 = av.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
        s * uv.value(&y) * dot.exp()
    };
    let x0g = x0.to_vec();
    let ag = a.to_vec();
    let has_grad = u.has_grad();
    let ug = u.clone();
    let grad = move |x: &[f64]| {
        let y: Vec<f64> = x.iter().zip(&x0g).map(|(xi, x0i)| xi - x0i).collect();
        let dot: f64 = ag.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
        let e = s * dot.exp();
        let uval = ug.value(&y);
        let du = ug.grad(&y);
        du.iter()
            .zip(&ag)
            .map(|(dui, &ai)| e * (dui + ai * uval))
            .collect()
    };
    Ok(if has_grad {
        ScalarField::with_grad(dim, label, value, grad)
    } else {
        ScalarField::new(dim, label, value)
    })
}

/// Attach a central-difference gradient with step `h` to a field, replacing
/// any existing gradient. Accuracy is O(h^2) plus roundoff of order
/// machine-eps / h; h near 1e-5 balances the two for order-1 fields.
pub fn finite_diff_gradient(u: &ScalarField, h: f64) -> Result<ScalarField> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::Parameter(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let dim = u.dim();
    let label = u.label().to_string();
    let uv = u.clone();
    let ug = u.clone();
    let value = move |x: &[f64]| uv.value(x);
    let grad = move |x: &[f64]| {
        let mut y = x.to_vec();
        (0..dim)
            .map(|d| {
                let xd = x[d];
                y[d] = xd + h;
                let fp = ug.value(&y);
                y[d] = xd - h;
                let fm = ug.value(&y);
                y[d] = xd;
                (fp - fm) / (2.0 * h)
            })
            .collect()
    };
    Ok(ScalarField::with_grad(dim, label, value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{build_rule, integrate_fn, MeasureKind};
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    /// Compare the attached gradient against central differences at seeded
    /// points in the bulk of the Gaussian.
    fn assert_gradient_consistent(u: &ScalarField, seed: u64) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let fd = finite_diff_gradient(u, 1e-5).unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..u.dim()).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let ga = u.grad(&x);
            let gn = fd.grad(&x);
            for (a, n) in ga.iter().zip(&gn) {
                let scale = a.abs().max(1.0);
                assert!(
                    (a - n).abs() <= 1e-5 * scale,
                    "{}: grad {a} vs fd {n} at {x:?}",
                    u.label()
                );
            }
        }
    }

    #[test]
    fn trial_fields_are_unit_norm() {
        // Order 40 per axis: the default 3-d order (24) resolves a=1 only to
        // ~3e-7 because Gauss-Hermite converges geometrically in the width.
        for dim in 1..=3usize {
            let rule = build_rule(dim, 40).unwrap();
            for a in [-0.3, 0.0, 0.3, 1.0] {
                let u = gaussian_trial(a, dim).unwrap();
                let n2 = integrate_fn(MeasureKind::MuPi, &rule, |x| u.value(x).powi(2)).unwrap();
                assert_abs_diff_eq!(n2, 1.0, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn trial_rejects_collapse_end() {
        assert!(gaussian_trial(-0.5, 1).is_err());
        assert!(gaussian_trial(f64::NAN, 1).is_err());
        assert!(gaussian_trial(f64::INFINITY, 2).is_err());
    }

    #[test]
    fn tilt_norm_matches_closed_form() {
        // ||c e^{a.x}||^2 = c^2 e^{|a|^2/pi}; at c=1, a=1 this is e^{1/pi}.
        let u = exp_tilt(1.0, &[1.0]).unwrap();
        let rule = build_rule(1, 60).unwrap();
        let n2 = integrate_fn(MeasureKind::MuPi, &rule, |x| u.value(x).powi(2)).unwrap();
        assert_abs_diff_eq!(n2, 1.374802227439358631782822, epsilon = 1e-12);
    }

    #[test]
    fn hermite_values_and_orthonormality() {
        assert_abs_diff_eq!(hermite_h(0, 0.7), 1.0);
        assert_abs_diff_eq!(hermite_h(1, 0.7), (2.0 * PI).sqrt() * 0.7, epsilon = 1e-15);
        // h_2(x) = (2 pi x^2 - 1)/sqrt(2).
        assert_abs_diff_eq!(
            hermite_h(2, 0.7),
            (2.0 * PI * 0.49 - 1.0) / 2.0f64.sqrt(),
            epsilon = 1e-14
        );
        let rule = build_rule(1, 60).unwrap();
        for j in 0..=6usize {
            for k in j..=6usize {
                let ip = integrate_fn(MeasureKind::MuPi, &rule, |x| {
                    hermite_h(j, x[0]) * hermite_h(k, x[0])
                })
                .unwrap();
                let expect = if j == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn hermite_cubic_and_weighted_moments() {
        let rule = build_rule(1, 60).unwrap();
        // int h_2^3 dmu = 2 sqrt(2); oracle values from tools/oracle.py.
        let c3 = integrate_fn(MeasureKind::MuPi, &rule, |x| hermite_h(2, x[0]).powi(3)).unwrap();
        assert_abs_diff_eq!(c3, 2.828427124746190097603377, epsilon = 1e-12);
        let x2h2 = integrate_fn(MeasureKind::MuPi, &rule, |x| {
            x[0].powi(2) * hermite_h(2, x[0]).powi(2)
        })
        .unwrap();
        assert_abs_diff_eq!(x2h2, 2.5 / PI, epsilon = 1e-13);
        let h4 = integrate_fn(MeasureKind::MuPi, &rule, |x| hermite_h(2, x[0]).powi(4)).unwrap();
        assert_abs_diff_eq!(h4, 15.0, epsilon = 1e-11);
        let x2h3 = integrate_fn(MeasureKind::MuPi, &rule, |x| {
            x[0].powi(2) * hermite_h(3, x[0]).powi(2)
        })
        .unwrap();
        assert_abs_diff_eq!(x2h3, 3.5 / PI, epsilon = 1e-13);
    }

    #[test]
    fn hermite_perturbation_is_unit_norm() {
        let rule = build_rule(1, 60).unwrap();
        for (k, eps) in [(2usize, 0.01), (2, 0.1), (4, 0.05)] {
            let u = hermite_perturb(k, eps, &rule).unwrap();
            let n2 = integrate_fn(MeasureKind::MuPi, &rule, |x| u.value(x).powi(2)).unwrap();
            assert_abs_diff_eq!(n2, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn hermite_positivity_screen() {
        let rule = build_rule(1, 60).unwrap();
        // Small even perturbations stay positive; the odd cubic crosses zero
        // inside the window already at eps = 0.01.
        assert!(hermite_perturb(2, 0.1, &rule).is_ok());
        assert!(matches!(
            hermite_perturb(3, 0.01, &rule),
            Err(Error::Parameter(_))
        ));
        // The unconstrained constructor accepts the same parameters.
        assert!(hermite_field(3, 0.01).is_ok());
    }

    #[test]
    fn mixture_mass_and_floor() {
        let rule = build_rule(1, 60).unwrap();
        for (eps, b) in [(1e-3, 1.0), (0.01, 2.0), (0.1, 4.0)] {
            let f = gamma_mixture(eps, b).unwrap();
            let mass = integrate_fn(MeasureKind::Gamma, &rule, |x| f.value(x)).unwrap();
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-10);
            for x in [-6.0, -1.0, 0.0, 2.0, 6.0] {
                assert!(f.value(&[x]) >= 1.0 - eps);
            }
        }
        assert!(gamma_mixture(1.0, 1.0).is_err());
        assert!(gamma_mixture(-0.1, 1.0).is_err());
    }

    #[test]
    fn shift_tilt_composes_pointwise() {
        let u = gaussian_trial(1.0, 1).unwrap();
        let v = shift_tilt(&u, &[0.2], &[0.3], 1.1).unwrap();
        for x in [-1.0, 0.0, 0.5, 2.0] {
            let expect = 1.1 * u.value(&[x - 0.2]) * (0.3 * x).exp();
            assert_abs_diff_eq!(v.value(&[x]), expect, epsilon = 1e-14);
        }
        assert!(shift_tilt(&u, &[0.1, 0.2], &[0.3], 1.0).is_err());
        assert!(shift_tilt(&u, &[0.1], &[0.3], 0.0).is_err());
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        assert_gradient_consistent(&gaussian_trial(0.7, 2).unwrap(), 11);
        assert_gradient_consistent(&exp_tilt(0.8, &[0.4, -0.2]).unwrap(), 12);
        assert_gradient_consistent(&hermite_field(4, 0.05).unwrap(), 13);
        assert_gradient_consistent(&gamma_mixture(0.1, 2.0).unwrap(), 14);
        let base = gaussian_trial(0.5, 2).unwrap();
        assert_gradient_consistent(
            &shift_tilt(&base, &[0.1, -0.3], &[0.2, 0.4], 0.9).unwrap(),
            15,
        );
    }

    #[test]
    fn missing_gradient_paths() {
        let u = ScalarField::new(1, "bare", |x| x[0]);
        assert!(!u.has_grad());
        assert!(matches!(u.try_grad(&[0.5]), Err(Error::MissingGradient(_))));
        assert!(u.require_grad().is_err());
        let fixed = finite_diff_gradient(&u, 1e-5).unwrap();
        let g = fixed.grad(&[0.5]);
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-9);
        assert!(finite_diff_gradient(&u, 0.0).is_err());
    }
}
