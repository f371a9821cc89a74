//! Reduction of an arbitrary field to a normalized, centered representative.
//!
//! Any u with positive norm maps to
//!
//! ```text
//! w(x) = u(x + alpha/N) e^{-(pi/N)(alpha.x + |alpha|^2/(2N))} / sqrt(N),
//! ```
//!
//! where N = ||u||^2 and alpha = int x |u|^2 dmu. The map kills the first
//! moment and the norm while shifting the deficit by an exactly computable
//! amount; extremals c e^{a.x} collapse to the constant 1. The four displayed
//! identities behind this reduction (distance, gradient, entropy, deficit)
//! are re-verified numerically by [`verify_reduction_identities`], with both
//! sides evaluated independently by quadrature.

use crate::fields::ScalarField;
use crate::functionals::xlogx;
use crate::measures::{integrate_many, MeasureKind, QuadratureRule};
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// Output of the reduction: the original norm, the center of mass, and the
/// normalized, centered field.
#[derive(Debug, Clone)]
pub struct ReductionData {
    /// ||u|| in L^2(mu).
    pub norm: f64,
    /// alpha = int x |u|^2 dmu.
    pub alpha: Vec<f64>,
    /// The reduced field; unit norm and zero center up to quadrature error.
    pub w: ScalarField,
}

/// One verified identity: both sides and their absolute gap.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
}

impl IdentityReport {
    pub fn from_sides(name: &str, lhs: f64, rhs: f64) -> Self {
        IdentityReport {
            name: name.to_string(),
            lhs,
            rhs,
            abs_err: (lhs - rhs).abs(),
        }
    }

    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self::from_sides(name, lhs, rhs)
    }
}

/// Norm-squared and center of |u|^2 dmu in one sweep.
pub(crate) fn mass_and_center(u: &ScalarField, rule: &QuadratureRule) -> Result<(f64, Vec<f64>)> {
    if u.dim() != rule.dim() {
        return Err(Error::DimensionMismatch {
            expected: rule.dim(),
            got: u.dim(),
        });
    }
    let dim = u.dim();
    let sums = integrate_many::<4>(MeasureKind::MuPi, rule, |x, out| {
        let v2 = u.value(x).powi(2);
        out[0] = v2;
        for d in 0..3 {
            out[1 + d] = if d < dim { x[d] * v2 } else { 0.0 };
        }
    })?;
    Ok((sums[0], sums[1..1 + dim].to_vec()))
}

/// Build the normalized, centered representative of `u`.
pub fn reduce_to_normalized(u: &ScalarField, rule: &QuadratureRule) -> Result<ReductionData> {
    let (norm_sq, alpha) = mass_and_center(u, rule)?;
    let norm = norm_sq.sqrt();
    if !(norm > 1e-12) {
        return Err(Error::Degenerate(format!(
            "field '{}' has L2 norm {norm}; reduction undefined",
            u.label()
        )));
    }
    let dim = u.dim();
    let beta: Vec<f64> = alpha.iter().map(|a| a / norm_sq).collect();
    let alpha_sq: f64 = alpha.iter().map(|a| a * a).sum();
    // Exponent of the tilt factor: -(pi/N)(alpha.x + |alpha|^2/(2N)).
    let coef = PI / norm_sq;
    let offset = alpha_sq / (2.0 * norm_sq);

    let label = format!("reduced({})", u.label());
    let has_grad = u.has_grad();
    let uv = u.clone();
    let av = alpha.clone();
    let bv = beta.clone();
    let value = move |x: &[f64]| {
        let y: Vec<f64> = x.iter().zip(&bv).map(|(xi, bi)| xi + bi).collect();
        let dot: f64 = av.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
        uv.value(&y) * (-coef * (dot + offset)).exp() / norm
    };
    let ug = u.clone();
    let ag = alpha.clone();
    let bg = beta.clone();
    let grad = move |x: &[f64]| {
        let y: Vec<f64> = x.iter().zip(&bg).map(|(xi, bi)| xi + bi).collect();
        let dot: f64 = ag.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
        let e = (-coef * (dot + offset)).exp() / norm;
        let uval = ug.value(&y);
        let du = ug.grad(&y);
        du.iter()
            .zip(&ag)
            .map(|(dui, ai)| (dui - coef * ai * uval) * e)
            .collect()
    };
    let w = if has_grad {
        ScalarField::with_grad(dim, label, value, grad)
    } else {
        ScalarField::new(dim, label, value)
    };
    Ok(ReductionData { norm, alpha, w })
}

/// Check the four identities linking `u` to its reduction, evaluating both
/// sides independently by quadrature:
///
/// 1. `distance`: int |w-1|^2 dmu
///    = (1/N) int |u - e^{(pi alpha/N).x - pi|alpha|^2/(2N^2) + ln||u||}|^2 dmu;
/// 2. `gradient`: int |grad w|^2 dmu = (1/N)(int |grad u|^2 dmu - pi^2|alpha|^2/N);
/// 3. `entropy`: int w^2 ln w^2 dmu = (1/N)(int u^2 ln(u^2/N) dmu - pi|alpha|^2/N);
/// 4. `deficit`: int |grad w|^2 - pi int w^2 ln w^2
///    = (1/N)(int |grad u|^2 - pi int u^2 ln(u^2/N)).
///
/// The right side of (1) uses the displayed tilted exponential verbatim, so a
/// pass certifies the algebra rather than re-deriving it.
pub fn verify_reduction_identities(
    u: &ScalarField,
    rule: &QuadratureRule,
) -> Result<Vec<IdentityReport>> {
    u.require_grad()?;
    let data = reduce_to_normalized(u, rule)?;
    let n = data.norm * data.norm;
    let alpha = &data.alpha;
    let alpha_sq: f64 = alpha.iter().map(|a| a * a).sum();
    let w = &data.w;

    // The comparison exponential of identity (1), exactly as displayed.
    let ln_norm = data.norm.ln();
    let tilt_coef: Vec<f64> = alpha.iter().map(|a| PI * a / n).collect();
    let tilt_offset = PI * alpha_sq / (2.0 * n * n);
    let compare = move |x: &[f64]| {
        let dot: f64 = tilt_coef.iter().zip(x).map(|(ci, xi)| ci * xi).sum();
        (dot - tilt_offset + ln_norm).exp()
    };

    let u_sums = integrate_many::<4>(MeasureKind::MuPi, rule, |x, out| {
        let v = u.value(x);
        let g = u.grad(x);
        out[0] = v * v;
        out[1] = g.iter().map(|c| c * c).sum();
        out[2] = xlogx(v * v);
        out[3] = (v - compare(x)).powi(2);
    })?;
    let w_sums = integrate_many::<4>(MeasureKind::MuPi, rule, |x, out| {
        let v = w.value(x);
        let g = w.grad(x);
        out[0] = (v - 1.0).powi(2);
        out[1] = g.iter().map(|c| c * c).sum();
        out[2] = xlogx(v * v);
        out[3] = 0.0;
    })?;
    let ent_u_norm = u_sums[2] - u_sums[0] * u_sums[0].ln();

    Ok(vec![
        IdentityReport::new("distance", w_sums[0], u_sums[3] / n),
        IdentityReport::new(
            "gradient",
            w_sums[1],
            (u_sums[1] - PI * PI * alpha_sq / n) / n,
        ),
        IdentityReport::new("entropy", w_sums[2], (ent_u_norm - PI * alpha_sq / n) / n),
        IdentityReport::new(
            "deficit",
            w_sums[1] - PI * w_sums[2],
            (u_sums[1] - PI * ent_u_norm) / n,
        ),
    ])
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use crate::fields;
    use crate::measures::{build_rule, integrate_many};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        // Moment identity from the reduction proof:
        // int grad(u) u dmu = pi alpha, componentwise.
        #[test]
        fn gradient_mass_identity(
            a0 in -0.2f64..1.0,
            x0 in -0.5f64..0.5,
            t in -0.6f64..0.6,
            s in 0.5f64..1.5,
        ) {
            let rule = build_rule(1, 60).unwrap();
            let base = fields::gaussian_trial(a0, 1).unwrap();
            let u = fields::shift_tilt(&base, &[x0], &[t], s).unwrap();
            let sums = integrate_many::<2>(MeasureKind::MuPi, &rule, |x, out| {
                let v = u.value(x);
                let g = u.grad(x);
                out[0] = g[0] * v;
                out[1] = x[0] * v * v;
            }).unwrap();
            prop_assert!(
                (sums[0] - PI * sums[1]).abs() <= 1e-8,
                "grad-mass {} vs pi alpha {}", sums[0], PI * sums[1]
            );
        }

        // Reduction output is always normalized and centered.
        #[test]
        fn reduction_normalizes_and_centers(
            x0 in -0.5f64..0.5,
            t in -0.5f64..0.5,
            s in 0.6f64..1.6,
        ) {
            let rule = build_rule(1, 60).unwrap();
            let base = fields::gaussian_trial(0.4, 1).unwrap();
            let u = fields::shift_tilt(&base, &[x0], &[t], s).unwrap();
            let data = reduce_to_normalized(&u, &rule).unwrap();
            let (norm_sq, center) = mass_and_center(&data.w, &rule).unwrap();
            prop_assert!((norm_sq.sqrt() - 1.0).abs() <= 1e-9);
            prop_assert!(center[0].abs() <= 1e-9);
        }
    }
}
