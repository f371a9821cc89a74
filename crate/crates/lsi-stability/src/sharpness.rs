//! Closed-form engine for the Gaussian trial family
//! u_a(x) = (2a+1)^{n/4} e^{-a pi |x|^2}.
//!
//! Along this family everything reduces to elementary functions:
//!
//! ```text
//! pi delta_star(u_a) = pi N(a) / (2a+1),
//!     N(a) = 2 n a^2 - (n/2)(2a+1) ln(2a+1) + n a,
//! || u_a - 1 ||^2    = 2 D(a) / (2a+1),
//!     D(a) = (2a+1) - (2a+1)^{(n+4)/4} / (a+1)^{n/2},
//! ratio(a)           = pi N(a) / (2 D(a)).
//! ```
//!
//! The ratio decreases to 2 pi as a -> 0+, which is the sharpness statement:
//! no modulus omega(d) = o(d) can replace the linear bound. Near zero the
//! direct D(a) loses roughly half its significant digits to cancellation
//! (about 5 digits at a = 1e-2), so below [`A_SWITCH`] the denominator
//! switches to a frozen Taylor expansion.

use crate::fields::gaussian_trial;
use crate::functionals::deficit_star;
use crate::measures::{integrate_fn, MeasureKind, QuadratureRule};
use crate::reduce::IdentityReport;
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// Below this width the distance denominator is evaluated by series.
pub const A_SWITCH: f64 = 1e-2;

/// Which evaluation path produced a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Direct,
    Series,
}

/// One point of the trial-family scan.
#[derive(Debug, Clone, Serialize)]
pub struct SharpnessRow {
    pub a: f64,
    pub n: usize,
    /// pi delta_star(u_a).
    pub pi_deficit: f64,
    /// int |u_a - 1|^2 dmu.
    pub dist_sq_to_one: f64,
    /// pi_deficit / dist_sq_to_one, evaluated in its cancellation-free form.
    pub ratio: f64,
    pub branch: Branch,
}

impl SharpnessRow {
    /// Row assembled from externally measured deficit and distance (for
    /// families without closed forms, e.g. Hermite perturbations fed into
    /// [`empirical_kappa`]). `a` is whatever parameter indexes the family.
    pub fn from_measurements(a: f64, n: usize, pi_deficit: f64, dist_sq: f64) -> Self {
        SharpnessRow {
            a,
            n,
            pi_deficit,
            dist_sq_to_one: dist_sq,
            ratio: pi_deficit / dist_sq,
            branch: Branch::Direct,
        }
    }
}

/// Taylor coefficients of D(a) in powers a^2..a^8, one row per dimension
/// n = 1, 2, 3. Generated by tools/oracle.py in 50-digit arithmetic and
/// frozen; every value is exactly representable (dyadic rationals).
/// The a^8 truncation keeps the series/direct overlap gap below 1.2e-10
/// for a <= 2e-2; a shorter series would breach the 1e-9 window contract.
const DEN_SERIES: [[f64; 7]; 3] = [
    [
        0.25,
        0.0,
        -5.0 / 32.0,
        5.0 / 16.0,
        -65.0 / 128.0,
        25.0 / 32.0,
        -2435.0 / 2048.0,
    ],
    [
        0.5,
        0.0,
        -3.0 / 8.0,
        3.0 / 4.0,
        -19.0 / 16.0,
        7.0 / 4.0,
        -323.0 / 128.0,
    ],
    [
        0.75,
        0.0,
        -21.0 / 32.0,
        21.0 / 16.0,
        -259.0 / 128.0,
        91.0 / 32.0,
        -7875.0 / 2048.0,
    ],
];

fn validate(a: f64, n: usize) -> Result<()> {
    if !(1..=3).contains(&n) {
        return Err(Error::Parameter(format!(
            "dimension must be in 1..=3, got {n}"
        )));
    }
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::Parameter(format!(
            "trial width must be positive, got {a}"
        )));
    }
    Ok(())
}

/// Deficit numerator N(a) = 2na^2 - (n/2)(2a+1) ln(2a+1) + na.
///
/// The log goes through ln_1p(2a): taking ln of the rounded 2a+1 would cost
/// ~1e-16 absolute error, which the na vs (n/2)(2a+1)ln(2a+1) cancellation
/// blows up to ~eps/a^2 relative error in N near zero. With ln_1p the
/// relative error stays near eps/a, small enough for every tolerance here.
fn numerator(a: f64, n: usize) -> f64 {
    let nf = n as f64;
    let s = 2.0 * a;
    2.0 * nf * a * a - 0.5 * nf * (1.0 + s) * s.ln_1p() + nf * a
}

/// Distance denominator, direct form; loses ~5 digits at a = 1e-2.
fn denominator_direct(a: f64, n: usize) -> f64 {
    let t = 2.0 * a + 1.0;
    t - t.powf((n as f64 + 4.0) / 4.0) / (a + 1.0).powf(n as f64 / 2.0)
}

/// Distance denominator by the frozen series, a^2 (d2 + d3 a + ... + d8 a^6).
fn denominator_series(a: f64, n: usize) -> f64 {
    let c = &DEN_SERIES[n - 1];
    let mut acc = 0.0f64;
    for &ck in c.iter().rev() {
        acc = acc * a + ck;
    }
    acc * a * a
}

/// Evaluate the closed forms at one (a, n). The ratio is formed as
/// pi N / (2 D), sharing N and D with the other two fields, so
/// ratio = pi_deficit / dist_sq_to_one holds to rounding on both branches.
pub fn trial_closed_forms(a: f64, n: usize) -> Result<SharpnessRow> {
    validate(a, n)?;
    let (d, branch) = if a < A_SWITCH {
        (denominator_series(a, n), Branch::Series)
    } else {
        (denominator_direct(a, n), Branch::Direct)
    };
    let nn = numerator(a, n);
    let t = 2.0 * a + 1.0;
    Ok(SharpnessRow {
        a,
        n,
        pi_deficit: PI * nn / t,
        dist_sq_to_one: 2.0 * d / t,
        ratio: PI * nn / (2.0 * d),
        branch,
    })
}

/// Compare the closed forms against direct quadrature of the same
/// quantities. Returns reports named `pi_deficit` and `dist_sq`.
pub fn quadrature_cross_check(
    a: f64,
    n: usize,
    rule: &QuadratureRule,
) -> Result<Vec<IdentityReport>> {
    let row = trial_closed_forms(a, n)?;
    let u = gaussian_trial(a, n)?;
    let rep = deficit_star(&u, rule)?;
    let dist_quad = integrate_fn(MeasureKind::MuPi, rule, |x| (u.value(x) - 1.0).powi(2))?;
    Ok(vec![
        IdentityReport::from_sides("pi_deficit", row.pi_deficit, PI * rep.deficit),
        IdentityReport::from_sides("dist_sq", row.dist_sq_to_one, dist_quad),
    ])
}

/// Evaluate the closed forms over a grid, preserving input order.
pub fn ratio_scan(a_grid: &[f64], n: usize) -> Result<Vec<SharpnessRow>> {
    a_grid.iter().map(|&a| trial_closed_forms(a, n)).collect()
}

/// Modulus-contradiction probe (pi delta_star)^p / dist_sq for p > 1.
/// A modulus omega(d) = d^p with p > 1 would be o(d); the probe tending to 0
/// along a -> 0+ is the numerical face of that contradiction.
pub fn modulus_probe(p: f64, a_grid: &[f64], n: usize) -> Result<Vec<(f64, f64)>> {
    if !p.is_finite() || p <= 1.0 {
        return Err(Error::Parameter(format!(
            "modulus exponent must exceed 1, got {p}"
        )));
    }
    a_grid
        .iter()
        .map(|&a| {
            let row = trial_closed_forms(a, n)?;
            Ok((a, row.pi_deficit.powf(p) / row.dist_sq_to_one))
        })
        .collect()
}

/// Infimum of observed pi-deficit-to-distance ratios over supplied rows.
/// When per-row projection residuals are provided they replace the
/// distance-to-1 denominators (the residual is never larger, so this is the
/// tighter witness).
pub fn empirical_kappa(rows: &[SharpnessRow], projections: Option<&[f64]>) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::Parameter(
            "empirical kappa needs at least one row".into(),
        ));
    }
    if let Some(proj) = projections {
        if proj.len() != rows.len() {
            return Err(Error::Parameter(format!(
                "got {} projection residuals for {} rows",
                proj.len(),
                rows.len()
            )));
        }
    }
    let mut best = f64::INFINITY;
    for (i, row) in rows.iter().enumerate() {
        let denom = match projections {
            Some(proj) => proj[i],
            None => row.dist_sq_to_one,
        };
        if !(denom > 1e-12) {
            return Err(Error::Degenerate(format!(
                "row {i} (a={}) has denominator {denom}; ratio undefined",
                row.a
            )));
        }
        best = best.min(row.pi_deficit / denom);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::build_rule;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_bad_parameters() {
        assert!(trial_closed_forms(0.0, 1).is_err());
        assert!(trial_closed_forms(-0.1, 1).is_err());
        assert!(trial_closed_forms(1.0, 0).is_err());
        assert!(trial_closed_forms(1.0, 4).is_err());
        assert!(ratio_scan(&[0.1, -0.2], 1).is_err());
    }

    #[test]
    fn unit_width_row_matches_oracle() {
        // Oracle values from tools/oracle.py.
        let row = trial_closed_forms(1.0, 1).unwrap();
        assert_eq!(row.branch, Branch::Direct);
        assert_abs_diff_eq!(row.pi_deficit, 1.4158965059781919077, epsilon = 1e-14);
        assert_abs_diff_eq!(row.dist_sq_to_one, 0.13879028179580080212, epsilon = 1e-15);
        assert_abs_diff_eq!(row.ratio, 10.201697753315108950, epsilon = 1e-12);
        assert_abs_diff_eq!(
            row.ratio,
            row.pi_deficit / row.dist_sq_to_one,
            epsilon = 1e-12
        );
    }

    #[test]
    fn series_branch_matches_oracle() {
        // Frozen 50-digit evaluations of the exact quotient. The tolerances
        // reflect the double-precision numerator, whose relative error grows
        // like eps/a as the leading terms cancel.
        let row = trial_closed_forms(1e-3, 1).unwrap();
        assert_eq!(row.branch, Branch::Series);
        assert_abs_diff_eq!(row.ratio, 6.2873738353762052488, epsilon = 5e-11);
        // First-order prediction ratio = 2 pi (1 + 2a/3).
        assert_abs_diff_eq!(row.ratio, 2.0 * PI * (1.0 + 2e-3 / 3.0), epsilon = 1e-6);
        let row = trial_closed_forms(1e-4, 1).unwrap();
        assert_abs_diff_eq!(row.ratio, 6.2836041835818618646, epsilon = 1e-10);
    }

    #[test]
    fn branch_switch_rule() {
        assert_eq!(trial_closed_forms(1e-3, 1).unwrap().branch, Branch::Series);
        assert_eq!(trial_closed_forms(0.01, 1).unwrap().branch, Branch::Direct);
        assert_eq!(trial_closed_forms(0.5, 2).unwrap().branch, Branch::Direct);
    }

    #[test]
    fn branches_agree_on_overlap_window() {
        // The direct denominator still carries ~11 good digits here, enough
        // to certify the series against it.
        for n in 1..=3usize {
            for &a in &[5e-3, 7e-3, 1e-2, 1.5e-2, 2e-2] {
                let nn = numerator(a, n);
                let direct = PI * nn / (2.0 * denominator_direct(a, n));
                let series = PI * nn / (2.0 * denominator_series(a, n));
                assert!(
                    (direct - series).abs() <= 1e-9,
                    "n={n} a={a}: direct {direct} vs series {series}"
                );
            }
        }
        // Frozen overlap anchors, n=1 (tools/oracle.py).
        assert_abs_diff_eq!(
            trial_closed_forms(0.02, 1).unwrap().ratio,
            6.3668548175914688671,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            PI * numerator(0.005, 1) / (2.0 * denominator_series(0.005, 1)),
            6.3041226874478399644,
            epsilon = 1e-11
        );
    }

    #[test]
    fn quadrature_cross_checks() {
        let cases: [(f64, usize, usize, f64); 3] =
            [(0.5, 1, 60, 1e-10), (1.0, 2, 60, 1e-9), (2.0, 3, 72, 1e-8)];
        for (a, n, order, tol) in cases {
            let rule = build_rule(n, order).unwrap();
            for rep in quadrature_cross_check(a, n, &rule).unwrap() {
                assert!(
                    rep.abs_err <= tol,
                    "a={a} n={n} {}: abs_err {}",
                    rep.name,
                    rep.abs_err
                );
            }
        }
    }

    #[test]
    fn scan_decreases_toward_two_pi() {
        let rows = ratio_scan(&[0.2, 0.1, 0.05, 0.02, 0.01], 1).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[0].ratio > pair[1].ratio);
        }
        let last = rows.last().unwrap();
        assert!((last.ratio - 2.0 * PI).abs() < 0.05);
        // Single-point scan is plain consistency.
        let one = ratio_scan(&[1.0], 1).unwrap();
        assert_abs_diff_eq!(
            one[0].ratio,
            trial_closed_forms(1.0, 1).unwrap().ratio,
            epsilon = 0.0
        );
    }

    #[test]
    fn ratio_approaches_from_above() {
        for n in 1..=3usize {
            for &a in &[1e-5, 1e-4, 1e-3, 0.01, 0.1, 0.5, 1.0, 2.0] {
                let row = trial_closed_forms(a, n).unwrap();
                assert!(
                    row.ratio >= 2.0 * PI - 1e-6,
                    "n={n} a={a}: ratio {}",
                    row.ratio
                );
                assert!(row.pi_deficit > 0.0 && row.dist_sq_to_one > 0.0);
            }
        }
    }

    #[test]
    fn deficit_is_quadratic_near_zero() {
        let r3 = trial_closed_forms(1e-3, 1).unwrap().pi_deficit / 1e-6;
        let r4 = trial_closed_forms(1e-4, 1).unwrap().pi_deficit / 1e-8;
        assert!((r3 - r4).abs() / r4 < 0.1, "{r3} vs {r4}");
    }

    #[test]
    fn probe_collapses_for_superlinear_moduli() {
        assert!(modulus_probe(1.0, &[0.1], 1).is_err());
        assert!(modulus_probe(0.5, &[0.1], 1).is_err());

        let pairs = modulus_probe(2.0, &[0.1, 0.001], 1).unwrap();
        assert!(pairs[0].1 / pairs[1].1 >= 50.0);

        let pairs = modulus_probe(1.5, &[0.1, 0.01, 0.001], 1).unwrap();
        assert!(pairs[0].1 > pairs[1].1 && pairs[1].1 > pairs[2].1);
        assert!(pairs[0].1 / pairs[2].1 >= 2.0);

        let pairs = modulus_probe(1.0001, &[1e-4], 1).unwrap();
        assert!(pairs[0].1 < 2.0 * PI);
    }

    #[test]
    fn empirical_kappa_over_grids() {
        assert!(empirical_kappa(&[], None).is_err());

        let single = ratio_scan(&[1.0], 1).unwrap();
        assert_abs_diff_eq!(
            empirical_kappa(&single, None).unwrap(),
            10.201697753315108950,
            epsilon = 1e-12
        );

        // Decreasing ratio means the infimum sits at the smallest a.
        let grid: Vec<f64> = (1..=200).map(|k| k as f64 * 0.01).collect();
        let rows = ratio_scan(&grid, 1).unwrap();
        let kappa = empirical_kappa(&rows, None).unwrap();
        assert_abs_diff_eq!(kappa, rows[0].ratio, epsilon = 0.0);
        assert!(kappa >= 2.0 * PI - 1e-3);

        // Mixed dimensions: plain minimum over all rows.
        let mut mixed = ratio_scan(&[0.5, 1.0], 1).unwrap();
        mixed.extend(ratio_scan(&[0.5, 1.0], 2).unwrap());
        mixed.extend(ratio_scan(&[0.5, 1.0], 3).unwrap());
        let kappa = empirical_kappa(&mixed, None).unwrap();
        let expect = mixed.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(kappa, expect, epsilon = 0.0);

        // Projection residuals replace the distances when supplied.
        let rows = ratio_scan(&[1.0], 1).unwrap();
        let kappa = empirical_kappa(&rows, Some(&[0.1339745962155613532])).unwrap();
        assert_abs_diff_eq!(kappa, 10.568395397139725612, epsilon = 1e-9);
        assert!(empirical_kappa(&rows, Some(&[0.0])).is_err());
        assert!(empirical_kappa(&rows, Some(&[0.1, 0.2])).is_err());
    }

    #[test]
    fn rows_serialize_with_branch_labels() {
        let row = trial_closed_forms(1e-3, 2).unwrap();
        let json = serde_json::to_value(&row).unwrap();
        // Lowercase to match the CSV branch column.
        assert_eq!(json["branch"], "series");
        assert_eq!(json["n"], 2);
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        // Strict positivity off the manifold and approach from above, across
        // widths spanning both branches.
        #[test]
        fn positivity_and_lower_bound(exp in -5.0f64..0.3, n in 1usize..=3) {
            let a = 10f64.powf(exp);
            let row = trial_closed_forms(a, n).unwrap();
            prop_assert!(row.pi_deficit > 0.0);
            prop_assert!(row.dist_sq_to_one > 0.0);
            prop_assert!(row.ratio >= 2.0 * PI - 1e-6, "a={a} n={n}: {}", row.ratio);
        }

        // The two row fields and the ratio stay mutually consistent.
        #[test]
        fn ratio_consistent_with_components(a in 0.01f64..2.0, n in 1usize..=3) {
            let row = trial_closed_forms(a, n).unwrap();
            let recomputed = row.pi_deficit / row.dist_sq_to_one;
            prop_assert!((row.ratio - recomputed).abs() <= 1e-12 * row.ratio.abs());
        }
    }
}
