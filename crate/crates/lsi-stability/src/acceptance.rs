//! End-to-end acceptance suite.
//!
//! Ten numbered criteria cover quadrature exactness, the closed-form trial
//! family, the reduction identities, projection onto the extremal manifold,
//! the displayed stability inequalities, the transport chain, and the
//! empirical rate constant. Each criterion yields one pass/fail line;
//! failures append detail lines naming the offending cells and values.
//! Everything is deterministic: fixed seeds, fixed grids, fixed orders.

use crate::error::{Error, Result};
use crate::fields::{self, ScalarField};
use crate::functionals;
use crate::measures::{self, integrate_fn, MeasureKind, QuadratureRule};
use crate::project;
use crate::reduce;
use crate::sharpness::{self, Branch, SharpnessRow};
use crate::transport1d;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::PI;
use std::io::Write;

const TAU: f64 = std::f64::consts::TAU;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Criterion {
    pub index: usize,
    pub title: &'static str,
    pub passed: bool,
    /// One line per violated sub-check; empty when the criterion passes.
    pub details: Vec<String>,
}

impl Criterion {
    fn new(index: usize, title: &'static str) -> Criterion {
        Criterion {
            index,
            title,
            passed: true,
            details: Vec::new(),
        }
    }

    /// Record one sub-check; a failing one flips the criterion and keeps a
    /// diagnostic line.
    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        if !ok {
            self.passed = false;
            self.details.push(detail());
        }
    }
}

/// Per-axis quadrature orders used by the deficit-accuracy criteria; chosen
/// so the Gauss-Hermite truncation error sits well below the 1e-9 contract.
fn scan_order(n: usize) -> usize {
    match n {
        1 => 140,
        2 => 100,
        _ => 90,
    }
}

fn scan_rule(n: usize) -> Result<QuadratureRule> {
    measures::build_rule(n, scan_order(n))
}

/// Criterion 1: the quadrature reproduces the analytic moments of the
/// constant field in every dimension.
pub fn criterion_1() -> Result<Criterion> {
    let mut c = Criterion::new(1, "quadrature exactness on the constant field");
    for n in 1..=3usize {
        let rule = measures::build_rule(n, measures::default_order(n))?;
        let tol = if n <= 2 { 1e-12 } else { 1e-10 };
        let nf = n as f64;
        let mass = integrate_fn(MeasureKind::MuPi, &rule, |_| 1.0)?;
        let one = ScalarField::new(n, "one", |_| 1.0);
        let m = functionals::moments(&one, MeasureKind::MuPi, &rule)?;
        let m2_exact = nf / TAU;
        let m4_exact = nf * (nf + 2.0) / (4.0 * PI * PI);
        c.check((mass - 1.0).abs() <= tol, || {
            format!(
                "n={n}: mass {mass:.17e} differs from 1 by {:.3e}",
                (mass - 1.0).abs()
            )
        });
        c.check((m.m2 - m2_exact).abs() <= tol, || {
            format!("n={n}: m2 {:.17e} vs {:.17e}", m.m2, m2_exact)
        });
        c.check((m.m4 - m4_exact).abs() <= tol, || {
            format!("n={n}: m4 {:.17e} vs {:.17e}", m.m4, m4_exact)
        });
    }
    Ok(c)
}

/// Criterion 2: closed forms for the trial family agree with direct
/// quadrature of the same integrals.
pub fn criterion_2() -> Result<Criterion> {
    let mut c = Criterion::new(2, "closed forms vs quadrature on the trial family");
    for n in 1..=3usize {
        let rule = scan_rule(n)?;
        for a in [0.1, 0.5, 1.0, 2.0] {
            for rep in sharpness::quadrature_cross_check(a, n, &rule)? {
                c.check(rep.abs_err <= 1e-9, || {
                    format!(
                        "a={a} n={n} {}: closed {:.17e} vs quadrature {:.17e} (err {:.3e})",
                        rep.name, rep.lhs, rep.rhs, rep.abs_err
                    )
                });
            }
        }
    }
    Ok(c)
}

/// Criterion 3: the deficit-to-distance ratio decreases along the scan and
/// matches its first-order series at small parameter.
pub fn criterion_3() -> Result<Criterion> {
    let mut c = Criterion::new(3, "sharp-rate limit along the trial family");
    let rows = sharpness::ratio_scan(&[0.2, 0.1, 0.05, 0.02, 0.01], 1)?;
    for pair in rows.windows(2) {
        c.check(pair[0].ratio > pair[1].ratio, || {
            format!(
                "ratio not strictly decreasing: a={} gives {:.12}, a={} gives {:.12}",
                pair[0].a, pair[0].ratio, pair[1].a, pair[1].ratio
            )
        });
    }
    let a = 1e-3;
    let row = sharpness::trial_closed_forms(a, 1)?;
    c.check(row.branch == Branch::Series, || {
        format!("a={a}: expected the series branch, got {:?}", row.branch)
    });
    let series = TAU * (1.0 + 2.0 * a / 3.0);
    c.check((row.ratio - series).abs() <= 1e-5, || {
        format!(
            "a={a}: ratio {:.17e} vs first-order series {:.17e} (err {:.3e})",
            row.ratio,
            series,
            (row.ratio - series).abs()
        )
    });
    c.check((row.ratio - TAU).abs() <= 5e-3, || {
        format!(
            "a={a}: ratio {:.17e} is {:.3e} from the limit",
            row.ratio,
            (row.ratio - TAU).abs()
        )
    });
    Ok(c)
}

/// Deterministic random shift-tilt deformation of a Gaussian trial field.
fn random_shift_tilt(rng: &mut ChaCha12Rng, dim: usize) -> Result<ScalarField> {
    let base = fields::gaussian_trial(rng.gen_range(0.1..1.2), dim)?;
    let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.4..0.4)).collect();
    let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.4..0.4)).collect();
    let s = rng.gen_range(0.6..1.8);
    fields::shift_tilt(&base, &x0, &a, s)
}

/// Criterion 4: the four reduction identities hold on a seeded random
/// ensemble and the reduction is idempotent.
pub fn criterion_4() -> Result<Criterion> {
    let mut c = Criterion::new(4, "reduction identities on random shift-tilt fields");
    let mut rng = ChaCha12Rng::seed_from_u64(0x1d54_7001);
    for i in 0..50usize {
        let dim = if i % 10 < 7 { 1 } else { 2 };
        let rule = measures::build_rule(dim, measures::default_order(dim))?;
        let u = random_shift_tilt(&mut rng, dim)?;
        for rep in reduce::verify_reduction_identities(&u, &rule)? {
            c.check(rep.abs_err <= 1e-7, || {
                format!(
                    "field {i} (dim {dim}) identity '{}': |lhs-rhs| = {:.3e}",
                    rep.name, rep.abs_err
                )
            });
        }
        // Idempotency: reducing the reduced field is the identity.
        let once = reduce::reduce_to_normalized(&u, &rule)?;
        let twice = reduce::reduce_to_normalized(&once.w, &rule)?;
        let alpha_norm = twice.alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
        c.check(
            (twice.norm - 1.0).abs() <= 1e-9 && alpha_norm <= 1e-9,
            || {
                format!(
                    "field {i} (dim {dim}) not idempotent: second norm {:.17e}, |center| {:.3e}",
                    twice.norm, alpha_norm
                )
            },
        );
    }
    Ok(c)
}

/// Criterion 5: projection lands on the manifold for extremal inputs and
/// matches the closed form and a dense grid search for the unit trial field.
pub fn criterion_5() -> Result<Criterion> {
    let mut c = Criterion::new(5, "projection onto the extremal manifold");
    let mut rng = ChaCha12Rng::seed_from_u64(0x1d54_7005);
    for i in 0..20usize {
        let dim = match i % 5 {
            0..=2 => 1,
            3 => 2,
            _ => 3,
        };
        let rule = measures::build_rule(dim, measures::default_order(dim))?;
        let cc = rng.gen_range(0.5..2.0);
        let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = fields::exp_tilt(cc, &a)?;
        let proj = project::project_to_extremals(&u, 6, &rule, 0)?;
        c.check(proj.residual_sq <= 1e-9, || {
            format!(
                "extremal {i} (dim {dim}, c={cc:.6}): residual_sq {:.3e}",
                proj.residual_sq
            )
        });
    }

    // The unit trial field: closed-form residual and tilt.
    let rule = scan_rule(1)?;
    let u1 = fields::gaussian_trial(1.0, 1)?;
    let proj = project::project_to_extremals(&u1, 8, &rule, 0)?;
    let residual_exact = 1.0 - 0.5 * 3.0f64.sqrt();
    c.check((proj.residual_sq - residual_exact).abs() <= 1e-8, || {
        format!(
            "u_1 residual {:.17e} vs closed form {:.17e}",
            proj.residual_sq, residual_exact
        )
    });
    c.check(proj.a_star[0].abs() <= 1e-6, || {
        format!("u_1 tilt {:.3e} should vanish", proj.a_star[0])
    });

    // Dense grid-search oracle over the tilt parameter.
    let mut grid_best = f64::INFINITY;
    let mut grid_arg = f64::NAN;
    let norm_sq = integrate_fn(MeasureKind::MuPi, &rule, |x| {
        let v = u1.value(x);
        v * v
    })?;
    let mut step = -0.2;
    while step <= 0.2 + 1e-12 {
        let a = [step];
        let cc = project::optimal_c(&u1, &a, &rule)?;
        let r = integrate_fn(MeasureKind::MuPi, &rule, |x| {
            let d = u1.value(x) - cc * (a[0] * x[0]).exp();
            d * d
        })?;
        if r < grid_best {
            grid_best = r;
            grid_arg = step;
        }
        step += 2e-3;
    }
    let _ = norm_sq;
    c.check(proj.residual_sq <= grid_best + 1e-10, || {
        format!(
            "projection {:.17e} worse than grid minimum {:.17e}",
            proj.residual_sq, grid_best
        )
    });
    c.check(grid_best - proj.residual_sq <= 1e-6, || {
        format!(
            "grid minimum {:.17e} does not corroborate projection {:.17e}",
            grid_best, proj.residual_sq
        )
    });
    c.check(grid_arg.abs() <= 2.5e-3, || {
        format!("grid argmin {grid_arg:.6} should sit at the origin")
    });
    Ok(c)
}

/// The two part-one inequality checks applied to one field.
fn part1_checks(
    c: &mut Criterion,
    label: &str,
    u: &ScalarField,
    rule: &QuadratureRule,
) -> Result<()> {
    for rep in [
        functionals::check_al_sj(u, rule, 1e-9)?,
        functionals::check_alw(u, rule, 1e-9)?,
    ] {
        c.check(rep.holds, || {
            format!(
                "{label} {}: lhs {:.17e} rhs {:.17e} slack {:.3e}",
                rep.name, rep.lhs, rep.rhs, rep.slack
            )
        });
    }
    Ok(())
}

/// Criterion 6: the two part-one inequalities hold across the trial grid,
/// the Hermite grid, and reduced random fields, and the worked values for
/// the unit trial field reproduce.
pub fn criterion_6() -> Result<Criterion> {
    let mut c = Criterion::new(6, "part-one stability inequalities");
    for n in 1..=3usize {
        let rule = scan_rule(n)?;
        for a in [0.1, 0.5, 1.0, 2.0] {
            let u = fields::gaussian_trial(a, n)?;
            part1_checks(&mut c, &format!("gauss(a={a},dim={n})"), &u, &rule)?;
        }
    }
    let rule1 = scan_rule(1)?;
    for k in [2usize, 3, 4] {
        for eps in [0.01, 0.05, 0.1] {
            let u = fields::hermite_field(k, eps)?;
            part1_checks(&mut c, &format!("hermite(k={k},eps={eps})"), &u, &rule1)?;
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(0x1d54_7006);
    for i in 0..10usize {
        let u = random_shift_tilt(&mut rng, 1)?;
        let w = reduce::reduce_to_normalized(&u, &rule1)?.w;
        part1_checks(&mut c, &format!("reduced random field {i}"), &w, &rule1)?;
    }

    // Worked values for the unit trial field, each within 1e-6 of the
    // quoted approximations.
    let u1 = fields::gaussian_trial(1.0, 1)?;
    let alsj = functionals::check_al_sj(&u1, &rule1, 1e-9)?;
    let alw = functionals::check_alw(&u1, &rule1, 1e-9)?;
    for (what, got, quoted) in [
        ("al_sj lhs", alsj.lhs, 1.0),
        ("al_sj rhs", alsj.rhs, 1.400109),
        ("alw lhs", alw.lhs, 0.302018),
        ("alw rhs", alw.rhs, 0.450694),
    ] {
        c.check((got - quoted).abs() <= 1e-6, || {
            format!(
                "u_1 worked value {what}: computed {got:.17e} vs quoted {quoted} \
                 (miss {:.3e})",
                (got - quoted).abs()
            )
        });
    }
    Ok(c)
}

/// Criterion 7: the three-link moment chain holds on both grids and the
/// first link's worked values for the unit trial field reproduce.
pub fn criterion_7(kappa: f64) -> Result<Criterion> {
    let mut c = Criterion::new(7, "moment-bound chain");
    let mut run = |label: String, u: &ScalarField, rule: &QuadratureRule| -> Result<()> {
        let chain = functionals::check_moment_bound(u, 1.0, kappa, rule, 1e-9)?;
        for rep in &chain.links {
            c.check(rep.holds, || {
                format!(
                    "{label} link {}: lhs {:.17e} rhs {:.17e} slack {:.3e}",
                    rep.name, rep.lhs, rep.rhs, rep.slack
                )
            });
        }
        Ok(())
    };
    for n in 1..=3usize {
        let rule = scan_rule(n)?;
        for a in [0.1, 0.5, 1.0, 2.0] {
            let u = fields::gaussian_trial(a, n)?;
            run(format!("gauss(a={a},dim={n})"), &u, &rule)?;
        }
    }
    let rule1 = scan_rule(1)?;
    for k in [2usize, 3, 4] {
        for eps in [0.01, 0.05, 0.1] {
            let u = fields::hermite_field(k, eps)?;
            run(format!("hermite(k={k},eps={eps})"), &u, &rule1)?;
        }
    }

    let u1 = fields::gaussian_trial(1.0, 1)?;
    let chain = functionals::check_moment_bound(&u1, 1.0, kappa, &rule1, 1e-9)?;
    let link1 = &chain.links[0];
    for (what, got, quoted) in [("lhs", link1.lhs, 1.0 / 3.0), ("rhs", link1.rhs, 1.71679)] {
        c.check((got - quoted).abs() <= 1e-5, || {
            format!(
                "u_1 first-link worked value {what}: computed {got:.17e} vs quoted \
                 {quoted} (miss {:.3e})",
                (got - quoted).abs()
            )
        });
    }
    Ok(c)
}

/// A tilted-Gaussian probability density against gamma.
fn tilted_density(b: f64) -> ScalarField {
    ScalarField::with_grad(
        1,
        format!("tilt-density(b={b})"),
        move |x: &[f64]| (b * x[0] - 0.5 * b * b).exp(),
        move |x: &[f64]| vec![b * (b * x[0] - 0.5 * b * b).exp()],
    )
}

/// Criterion 8: transport equality cases — translations have vanishing
/// deficit and defect, equal Wasserstein distances, and a tight bound.
pub fn criterion_8() -> Result<Criterion> {
    let mut c = Criterion::new(8, "transport equality cases on translations");
    for b in [0.5, 1.0, 1.5, 2.0] {
        let f = tilted_density(b);
        let report = transport1d::transport_defect(&f)?;
        c.check(report.delta.abs() <= 1e-7, || {
            format!("b={b}: delta {:.3e} should vanish", report.delta)
        });
        c.check(report.defect_l2 <= 1e-6, || {
            format!("b={b}: defect_l2 {:.3e}", report.defect_l2)
        });
        c.check((report.w1 - b).abs() <= 1e-6, || {
            format!("b={b}: w1 {:.17e}", report.w1)
        });
        c.check((report.w2 - b).abs() <= 1e-6, || {
            format!("b={b}: w2 {:.17e}", report.w2)
        });
        let bound = report
            .bounds
            .iter()
            .find(|r| r.name == "w1_upper")
            .expect("the pipeline always emits the w1 bound");
        c.check(bound.slack.abs() <= 1e-6, || {
            format!("b={b}: w1 bound slack {:.3e} is not tight", bound.slack)
        });
    }
    Ok(c)
}

/// Criterion 9: the transport inequality chain on the mixture scan.
pub fn criterion_9() -> Result<Criterion> {
    let mut c = Criterion::new(9, "transport inequality chain on mixtures");
    for eps in [1e-3, 1e-2, 0.1] {
        for b in [1.0, 2.0, 4.0] {
            let f = fields::gamma_mixture(eps, b)?;
            // transport_defect cross-checks the two W1 formulas internally
            // and fails if they disagree beyond 1e-6.
            let r = transport1d::transport_defect(&f)?;
            let sqrt2d = (2.0 * r.delta).max(0.0).sqrt();
            c.check(r.defect_l2 <= 2.0 * r.delta + 1e-7, || {
                format!(
                    "eps={eps} b={b}: defect_l2 {:.17e} exceeds 2 delta {:.17e}",
                    r.defect_l2,
                    2.0 * r.delta
                )
            });
            c.check(r.defect_l1 <= sqrt2d + 1e-7, || {
                format!(
                    "eps={eps} b={b}: defect_l1 {:.17e} exceeds sqrt(2 delta) {sqrt2d:.17e}",
                    r.defect_l1
                )
            });
            c.check(r.w1 <= sqrt2d + r.fisher.max(0.0).sqrt() + 1e-6, || {
                format!("eps={eps} b={b}: w1 {:.17e} exceeds its bound", r.w1)
            });
            for bound in &r.bounds {
                c.check(bound.holds, || {
                    format!(
                        "eps={eps} b={b} bound {}: lhs {:.17e} rhs {:.17e}",
                        bound.name, bound.lhs, bound.rhs
                    )
                });
            }
        }
    }
    Ok(c)
}

/// Criterion 10: the empirical rate constant over the combined trial and
/// Hermite families stays above the sharp value, row by row.
pub fn criterion_10() -> Result<Criterion> {
    let mut c = Criterion::new(10, "empirical rate constant across families");
    let threshold = TAU - 1e-2;
    let rule = scan_rule(1)?;
    let mut rows: Vec<SharpnessRow> = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    let mut labels: Vec<String> = Vec::new();

    for a in [0.2, 0.1, 0.05, 0.02, 0.01, 0.5, 1.0, 2.0] {
        let row = sharpness::trial_closed_forms(a, 1)?;
        let u = fields::gaussian_trial(a, 1)?;
        let proj = project::project_to_extremals(&u, 6, &rule, 0)?;
        labels.push(format!("gauss(a={a})"));
        rows.push(row);
        residuals.push(proj.residual_sq);
    }
    for k in [2usize, 3, 4] {
        for eps in [0.01, 0.05, 0.1] {
            let u = fields::hermite_field(k, eps)?;
            let delta = functionals::deficit_star(&u, &rule)?.deficit;
            let proj = project::project_to_extremals(&u, 6, &rule, 0)?;
            labels.push(format!("hermite(k={k},eps={eps})"));
            rows.push(SharpnessRow::from_measurements(
                eps,
                1,
                PI * delta,
                proj.residual_sq,
            ));
            residuals.push(proj.residual_sq);
        }
    }

    for ((row, residual), label) in rows.iter().zip(&residuals).zip(&labels) {
        c.check(row.pi_deficit >= threshold * residual, || {
            format!(
                "{label}: pi-deficit {:.17e} < {threshold:.12} * residual {:.17e} \
                 (ratio {:.12})",
                row.pi_deficit,
                residual,
                row.pi_deficit / residual
            )
        });
    }
    let kappa_emp = sharpness::empirical_kappa(&rows, Some(&residuals))?;
    c.check(kappa_emp >= threshold, || {
        format!("empirical kappa {kappa_emp:.12} fell below {threshold:.12}")
    });
    Ok(c)
}

/// Run all ten criteria in order. `kappa` parameterizes the moment-bound
/// chain (the sharp empirical value `2 pi` is the canonical choice).
pub fn run_all(kappa: f64) -> Result<Vec<Criterion>> {
    Ok(vec![
        criterion_1()?,
        criterion_2()?,
        criterion_3()?,
        criterion_4()?,
        criterion_5()?,
        criterion_6()?,
        criterion_7(kappa)?,
        criterion_8()?,
        criterion_9()?,
        criterion_10()?,
    ])
}

/// Print one line per criterion (plus detail lines for failures) and return
/// whether everything passed.
pub fn run_suite<W: Write>(out: &mut W, kappa: f64) -> Result<bool> {
    let mut all = true;
    for c in run_all(kappa)? {
        writeln!(
            out,
            "criterion {:2} [{}] {}",
            c.index,
            if c.passed { "pass" } else { "FAIL" },
            c.title
        )
        .map_err(|e| Error::Degenerate(format!("write failed: {e}")))?;
        for d in &c.details {
            writeln!(out, "    - {d}")
                .map_err(|e| Error::Degenerate(format!("write failed: {e}")))?;
        }
        all &= c.passed;
    }
    Ok(all)
}
