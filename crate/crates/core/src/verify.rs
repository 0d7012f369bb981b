//! The full invariant suite at the canonical fixtures.
//!
//! Every check reports a name, the measured value, the tolerance it was held
//! to, and pass/fail; the CLI prints one line per check and exits nonzero on
//! any failure. Tolerances can be overridden by name, which is also how the
//! controlled-failure path is exercised.

use crate::criticality::{
    find_double_critical, trace_curve, trace_eigenvalue_check, CriticalPoint, SliceProblem,
    Tolerances, Window,
};
use crate::error::{Result, WaveError};
use crate::mkdv::{periodized_sech, soliton, soliton_speed, MkdvRun, WaveField};
use crate::models::{NlsParams, SwParams, TwoPhaseModel, Vec2};
use crate::reduction::{assemble, cross_checks, paper_comparison, ReductionCoefficients};
use crate::tensors::{bundle_with_route, contract2, contract3, DerivativeRoute, TensorBundle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

/// Extra lines a check wants printed verbatim (the per-term comparison
/// report).
#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Ctx {
    sw: SwParams,
    sw_state: Vec2,
    nls: NlsParams,
    nls_state: Vec2,
    overrides: BTreeMap<String, f64>,
}

impl Ctx {
    fn tol(&self, name: &str, default: f64) -> f64 {
        self.overrides.get(name).copied().unwrap_or(default)
    }

    fn check(
        &self,
        report: &mut VerifyReport,
        name: &'static str,
        value: f64,
        default_tol: f64,
        detail: impl Into<String>,
    ) {
        let tolerance = self.tol(name, default_tol);
        report.checks.push(CheckResult {
            name,
            value,
            tolerance,
            passed: value.is_finite() && value <= tolerance,
            detail: detail.into(),
        });
    }

    fn fail(&self, report: &mut VerifyReport, name: &'static str, err: &WaveError) {
        report.checks.push(CheckResult {
            name,
            value: f64::NAN,
            tolerance: self.tol(name, 0.0),
            passed: false,
            detail: format!("error: {err}"),
        });
    }
}

/// Fixture inputs for one model as parsed from its config file.
pub struct FixtureInput {
    pub model: Box<dyn TwoPhaseModel>,
    pub fixed_state: Vec2,
    pub pin_index: usize,
    pub pin_value: f64,
    pub guess: [f64; 2],
    pub window: Window,
    pub trace_steps: usize,
    pub trace_max_step: f64,
    pub trace_direction: f64,
}

/// Run the whole suite. `overrides` maps check names to replacement
/// tolerances.
pub fn run_suite(
    sw_fixture: &FixtureInput,
    nls_fixture: &FixtureInput,
    overrides: BTreeMap<String, f64>,
) -> VerifyReport {
    let sw = concrete_sw(sw_fixture.model.as_ref()).expect("sw fixture must use the sw model");
    let nls =
        concrete_nls(nls_fixture.model.as_ref()).expect("cnls fixture must use the cnls model");
    let ctx = Ctx {
        sw,
        sw_state: sw_fixture.fixed_state,
        nls,
        nls_state: nls_fixture.fixed_state,
        overrides,
    };
    let mut report = VerifyReport::default();

    round_trips(&ctx, &mut report);
    det_factorization(&ctx, &mut report);
    row_identity(&ctx, &mut report);
    tensor_identities(&ctx, &mut report);
    fd_vs_analytic(&ctx, &mut report);
    criticality_equivalence(&ctx, &mut report, sw_fixture, nls_fixture);
    fixture_pipelines(&ctx, &mut report, sw_fixture, nls_fixture);
    algebra_chain(&ctx, &mut report);
    traces(&ctx, &mut report, sw_fixture, nls_fixture);
    solver_checks(&ctx, &mut report);
    report
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_cafe)
}

fn sw_random_point(ctx: &Ctx, rng: &mut ChaCha8Rng) -> (SwParams, Vec2, Vec2) {
    let mut p = ctx.sw;
    p.r = rng.gen_range(0.05..0.95);
    let k = Vec2::new(rng.gen_range(0.05..3.0), rng.gen_range(0.05..2.0));
    let w = p.invert_state(&ctx.sw_state, &k);
    (p, k, w)
}

fn nls_random_point(ctx: &Ctx, rng: &mut ChaCha8Rng) -> (NlsParams, Vec2, Vec2) {
    let mut p = ctx.nls;
    p.beta12 = rng.gen_range(-0.9..-0.1);
    let k = Vec2::new(rng.gen_range(0.1..5.0), rng.gen_range(0.1..4.0));
    let w = p.invert_amplitudes(&ctx.nls_state, &k);
    (p, k, w)
}

fn round_trips(ctx: &Ctx, report: &mut VerifyReport) {
    let mut r = rng();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (p, k, w) = sw_random_point(ctx, &mut r);
        let s = p.state_of(&k, &w);
        let w2 = p.invert_state(&s, &k);
        let s2 = p.state_of(&k, &w2);
        worst = worst.max((s2 - s).norm() / s.norm().max(1.0));
    }
    ctx.check(report, "sw_roundtrip", worst, 1e-12, "state -> invert -> state, 1000 points");

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (p, k, w) = nls_random_point(ctx, &mut r);
        let s = p.amplitudes(&k, &w);
        let w2 = p.invert_amplitudes(&s, &k);
        let s2 = p.amplitudes(&k, &w2);
        worst = worst.max((s2 - s).norm() / s.norm().max(1.0));
    }
    ctx.check(report, "cnls_roundtrip", worst, 1e-12, "amplitudes -> invert -> amplitudes, 1000 points");
}

fn det_factorization(ctx: &Ctx, report: &mut VerifyReport) {
    // under F_i^2 = k_i^2 / (g h_i) the full determinant factors as
    // rho1 rho2 eta0 chi0 ((1 - F1^2)(1 - F2^2) - r) / (1 - r)
    let mut r = rng();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (p, k, w) = sw_random_point(ctx, &mut r);
        let fd = p.analytic_first(&k, &w).unwrap();
        let s = p.state_of(&k, &w);
        let f1 = k.x * k.x / (p.g * s.x);
        let f2 = k.y * k.y / (p.g * s.y);
        let closed = p.rho1 * p.rho2() * s.x * s.y * ((1.0 - f1) * (1.0 - f2) - p.r)
            / (1.0 - p.r);
        let det = fd.dkb.determinant();
        worst = worst.max((det - closed).abs() / closed.abs().max(1.0));
    }
    ctx.check(report, "sw_det_factorization", worst, 1e-9, "Froude-number definition check, 200 points");
}

fn row_identity(ctx: &Ctx, report: &mut VerifyReport) {
    // first row of D_k B annihilates the reference-gauge zeta identically,
    // second row only on the criticality surface
    let mut r = rng();
    let mut worst_first = 0.0f64;
    let mut min_second = f64::INFINITY;
    for _ in 0..200 {
        let (p, k, w) = sw_random_point(ctx, &mut r);
        let pt = p.point(k, w);
        if !pt.physical {
            continue;
        }
        let fd = p.analytic_first(&k, &w).unwrap();
        let zp = p.paper_gauge_zeta(&pt);
        let scale = fd.dkb.norm() * zp.norm();
        let prod = fd.dkb * zp;
        worst_first = worst_first.max(prod.x.abs() / scale.max(1e-300));
        let f1 = k.x * k.x / (p.g * pt.state.x);
        let f2 = k.y * k.y / (p.g * pt.state.y);
        let crit = ((1.0 - f1) * (1.0 - f2) - p.r).abs();
        if crit > 0.05 {
            min_second = min_second.min(prod.y.abs() / scale.max(1e-300));
        }
    }
    ctx.check(report, "sw_row_identity_first", worst_first, 1e-12, "row 1 annihilates zeta everywhere");
    ctx.check(
        report,
        "sw_row_identity_second",
        if min_second > 1e-6 { 0.0 } else { 1.0 },
        0.5,
        format!("row 2 stays away from zero off the surface (min {min_second:.3e})"),
    );
}

fn tensor_identities(ctx: &Ctx, report: &mut VerifyReport) {
    let mut r = rng();
    let mut sym = 0.0f64;
    let mut dka_dwb = 0.0f64;
    for _ in 0..1000 {
        let (p, k, w) = sw_random_point(ctx, &mut r);
        let pt = p.point(k, w);
        if !pt.physical {
            continue;
        }
        if let Ok(bu) = bundle_with_route(&p, &pt, 1, DerivativeRoute::FiniteDifference) {
            sym = sym.max(bu.step_report.dkb_symmetry_defect);
            dka_dwb = dka_dwb.max(bu.step_report.dka_dwb_defect);
        }
    }
    for _ in 0..1000 {
        let (p, k, w) = nls_random_point(ctx, &mut r);
        let pt = p.point(k, w);
        if !pt.physical {
            continue;
        }
        if let Ok(bu) = bundle_with_route(&p, &pt, 1, DerivativeRoute::FiniteDifference) {
            sym = sym.max(bu.step_report.dkb_symmetry_defect);
            dka_dwb = dka_dwb.max(bu.step_report.dka_dwb_defect);
        }
    }
    ctx.check(report, "dkb_symmetry", sym, 1e-7, "pre-symmetrization defect, 1000 points per model");
    ctx.check(report, "dka_dwb_transpose", dka_dwb, 1e-7, "D_k A = D_w B^T, 1000 points per model");
}

fn fd_vs_analytic(ctx: &Ctx, report: &mut VerifyReport) {
    let mut r = rng();
    let mut low = 0.0f64;
    let mut high = 0.0f64;
    for _ in 0..50 {
        let (p, k, w) = sw_random_point(ctx, &mut r);
        let pt = p.point(k, w);
        if !pt.physical {
            continue;
        }
        let (Ok(fd), Ok(an)) = (
            bundle_with_route(&p, &pt, 3, DerivativeRoute::FiniteDifference),
            bundle_with_route(&p, &pt, 3, DerivativeRoute::AnalyticSeeded),
        ) else {
            continue;
        };
        low = low.max((fd.dkb - an.dkb).norm() / an.dkb.norm());
        low = low.max((fd.dka - an.dka).norm() / an.dka.norm().max(1e-12));
        low = low.max((fd.dwb - an.dwb).norm() / an.dwb.norm().max(1e-12));
        let (f2, a2) = (fd.d2kb.unwrap(), an.d2kb.unwrap());
        let scale2 = a2.frobenius();
        for i in 0..2 {
            for j in 0..2 {
                for m in 0..2 {
                    low = low.max((f2.0[i][j][m] - a2.0[i][j][m]).abs() / scale2);
                }
            }
        }
        let (f3, a3) = (fd.d3kb.unwrap(), an.d3kb.unwrap());
        let scale3 = a3.frobenius();
        for i in 0..2 {
            for j in 0..2 {
                for m in 0..2 {
                    for n in 0..2 {
                        high = high.max((f3.0[i][j][m][n] - a3.0[i][j][m][n]).abs() / scale3);
                    }
                }
            }
        }
    }
    ctx.check(report, "fd_vs_analytic_low", low, 1e-7, "orders 1-2 vs analytic derivatives, 50 points");
    ctx.check(report, "fd_vs_analytic_d3", high, 1e-4, "order 3 vs analytic derivatives, 50 points");
}

fn criticality_equivalence(
    ctx: &Ctx,
    report: &mut VerifyReport,
    _swf: &FixtureInput,
    _nlsf: &FixtureInput,
) {
    let mut r = rng();
    let mut worst_fd = 0.0f64;
    let mut worst_an = 0.0f64;
    let mut n = 0;
    while n < 200 {
        let f1: f64 = r.gen_range(0.02..0.98);
        let f2: f64 = r.gen_range(0.02..0.98);
        let mut p = ctx.sw;
        p.r = (1.0 - f1) * (1.0 - f2);
        if !(p.r > 0.0 && p.r < 1.0) {
            continue;
        }
        let k = Vec2::new(
            (f1 * p.g * ctx.sw_state.x).sqrt(),
            (f2 * p.g * ctx.sw_state.y).sqrt(),
        );
        let w = p.invert_state(&ctx.sw_state, &k);
        let pt = p.point(k, w);
        let (Ok(fd), Ok(an)) = (
            bundle_with_route(&p, &pt, 1, DerivativeRoute::FiniteDifference),
            bundle_with_route(&p, &pt, 1, DerivativeRoute::AnalyticSeeded),
        ) else {
            continue;
        };
        worst_fd = worst_fd.max(crate::criticality::det_condition(&fd).abs());
        worst_an = worst_an.max(crate::criticality::det_condition(&an).abs());
        n += 1;
    }
    ctx.check(report, "sw_crit_equivalence_fd", worst_fd, 1e-6, "(1-F1^2)(1-F2^2) = r roots, 200 points, fd route");
    ctx.check(report, "sw_crit_equivalence_exact", worst_an, 1e-9, "same roots, analytic route");

    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 200 {
        let mut p = ctx.nls;
        p.beta12 = r.gen_range(-0.95..0.95);
        if p.beta12.abs() < 0.01 {
            continue;
        }
        let k1: f64 = r.gen_range(6.3..12.0);
        // solve (beta11 + bE1)(beta22 + bE2) = beta12^2 for k2
        let be1 = 2.0 * p.alpha1 * k1 * k1 / ctx.nls_state.x;
        let lhs = p.beta11 + be1;
        let be2 = p.beta12 * p.beta12 / lhs - p.beta22;
        if be2 <= 0.0 {
            continue;
        }
        let k2 = (ctx.nls_state.y * be2 / (2.0 * p.alpha2)).sqrt();
        let k = Vec2::new(k1, k2);
        let w = p.invert_amplitudes(&ctx.nls_state, &k);
        let pt = p.point(k, w);
        let Ok(bu) = bundle_with_route(&p, &pt, 1, DerivativeRoute::FiniteDifference) else {
            continue;
        };
        worst = worst.max(crate::criticality::det_condition(&bu).abs());
        n += 1;
    }
    ctx.check(report, "cnls_crit_equivalence", worst, 1e-6, "(beta11+bE1)(beta22+bE2)=beta12^2 roots, 200 points");
}

pub struct FixtureSolution {
    pub model: Box<dyn TwoPhaseModel>,
    pub cp: CriticalPoint,
    pub bundle: TensorBundle,
    pub coeffs: ReductionCoefficients,
}

pub fn solve_fixture(fixture: &FixtureInput) -> Result<FixtureSolution> {
    let problem = SliceProblem::new(
        fixture.model.as_ref(),
        fixture.fixed_state,
        None,
        Tolerances::default(),
    );
    let cp = find_double_critical(&problem, fixture.pin_index, fixture.pin_value, fixture.guess)?;
    let (model, pt) = problem.model_at(&cp.params_slice)?;
    let bundle = bundle_with_route(model.as_ref(), &pt, 3, problem.route())?;
    let coeffs = assemble(model.as_ref(), &cp, &bundle)?;
    Ok(FixtureSolution {
        model,
        cp,
        bundle,
        coeffs,
    })
}

fn fixture_pipelines(
    ctx: &Ctx,
    report: &mut VerifyReport,
    swf: &FixtureInput,
    nlsf: &FixtureInput,
) {
    // shallow water
    match solve_fixture(swf) {
        Ok(sol) => {
            let r_star = (3f64.sqrt() - 1.0) / 2.0;
            let k2_star = (5.0 * (2.0 - 3f64.sqrt())).sqrt();
            let root_err = (sol.cp.params_slice[0] - r_star)
                .abs()
                .max((sol.cp.params_slice[2] - k2_star).abs());
            ctx.check(report, "sw_fixture_root", root_err, 1e-8, "distance to the closed-form double-critical point");
            // arithmetic oracle of the reference a0 closed form at the fixture
            let a0_oracle = 0.10228174814347113;
            ctx.check(
                report,
                "sw_fixture_a0",
                (sol.coeffs.a0 - a0_oracle).abs(),
                1e-6,
                format!("normalized a0 vs {a0_oracle}"),
            );
            per_point_checks(ctx, report, &sol, "sw");
        }
        Err(e) => {
            ctx.fail(report, "sw_fixture_root", &e);
            ctx.fail(report, "sw_fixture_a0", &e);
        }
    }
    // coupled NLS
    match solve_fixture(nlsf) {
        Ok(sol) => {
            let worst = sol
                .cp
                .residuals
                .det
                .max(sol.cp.residuals.cubic)
                .max(sol.cp.residuals.delta);
            ctx.check(report, "cnls_fixture_residuals", worst, 1e-9, "converged double-critical residuals");
            per_point_checks(ctx, report, &sol, "cnls");
            nls_report(ctx, report, &sol);
        }
        Err(e) => {
            ctx.fail(report, "cnls_fixture_residuals", &e);
        }
    }
}

fn per_point_checks(ctx: &Ctx, report: &mut VerifyReport, sol: &FixtureSolution, which: &str) {
    let model = sol.model.as_ref();
    match cross_checks(model, &sol.cp, &sol.coeffs) {
        Ok(cc) => {
            let (kname, sname): (&'static str, &'static str) = if which == "sw" {
                ("kuramoto_sw", "stationarity_sw")
            } else {
                ("kuramoto_cnls", "stationarity_cnls")
            };
            ctx.check(report, kname, cc.kuramoto_rel_mismatch, 1e-5, "kuramoto_cubic vs 2 a1_raw");
            ctx.check(
                report,
                sname,
                cc.stationarity_first.max(cc.stationarity_second),
                1e-6,
                "first/second epsilon-derivatives of B along the Kuramoto curve",
            );
        }
        Err(e) => {
            ctx.fail(report, if which == "sw" { "kuramoto_sw" } else { "kuramoto_cnls" }, &e);
        }
    }
    // delta gauge shifts
    let mut worst = 0.0f64;
    for c in [-10.0, -1.0, 1.0, 10.0] {
        let mut shifted = sol.cp.clone();
        shifted.delta += c * sol.cp.zeta;
        match assemble(model, &shifted, &sol.bundle) {
            Ok(rc) => {
                worst = worst
                    .max((rc.a1_raw - sol.coeffs.a1_raw).abs() / sol.coeffs.a1_raw.abs());
            }
            Err(e) => {
                ctx.fail(report, if which == "sw" { "delta_gauge_sw" } else { "delta_gauge_cnls" }, &e);
                return;
            }
        }
    }
    ctx.check(
        report,
        if which == "sw" { "delta_gauge_sw" } else { "delta_gauge_cnls" },
        worst,
        1e-10,
        "a1_raw under delta + c zeta, c in {+-1, +-10}",
    );
    // zeta rescaling: a1/a0^2 and a2/a0 are gauge invariant
    let mut scaled = sol.cp.clone();
    scaled.zeta *= 2.0;
    scaled.delta *= 4.0;
    let z = scaled.zeta;
    let d2 = sol.bundle.d2().unwrap();
    let d3 = sol.bundle.d3().unwrap();
    let a0s = z.dot(&((sol.bundle.dka + sol.bundle.dwb) * z));
    let a1s = 0.5
        * (z.dot(&contract3(&d3, &z, &z, &z)) - 3.0 * z.dot(&contract2(&d2, &z, &scaled.delta)));
    let a2s = model
        .dispersive_projection(&sol.cp.pt, &z)
        .map(|p| p.value)
        .unwrap_or(f64::NAN);
    let inv1 = (a1s / (a0s * a0s)
        - sol.coeffs.a1_raw / (sol.coeffs.a0_raw * sol.coeffs.a0_raw))
        .abs()
        / (sol.coeffs.a1_raw / (sol.coeffs.a0_raw * sol.coeffs.a0_raw)).abs();
    let inv2 = (a2s / a0s - sol.coeffs.a2_raw / sol.coeffs.a0_raw).abs()
        / (sol.coeffs.a2_raw / sol.coeffs.a0_raw).abs();
    ctx.check(
        report,
        if which == "sw" { "zeta_gauge_sw" } else { "zeta_gauge_cnls" },
        inv1.max(inv2),
        1e-10,
        "a1_raw/a0_raw^2 and a2_raw/a0_raw under zeta -> 2 zeta",
    );
    // second-eigenvalue identity
    let defect = trace_eigenvalue_check(&sol.bundle.dkb, &sol.cp.zeta);
    ctx.check(
        report,
        if which == "sw" { "trace_eigen_sw" } else { "trace_eigen_cnls" },
        defect,
        1e-7,
        "D_k B zeta_perp = trace(D_k B) zeta_perp at criticality",
    );
}

fn nls_report(ctx: &Ctx, report: &mut VerifyReport, sol: &FixtureSolution) {
    match paper_comparison(sol.model.as_ref(), &sol.cp, &sol.bundle, &sol.coeffs) {
        Ok(rows) => {
            report.notes.push("coupled-NLS per-term comparison (reference gauge):".into());
            for row in &rows {
                report.notes.push(format!(
                    "  {:<20} toolkit {:>24.16e}  reference {:>24.16e}  rel {:.3e}",
                    row.term, row.toolkit, row.reference, row.rel_mismatch
                ));
            }
            report.notes.push(
                "  note: z_d2b_delta_z and everything downstream of it (combined_cubic, a1) \
                 disagree with the printed closed forms by a factor equal to beta; \
                 time_coefficient, z_d3b, delta, a0 and a2 agree to rounding."
                    .into(),
            );
            let exact_terms = [
                "time_coefficient",
                "z_d3b_zzz",
                "delta_component_1",
                "a0_normalized",
                "a2_normalized",
            ];
            let worst = rows
                .iter()
                .filter(|r| exact_terms.contains(&r.term))
                .map(|r| r.rel_mismatch)
                .fold(0.0f64, f64::max);
            ctx.check(report, "cnls_per_term_exact_rows", worst, 1e-6, "terms expected to match the printed forms");
            let flagged = rows
                .iter()
                .find(|r| r.term == "z_d2b_delta_z")
                .map(|r| {
                    let beta = concrete_nls(sol.model.as_ref())
                        .map(|p| p.beta())
                        .unwrap_or(f64::NAN);
                    (r.reference / r.toolkit - beta).abs() / beta.abs()
                })
                .unwrap_or(f64::NAN);
            ctx.check(
                report,
                "cnls_flagged_ratio_is_beta",
                flagged,
                1e-6,
                "printed z_d2b closed form differs from direct tensors by exactly beta",
            );
        }
        Err(e) => ctx.fail(report, "cnls_per_term_exact_rows", &e),
    }
}

fn algebra_chain(ctx: &Ctx, report: &mut VerifyReport) {
    // SWHCrit1 and SWHCrit2 together imply the r-independent condition:
    // chi0 (1-F2^2)^2 F1^2 = eta0 (1-F1^2) F2^2, pure algebra
    let mut r = rng();
    let (eta0, chi0) = (ctx.sw_state.x, ctx.sw_state.y);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let s: f64 = r.gen_range(0.02..0.98);
        // solve Crit2 with r = (1-s)(1-t) for t by bisection
        let h = |t: f64| chi0 * (1.0 - s) * (1.0 - t) * (1.0 - t) * s - eta0 * (1.0 - s) * (1.0 - s) * t;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let lhs = chi0 * (1.0 - t) * (1.0 - t) * s;
        let rhs = eta0 * (1.0 - s) * t;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300));
    }
    ctx.check(report, "sw_r_independent_identity", worst, 1e-12, "Crit1 and Crit2 imply the r-independent condition, 500 points");
}

fn traces(ctx: &Ctx, report: &mut VerifyReport, swf: &FixtureInput, nlsf: &FixtureInput) {
    for (fixture, name, agree_name) in [
        (swf, "trace_sw", Some("sw_coeff_agreement")),
        (nlsf, "trace_cnls", None),
    ] {
        let problem = SliceProblem::new(
            fixture.model.as_ref(),
            fixture.fixed_state,
            None,
            Tolerances::default(),
        );
        let seed = match find_double_critical(
            &problem,
            fixture.pin_index,
            fixture.pin_value,
            fixture.guess,
        ) {
            Ok(cp) => cp,
            Err(e) => {
                report.checks.push(CheckResult {
                    name: if name == "trace_sw" { "trace_sw" } else { "trace_cnls" },
                    value: f64::NAN,
                    tolerance: 1e-9,
                    passed: false,
                    detail: format!("seed: {e}"),
                });
                continue;
            }
        };
        let tr = match trace_curve(
            &problem,
            &seed,
            fixture.trace_steps,
            fixture.trace_max_step,
            &fixture.window,
            fixture.trace_direction,
        ) {
            Ok(tr) => tr,
            Err(e) => {
                report.checks.push(CheckResult {
                    name: if name == "trace_sw" { "trace_sw" } else { "trace_cnls" },
                    value: f64::NAN,
                    tolerance: 1e-9,
                    passed: false,
                    detail: format!("trace: {e}"),
                });
                continue;
            }
        };
        let mut worst = 0.0f64;
        let mut all_physical = true;
        for p in &tr.points {
            worst = worst.max(p.residuals.det.max(p.residuals.cubic));
            all_physical &= p.pt.physical;
        }
        let enough = tr.points.len() >= fixture.trace_steps + 1;
        let value = if enough && all_physical { worst } else { f64::NAN };
        let check_name: &'static str = if name == "trace_sw" { "trace_sw" } else { "trace_cnls" };
        ctx.check(
            report,
            check_name,
            value,
            1e-9,
            format!(
                "{} continuation points, stopping: {}",
                tr.points.len(),
                tr.stopping.as_str()
            ),
        );

        if let Some(agree) = agree_name {
            // closed-form coefficient agreement along the traced curve
            let mut worst = 0.0f64;
            let take = tr.points.len().min(21);
            for cp in tr.points.iter().take(take) {
                let Ok((model, pt)) = problem.model_at(&cp.params_slice) else {
                    worst = f64::NAN;
                    break;
                };
                let Ok(bu) = bundle_with_route(model.as_ref(), &pt, 3, problem.route()) else {
                    worst = f64::NAN;
                    break;
                };
                let Ok(rc) = assemble(model.as_ref(), &cp, &bu) else {
                    worst = f64::NAN;
                    break;
                };
                let Ok(forms) = model.paper_forms(&pt) else {
                    worst = f64::NAN;
                    break;
                };
                for (t, f) in [(rc.a0, forms.a0), (rc.a1, forms.a1), (rc.a2, forms.a2)] {
                    worst = worst.max((t - f).abs() / f.abs().max(1e-300));
                }
            }
            ctx.check(
                report,
                agree,
                worst,
                1e-6,
                format!("normalized (a0, a1, a2) vs closed forms along {take} traced points"),
            );
        }
    }
}

fn solver_checks(ctx: &Ctx, report: &mut VerifyReport) {
    // canonical soliton transit
    let (a0, a1, a2) = (1.0, 6.0, 1.0);
    let (l, n) = (40.0, 512usize);
    let f = match soliton(a0, a1, a2, 1.0, 10.0, l, n) {
        Ok(f) => f,
        Err(e) => {
            ctx.fail(report, "soliton_shape", &e);
            return;
        }
    };
    let bound = MkdvRun::new(a0, a1, a2, 1.0, n)
        .unwrap()
        .stability_bound(l / n as f64, 1.0);
    let c = soliton_speed(a0, a1, 1.0);
    let t_end = l / c;
    let result = MkdvRun::new(a0, a1, a2, 0.125 * bound, n)
        .and_then(|mut run| run.integrate(f.clone(), t_end));
    match result {
        Ok((out, diags)) => {
            let dx = out.dx();
            let mut shape = 0.0f64;
            for j in 0..n {
                let x = j as f64 * dx;
                let exact = periodized_sech(1.0, 1.0, 10.0 + c * t_end, l, x);
                shape = shape.max((out.values[j] - exact).abs());
            }
            let first = diags.first().unwrap();
            let last = diags.last().unwrap();
            ctx.check(report, "soliton_shape", shape, 1e-6, "L-inf error after one domain transit");
            ctx.check(report, "soliton_mass_drift", (last.mass - first.mass).abs(), 1e-12, "");
            ctx.check(
                report,
                "soliton_momentum_drift",
                (last.momentum - first.momentum).abs() / first.momentum.abs(),
                1e-9,
                "",
            );
            ctx.check(
                report,
                "soliton_energy_drift",
                (last.energy - first.energy).abs() / first.energy.abs(),
                1e-8,
                "",
            );
        }
        Err(e) => ctx.fail(report, "soliton_shape", &e),
    }

    // spectral convergence 256 -> 512 over a short run
    let mut errs = Vec::new();
    for n in [256usize, 512] {
        let f = soliton(a0, a1, a2, 1.0, 10.0, l, n).unwrap();
        let bound = MkdvRun::new(a0, a1, a2, 1.0, n)
            .unwrap()
            .stability_bound(l / n as f64, 1.0);
        let mut run = MkdvRun::new(a0, a1, a2, 0.125 * bound, n).unwrap();
        match run.integrate(f, 2.0) {
            Ok((out, _)) => {
                let dx = out.dx();
                let mut err = 0.0f64;
                for j in 0..n {
                    let x = j as f64 * dx;
                    let exact = periodized_sech(1.0, 1.0, 10.0 + c * 2.0, l, x);
                    err = err.max((out.values[j] - exact).abs());
                }
                errs.push(err);
            }
            Err(e) => {
                ctx.fail(report, "spectral_convergence", &e);
                errs.clear();
                break;
            }
        }
    }
    if errs.len() == 2 {
        ctx.check(
            report,
            "spectral_convergence",
            errs[1] / errs[0],
            0.1,
            format!("err(512)/err(256) = {:.3e}/{:.3e}", errs[1], errs[0]),
        );
    }

    // time reversal
    let n = 256;
    let f = soliton(a0, a1, a2, 1.0, 10.0, l, n).unwrap();
    let reversal = MkdvRun::new(a0, a1, a2, 2.5e-4, n)
        .and_then(|mut fwd| fwd.integrate(f.clone(), 2.0))
        .and_then(|(mid, _)| {
            let mut bwd = MkdvRun::new(a0, -a1, -a2, 2.5e-4, n)?;
            bwd.integrate(WaveField::new(mid.l, mid.values, 0.0)?, 2.0)
        });
    match reversal {
        Ok((back, _)) => {
            let err = back
                .values
                .iter()
                .zip(f.values.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            ctx.check(report, "time_reversal", err, 1e-8, "forward 2.0 then reversed coefficients back to 0");
        }
        Err(e) => ctx.fail(report, "time_reversal", &e),
    }

    // reduction coefficients drive a stable sech soliton (raw triple is the
    // actual emergent equation; a1/a2 > 0 on the shallow-water fixture)
    match sw_reduction_soliton(ctx) {
        Ok(err) => ctx.check(report, "reduction_soliton", err, 1e-5, "sech transit under the reduced raw coefficients"),
        Err(e) => ctx.fail(report, "reduction_soliton", &e),
    }
}

fn sw_reduction_soliton(ctx: &Ctx) -> Result<f64> {
    let problem = SliceProblem::new(&ctx.sw, ctx.sw_state, None, Tolerances::default());
    let cp = find_double_critical(&problem, 1, 2.23606797749979, [0.35, 1.2])?;
    let (model, pt) = problem.model_at(&cp.params_slice)?;
    let bu = bundle_with_route(model.as_ref(), &pt, 3, problem.route())?;
    let rc = assemble(model.as_ref(), &cp, &bu)?;
    let (a0, a1, a2) = (rc.a0_raw, rc.a1_raw, rc.a2_raw);
    if a1 / a2 <= 0.0 {
        return Err(WaveError::InvalidBranch(a1 / a2));
    }
    let amp = 10.0;
    let (l, n) = (40.0, 512usize);
    let f = soliton(a0, a1, a2, amp, 10.0, l, n)?;
    let c = soliton_speed(a0, a1, amp);
    let t_end = l / c.abs();
    let bound = MkdvRun::new(a0, a1, a2, 1.0, n)?.stability_bound(l / n as f64, amp);
    let mut run = MkdvRun::new(a0, a1, a2, 0.125 * bound, n)?;
    let (out, _) = run.integrate(f, t_end)?;
    let b = (a1 * amp * amp / (6.0 * a2)).sqrt();
    let dx = out.dx();
    let mut err = 0.0f64;
    for j in 0..n {
        let x = j as f64 * dx;
        let exact = periodized_sech(amp, b, 10.0 + c * t_end, l, x);
        err = err.max((out.values[j] - exact).abs());
    }
    Ok(err / amp)
}

/// Recover concrete parameters from a model object via its JSON view.
fn concrete_sw(model: &dyn TwoPhaseModel) -> Option<SwParams> {
    (model.name() == "sw")
        .then(|| serde_json::from_value(model.params_json()).ok())
        .flatten()
}

fn concrete_nls(model: &dyn TwoPhaseModel) -> Option<NlsParams> {
    (model.name() == "cnls")
        .then(|| serde_json::from_value(model.params_json()).ok())
        .flatten()
}

/// Build a [`FixtureInput`] from a parsed config file.
pub fn fixture_from_spec(spec: &crate::config::ModelSpec) -> Result<FixtureInput> {
    let model = spec.build_model()?;
    let fixed_state = spec.require_fixed_state(model.as_ref())?;
    let (pin_index, pin_value, guess) = spec.pin_and_guess(model.as_ref())?;
    let window = spec.window(model.as_ref())?.ok_or_else(|| {
        WaveError::InvalidInput("fixture config needs a window section".into())
    })?;
    let trace = spec.trace.ok_or_else(|| {
        WaveError::InvalidInput("fixture config needs a trace section".into())
    })?;
    Ok(FixtureInput {
        model,
        fixed_state,
        pin_index,
        pin_value,
        guess,
        window,
        trace_steps: trace.steps,
        trace_max_step: trace.max_step,
        trace_direction: trace.direction,
    })
}
