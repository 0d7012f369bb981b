//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! The reference values used here are computed by oracles local to this
//! file (closed forms evaluated directly, constructed roots, conserved
//! functionals), independent of the library paths they check.

use modwave::config::ModelSpec;
use modwave::criticality::{
    det_condition, find_double_critical, trace_curve, SliceProblem, Tolerances,
};
use modwave::mkdv::{periodized_sech, soliton, soliton_speed, MkdvRun};
use modwave::models::{NlsParams, SwParams, TwoPhaseModel, Vec2};
use modwave::reduction::{assemble, cross_checks, kuramoto_stationarity, paper_comparison};
use modwave::tensors::{bundle_with_route, DerivativeRoute};
use modwave::verify::{fixture_from_spec, solve_fixture, FixtureInput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SW_FIXTURE: &str = include_str!("../../../fixtures/sw.json");
const CNLS_FIXTURE: &str = include_str!("../../../fixtures/cnls.json");

fn sw_fixture() -> FixtureInput {
    let spec: ModelSpec = serde_json::from_str(SW_FIXTURE).unwrap();
    fixture_from_spec(&spec).unwrap()
}

fn nls_fixture() -> FixtureInput {
    let spec: ModelSpec = serde_json::from_str(CNLS_FIXTURE).unwrap();
    fixture_from_spec(&spec).unwrap()
}

fn verdict(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion:>2} {} {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}): {detail}");
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(2026)
}

#[test]
fn criterion_01_sw_criticality_equivalence() {
    let fixture = sw_fixture();
    let base: SwParams = serde_json::from_value(fixture.model.params_json()).unwrap();
    let state = fixture.fixed_state;
    let mut r = rng();
    let mut worst_fd = 0.0f64;
    let mut worst_exact = 0.0f64;
    for _ in 0..200 {
        let f1: f64 = r.gen_range(0.02..0.98);
        let f2: f64 = r.gen_range(0.02..0.98);
        let mut p = base;
        p.r = (1.0 - f1) * (1.0 - f2);
        let k = Vec2::new((f1 * p.g * state.x).sqrt(), (f2 * p.g * state.y).sqrt());
        let w = p.invert_state(&state, &k);
        let pt = p.point(k, w);
        let fd = bundle_with_route(&p, &pt, 1, DerivativeRoute::FiniteDifference).unwrap();
        let an = bundle_with_route(&p, &pt, 1, DerivativeRoute::AnalyticSeeded).unwrap();
        worst_fd = worst_fd.max(det_condition(&fd).abs());
        worst_exact = worst_exact.max(det_condition(&an).abs());
    }
    verdict(
        1,
        "sw_criticality_equivalence",
        worst_fd < 1e-6 && worst_exact < 1e-9,
        &format!("scaled |det| fd {worst_fd:.3e} (< 1e-6), analytic {worst_exact:.3e} (< 1e-9), 200 roots"),
    );
}

#[test]
fn criterion_02_nls_criticality_equivalence() {
    let fixture = nls_fixture();
    let base: NlsParams = serde_json::from_value(fixture.model.params_json()).unwrap();
    let state = fixture.fixed_state;
    let mut r = rng();
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 200 {
        let mut p = base;
        p.beta12 = r.gen_range(-0.95..0.95);
        if p.beta12.abs() < 0.01 {
            continue;
        }
        let k1: f64 = r.gen_range(6.3..12.0);
        let be1 = 2.0 * p.alpha1 * k1 * k1 / state.x;
        let be2 = p.beta12 * p.beta12 / (p.beta11 + be1) - p.beta22;
        if be2 <= 0.0 {
            continue;
        }
        let k = Vec2::new(k1, (state.y * be2 / (2.0 * p.alpha2)).sqrt());
        let w = p.invert_amplitudes(&state, &k);
        let pt = p.point(k, w);
        let bu = bundle_with_route(&p, &pt, 1, DerivativeRoute::FiniteDifference).unwrap();
        worst = worst.max(det_condition(&bu).abs());
        n += 1;
    }
    verdict(
        2,
        "nls_criticality_equivalence",
        worst < 1e-6,
        &format!("scaled |det| {worst:.3e} < 1e-6 at 200 sampled roots"),
    );
}

#[test]
fn criterion_03_sw_fixture_pipeline() {
    let fixture = sw_fixture();
    let sol = solve_fixture(&fixture).unwrap();
    // closed-form root
    let r_star = (3f64.sqrt() - 1.0) / 2.0;
    let k2_star = (5.0 * (2.0 - 3f64.sqrt())).sqrt();
    let root_err = (sol.cp.params_slice[0] - r_star)
        .abs()
        .max((sol.cp.params_slice[2] - k2_star).abs());
    // independent arithmetic oracle of the a0 closed form
    // a0 = rho2 (k1 (1-F2^2)/(g eta0) + k2 (1-F1^2)/(g chi0)) at the fixture
    let (g, rho1, eta0, chi0) = (1.0, 1.0, 10.0, 5.0);
    let rho2 = r_star * rho1;
    let k1 = 5f64.sqrt();
    let (f1, f2) = (0.5, 2.0 - 3f64.sqrt());
    let a0_oracle = rho2 * (k1 * (1.0 - f2) / (g * eta0) + k2_star * (1.0 - f1) / (g * chi0));
    let a0_err = (sol.coeffs.a0 - a0_oracle).abs();
    verdict(
        3,
        "sw_fixture_pipeline",
        root_err < 1e-8 && a0_err < 1e-6,
        &format!(
            "root error {root_err:.3e} (< 1e-8), |a0 - {a0_oracle:.10}| = {a0_err:.3e} (< 1e-6)"
        ),
    );
}

/// Closed-form shallow-water coefficient tables, written out independently
/// of the library's own copies.
fn sw_closed_forms(p: &SwParams, state: &Vec2, k: &Vec2) -> (f64, f64, f64) {
    let (g, rho1, rho2, r) = (p.g, p.rho1, p.r * p.rho1, p.r);
    let (e, x) = (state.x, state.y);
    let f1 = k.x * k.x / (g * e);
    let f2 = k.y * k.y / (g * x);
    let a0 = rho2 * (k.x * (1.0 - f2) / (g * e) + k.y * (1.0 - f1) / (g * x));
    let poly = f1 * f2 + 4.0 * (f1 + f2);
    let a1 = -0.75 * g * rho1 * rho2 * e * f2 * (1.0 - f1) * poly;
    let a11 = p.sigma1 + p.sigma2 - rho1 * g * e * e / 3.0 - rho2 * g * e * x - 0.5 * g * x * x;
    let a12 = p.sigma2
        - rho2 * g * e * e / 6.0
        - 0.25 * rho2 * g * e * x
        - rho2 * rho2 / (2.0 * rho1) * g * e * x
        - 5.0 / 12.0 * rho2 * g * x * x;
    let a22 = p.sigma2 - rho2 * rho2 / (2.0 * rho1) * g * e * x - rho2 * g * x * x / 3.0;
    let a2 = -(a11 * r * (1.0 - f2) - 2.0 * r * a12 + (1.0 - f1) * a22) / (2.0 * g);
    (a0, a1, a2)
}

#[test]
fn criterion_04_sw_closed_form_agreement() {
    let fixture = sw_fixture();
    let problem = SliceProblem::new(
        fixture.model.as_ref(),
        fixture.fixed_state,
        None,
        Tolerances::default(),
    );
    let seed =
        find_double_critical(&problem, fixture.pin_index, fixture.pin_value, fixture.guess)
            .unwrap();
    let tr = trace_curve(&problem, &seed, 25, 0.01, &fixture.window, 1.0).unwrap();
    assert!(tr.points.len() >= 21, "need >= 20 traced points");
    let mut worst = 0.0f64;
    for cp in tr.points.iter().take(21) {
        let (model, pt) = problem.model_at(&cp.params_slice).unwrap();
        let bu = bundle_with_route(model.as_ref(), &pt, 3, problem.route()).unwrap();
        let rc = assemble(model.as_ref(), &cp, &bu).unwrap();
        let p: SwParams = serde_json::from_value(model.params_json()).unwrap();
        let (a0, a1, a2) = sw_closed_forms(&p, &pt.state, &pt.k);
        worst = worst.max((rc.a0 - a0).abs() / a0.abs());
        worst = worst.max((rc.a1 - a1).abs() / a1.abs());
        worst = worst.max((rc.a2 - a2).abs() / a2.abs());
    }
    verdict(
        4,
        "sw_closed_form_agreement",
        worst < 1e-6,
        &format!("max relative coefficient mismatch {worst:.3e} over 21 traced points"),
    );
}

#[test]
fn criterion_05_kuramoto_equivalence() {
    let mut worst = 0.0f64;
    for fixture in [sw_fixture(), nls_fixture()] {
        let sol = solve_fixture(&fixture).unwrap();
        let cc = cross_checks(sol.model.as_ref(), &sol.cp, &sol.coeffs).unwrap();
        worst = worst.max(cc.kuramoto_rel_mismatch);
        // also along a few continuation points
        let problem = SliceProblem::new(
            fixture.model.as_ref(),
            fixture.fixed_state,
            None,
            Tolerances::default(),
        );
        let tr = trace_curve(&problem, &sol.cp, 5, fixture.trace_max_step, &fixture.window, 1.0)
            .unwrap();
        for cp in tr.points.iter().skip(1) {
            let (model, pt) = problem.model_at(&cp.params_slice).unwrap();
            let bu = bundle_with_route(model.as_ref(), &pt, 3, problem.route()).unwrap();
            let rc = assemble(model.as_ref(), &cp, &bu).unwrap();
            let cc = cross_checks(model.as_ref(), &cp, &rc).unwrap();
            worst = worst.max(cc.kuramoto_rel_mismatch);
        }
    }
    verdict(
        5,
        "kuramoto_equivalence",
        worst < 1e-5,
        &format!("max |kuramoto - 2 a1_raw| / |2 a1_raw| = {worst:.3e} (< 1e-5), both models"),
    );
}

#[test]
fn criterion_06_stationarity_and_delta_gauge() {
    let mut worst_stat = 0.0f64;
    let mut worst_gauge = 0.0f64;
    for fixture in [sw_fixture(), nls_fixture()] {
        let sol = solve_fixture(&fixture).unwrap();
        let (first, second) = kuramoto_stationarity(sol.model.as_ref(), &sol.cp).unwrap();
        let scale = sol
            .model
            .conservation(&sol.cp.pt.k, &sol.cp.pt.omega)
            .1
            .norm()
            .max(1.0);
        worst_stat = worst_stat.max(first.norm() / scale).max(second.norm() / scale);
        for c in [-10.0, -1.0, 1.0, 10.0] {
            let mut shifted = sol.cp.clone();
            shifted.delta += c * sol.cp.zeta;
            let rc = assemble(sol.model.as_ref(), &shifted, &sol.bundle).unwrap();
            worst_gauge = worst_gauge
                .max((rc.a1_raw - sol.coeffs.a1_raw).abs() / sol.coeffs.a1_raw.abs());
        }
    }
    verdict(
        6,
        "stationarity_and_delta_gauge",
        worst_stat < 1e-6 && worst_gauge < 1e-10,
        &format!(
            "stationarity {worst_stat:.3e} (< 1e-6), delta-gauge drift of a1_raw {worst_gauge:.3e} (< 1e-10)"
        ),
    );
}

#[test]
fn criterion_07_tensor_identities() {
    let swf = sw_fixture();
    let nlsf = nls_fixture();
    let sw: SwParams = serde_json::from_value(swf.model.params_json()).unwrap();
    let nls: NlsParams = serde_json::from_value(nlsf.model.params_json()).unwrap();
    let mut r = rng();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mut p = sw;
        p.r = r.gen_range(0.05..0.95);
        let k = Vec2::new(r.gen_range(0.05..3.0), r.gen_range(0.05..2.0));
        let w = p.invert_state(&swf.fixed_state, &k);
        let pt = p.point(k, w);
        if !pt.physical {
            continue;
        }
        let bu = bundle_with_route(&p, &pt, 1, DerivativeRoute::FiniteDifference).unwrap();
        worst = worst.max(bu.step_report.dkb_symmetry_defect);
        worst = worst.max(bu.step_report.dka_dwb_defect);
    }
    for _ in 0..1000 {
        let mut p = nls;
        p.beta12 = r.gen_range(-0.9..-0.1);
        let k = Vec2::new(r.gen_range(0.1..5.0), r.gen_range(0.1..4.0));
        let w = p.invert_amplitudes(&nlsf.fixed_state, &k);
        let pt = p.point(k, w);
        let bu = bundle_with_route(&p, &pt, 1, DerivativeRoute::FiniteDifference).unwrap();
        worst = worst.max(bu.step_report.dkb_symmetry_defect);
        worst = worst.max(bu.step_report.dka_dwb_defect);
    }
    verdict(
        7,
        "tensor_identities",
        worst < 1e-7,
        &format!("max symmetry/transpose defect {worst:.3e} (< 1e-7), 1000 points per model"),
    );
}

#[test]
fn criterion_08_curve_tracing() {
    let mut details = Vec::new();
    let mut pass = true;
    for (fixture, name) in [(sw_fixture(), "sw"), (nls_fixture(), "cnls")] {
        let problem = SliceProblem::new(
            fixture.model.as_ref(),
            fixture.fixed_state,
            None,
            Tolerances::default(),
        );
        let seed =
            find_double_critical(&problem, fixture.pin_index, fixture.pin_value, fixture.guess)
                .unwrap();
        let tr = trace_curve(
            &problem,
            &seed,
            fixture.trace_steps,
            fixture.trace_max_step,
            &fixture.window,
            fixture.trace_direction,
        )
        .unwrap();
        let worst = tr
            .points
            .iter()
            .map(|p| p.residuals.det.max(p.residuals.cubic))
            .fold(0.0f64, f64::max);
        let physical = tr.points.iter().all(|p| p.pt.physical);
        let enough = tr.points.len() >= 101;
        pass &= worst < 1e-9 && physical && enough;
        // emit the curve as CSV, the same artifact the CLI produces
        let mut csv = String::from("s,p1,p2,p3,k1,k2,w1,w2,res_det,res_cubic,res_delta\n");
        for (p, s) in tr.points.iter().zip(tr.arclength.iter()) {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                s,
                p.params_slice[0],
                p.params_slice[1],
                p.params_slice[2],
                p.pt.k.x,
                p.pt.k.y,
                p.pt.omega.x,
                p.pt.omega.y,
                p.residuals.det,
                p.residuals.cubic,
                p.residuals.delta
            ));
        }
        let out = std::env::temp_dir().join(format!("modwave_curve_{name}.csv"));
        std::fs::write(&out, csv).unwrap();
        details.push(format!(
            "{name}: {} points, max residual {worst:.3e}, csv {}",
            tr.points.len(),
            out.display()
        ));
    }
    verdict(8, "curve_tracing", pass, &details.join("; "));
}

#[test]
fn criterion_09_solver() {
    let (a0, a1, a2) = (1.0, 6.0, 1.0);
    let (l, n) = (40.0, 512usize);
    let f = soliton(a0, a1, a2, 1.0, 10.0, l, n).unwrap();
    let bound = MkdvRun::new(a0, a1, a2, 1.0, n)
        .unwrap()
        .stability_bound(l / n as f64, 1.0);
    let c = soliton_speed(a0, a1, 1.0);
    let t_end = l / c;
    let mut run = MkdvRun::new(a0, a1, a2, 0.125 * bound, n).unwrap();
    let (out, diags) = run.integrate(f, t_end).unwrap();
    let dx = out.dx();
    let mut shape = 0.0f64;
    for j in 0..n {
        let x = j as f64 * dx;
        // oracle: the analytically shifted profile after one domain transit
        let exact = periodized_sech(1.0, 1.0, 10.0 + c * t_end, l, x);
        shape = shape.max((out.values[j] - exact).abs());
    }
    let first = diags.first().unwrap();
    let last = diags.last().unwrap();
    let mass = (last.mass - first.mass).abs();
    let momentum = (last.momentum - first.momentum).abs() / first.momentum.abs();
    let energy = (last.energy - first.energy).abs() / first.energy.abs();
    verdict(
        9,
        "solver",
        shape < 1e-6 && mass < 1e-12 && momentum < 1e-9 && energy < 1e-8,
        &format!(
            "shape {shape:.3e} (< 1e-6), mass {mass:.3e} (< 1e-12), momentum {momentum:.3e} (< 1e-9), energy {energy:.3e} (< 1e-8)"
        ),
    );
}

#[test]
fn criterion_10_algebraic_consistency() {
    // points satisfying Crit1 and Crit2 must satisfy the r-independent
    // condition chi0 (1-F2^2)^2 F1^2 = eta0 (1-F1^2) F2^2 to 1e-12
    let fixture = sw_fixture();
    let (eta0, chi0) = (fixture.fixed_state.x, fixture.fixed_state.y);
    let mut r = rng();
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let s: f64 = r.gen_range(0.02..0.98);
        // Crit2 with r from Crit1, solved for t = F2^2 by bisection
        let h = |t: f64| {
            chi0 * (1.0 - s) * (1.0 - t) * (1.0 - t) * s - eta0 * (1.0 - s) * (1.0 - s) * t
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
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
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
    }
    verdict(
        10,
        "algebraic_consistency",
        worst < 1e-12,
        &format!("max residual of the r-independent condition {worst:.3e} (< 1e-12), 500 points"),
    );
}

#[test]
fn criterion_11_nls_comparison_report() {
    let fixture = nls_fixture();
    let sol = solve_fixture(&fixture).unwrap();
    let rows = paper_comparison(sol.model.as_ref(), &sol.cp, &sol.bundle, &sol.coeffs).unwrap();
    println!("coupled-NLS per-term comparison report:");
    for row in &rows {
        println!(
            "  {:<20} toolkit {:>24.16e}  reference {:>24.16e}  rel {:.3e}",
            row.term, row.toolkit, row.reference, row.rel_mismatch
        );
    }
    // internal invariants (criteria 5 and 6) must pass at this point
    let cc = cross_checks(sol.model.as_ref(), &sol.cp, &sol.coeffs).unwrap();
    let internal = cc.kuramoto_rel_mismatch < 1e-5
        && cc.stationarity_first < 1e-6
        && cc.stationarity_second < 1e-6;
    // the report must exist for every term, with the expected-exact rows
    // matching and the known systematic discrepancy quantified
    let exact = ["time_coefficient", "z_d3b_zzz", "delta_component_1", "a0_normalized", "a2_normalized"];
    let exact_ok = rows
        .iter()
        .filter(|r| exact.contains(&r.term))
        .all(|r| r.rel_mismatch < 1e-6);
    let d2_row = rows.iter().find(|r| r.term == "z_d2b_delta_z").unwrap();
    let p: NlsParams = serde_json::from_value(sol.model.params_json()).unwrap();
    let ratio_is_beta = (d2_row.reference / d2_row.toolkit - p.beta()).abs() / p.beta().abs() < 1e-6;
    let a1_row = rows.iter().find(|r| r.term == "a1_normalized").unwrap();
    verdict(
        11,
        "nls_comparison_report",
        internal && exact_ok && ratio_is_beta,
        &format!(
            "report produced ({} terms); internal invariants pass; printed z_d2b form short by factor beta = {:.6}; a1 rel mismatch {:.3e} reported, not hidden",
            rows.len(),
            p.beta(),
            a1_row.rel_mismatch
        ),
    );
}
