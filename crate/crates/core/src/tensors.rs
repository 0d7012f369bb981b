//! Numerical differentiation of the conservation-law maps.
//!
//! Central differences with one level of Richardson extrapolation produce
//! the derivative tensors consumed by every downstream formula. Two routes
//! are available:
//!
//! * `fd` — differentiate `(A, B)` directly; works for any model.
//! * `analytic` — take the exact first derivatives from the model and
//!   finite-difference only the `D_k B` map for the higher orders. Both
//!   shipped models have polynomial conservation laws, so this route is
//!   accurate to roughly machine precision and is what the root-finder and
//!   continuation use to meet their 1e-10 residual tolerances.
//!
//! Index convention (row-major in serialized output):
//! `d2kb[i][j][m] = d^2 B_i / dk_j dk_m`, symmetric in `(j, m)`;
//! `d3kb[i][j][m][n] = d^3 B_i / dk_j dk_m dk_n`, symmetric in `(j, m, n)`.

use crate::error::{Result, WaveError};
use crate::models::{Mat2, ModelPoint, TwoPhaseModel, Vec2};

pub const EPS: f64 = f64::EPSILON;
const MAX_SHRINK: u32 = 40;

/// `d^2 B_i / dk_j dk_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor3(pub [[[f64; 2]; 2]; 2]);

/// `d^3 B_i / dk_j dk_m dk_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor4(pub [[[[f64; 2]; 2]; 2]; 2]);

impl Tensor3 {
    pub fn zeros() -> Self {
        Tensor3([[[0.0; 2]; 2]; 2])
    }

    pub fn frobenius(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

impl Tensor4 {
    pub fn zeros() -> Self {
        Tensor4([[[[0.0; 2]; 2]; 2]; 2])
    }

    pub fn frobenius(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// Directional contraction `D^2_k B(u, v)`; multilinear and symmetric in the
/// direction arguments.
pub fn contract2(t: &Tensor3, u: &Vec2, v: &Vec2) -> Vec2 {
    let mut out = Vec2::zeros();
    for i in 0..2 {
        let mut acc = 0.0;
        for j in 0..2 {
            for m in 0..2 {
                acc += t.0[i][j][m] * u[j] * v[m];
            }
        }
        out[i] = acc;
    }
    out
}

/// Directional contraction `D^3_k B(u, v, w)`.
pub fn contract3(t: &Tensor4, u: &Vec2, v: &Vec2, w: &Vec2) -> Vec2 {
    let mut out = Vec2::zeros();
    for i in 0..2 {
        let mut acc = 0.0;
        for j in 0..2 {
            for m in 0..2 {
                for n in 0..2 {
                    acc += t.0[i][j][m][n] * u[j] * v[m] * w[n];
                }
            }
        }
        out[i] = acc;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeRoute {
    FiniteDifference,
    AnalyticSeeded,
}

impl DerivativeRoute {
    pub fn name(&self) -> &'static str {
        match self {
            DerivativeRoute::FiniteDifference => "fd",
            DerivativeRoute::AnalyticSeeded => "analytic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fd" => Ok(DerivativeRoute::FiniteDifference),
            "analytic" => Ok(DerivativeRoute::AnalyticSeeded),
            other => Err(WaveError::InvalidInput(format!(
                "unknown derivative route '{other}' (expected fd|analytic)"
            ))),
        }
    }

    /// The analytic route when the model supports it, otherwise fd.
    pub fn preferred(model: &dyn TwoPhaseModel, pt: &ModelPoint) -> Self {
        if model.analytic_first(&pt.k, &pt.omega).is_some() {
            DerivativeRoute::AnalyticSeeded
        } else {
            DerivativeRoute::FiniteDifference
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OrderStep {
    pub order: u8,
    pub steps: [f64; 2],
    pub error_estimate: f64,
}

/// Per-bundle record of step sizes, extrapolation error estimates and the
/// symmetry defects measured before symmetrization.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StepReport {
    pub route: &'static str,
    pub orders: Vec<OrderStep>,
    pub dkb_symmetry_defect: f64,
    pub dka_dwb_defect: f64,
}

/// Conservation laws and their derivative tensors at one model point.
#[derive(Debug, Clone)]
pub struct TensorBundle {
    pub a: Vec2,
    pub b: Vec2,
    pub dka: Mat2,
    pub dwa: Mat2,
    pub dkb: Mat2,
    pub dwb: Mat2,
    pub d2kb: Option<Tensor3>,
    pub d3kb: Option<Tensor4>,
    pub step_report: StepReport,
}

impl TensorBundle {
    pub fn d2(&self) -> Result<Tensor3> {
        self.d2kb
            .ok_or_else(|| WaveError::InvalidInput("bundle order < 2: no D2kB".into()))
    }

    pub fn d3(&self) -> Result<Tensor4> {
        self.d3kb
            .ok_or_else(|| WaveError::InvalidInput("bundle order < 3: no D3kB".into()))
    }
}

fn scale(x: f64) -> f64 {
    x.abs().max(1.0)
}

fn mat_norm(m: &Mat2) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Evaluate `(A, B)`, failing on non-physical states so step-shrinking can
/// back away from domain boundaries.
fn sample(model: &dyn TwoPhaseModel, k: &Vec2, omega: &Vec2) -> Result<(Vec2, Vec2)> {
    let s = model.state(k, omega);
    if !model.is_physical(&s) {
        return Err(WaveError::NonPhysical(format!(
            "state {:?} at k = ({}, {})",
            s, k.x, k.y
        )));
    }
    Ok(model.conservation(k, omega))
}

/// Run `compute` with steps `base * 2^-t`, shrinking while samples cross the
/// physical boundary.
pub(crate) fn with_shrinking<T>(
    base: [f64; 2],
    mut compute: impl FnMut([f64; 2]) -> Result<T>,
) -> Result<(T, [f64; 2])> {
    let mut h = base;
    for _ in 0..MAX_SHRINK {
        match compute(h) {
            Ok(v) => return Ok((v, h)),
            Err(WaveError::NonPhysical(_)) => {
                h = [h[0] * 0.5, h[1] * 0.5];
            }
            Err(e) => return Err(e),
        }
    }
    Err(WaveError::StepUnderflow(
        "no admissible step inside the physical domain".into(),
    ))
}

fn shift(v: &Vec2, j: usize, d: f64) -> Vec2 {
    let mut out = *v;
    out[j] += d;
    out
}

/// First derivative of `f` along component `j`, one Richardson level.
/// Returns (value, correction magnitude).
fn d1_richardson(f: &mut dyn FnMut(f64) -> Result<Vec2>, h: f64) -> Result<(Vec2, f64)> {
    let coarse = (f(h)? - f(-h)?) / (2.0 * h);
    let fine = (f(h / 2.0)? - f(-h / 2.0)?) / h;
    let extrap = (4.0 * fine - coarse) / 3.0;
    Ok((extrap, (extrap - fine).norm()))
}

/// Second derivative along one or two components, one Richardson level.
fn d2_richardson(
    f: &mut dyn FnMut(f64, f64) -> Result<Vec2>,
    j: usize,
    m: usize,
    h: [f64; 2],
) -> Result<(Vec2, f64)> {
    let mut stencil = |hj: f64, hm: f64| -> Result<Vec2> {
        if j == m {
            Ok((f(hj, 0.0)? - 2.0 * f(0.0, 0.0)? + f(-hj, 0.0)?) / (hj * hj))
        } else {
            Ok(
                (f(hj, hm)? - f(hj, -hm)? - f(-hj, hm)? + f(-hj, -hm)?)
                    / (4.0 * hj * hm),
            )
        }
    };
    let coarse = stencil(h[0], h[1])?;
    let fine = stencil(h[0] / 2.0, h[1] / 2.0)?;
    let extrap = (4.0 * fine - coarse) / 3.0;
    Ok((extrap, (extrap - fine).norm()))
}

/// Third derivative for the patterns (j,j,j) and (j,j,m), one Richardson
/// level. `f(a, b)` shifts component `j` by `a` and component `m` by `b`.
fn d3_richardson(
    f: &mut dyn FnMut(f64, f64) -> Result<Vec2>,
    pure: bool,
    h: [f64; 2],
) -> Result<(Vec2, f64)> {
    let mut stencil = |hj: f64, hm: f64| -> Result<Vec2> {
        if pure {
            Ok(
                (f(2.0 * hj, 0.0)? - 2.0 * f(hj, 0.0)? + 2.0 * f(-hj, 0.0)?
                    - f(-2.0 * hj, 0.0)?)
                    / (2.0 * hj * hj * hj),
            )
        } else {
            // d^2/dk_j^2 of the centered d/dk_m difference
            let g = |a: f64, f: &mut dyn FnMut(f64, f64) -> Result<Vec2>| -> Result<Vec2> {
                Ok((f(a, hm)? - f(a, -hm)?) / (2.0 * hm))
            };
            Ok((g(hj, f)? - 2.0 * g(0.0, f)? + g(-hj, f)?) / (hj * hj))
        }
    };
    let coarse = stencil(h[0], h[1])?;
    let fine = stencil(h[0] / 2.0, h[1] / 2.0)?;
    let extrap = (4.0 * fine - coarse) / 3.0;
    Ok((extrap, (extrap - fine).norm()))
}

struct FirstBlock {
    dka: Mat2,
    dwa: Mat2,
    dkb: Mat2,
    dwb: Mat2,
    steps: OrderStep,
}

fn fd_first_block(model: &dyn TwoPhaseModel, pt: &ModelPoint) -> Result<FirstBlock> {
    let e3 = EPS.powf(1.0 / 3.0);
    let base_k = [scale(pt.k.x) * e3, scale(pt.k.y) * e3];
    let base_w = [scale(pt.omega.x) * e3, scale(pt.omega.y) * e3];
    let mut dka = Mat2::zeros();
    let mut dwa = Mat2::zeros();
    let mut dkb = Mat2::zeros();
    let mut dwb = Mat2::zeros();
    let mut worst = 0.0f64;
    let mut used = [0.0; 2];
    for j in 0..2 {
        let ((da, db, err), h) = with_shrinking([base_k[j], base_k[j]], |h| {
            let mut fa = |d: f64| sample(model, &shift(&pt.k, j, d), &pt.omega).map(|ab| ab.0);
            let (da, _) = d1_richardson(&mut fa, h[0])?;
            let mut fb = |d: f64| sample(model, &shift(&pt.k, j, d), &pt.omega).map(|ab| ab.1);
            let (db, err) = d1_richardson(&mut fb, h[0])?;
            Ok((da, db, err))
        })?;
        worst = worst.max(err / db.norm().max(1e-300));
        used[j] = h[0];
        dka.set_column(j, &da);
        dkb.set_column(j, &db);
    }
    for j in 0..2 {
        let ((da, db, err), _) = with_shrinking([base_w[j], base_w[j]], |h| {
            let mut fa = |d: f64| sample(model, &pt.k, &shift(&pt.omega, j, d)).map(|ab| ab.0);
            let (da, _) = d1_richardson(&mut fa, h[0])?;
            let mut fb = |d: f64| sample(model, &pt.k, &shift(&pt.omega, j, d)).map(|ab| ab.1);
            let (db, err) = d1_richardson(&mut fb, h[0])?;
            Ok((da, db, err))
        })?;
        worst = worst.max(err / db.norm().max(1e-300));
        dwa.set_column(j, &da);
        dwb.set_column(j, &db);
    }
    Ok(FirstBlock {
        dka,
        dwa,
        dkb,
        dwb,
        steps: OrderStep {
            order: 1,
            steps: used,
            error_estimate: worst,
        },
    })
}

/// D2kB of a 2-vector map of k; used both for B itself (fd route) and for
/// the columns of the analytic D_k B map (analytic route, order shifted by
/// one).
fn fd_d2_of_map(
    eval: &dyn Fn(&Vec2) -> Result<Vec2>,
    k0: &Vec2,
    base: [f64; 2],
) -> Result<(Tensor3, OrderStep)> {
    let mut t = Tensor3::zeros();
    let mut worst = 0.0f64;
    let mut used = base;
    for (j, m) in [(0usize, 0usize), (0, 1), (1, 1)] {
        let (v, h) = with_shrinking([base[j], base[m]], |h| {
            let mut f = |dj: f64, dm: f64| -> Result<Vec2> {
                let mut k = *k0;
                k[j] += dj;
                k[m] += dm;
                eval(&k)
            };
            let (v, err) = d2_richardson(&mut f, j, m, h)?;
            worst = worst.max(err / v.norm().max(1e-300));
            Ok(v)
        })?;
        used = h;
        for i in 0..2 {
            t.0[i][j][m] = v[i];
            t.0[i][m][j] = v[i];
        }
    }
    Ok((
        t,
        OrderStep {
            order: 2,
            steps: used,
            error_estimate: worst,
        },
    ))
}

fn fd_d3_of_map(
    eval: &dyn Fn(&Vec2) -> Result<Vec2>,
    k0: &Vec2,
    base: [f64; 2],
) -> Result<(Tensor4, OrderStep)> {
    let mut t = Tensor4::zeros();
    let mut worst = 0.0f64;
    let mut used = base;
    // canonical patterns: (jjj) and (jjm); the symmetric slots are filled
    // directly so the tensor is symmetric by construction
    for (j, m, pure) in [
        (0usize, 0usize, true),
        (1, 1, true),
        (0, 1, false),
        (1, 0, false),
    ] {
        let (v, h) = with_shrinking([base[j], base[m]], |h| {
            let mut f = |dj: f64, dm: f64| -> Result<Vec2> {
                let mut k = *k0;
                k[j] += dj;
                if !pure {
                    k[m] += dm;
                }
                eval(&k)
            };
            let (v, err) = d3_richardson(&mut f, pure, h)?;
            worst = worst.max(err / v.norm().max(1e-300));
            Ok(v)
        })?;
        used = h;
        for i in 0..2 {
            if pure {
                t.0[i][j][j][j] = v[i];
            } else {
                t.0[i][j][j][m] = v[i];
                t.0[i][j][m][j] = v[i];
                t.0[i][m][j][j] = v[i];
            }
        }
    }
    Ok((
        t,
        OrderStep {
            order: 3,
            steps: used,
            error_estimate: worst,
        },
    ))
}

/// Build the derivative bundle by central finite differences (the default
/// route of the `tensors` operation).
pub fn bundle(model: &dyn TwoPhaseModel, pt: &ModelPoint, order: u8) -> Result<TensorBundle> {
    bundle_with_route(model, pt, order, DerivativeRoute::FiniteDifference)
}

pub fn bundle_with_route(
    model: &dyn TwoPhaseModel,
    pt: &ModelPoint,
    order: u8,
    route: DerivativeRoute,
) -> Result<TensorBundle> {
    if !(1..=3).contains(&order) {
        return Err(WaveError::InvalidInput(format!(
            "bundle order must be 1, 2 or 3 (got {order})"
        )));
    }
    if !pt.physical {
        return Err(WaveError::NonPhysical(format!(
            "bundle center has non-physical state {:?}",
            pt.state
        )));
    }
    let (a, b) = model.conservation(&pt.k, &pt.omega);
    let mut orders = Vec::new();

    let (dka, dwa, dkb_raw, dwb) = match route {
        DerivativeRoute::FiniteDifference => {
            let fb = fd_first_block(model, pt)?;
            orders.push(fb.steps.clone());
            (fb.dka, fb.dwa, fb.dkb, fb.dwb)
        }
        DerivativeRoute::AnalyticSeeded => {
            let fd = model.analytic_first(&pt.k, &pt.omega).ok_or_else(|| {
                WaveError::InvalidInput(format!(
                    "model '{}' provides no analytic derivatives",
                    model.name()
                ))
            })?;
            orders.push(OrderStep {
                order: 1,
                steps: [0.0, 0.0],
                error_estimate: 0.0,
            });
            (fd.dka, fd.dwa, fd.dkb, fd.dwb)
        }
    };

    let dkb_defect = mat_norm(&(dkb_raw - dkb_raw.transpose())) / mat_norm(&dkb_raw).max(1e-300);
    let dka_dwb = mat_norm(&(dka - dwb.transpose())) / mat_norm(&dka).max(1e-300);
    // downstream formulas assume exact symmetry (the delta solve uses the
    // self-adjointness of DkB); defects stay diagnostics
    let dkb = 0.5 * (dkb_raw + dkb_raw.transpose());

    let omega = pt.omega;
    let eval_b: Box<dyn Fn(&Vec2) -> Result<Vec2> + '_> =
        Box::new(move |k: &Vec2| sample(model, k, &omega).map(|ab| ab.1));
    let eval_dkb_col = |col: usize| -> Box<dyn Fn(&Vec2) -> Result<Vec2> + '_> {
        Box::new(move |k: &Vec2| {
            let s = model.state(k, &omega);
            if !model.is_physical(&s) {
                return Err(WaveError::NonPhysical("sample".into()));
            }
            let fd = model
                .analytic_first(k, &omega)
                .ok_or_else(|| WaveError::InvalidInput("analytic route lost".into()))?;
            Ok(fd.dkb.column(col).into_owned())
        })
    };

    let mut d2kb = None;
    let mut d3kb = None;
    if order >= 2 {
        let (t, step) = match route {
            DerivativeRoute::FiniteDifference => {
                let base = [
                    2.0 * scale(pt.k.x) * EPS.powf(0.2),
                    2.0 * scale(pt.k.y) * EPS.powf(0.2),
                ];
                fd_d2_of_map(eval_b.as_ref(), &pt.k, base)?
            }
            DerivativeRoute::AnalyticSeeded => {
                // D2kB[i][c][j] = d(DkB[i][c])/dk_j via first differences of
                // the exact DkB map
                let base = [
                    scale(pt.k.x) * EPS.powf(1.0 / 3.0),
                    scale(pt.k.y) * EPS.powf(1.0 / 3.0),
                ];
                let mut t = Tensor3::zeros();
                let mut worst = 0.0f64;
                for c in 0..2 {
                    let eval = eval_dkb_col(c);
                    for j in 0..2 {
                        let (v, _) = with_shrinking([base[j], base[j]], |h| {
                            let mut f = |d: f64| eval(&shift(&pt.k, j, d));
                            let (v, err) = d1_richardson(&mut f, h[0])?;
                            worst = worst.max(err / v.norm().max(1e-300));
                            Ok(v)
                        })?;
                        for i in 0..2 {
                            t.0[i][c][j] = v[i];
                        }
                    }
                }
                // average the (c, j) and (j, c) estimates
                let mut sym = Tensor3::zeros();
                for i in 0..2 {
                    for j in 0..2 {
                        for m in 0..2 {
                            sym.0[i][j][m] = 0.5 * (t.0[i][j][m] + t.0[i][m][j]);
                        }
                    }
                }
                (
                    sym,
                    OrderStep {
                        order: 2,
                        steps: base,
                        error_estimate: worst,
                    },
                )
            }
        };
        orders.push(step);
        d2kb = Some(t);
    }
    if order >= 3 {
        let (t, step) = match route {
            DerivativeRoute::FiniteDifference => {
                let base = [
                    2.0 * scale(pt.k.x) * EPS.powf(1.0 / 6.0),
                    2.0 * scale(pt.k.y) * EPS.powf(1.0 / 6.0),
                ];
                fd_d3_of_map(eval_b.as_ref(), &pt.k, base)?
            }
            DerivativeRoute::AnalyticSeeded => {
                // D3kB[i][c][j][m] = d^2(DkB[i][c])/dk_j dk_m
                let base = [
                    2.0 * scale(pt.k.x) * EPS.powf(0.2),
                    2.0 * scale(pt.k.y) * EPS.powf(0.2),
                ];
                let mut t = Tensor4::zeros();
                let mut worst = 0.0f64;
                for c in 0..2 {
                    let eval = eval_dkb_col(c);
                    let (tc, step) = fd_d2_of_map(eval.as_ref(), &pt.k, base)?;
                    worst = worst.max(step.error_estimate);
                    for i in 0..2 {
                        for j in 0..2 {
                            for m in 0..2 {
                                t.0[i][c][j][m] = tc.0[i][j][m];
                            }
                        }
                    }
                }
                (
                    t,
                    OrderStep {
                        order: 3,
                        steps: base,
                        error_estimate: worst,
                    },
                )
            }
        };
        orders.push(step);
        d3kb = Some(symmetrize_last3(&t));
    }

    // error targets from the operation contract
    for step in &orders {
        let target = if step.order <= 2 { 1e-7 } else { 1e-5 };
        if step.error_estimate > target {
            return Err(WaveError::StepUnderflow(format!(
                "order-{} error estimate {:.3e} exceeds target {:.1e}",
                step.order, step.error_estimate, target
            )));
        }
    }

    Ok(TensorBundle {
        a,
        b,
        dka,
        dwa,
        dkb,
        dwb,
        d2kb,
        d3kb,
        step_report: StepReport {
            route: route.name(),
            orders,
            dkb_symmetry_defect: dkb_defect,
            dka_dwb_defect: dka_dwb,
        },
    })
}

fn symmetrize_last3(t: &Tensor4) -> Tensor4 {
    let mut out = Tensor4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for m in 0..2 {
                for n in 0..2 {
                    let s = t.0[i][j][m][n]
                        + t.0[i][j][n][m]
                        + t.0[i][m][j][n]
                        + t.0[i][m][n][j]
                        + t.0[i][n][j][m]
                        + t.0[i][n][m][j];
                    out.0[i][j][m][n] = s / 6.0;
                }
            }
        }
    }
    out
}
