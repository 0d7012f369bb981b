//! Criticality conditions, null vectors and the double-critical curve.
//!
//! The first criticality is `det[D_k B] = 0` (a zero characteristic of the
//! Whitham system) with null vector `zeta`; the second is the cubic
//! degeneracy `zeta^T D_k^2 B(zeta, zeta) = 0`. Both residuals are scaled to
//! be unit-free: the determinant by `||D_k B||^2`, the rest by the norm of
//! the defining tensor.
//!
//! Scans hold the basic state fixed (thicknesses or intensities) and move
//! through the slice `(r, k1, k2)` or `(beta12, k1, k2)`, recovering omega
//! from the state inversion at every visited point.

use crate::error::{Result, WaveError};
use crate::models::{Mat2, ModelPoint, TwoPhaseModel, Vec2};
use crate::tensors::{bundle_with_route, contract2, DerivativeRoute, TensorBundle};
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

/// Residual tolerances. `det` gates `null_vector`, `newton` is the
/// convergence threshold of the double-critical root-finder, `seed` is what
/// accepted curve points must re-pass.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub det: f64,
    pub newton: f64,
    pub newton_max_iter: usize,
    pub seed: f64,
    pub fredholm: f64,
    pub delta_residual: f64,
    pub zeta_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            det: 1e-6,
            newton: 1e-10,
            newton_max_iter: 50,
            seed: 1e-9,
            fredholm: 1e-6,
            delta_residual: 1e-6,
            zeta_residual: 1e-7,
        }
    }
}

/// Scaled residuals stored with every accepted critical point.
#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    pub det: f64,
    pub cubic: f64,
    pub delta: f64,
}

/// A point on the double-criticality set.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub pt: ModelPoint,
    /// Scanned parameters: `(r, k1, k2)` or `(beta12, k1, k2)`.
    pub params_slice: [f64; 3],
    /// Unit null vector, `zeta.y >= 0` (tie-break `zeta.x >= 0`).
    pub zeta: Vec2,
    /// Solution of `D_k B delta = D_k^2 B(zeta, zeta)` with `delta . zeta = 0`.
    pub delta: Vec2,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoppingReason {
    CompletedSteps,
    Boundary,
    NonPhysical,
    StepFailure(String),
    SurfaceLost,
}

impl StoppingReason {
    pub fn as_str(&self) -> &str {
        match self {
            StoppingReason::CompletedSteps => "completed",
            StoppingReason::Boundary => "window boundary",
            StoppingReason::NonPhysical => "non-physical state",
            StoppingReason::StepFailure(_) => "step failure",
            StoppingReason::SurfaceLost => "surface lost",
        }
    }
}

/// Ordered points along the double-critical curve with their arclength
/// parameter.
#[derive(Debug, Clone)]
pub struct CurveTrace {
    pub points: Vec<CriticalPoint>,
    pub arclength: Vec<f64>,
    pub stopping: StoppingReason,
}

/// Rectangular window in slice coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Window {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Window {
    pub fn contains(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi[i])
    }
}

fn mat_norm(m: &Mat2) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Scaled first criticality condition: `det[D_k B] / ||D_k B||^2`.
pub fn det_condition(bundle: &TensorBundle) -> f64 {
    let n = mat_norm(&bundle.dkb);
    if n == 0.0 {
        return 0.0;
    }
    bundle.dkb.determinant() / (n * n)
}

/// Unit kernel candidate from the larger-norm adjugate column; well defined
/// also away from the surface, where it approximates the smallest-eigenvalue
/// direction.
pub(crate) fn null_candidate(m: &Mat2) -> Vec2 {
    let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    let col1 = Vec2::new(c, -b);
    let col2 = Vec2::new(-b, a);
    let v = if col1.norm() >= col2.norm() { col1 } else { col2 };
    sign_convention(v.normalize())
}

fn sign_convention(v: Vec2) -> Vec2 {
    if v.y < 0.0 || (v.y == 0.0 && v.x < 0.0) {
        -v
    } else {
        v
    }
}

/// Unit null vector of a (near-)singular symmetric 2x2.
pub fn null_vector(dkb: &Mat2, tols: &Tolerances) -> Result<Vec2> {
    let n = mat_norm(dkb);
    let det = if n == 0.0 { 0.0 } else { dkb.determinant() / (n * n) };
    if det.abs() > tols.det {
        return Err(WaveError::NotCritical {
            det: det.abs(),
            tol: tols.det,
        });
    }
    // both eigenvalues near zero means the kernel is not simple
    let (a, b, c) = (dkb[(0, 0)], dkb[(0, 1)], dkb[(1, 1)]);
    let adj_norm = Vec2::new(c, -b).norm().max(Vec2::new(-b, a).norm());
    if adj_norm <= 1e-8 * n {
        return Err(WaveError::DegenerateKernel);
    }
    Ok(null_candidate(dkb))
}

/// Scaled second criticality condition `zeta^T D_k^2 B(zeta, zeta) / ||D_k^2 B||`.
pub fn cubic_degeneracy(bundle: &TensorBundle, zeta: &Vec2) -> Result<f64> {
    let d2 = bundle.d2()?;
    let n = d2.frobenius();
    if n == 0.0 {
        return Ok(0.0);
    }
    Ok(zeta.dot(&contract2(&d2, zeta, zeta)) / n)
}

/// Solve `D_k B delta = D_k^2 B(zeta, zeta)` on the orthogonal complement of
/// `zeta` via a bordered 3x3 system.
pub fn solve_delta(bundle: &TensorBundle, zeta: &Vec2, tols: &Tolerances) -> Result<Vec2> {
    let d2 = bundle.d2()?;
    let rhs = contract2(&d2, zeta, zeta);
    let d2n = d2.frobenius().max(1e-300);
    let fredholm = zeta.dot(&rhs).abs() / d2n;
    if fredholm > tols.fredholm {
        return Err(WaveError::NotSolvable(fredholm));
    }
    let m = &bundle.dkb;
    let bordered = Matrix3::new(
        m[(0, 0)],
        m[(0, 1)],
        zeta.x,
        m[(1, 0)],
        m[(1, 1)],
        zeta.y,
        zeta.x,
        zeta.y,
        0.0,
    );
    let b3 = Vector3::new(rhs.x, rhs.y, 0.0);
    let sol = bordered
        .lu()
        .solve(&b3)
        .ok_or(WaveError::NotSolvable(f64::INFINITY))?;
    let delta = Vec2::new(sol.x, sol.y);
    let resid = (m * delta - rhs).norm() / d2n;
    if resid > tols.delta_residual {
        return Err(WaveError::NotSolvable(resid));
    }
    Ok(delta)
}

/// Defect of the second-eigenvector identity
/// `D_k B (zeta2, -zeta1) = trace(D_k B) (zeta2, -zeta1)`, scaled by
/// `||D_k B||`.
pub fn trace_eigenvalue_check(dkb: &Mat2, zeta: &Vec2) -> f64 {
    let perp = Vec2::new(zeta.y, -zeta.x);
    let defect = dkb * perp - dkb.trace() * perp;
    defect.norm() / mat_norm(dkb).max(1e-300)
}

/// The two scanned criticality conditions over a parameter slice at a fixed
/// basic state.
pub struct SliceProblem<'a> {
    proto: &'a dyn TwoPhaseModel,
    fixed_state: Vec2,
    route: DerivativeRoute,
    tols: Tolerances,
}

impl<'a> SliceProblem<'a> {
    pub fn new(
        proto: &'a dyn TwoPhaseModel,
        fixed_state: Vec2,
        route: Option<DerivativeRoute>,
        tols: Tolerances,
    ) -> Self {
        let probe = proto.point(Vec2::new(1.0, 1.0), Vec2::zeros());
        let route = route.unwrap_or_else(|| DerivativeRoute::preferred(proto, &probe));
        Self {
            proto,
            fixed_state,
            route,
            tols,
        }
    }

    pub fn route(&self) -> DerivativeRoute {
        self.route
    }

    pub fn slice_names(&self) -> [&'static str; 3] {
        self.proto.slice_names()
    }

    /// Instantiate the model and point at slice coordinates.
    pub fn model_at(&self, slice: &[f64; 3]) -> Result<(Box<dyn TwoPhaseModel>, ModelPoint)> {
        let model = self.proto.with_slice_param(slice[0])?;
        let k = Vec2::new(slice[1], slice[2]);
        let omega = model.invert(&self.fixed_state, &k);
        let pt = model.point(k, omega);
        Ok((model, pt))
    }

    /// Scaled values of both criticality conditions.
    pub fn conditions(&self, slice: &[f64; 3]) -> Result<(f64, f64)> {
        let (model, pt) = self.model_at(slice)?;
        if !pt.physical {
            return Err(WaveError::NonPhysical(format!(
                "state {:?} at slice {:?}",
                pt.state, slice
            )));
        }
        let bu = bundle_with_route(model.as_ref(), &pt, 2, self.route)?;
        let det = det_condition(&bu);
        let z = null_candidate(&bu.dkb);
        let cubic = cubic_degeneracy(&bu, &z)?;
        Ok((det, cubic))
    }

    /// Assemble the full critical point (zeta, delta, residuals) at slice
    /// coordinates that already satisfy the conditions.
    pub fn assemble(&self, slice: &[f64; 3]) -> Result<CriticalPoint> {
        let (model, pt) = self.model_at(slice)?;
        if !pt.physical {
            return Err(WaveError::NonPhysical(format!("slice {slice:?}")));
        }
        let bu = bundle_with_route(model.as_ref(), &pt, 2, self.route)?;
        let zeta = null_vector(&bu.dkb, &self.tols)?;
        let zeta_resid = (bu.dkb * zeta).norm() / mat_norm(&bu.dkb).max(1e-300);
        if zeta_resid > self.tols.zeta_residual {
            return Err(WaveError::NotCritical {
                det: zeta_resid,
                tol: self.tols.zeta_residual,
            });
        }
        let cubic = cubic_degeneracy(&bu, &zeta)?;
        let delta = solve_delta(&bu, &zeta, &self.tols)?;
        let d2 = bu.d2()?;
        let delta_resid =
            (bu.dkb * delta - contract2(&d2, &zeta, &zeta)).norm() / d2.frobenius().max(1e-300);
        Ok(CriticalPoint {
            pt,
            params_slice: *slice,
            zeta,
            delta,
            residuals: Residuals {
                det: det_condition(&bu).abs(),
                cubic: cubic.abs(),
                delta: delta_resid,
            },
        })
    }

    fn jacobian_rows(&self, slice: &[f64; 3], free: &[usize]) -> Result<Vec<Vec2>> {
        // columns of the condition Jacobian for each free slice parameter
        let mut cols = Vec::with_capacity(free.len());
        for &i in free {
            let h = 1e-6 * slice[i].abs().max(1.0);
            let mut sp = *slice;
            sp[i] = slice[i] + h;
            let (dp, cp) = self.conditions(&sp)?;
            sp[i] = slice[i] - h;
            let (dm, cm) = self.conditions(&sp)?;
            cols.push(Vec2::new((dp - dm) / (2.0 * h), (cp - cm) / (2.0 * h)));
        }
        Ok(cols)
    }
}

/// Newton iteration for the double criticality over two free slice
/// parameters, the third pinned by the caller.
pub fn find_double_critical(
    problem: &SliceProblem,
    pin_index: usize,
    pin_value: f64,
    guess: [f64; 2],
) -> Result<CriticalPoint> {
    if pin_index > 2 {
        return Err(WaveError::InvalidInput(format!(
            "pin index {pin_index} out of range"
        )));
    }
    let free: Vec<usize> = (0..3).filter(|&i| i != pin_index).collect();
    let tols = problem.tols;
    let mut slice = [0.0; 3];
    slice[pin_index] = pin_value;
    slice[free[0]] = guess[0];
    slice[free[1]] = guess[1];

    // iterate to the residual floor (quadratic convergence overshoots the
    // gate by orders of magnitude, which the downstream delta-gauge identity
    // relies on); the gate only decides acceptance at the end
    let max_iter = tols.newton_max_iter;
    let mut best = (slice, f64::INFINITY);
    let mut stalled = 0;
    for _ in 0..max_iter {
        let (d, c) = problem
            .conditions(&slice)
            .map_err(|_| WaveError::NoConvergence(max_iter))?;
        let res = d.abs().max(c.abs());
        if res < best.1 {
            best = (slice, res);
            stalled = 0;
        } else {
            stalled += 1;
        }
        if res < 1e-14 || stalled >= 2 {
            break;
        }
        let cols = problem
            .jacobian_rows(&slice, &free)
            .map_err(|_| WaveError::NoConvergence(max_iter))?;
        let j = Mat2::from_columns(&cols);
        let step = j
            .lu()
            .solve(&Vec2::new(d, c))
            .ok_or(WaveError::NoConvergence(max_iter))?;
        if !step.x.is_finite() || !step.y.is_finite() {
            return Err(WaveError::NoConvergence(max_iter));
        }
        slice[free[0]] -= step.x;
        slice[free[1]] -= step.y;
    }
    if best.1 > tols.newton {
        return Err(WaveError::NoConvergence(max_iter));
    }
    problem.assemble(&best.0)
}

fn tangent_at(problem: &SliceProblem, slice: &[f64; 3]) -> Result<Vector3<f64>> {
    let cols = problem.jacobian_rows(slice, &[0, 1, 2])?;
    // null space of the 2x3 Jacobian: cross product of its two rows
    let r0 = Vector3::new(cols[0].x, cols[1].x, cols[2].x);
    let r1 = Vector3::new(cols[0].y, cols[1].y, cols[2].y);
    let t = r0.cross(&r1);
    let n = t.norm();
    if n < 1e-14 * r0.norm().max(r1.norm()).max(1e-300) {
        return Err(WaveError::StepFailure(
            "condition Jacobian is rank-deficient".into(),
        ));
    }
    Ok(t / n)
}

/// Pseudo-arclength continuation of the double-critical curve.
#[allow(clippy::too_many_arguments)]
pub fn trace_curve(
    problem: &SliceProblem,
    seed: &CriticalPoint,
    steps: usize,
    max_step: f64,
    window: &Window,
    direction: f64,
) -> Result<CurveTrace> {
    let tols = problem.tols;
    if seed.residuals.det > tols.seed || seed.residuals.cubic > tols.seed {
        return Err(WaveError::SeedInvalid(format!(
            "seed residuals ({:.3e}, {:.3e}) exceed {:.1e}",
            seed.residuals.det, seed.residuals.cubic, tols.seed
        )));
    }
    if !window.contains(&seed.params_slice) {
        return Err(WaveError::SeedInvalid("seed outside window".into()));
    }

    let mut points = vec![seed.clone()];
    let mut arclength = vec![0.0];
    let mut p = Vector3::from_column_slice(&seed.params_slice);
    let mut tangent = match tangent_at(problem, &seed.params_slice) {
        Ok(t) => t,
        Err(e) => {
            return Ok(CurveTrace {
                points,
                arclength,
                stopping: StoppingReason::StepFailure(e.to_string()),
            })
        }
    };
    // deterministic initial orientation: largest component positive, then
    // the caller's direction sign
    let imax = (0..3)
        .max_by(|&a, &b| tangent[a].abs().partial_cmp(&tangent[b].abs()).unwrap())
        .unwrap();
    if tangent[imax] < 0.0 {
        tangent = -tangent;
    }
    tangent *= direction.signum();

    let mut ds = max_step;
    let mut stopping = StoppingReason::CompletedSteps;
    'outer: for _ in 0..steps {
        let mut accepted = None;
        for _attempt in 0..5 {
            let pred = p + ds * tangent;
            match correct(problem, &pred, &p, &tangent, &tols) {
                Ok(q) => {
                    accepted = Some(q);
                    break;
                }
                Err(_) => ds *= 0.5,
            }
        }
        let Some(q) = accepted else {
            stopping = StoppingReason::StepFailure(format!(
                "corrector failed after 5 halvings (ds = {ds:.3e})"
            ));
            break;
        };
        let qs = [q.x, q.y, q.z];
        if !window.contains(&qs) {
            stopping = StoppingReason::Boundary;
            break;
        }
        let cp = match problem.assemble(&qs) {
            Ok(cp) => cp,
            Err(WaveError::NonPhysical(_)) => {
                stopping = StoppingReason::NonPhysical;
                break;
            }
            Err(e) => {
                stopping = StoppingReason::StepFailure(e.to_string());
                break;
            }
        };
        if cp.residuals.det > tols.seed || cp.residuals.cubic > tols.seed {
            // corrected point drifted off the surface
            ds *= 0.5;
            if ds < 1e-12 {
                stopping = StoppingReason::SurfaceLost;
                break 'outer;
            }
            continue;
        }
        if !cp.pt.physical {
            stopping = StoppingReason::NonPhysical;
            break;
        }
        let s_prev = *arclength.last().unwrap();
        arclength.push(s_prev + (q - p).norm());
        p = q;
        points.push(cp);
        match tangent_at(problem, &[p.x, p.y, p.z]) {
            Ok(mut t) => {
                if t.dot(&tangent) < 0.0 {
                    t = -t;
                }
                tangent = t;
            }
            Err(e) => {
                stopping = StoppingReason::StepFailure(e.to_string());
                break;
            }
        }
        ds = (ds * 1.5).min(max_step);
    }
    Ok(CurveTrace {
        points,
        arclength,
        stopping,
    })
}

fn correct(
    problem: &SliceProblem,
    pred: &Vector3<f64>,
    _prev: &Vector3<f64>,
    tangent: &Vector3<f64>,
    tols: &Tolerances,
) -> Result<Vector3<f64>> {
    // same iterate-to-floor strategy as the root-finder, with the plane
    // constraint keeping the corrector orthogonal to the tangent
    let mut q = *pred;
    let mut best = (q, f64::INFINITY);
    let mut stalled = 0;
    for _ in 0..20 {
        let qs = [q.x, q.y, q.z];
        let (d, c) = problem.conditions(&qs)?;
        let plane = tangent.dot(&(q - pred));
        let res = d.abs().max(c.abs());
        if res < best.1 {
            best = (q, res);
            stalled = 0;
        } else {
            stalled += 1;
        }
        if res < 1e-14 || stalled >= 2 {
            break;
        }
        let cols = problem.jacobian_rows(&qs, &[0, 1, 2])?;
        let j = Matrix3::new(
            cols[0].x, cols[1].x, cols[2].x, cols[0].y, cols[1].y, cols[2].y, tangent.x,
            tangent.y, tangent.z,
        );
        let rhs = Vector3::new(d, c, plane);
        let step = j
            .lu()
            .solve(&rhs)
            .ok_or_else(|| WaveError::StepFailure("singular corrector system".into()))?;
        q -= step;
        if !q.iter().all(|v| v.is_finite()) {
            return Err(WaveError::StepFailure("non-finite corrector iterate".into()));
        }
    }
    if best.1 > tols.newton {
        return Err(WaveError::NoConvergence(20));
    }
    Ok(best.0)
}

/// One node of a criticality-surface scan.
#[derive(Debug, Clone)]
pub struct ScanNode {
    pub index: [usize; 3],
    pub params: [f64; 3],
    pub det: Option<f64>,
    pub cubic: Option<f64>,
    pub physical: bool,
}

#[derive(Debug, Clone)]
pub struct ScanGrid {
    pub names: [&'static str; 3],
    pub axes: [Vec<f64>; 3],
    pub nodes: Vec<ScanNode>,
}

/// Gridded values of both criticality conditions for external contouring.
pub fn scan_surfaces(
    problem: &SliceProblem,
    window: &Window,
    nodes: [usize; 3],
) -> Result<ScanGrid> {
    if nodes.iter().any(|&n| n < 1) {
        return Err(WaveError::InvalidInput("scan needs >= 1 node per axis".into()));
    }
    let axis = |i: usize| -> Vec<f64> {
        let n = nodes[i];
        if n == 1 {
            return vec![0.5 * (window.lo[i] + window.hi[i])];
        }
        (0..n)
            .map(|j| window.lo[i] + (window.hi[i] - window.lo[i]) * j as f64 / (n - 1) as f64)
            .collect()
    };
    let axes = [axis(0), axis(1), axis(2)];
    let total = nodes[0] * nodes[1] * nodes[2];
    let grid: Vec<ScanNode> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let i0 = flat / (nodes[1] * nodes[2]);
            let i1 = (flat / nodes[2]) % nodes[1];
            let i2 = flat % nodes[2];
            let params = [axes[0][i0], axes[1][i1], axes[2][i2]];
            match problem.conditions(&params) {
                Ok((d, c)) => ScanNode {
                    index: [i0, i1, i2],
                    params,
                    det: Some(d),
                    cubic: Some(c),
                    physical: true,
                },
                Err(_) => ScanNode {
                    index: [i0, i1, i2],
                    params,
                    det: None,
                    cubic: None,
                    physical: false,
                },
            }
        })
        .collect();
    Ok(ScanGrid {
        names: problem.slice_names(),
        axes,
        nodes: grid,
    })
}
