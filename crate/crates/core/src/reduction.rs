//! Assembly of the emergent mKdV coefficients and their cross-checks.
//!
//! At a double-critical point the reduction produces
//!
//! ```text
//! a0_raw = zeta^T (D_k A + D_w B) zeta
//! a1_raw = 1/2 zeta^T (D^3_k B(zeta,zeta,zeta) - 3 D^2_k B(zeta,delta))
//! a2_raw = zeta^T K                      (model-supplied closed form)
//! ```
//!
//! in the unit-`zeta` gauge, plus normalized values obtained by rescaling to
//! the model's reference gauge and dividing by the stored per-coefficient
//! factors. `a1_raw` is invariant under `delta -> delta + c zeta` exactly
//! (because `zeta^T D^2_k B(zeta,zeta) = 0` there), and under
//! `zeta -> c zeta`, `delta -> c^2 delta` the raws scale as `c^2, c^4, c^2`,
//! so `a1_raw / a0_raw^2` and `a2_raw / a0_raw` are gauge-invariant.
//!
//! The cubic coefficient is cross-validated by the extended method of
//! Kuramoto: the third epsilon-derivative of
//! `zeta^T B(k + eps zeta - (eps^2/2) delta, omega)` equals
//! `zeta^T (D^3_k B(zeta,zeta,zeta) - 3 D^2_k B(zeta,delta)) = 2 a1_raw`,
//! computed here by a high-order stencil that never touches the tensor
//! bundle.

use crate::criticality::CriticalPoint;
use crate::error::{Result, WaveError};
use crate::models::{ModelPoint, TwoPhaseModel, Vec2};
use crate::tensors::{contract2, contract3, with_shrinking, TensorBundle, EPS};

/// Gauge metadata attached to a reduction: the (signed) rescaling from the
/// unit null vector to the model's reference gauge and the stored
/// normalization factors.
#[derive(Debug, Clone, Copy)]
pub struct GaugeInfo {
    /// `c` with `zeta_reference = c * zeta_unit`.
    pub zeta_scale: f64,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Raw projections and normalized mKdV coefficients at a critical point.
#[derive(Debug, Clone, Copy)]
pub struct ReductionCoefficients {
    pub a0_raw: f64,
    pub a1_raw: f64,
    pub a2_raw: f64,
    /// Raw `zeta^T K` under the alternative bracket variant, when the model
    /// records one.
    pub a2_raw_variant: Option<f64>,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub gauge: GaugeInfo,
}

/// Assemble the reduction coefficients from an order-3 bundle at `cp`.
pub fn assemble(
    model: &dyn TwoPhaseModel,
    cp: &CriticalPoint,
    bundle: &TensorBundle,
) -> Result<ReductionCoefficients> {
    let zeta = cp.zeta;
    let delta = cp.delta;
    let d2 = bundle.d2()?;
    let d3 = bundle.d3()?;
    let a0_raw = zeta.dot(&((bundle.dka + bundle.dwb) * zeta));
    let a1_raw = 0.5
        * (zeta.dot(&contract3(&d3, &zeta, &zeta, &zeta))
            - 3.0 * zeta.dot(&contract2(&d2, &zeta, &delta)));
    let proj = model.dispersive_projection(&cp.pt, &zeta)?;

    let zp = model.paper_gauge_zeta(&cp.pt);
    let c = zeta.dot(&zp); // signed: zeta is unit and parallel to zp
    let f = model.normalization_factors(&cp.pt)?;
    let c2 = c * c;
    let c4 = c2 * c2;
    Ok(ReductionCoefficients {
        a0_raw,
        a1_raw,
        a2_raw: proj.value,
        a2_raw_variant: proj.variant,
        a0: a0_raw * c2 / f.f0,
        a1: a1_raw * c4 / f.f1,
        a2: proj.value * c2 / f.f2,
        gauge: GaugeInfo {
            zeta_scale: c,
            f0: f.f0,
            f1: f.f1,
            f2: f.f2,
        },
    })
}

fn projected_flux(
    model: &dyn TwoPhaseModel,
    pt: &ModelPoint,
    zeta: &Vec2,
    delta: &Vec2,
    eps: f64,
) -> Result<f64> {
    let k = pt.k + eps * zeta - (0.5 * eps * eps) * delta;
    let s = model.state(&k, &pt.omega);
    if !model.is_physical(&s) {
        return Err(WaveError::NonPhysical(format!("kuramoto sample at eps = {eps}")));
    }
    let (_, b) = model.conservation(&k, &pt.omega);
    Ok(zeta.dot(&b))
}

fn flux_vector(
    model: &dyn TwoPhaseModel,
    pt: &ModelPoint,
    zeta: &Vec2,
    delta: &Vec2,
    eps: f64,
) -> Result<Vec2> {
    let k = pt.k + eps * zeta - (0.5 * eps * eps) * delta;
    let s = model.state(&k, &pt.omega);
    if !model.is_physical(&s) {
        return Err(WaveError::NonPhysical(format!("kuramoto sample at eps = {eps}")));
    }
    Ok(model.conservation(&k, &pt.omega).1)
}

/// Third epsilon-derivative of the projected flux along
/// `k(eps) = k + eps zeta - (eps^2/2) delta`; equals `2 a1_raw`.
///
/// Five-point stencil with one Richardson level, step
/// `eps_mach^(1/7) * max(|k|, 1)`. Independent of the tensor bundle.
pub fn kuramoto_cubic(model: &dyn TwoPhaseModel, cp: &CriticalPoint) -> Result<f64> {
    let scale = cp.pt.k.norm().max(1.0);
    let base = EPS.powf(1.0 / 7.0) * scale;
    let stencil = |e: f64| -> Result<f64> {
        Ok((projected_flux(model, &cp.pt, &cp.zeta, &cp.delta, 2.0 * e)?
            - 2.0 * projected_flux(model, &cp.pt, &cp.zeta, &cp.delta, e)?
            + 2.0 * projected_flux(model, &cp.pt, &cp.zeta, &cp.delta, -e)?
            - projected_flux(model, &cp.pt, &cp.zeta, &cp.delta, -2.0 * e)?)
            / (2.0 * e * e * e))
    };
    let (value, _) = with_shrinking([base, base], |h| {
        let coarse = stencil(h[0])?;
        let fine = stencil(h[0] / 2.0)?;
        Ok((4.0 * fine - coarse) / 3.0)
    })?;
    Ok(value)
}

/// First- and second-order epsilon-derivatives of `B` along the Kuramoto
/// curve: `(D_k B zeta, D^2_k B(zeta,zeta) - D_k B delta)`. Both vanish at a
/// valid critical point, i.e. the curve holds `B` stationary to second
/// order.
pub fn kuramoto_stationarity(
    model: &dyn TwoPhaseModel,
    cp: &CriticalPoint,
) -> Result<(Vec2, Vec2)> {
    let scale = cp.pt.k.norm().max(1.0);
    let b1 = EPS.powf(1.0 / 3.0) * scale;
    let (first, _) = with_shrinking([b1, b1], |h| {
        let e = h[0];
        let coarse =
            (flux_vector(model, &cp.pt, &cp.zeta, &cp.delta, e)?
                - flux_vector(model, &cp.pt, &cp.zeta, &cp.delta, -e)?)
                / (2.0 * e);
        let fine = (flux_vector(model, &cp.pt, &cp.zeta, &cp.delta, e / 2.0)?
            - flux_vector(model, &cp.pt, &cp.zeta, &cp.delta, -e / 2.0)?)
            / e;
        Ok((4.0 * fine - coarse) / 3.0)
    })?;
    let b2 = 2.0 * EPS.powf(0.2) * scale;
    let (second, _) = with_shrinking([b2, b2], |h| {
        let stencil = |e: f64| -> Result<Vec2> {
            Ok((flux_vector(model, &cp.pt, &cp.zeta, &cp.delta, e)?
                - 2.0 * flux_vector(model, &cp.pt, &cp.zeta, &cp.delta, 0.0)?
                + flux_vector(model, &cp.pt, &cp.zeta, &cp.delta, -e)?)
                / (e * e))
        };
        let coarse = stencil(h[0])?;
        let fine = stencil(h[0] / 2.0)?;
        Ok((4.0 * fine - coarse) / 3.0)
    })?;
    Ok((first, second))
}

/// Cross-check values emitted with every coefficient document.
#[derive(Debug, Clone, Copy)]
pub struct CrossChecks {
    pub kuramoto_cubic: f64,
    pub two_a1_raw: f64,
    pub kuramoto_rel_mismatch: f64,
    pub stationarity_first: f64,
    pub stationarity_second: f64,
    /// `||B||`-scale used to normalize the stationarity norms.
    pub flux_scale: f64,
}

pub fn cross_checks(
    model: &dyn TwoPhaseModel,
    cp: &CriticalPoint,
    coeffs: &ReductionCoefficients,
) -> Result<CrossChecks> {
    let kur = kuramoto_cubic(model, cp)?;
    let two_a1 = 2.0 * coeffs.a1_raw;
    let (first, second) = kuramoto_stationarity(model, cp)?;
    let (_, b) = model.conservation(&cp.pt.k, &cp.pt.omega);
    let flux_scale = b.norm().max(1.0);
    Ok(CrossChecks {
        kuramoto_cubic: kur,
        two_a1_raw: two_a1,
        kuramoto_rel_mismatch: (kur - two_a1).abs() / two_a1.abs().max(1e-300),
        stationarity_first: first.norm() / flux_scale,
        stationarity_second: second.norm() / flux_scale,
        flux_scale,
    })
}

/// One row of the per-term comparison against the model's reference closed
/// forms, both sides in the reference gauge.
#[derive(Debug, Clone)]
pub struct TermComparison {
    pub term: &'static str,
    pub toolkit: f64,
    pub reference: f64,
    pub rel_mismatch: f64,
}

impl TermComparison {
    fn new(term: &'static str, toolkit: f64, reference: f64) -> Self {
        let denom = reference.abs().max(toolkit.abs()).max(1e-300);
        Self {
            term,
            toolkit,
            reference,
            rel_mismatch: (toolkit - reference).abs() / denom,
        }
    }
}

/// Per-term comparison of the toolkit's projections with the model's
/// reference closed forms. Systematic mismatches are the point of this
/// report: the stored normalization factors are reverse-engineered, so any
/// row that depends on them says so via its name.
pub fn paper_comparison(
    model: &dyn TwoPhaseModel,
    cp: &CriticalPoint,
    bundle: &TensorBundle,
    coeffs: &ReductionCoefficients,
) -> Result<Vec<TermComparison>> {
    let forms = model.paper_forms(&cp.pt)?;
    let c = coeffs.gauge.zeta_scale;
    let c2 = c * c;
    let c4 = c2 * c2;
    let d2 = bundle.d2()?;
    let d3 = bundle.d3()?;
    let zeta = cp.zeta;
    let z_d3b = zeta.dot(&contract3(&d3, &zeta, &zeta, &zeta));
    let z_d2b_delta = zeta.dot(&contract2(&d2, &zeta, &cp.delta));
    // delta in the reference gauge (second component gauged to zero)
    let delta_ref = if zeta.y.abs() > 1e-14 {
        let t = -cp.delta.y / zeta.y;
        c2 * (cp.delta + t * zeta)
    } else {
        c2 * cp.delta
    };
    let mut rows = vec![
        TermComparison::new("time_coefficient", coeffs.a0_raw * c2, forms.time_coeff),
        TermComparison::new("z_d3b_zzz", z_d3b * c4, forms.z_d3b),
        TermComparison::new("z_d2b_delta_z", z_d2b_delta * c4, forms.z_d2b_delta),
        TermComparison::new("combined_cubic", 2.0 * coeffs.a1_raw * c4, forms.combined_cubic),
        TermComparison::new("delta_component_1", delta_ref.x, forms.delta_gauge.x),
        TermComparison::new("a0_normalized", coeffs.a0, forms.a0),
        TermComparison::new("a1_normalized", coeffs.a1, forms.a1),
        TermComparison::new("a2_normalized", coeffs.a2, forms.a2),
        TermComparison::new("zk_as_printed", coeffs.a2_raw * c2, forms.zk_printed),
    ];
    if let (Some(raw_var), Some(form_var)) = (coeffs.a2_raw_variant, forms.zk_variant) {
        rows.push(TermComparison::new("zk_beta22_variant", raw_var * c2, form_var));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criticality::{find_double_critical, SliceProblem, Tolerances};
    use crate::models::{NlsParams, SwParams};
    use crate::tensors::bundle_with_route;
    use approx::assert_relative_eq;

    const SW_K1: f64 = 2.23606797749979;

    fn sw_critical() -> (Box<dyn TwoPhaseModel>, CriticalPoint, TensorBundle) {
        let proto = SwParams::new(1.0, 1.0, 0.35, 0.0, 0.0, 0.0, 0.0).unwrap();
        let problem =
            SliceProblem::new(&proto, Vec2::new(10.0, 5.0), None, Tolerances::default());
        let cp = find_double_critical(&problem, 1, SW_K1, [0.35, 1.2]).unwrap();
        let (model, pt) = problem.model_at(&cp.params_slice).unwrap();
        let bu = bundle_with_route(model.as_ref(), &pt, 3, problem.route()).unwrap();
        (model, cp, bu)
    }

    fn nls_critical() -> (Box<dyn TwoPhaseModel>, CriticalPoint, TensorBundle) {
        let proto = NlsParams::new(0.5, 0.5, -1.0, -0.8, -1.0).unwrap();
        let problem =
            SliceProblem::new(&proto, Vec2::new(36.0, 16.0), None, Tolerances::default());
        let cp = find_double_critical(&problem, 1, 3.0, [-0.8, 1.4]).unwrap();
        let (model, pt) = problem.model_at(&cp.params_slice).unwrap();
        let bu = bundle_with_route(model.as_ref(), &pt, 3, problem.route()).unwrap();
        (model, cp, bu)
    }

    #[test]
    fn sw_fixture_raw_and_normalized_values() {
        let (model, cp, bu) = sw_critical();
        let rc = assemble(model.as_ref(), &cp, &bu).unwrap();
        // oracle values in the unit-zeta gauge
        assert_relative_eq!(rc.a0_raw, -5.089609076778639, max_relative = 1e-8);
        assert_relative_eq!(rc.a1_raw, -7.976067743425170, max_relative = 1e-7);
        assert_relative_eq!(rc.a2_raw, -182.28271740252974, max_relative = 1e-8);
        // closed-form coefficient tables
        assert_relative_eq!(rc.a0, 0.10228174814347113, max_relative = 1e-8);
        assert_relative_eq!(rc.a1, -1.1790371626362934, max_relative = 1e-7);
        assert_relative_eq!(rc.a2, 3.6631880191618800, max_relative = 1e-8);
    }

    #[test]
    fn nls_fixture_raw_and_normalized_values() {
        let (model, cp, bu) = nls_critical();
        let rc = assemble(model.as_ref(), &cp, &bu).unwrap();
        assert_relative_eq!(rc.a0_raw, -11.380132490589284, max_relative = 1e-8);
        assert_relative_eq!(rc.a1_raw, -10.748318151285408, max_relative = 1e-7);
        assert_relative_eq!(rc.a0, -81.41009565688316, max_relative = 1e-8);
        assert_relative_eq!(rc.a2, -5.100764897543614, max_relative = 1e-8);
        // beta11 = beta22 makes the two zK variants coincide
        assert_relative_eq!(
            rc.a2_raw_variant.unwrap(),
            rc.a2_raw,
            max_relative = 1e-13
        );
    }

    #[test]
    fn delta_gauge_shift_leaves_a1_raw_unchanged() {
        let (model, cp, bu) = sw_critical();
        let rc = assemble(model.as_ref(), &cp, &bu).unwrap();
        for c in [-10.0, -1.0, 1.0, 5.0, 10.0] {
            let mut shifted = cp.clone();
            shifted.delta += c * cp.zeta;
            let rc2 = assemble(model.as_ref(), &shifted, &bu).unwrap();
            assert_relative_eq!(rc2.a1_raw, rc.a1_raw, max_relative = 1e-10);
        }
    }

    #[test]
    fn zeta_rescaling_preserves_gauge_invariants() {
        let (model, cp, bu) = sw_critical();
        let rc = assemble(model.as_ref(), &cp, &bu).unwrap();
        let mut scaled = cp.clone();
        scaled.zeta *= 2.0;
        scaled.delta *= 4.0;
        let d2 = bu.d2().unwrap();
        let d3 = bu.d3().unwrap();
        let z = scaled.zeta;
        let a0s = z.dot(&((bu.dka + bu.dwb) * z));
        let a1s = 0.5
            * (z.dot(&contract3(&d3, &z, &z, &z))
                - 3.0 * z.dot(&contract2(&d2, &z, &scaled.delta)));
        assert_relative_eq!(a0s, 4.0 * rc.a0_raw, max_relative = 1e-12);
        assert_relative_eq!(a1s, 16.0 * rc.a1_raw, max_relative = 1e-12);
        assert_relative_eq!(
            a1s / (a0s * a0s),
            rc.a1_raw / (rc.a0_raw * rc.a0_raw),
            max_relative = 1e-10
        );
    }

    #[test]
    fn kuramoto_matches_twice_a1_raw_sw() {
        let (model, cp, bu) = sw_critical();
        let rc = assemble(model.as_ref(), &cp, &bu).unwrap();
        let kur = kuramoto_cubic(model.as_ref(), &cp).unwrap();
        assert_relative_eq!(kur, 2.0 * rc.a1_raw, max_relative = 1e-5);
    }

    #[test]
    fn kuramoto_matches_twice_a1_raw_nls() {
        let (model, cp, bu) = nls_critical();
        let rc = assemble(model.as_ref(), &cp, &bu).unwrap();
        let kur = kuramoto_cubic(model.as_ref(), &cp).unwrap();
        assert_relative_eq!(kur, 2.0 * rc.a1_raw, max_relative = 1e-5);
    }

    #[test]
    fn kuramoto_vanishes_for_linear_flux() {
        // a flux that is exactly linear in k has no curvature along the
        // Kuramoto curve when delta = 0
        let (_, cp, _) = sw_critical();
        // delta = 0 and evaluate the raw third derivative of the projected
        // flux of the *linearized* model via the closed identity: for the
        // real model the cubic term is nonzero, so check instead that the
        // stencil reproduces zero on B(k) = M k with singular symmetric M.
        struct LinearModel {
            inner: SwParams,
        }
        impl LinearModel {
            fn m(&self) -> crate::models::Mat2 {
                crate::models::Mat2::new(1.0, 2.0, 2.0, 4.0)
            }
        }
        impl TwoPhaseModel for LinearModel {
            fn name(&self) -> &'static str {
                "linear-test"
            }
            fn state(&self, _k: &Vec2, _w: &Vec2) -> Vec2 {
                Vec2::new(1.0, 1.0)
            }
            fn invert(&self, _s: &Vec2, _k: &Vec2) -> Vec2 {
                Vec2::zeros()
            }
            fn conservation(&self, k: &Vec2, _w: &Vec2) -> (Vec2, Vec2) {
                (Vec2::new(1.0, 1.0), self.m() * k)
            }
            fn dimensionless(
                &self,
                _pt: &ModelPoint,
            ) -> crate::error::Result<crate::models::DimensionlessNumbers> {
                unimplemented!()
            }
            fn analytic_first(
                &self,
                _k: &Vec2,
                _w: &Vec2,
            ) -> Option<crate::models::FirstDerivatives> {
                None
            }
            fn paper_gauge_zeta(&self, _pt: &ModelPoint) -> Vec2 {
                Vec2::new(-2.0, 1.0)
            }
            fn dispersive_projection(
                &self,
                _pt: &ModelPoint,
                _zeta: &Vec2,
            ) -> crate::error::Result<crate::models::DispersiveProjection> {
                unimplemented!()
            }
            fn slice_names(&self) -> [&'static str; 3] {
                self.inner.slice_names()
            }
            fn slice_of(&self, pt: &ModelPoint) -> [f64; 3] {
                self.inner.slice_of(pt)
            }
            fn with_slice_param(
                &self,
                _v: f64,
            ) -> crate::error::Result<Box<dyn TwoPhaseModel>> {
                unimplemented!()
            }
            fn normalization_factors(
                &self,
                _pt: &ModelPoint,
            ) -> crate::error::Result<crate::models::NormalizationFactors> {
                unimplemented!()
            }
            fn paper_forms(&self, _pt: &ModelPoint) -> crate::error::Result<crate::models::PaperForms> {
                unimplemented!()
            }
            fn params_json(&self) -> serde_json::Value {
                serde_json::Value::Null
            }
            fn state_field_names(&self) -> [&'static str; 2] {
                ["s1", "s2"]
            }
        }
        let lin = LinearModel {
            inner: SwParams::new(1.0, 1.0, 0.35, 0.0, 0.0, 0.0, 0.0).unwrap(),
        };
        let lp = CriticalPoint {
            pt: lin.point(cp.pt.k, cp.pt.omega),
            params_slice: [0.0; 3],
            zeta: crate::criticality::null_vector(&lin.m(), &Tolerances::default()).unwrap(),
            delta: Vec2::zeros(),
            residuals: cp.residuals,
        };
        let kur = kuramoto_cubic(&lin, &lp).unwrap();
        assert!(kur.abs() < 1e-9, "linear flux cubic term: {kur}");
    }

    #[test]
    fn stationarity_vectors_vanish_at_critical_point() {
        let (model, cp, _) = sw_critical();
        let (first, second) = kuramoto_stationarity(model.as_ref(), &cp).unwrap();
        let scale = model.conservation(&cp.pt.k, &cp.pt.omega).1.norm();
        assert!(first.norm() / scale < 1e-6, "first: {}", first.norm());
        assert!(second.norm() / scale < 1e-6, "second: {}", second.norm());
    }

    #[test]
    fn stationarity_first_vector_nonzero_off_criticality() {
        let proto = SwParams::new(1.0, 1.0, 0.35, 0.0, 0.0, 0.0, 0.0).unwrap();
        let k = Vec2::new(1.0, 0.5);
        let w = proto.invert_state(&Vec2::new(10.0, 5.0), &k);
        let pt = proto.point(k, w);
        let fake = CriticalPoint {
            pt,
            params_slice: [0.35, 1.0, 0.5],
            zeta: Vec2::new(0.6, 0.8),
            delta: Vec2::zeros(),
            residuals: crate::criticality::Residuals {
                det: 1.0,
                cubic: 1.0,
                delta: 0.0,
            },
        };
        let (first, _) = kuramoto_stationarity(&proto, &fake).unwrap();
        assert!(first.norm() > 1e-2);
    }

    #[test]
    fn sw_paper_comparison_all_terms_agree() {
        let (model, cp, bu) = sw_critical();
        let rc = assemble(model.as_ref(), &cp, &bu).unwrap();
        let rows = paper_comparison(model.as_ref(), &cp, &bu, &rc).unwrap();
        for row in &rows {
            assert!(
                row.rel_mismatch < 1e-6,
                "{}: toolkit {} vs reference {} (rel {})",
                row.term,
                row.toolkit,
                row.reference,
                row.rel_mismatch
            );
        }
    }

    #[test]
    fn nls_paper_comparison_flags_known_discrepancy() {
        let (model, cp, bu) = nls_critical();
        let rc = assemble(model.as_ref(), &cp, &bu).unwrap();
        let rows = paper_comparison(model.as_ref(), &cp, &bu, &rc).unwrap();
        let get = |name: &str| rows.iter().find(|r| r.term == name).unwrap();
        // exact rows
        for name in ["time_coefficient", "z_d3b_zzz", "delta_component_1", "a0_normalized", "a2_normalized"] {
            assert!(
                get(name).rel_mismatch < 1e-6,
                "{name}: {:?}",
                get(name)
            );
        }
        // the printed z_d2b closed form is short by exactly a factor beta
        let row = get("z_d2b_delta_z");
        let beta = 1.0 - 0.8044636950036062f64.powi(2);
        assert_relative_eq!(row.reference / row.toolkit, beta, max_relative = 1e-6);
        assert!(get("combined_cubic").rel_mismatch > 0.1);
        assert!(get("a1_normalized").rel_mismatch > 0.1);
    }
}
