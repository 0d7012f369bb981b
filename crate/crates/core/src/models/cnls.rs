//! Coupled nonlinear Schrodinger equations modulated about plane waves.
//!
//! The basic state is the pair of plane waves `Psi_i = Psi_i^(0) e^{i theta_i}`
//! whose intensities satisfy
//!
//! ```text
//! |Psi1|^2 = (beta22 (alpha1 k1^2 + w1) - beta12 (alpha2 k2^2 + w2)) / beta,
//! |Psi2|^2 = (beta11 (alpha2 k2^2 + w2) - beta12 (alpha1 k1^2 + w1)) / beta,
//! ```
//!
//! with `beta = beta11 beta22 - beta12^2`. Substituting the plane wave into
//! the equations gives the inverse relation
//! `w_i = beta_i1 |Psi1|^2 + beta_i2 |Psi2|^2 - alpha_i k_i^2`.
//!
//! The wave-action pair evaluated on the plane waves is
//!
//! ```text
//! A = (|Psi1|^2, |Psi2|^2) / 2,    B = (alpha1 k1 |Psi1|^2, alpha2 k2 |Psi2|^2).
//! ```
//!
//! The flux keeps the dispersion constants `alpha_i`: only then do `A` and
//! `B` derive from the same averaged Lagrangian, so that `D_k A = D_w B^T`
//! and `D_k B` is symmetric for `alpha1 != alpha2`. (The reference equations
//! drop the `alpha_i` from the displayed flux, which contradicts its own
//! displayed `D_k B`; direct differentiation is trusted throughout.)

use super::{
    DimensionlessNumbers, DispersiveProjection, FirstDerivatives, Mat2, ModelPoint,
    NormalizationFactors, PaperForms, TwoPhaseModel, Vec2,
};
use crate::error::{Result, WaveError};
use serde::{Deserialize, Serialize};

/// Parameters of the coupled NLS model. The symmetry `beta21 = beta12` is
/// built in: only `beta12` is stored.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NlsParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta11: f64,
    pub beta12: f64,
    pub beta22: f64,
}

impl NlsParams {
    pub fn new(alpha1: f64, alpha2: f64, beta11: f64, beta12: f64, beta22: f64) -> Result<Self> {
        let p = Self {
            alpha1,
            alpha2,
            beta11,
            beta12,
            beta22,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta() == 0.0 {
            return Err(WaveError::InvalidInput(
                "beta = beta11 beta22 - beta12^2 must be nonzero".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(params: &serde_json::Value) -> Result<Self> {
        let p: NlsParams = serde_json::from_value(params.clone())
            .map_err(|e| WaveError::InvalidInput(format!("cnls params: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn beta(&self) -> f64 {
        self.beta11 * self.beta22 - self.beta12 * self.beta12
    }

    /// Plane-wave intensities `(|Psi1|^2, |Psi2|^2)` at `(k, omega)`.
    pub fn amplitudes(&self, k: &Vec2, omega: &Vec2) -> Vec2 {
        let b = self.beta();
        let p1 = self.alpha1 * k.x * k.x + omega.x;
        let p2 = self.alpha2 * k.y * k.y + omega.y;
        Vec2::new(
            (self.beta22 * p1 - self.beta12 * p2) / b,
            (self.beta11 * p2 - self.beta12 * p1) / b,
        )
    }

    /// Frequencies supporting the given intensities at `k`.
    pub fn invert_amplitudes(&self, intensities: &Vec2, k: &Vec2) -> Vec2 {
        Vec2::new(
            self.beta11 * intensities.x + self.beta12 * intensities.y
                - self.alpha1 * k.x * k.x,
            self.beta12 * intensities.x + self.beta22 * intensities.y
                - self.alpha2 * k.y * k.y,
        )
    }

    fn e_sq(&self, k: &Vec2, state: &Vec2) -> Result<(f64, f64)> {
        let b = self.beta();
        if b * state.x == 0.0 || b * state.y == 0.0 {
            return Err(WaveError::DivisionByZero("E_i^2"));
        }
        Ok((
            2.0 * self.alpha1 * k.x * k.x / (b * state.x),
            2.0 * self.alpha2 * k.y * k.y / (b * state.y),
        ))
    }
}

impl TwoPhaseModel for NlsParams {
    fn name(&self) -> &'static str {
        "cnls"
    }

    fn state(&self, k: &Vec2, omega: &Vec2) -> Vec2 {
        self.amplitudes(k, omega)
    }

    fn invert(&self, state: &Vec2, k: &Vec2) -> Vec2 {
        self.invert_amplitudes(state, k)
    }

    fn conservation(&self, k: &Vec2, omega: &Vec2) -> (Vec2, Vec2) {
        let s = self.amplitudes(k, omega);
        (
            0.5 * s,
            Vec2::new(self.alpha1 * k.x * s.x, self.alpha2 * k.y * s.y),
        )
    }

    fn dimensionless(&self, pt: &ModelPoint) -> Result<DimensionlessNumbers> {
        let (e1, e2) = self.e_sq(&pt.k, &pt.state)?;
        Ok(DimensionlessNumbers { sq1: e1, sq2: e2 })
    }

    fn analytic_first(&self, k: &Vec2, omega: &Vec2) -> Option<FirstDerivatives> {
        let b = self.beta();
        let (a1, a2) = (self.alpha1, self.alpha2);
        let s = self.amplitudes(k, omega);
        let di1_dk = Vec2::new(2.0 * self.beta22 * a1 * k.x / b, -2.0 * self.beta12 * a2 * k.y / b);
        let di2_dk = Vec2::new(-2.0 * self.beta12 * a1 * k.x / b, 2.0 * self.beta11 * a2 * k.y / b);
        let di1_dw = Vec2::new(self.beta22 / b, -self.beta12 / b);
        let di2_dw = Vec2::new(-self.beta12 / b, self.beta11 / b);
        Some(FirstDerivatives {
            dka: Mat2::new(
                0.5 * di1_dk.x,
                0.5 * di1_dk.y,
                0.5 * di2_dk.x,
                0.5 * di2_dk.y,
            ),
            dwa: Mat2::new(
                0.5 * di1_dw.x,
                0.5 * di1_dw.y,
                0.5 * di2_dw.x,
                0.5 * di2_dw.y,
            ),
            dkb: Mat2::new(
                a1 * (s.x + k.x * di1_dk.x),
                a1 * k.x * di1_dk.y,
                a2 * k.y * di2_dk.x,
                a2 * (s.y + k.y * di2_dk.y),
            ),
            dwb: Mat2::new(
                a1 * k.x * di1_dw.x,
                a1 * k.x * di1_dw.y,
                a2 * k.y * di2_dw.x,
                a2 * k.y * di2_dw.y,
            ),
        })
    }

    fn paper_gauge_zeta(&self, pt: &ModelPoint) -> Vec2 {
        // adjugate gauge of the direct D_k B: (-dB1/dk2, dB1/dk1)
        let b = self.beta();
        let e1 = 2.0 * self.alpha1 * pt.k.x * pt.k.x / (b * pt.state.x);
        Vec2::new(
            2.0 * self.beta12 * self.alpha1 * self.alpha2 * pt.k.x * pt.k.y / b,
            self.alpha1 * pt.state.x * (1.0 + self.beta22 * e1),
        )
    }

    fn dispersive_projection(&self, pt: &ModelPoint, zeta: &Vec2) -> Result<DispersiveProjection> {
        let (e1, e2) = self.e_sq(&pt.k, &pt.state)?;
        let b = self.beta();
        let (i1, i2) = (pt.state.x, pt.state.y);
        let tail = self.alpha2 * i1 * (self.beta11 + b * e1) + self.alpha1 * i2 * (self.beta22 + b * e2);
        let common = self.alpha1.powi(2) * self.alpha2 * i1 / (2.0 * b) * tail;
        let printed = common * (1.0 + self.beta11 * e1);
        let variant = common * (1.0 + self.beta22 * e1);
        let zp = self.paper_gauge_zeta(pt);
        let zp2 = zp.dot(&zp);
        if zp2 == 0.0 {
            return Err(WaveError::DegenerateKernel);
        }
        let c = zeta.dot(&zp) / zp2;
        Ok(DispersiveProjection {
            value: printed * c * c,
            variant: Some(variant * c * c),
        })
    }

    fn slice_names(&self) -> [&'static str; 3] {
        ["beta12", "k1", "k2"]
    }

    fn slice_of(&self, pt: &ModelPoint) -> [f64; 3] {
        [self.beta12, pt.k.x, pt.k.y]
    }

    fn with_slice_param(&self, value: f64) -> Result<Box<dyn TwoPhaseModel>> {
        let mut p = *self;
        p.beta12 = value;
        p.validate()?;
        Ok(Box::new(p))
    }

    fn normalization_factors(&self, pt: &ModelPoint) -> Result<NormalizationFactors> {
        let (e1, _) = self.e_sq(&pt.k, &pt.state)?;
        let b = self.beta();
        let i1 = pt.state.x;
        let f0 = 2.0 * self.alpha1.powi(2) * self.alpha2 * i1 * (1.0 + self.beta22 * e1) / b;
        let f2 = 2.0 * self.alpha1.powi(2) * self.alpha2 * i1 * (1.0 + self.beta11 * e1) / b;
        if f0 == 0.0 || f2 == 0.0 {
            return Err(WaveError::DivisionByZero("normalization factor"));
        }
        Ok(NormalizationFactors {
            f0,
            f1: f0 * b * i1,
            f2,
        })
    }

    fn paper_forms(&self, pt: &ModelPoint) -> Result<PaperForms> {
        let (e1, e2) = self.e_sq(&pt.k, &pt.state)?;
        let b = self.beta();
        let (a1, a2) = (self.alpha1, self.alpha2);
        let (i1, i2) = (pt.state.x, pt.state.y);
        let (k1, k2) = (pt.k.x, pt.k.y);
        let b12 = self.beta12;
        if b12 == 0.0 {
            return Err(WaveError::DivisionByZero("paper forms with beta12 = 0"));
        }
        let zeta_gauge = self.paper_gauge_zeta(pt);
        let up1 = 1.0 + self.beta22 * e1; // (1 + beta22 E1^2)
        let time_coeff = 2.0 * a1.powi(2) * a2 * i1 * up1 / b
            * (i2 * (self.beta22 + b * e2) * k1 + i1 * (self.beta11 + b * e1) * k2);
        let z_d3b = 6.0 * a2.powi(2) * zeta_gauge.y.powi(4) / (b12 * b12)
            * (b * e1 * up1 + (self.beta11 + b * e1));
        let delta_bracket = 2.0 * b12 * i2 * (self.beta22 + b * e2) + b * i1 * up1 * up1;
        let delta1 = 2.0 * a1.powi(2) * a2 * k1 / (b * b12) * delta_bracket;
        let z_d2b_delta =
            2.0 * a1.powi(4) * a2.powi(2) * e1 * i1.powi(2) * up1 / (b12 * b12)
                * delta_bracket.powi(2);
        let combined_cubic = 6.0 * a2.powi(2) * a1.powi(4) * b12 * i1.powi(3) * i2 * up1 * up1
            / b
            * (3.0 * (self.beta22 * e1 + self.beta11 * e2) - 1.0);
        let proj = self.dispersive_projection(pt, &zeta_gauge)?;
        Ok(PaperForms {
            zeta_gauge,
            time_coeff,
            z_d3b,
            z_d2b_delta,
            combined_cubic,
            delta_gauge: Vec2::new(delta1, 0.0),
            a0: i2 * (self.beta22 + b * e2) * k1 + i1 * (self.beta11 + b * e1) * k2,
            a1: 1.5 * a2 * a1.powi(2) * b12 * i1 * i2 * up1
                * (3.0 * (self.beta22 * e1 + self.beta11 * e2) - 1.0),
            a2: 0.25
                * (a2 * i1 * (self.beta11 + b * e1) + a1 * i2 * (self.beta22 + b * e2)),
            zk_printed: proj.value,
            zk_variant: proj.variant,
        })
    }

    fn params_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "beta11": self.beta11,
            "beta12": self.beta12,
            "beta22": self.beta22,
        })
    }

    fn state_field_names(&self) -> [&'static str; 2] {
        ["psi1_sq", "psi2_sq"]
    }
}
