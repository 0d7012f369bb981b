//! Two-layer stratified shallow water with uniform flow in each layer.
//!
//! The basic state is the constant-velocity flow `u_i = k_i` (phase gradient
//! of each velocity potential), with layer thicknesses determined by the
//! Bernoulli constants. Conservation of mass in each layer supplies the
//! wave-action pair
//!
//! ```text
//! A = (rho1 eta0, rho2 chi0),    B = (rho1 k1 eta0, rho2 k2 chi0).
//! ```
//!
//! The squared Froude numbers are taken as `F_i^2 = k_i^2 / (g h_i)` with
//! `h1 = eta0`, `h2 = chi0`; under this definition the full derivative
//! `det[D_k B]` factors exactly as
//! `rho1 rho2 eta0 chi0 ((1 - F1^2)(1 - F2^2) - r) / (1 - r)`,
//! which is what justifies the definition.

use super::{
    DimensionlessNumbers, DispersiveProjection, FirstDerivatives, Mat2, ModelPoint,
    NormalizationFactors, PaperForms, TwoPhaseModel, Vec2,
};
use crate::error::{Result, WaveError};
use serde::{Deserialize, Serialize};

/// Parameters of the stratified shallow-water model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SwParams {
    /// Gravitational acceleration, > 0.
    pub g: f64,
    /// Lower-layer density, > 0.
    pub rho1: f64,
    /// Density ratio rho2/rho1; stable stratification requires 0 < r < 1.
    pub r: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    #[serde(rename = "R1")]
    pub bernoulli1: f64,
    #[serde(rename = "R2")]
    pub bernoulli2: f64,
}

impl SwParams {
    pub fn new(
        g: f64,
        rho1: f64,
        r: f64,
        sigma1: f64,
        sigma2: f64,
        bernoulli1: f64,
        bernoulli2: f64,
    ) -> Result<Self> {
        let p = Self {
            g,
            rho1,
            r,
            sigma1,
            sigma2,
            bernoulli1,
            bernoulli2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(WaveError::InvalidInput(format!("g = {} must be > 0", self.g)));
        }
        if !(self.rho1 > 0.0) {
            return Err(WaveError::InvalidInput(format!(
                "rho1 = {} must be > 0",
                self.rho1
            )));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(WaveError::InvalidInput(format!(
                "density ratio r = {} must lie in (0, 1)",
                self.r
            )));
        }
        Ok(())
    }

    pub fn from_json(params: &serde_json::Value) -> Result<Self> {
        let p: SwParams = serde_json::from_value(params.clone())
            .map_err(|e| WaveError::InvalidInput(format!("sw params: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn rho2(&self) -> f64 {
        self.r * self.rho1
    }

    /// Uniform-flow layer thicknesses `(eta0, chi0)` at `(k, omega)`.
    pub fn state_of(&self, k: &Vec2, omega: &Vec2) -> Vec2 {
        let (rho1, rho2, g) = (self.rho1, self.rho2(), self.g);
        let d = g * (rho1 - rho2);
        let eta0 = (0.5 * (rho2 * k.y * k.y - rho1 * k.x * k.x) + self.bernoulli1
            - self.bernoulli2
            - rho1 * omega.x
            + rho2 * omega.y)
            / d;
        let chi0 = rho1
            * (self.bernoulli2 - self.bernoulli1 - omega.y
                + omega.x
                + 0.5 * (k.x * k.x - k.y * k.y))
            / d;
        Vec2::new(eta0, chi0)
    }

    /// Frequencies reproducing the thicknesses `(eta0, chi0)` at `k`: the
    /// two state formulas are affine in omega, so this is a 2x2 solve done
    /// in closed form.
    pub fn invert_state(&self, state: &Vec2, k: &Vec2) -> Vec2 {
        let (rho1, rho2, g) = (self.rho1, self.rho2(), self.g);
        let d = g * (rho1 - rho2);
        // -rho1 w1 + rho2 w2 = c1,  w1 - w2 = c2
        let c1 = d * state.x - 0.5 * (rho2 * k.y * k.y - rho1 * k.x * k.x) - self.bernoulli1
            + self.bernoulli2;
        let c2 = d * state.y / rho1 - self.bernoulli2 + self.bernoulli1
            - 0.5 * (k.x * k.x - k.y * k.y);
        let w2 = (c1 + rho1 * c2) / (rho2 - rho1);
        Vec2::new(w2 + c2, w2)
    }

    fn froude_sq(&self, k: &Vec2, state: &Vec2) -> (f64, f64) {
        (
            k.x * k.x / (self.g * state.x),
            k.y * k.y / (self.g * state.y),
        )
    }

    /// Dispersion constants a11, a12, a22 evaluated at the quiescent
    /// thicknesses of the supplied state.
    pub fn dispersion_constants(&self, state: &Vec2) -> (f64, f64, f64) {
        let (g, rho1, rho2) = (self.g, self.rho1, self.rho2());
        let (e, x) = (state.x, state.y);
        let a11 = self.sigma1 + self.sigma2 - rho1 * g * e * e / 3.0 - rho2 * g * e * x
            - 0.5 * g * x * x;
        let a12 = self.sigma2 - rho2 * g * e * e / 6.0 - 0.25 * rho2 * g * e * x
            - rho2 * rho2 / (2.0 * rho1) * g * e * x
            - 5.0 / 12.0 * rho2 * g * x * x;
        let a22 = self.sigma2 - rho2 * rho2 / (2.0 * rho1) * g * e * x - rho2 * g * x * x / 3.0;
        (a11, a12, a22)
    }
}

impl TwoPhaseModel for SwParams {
    fn name(&self) -> &'static str {
        "sw"
    }

    fn state(&self, k: &Vec2, omega: &Vec2) -> Vec2 {
        self.state_of(k, omega)
    }

    fn invert(&self, state: &Vec2, k: &Vec2) -> Vec2 {
        self.invert_state(state, k)
    }

    fn conservation(&self, k: &Vec2, omega: &Vec2) -> (Vec2, Vec2) {
        let s = self.state_of(k, omega);
        let (rho1, rho2) = (self.rho1, self.rho2());
        (
            Vec2::new(rho1 * s.x, rho2 * s.y),
            Vec2::new(rho1 * k.x * s.x, rho2 * k.y * s.y),
        )
    }

    fn dimensionless(&self, pt: &ModelPoint) -> Result<DimensionlessNumbers> {
        if self.g * pt.state.x == 0.0 || self.g * pt.state.y == 0.0 {
            return Err(WaveError::DivisionByZero("Froude numbers"));
        }
        let (f1, f2) = self.froude_sq(&pt.k, &pt.state);
        Ok(DimensionlessNumbers { sq1: f1, sq2: f2 })
    }

    fn analytic_first(&self, k: &Vec2, omega: &Vec2) -> Option<FirstDerivatives> {
        let (rho1, rho2, g) = (self.rho1, self.rho2(), self.g);
        let c = 1.0 / (g * (rho1 - rho2));
        let s = self.state_of(k, omega);
        // state gradients (eta0 and chi0 are quadratic in k, affine in omega)
        let deta_dk = Vec2::new(-rho1 * k.x * c, rho2 * k.y * c);
        let deta_dw = Vec2::new(-rho1 * c, rho2 * c);
        let dchi_dk = Vec2::new(rho1 * k.x * c, -rho1 * k.y * c);
        let dchi_dw = Vec2::new(rho1 * c, -rho1 * c);
        let dka = Mat2::new(
            rho1 * deta_dk.x,
            rho1 * deta_dk.y,
            rho2 * dchi_dk.x,
            rho2 * dchi_dk.y,
        );
        let dwa = Mat2::new(
            rho1 * deta_dw.x,
            rho1 * deta_dw.y,
            rho2 * dchi_dw.x,
            rho2 * dchi_dw.y,
        );
        let dkb = Mat2::new(
            rho1 * (s.x + k.x * deta_dk.x),
            rho1 * k.x * deta_dk.y,
            rho2 * k.y * dchi_dk.x,
            rho2 * (s.y + k.y * dchi_dk.y),
        );
        let dwb = Mat2::new(
            rho1 * k.x * deta_dw.x,
            rho1 * k.x * deta_dw.y,
            rho2 * k.y * dchi_dw.x,
            rho2 * k.y * dchi_dw.y,
        );
        Some(FirstDerivatives { dka, dwa, dkb, dwb })
    }

    fn paper_gauge_zeta(&self, pt: &ModelPoint) -> Vec2 {
        let (f1, _) = self.froude_sq(&pt.k, &pt.state);
        Vec2::new(
            -self.rho2() * pt.k.x * pt.k.y,
            self.g * self.rho1 * pt.state.x * (1.0 - self.r - f1),
        )
    }

    fn dispersive_projection(&self, pt: &ModelPoint, zeta: &Vec2) -> Result<DispersiveProjection> {
        let (f1, f2) = self.froude_sq(&pt.k, &pt.state);
        let (a11, a12, a22) = self.dispersion_constants(&pt.state);
        let bracket = a11 * self.r * (1.0 - f2) - 2.0 * self.r * a12 + (1.0 - f1) * a22;
        let zk_gauge = self.g
            * self.rho1.powi(2)
            * pt.state.x.powi(2)
            * pt.state.y
            * (1.0 - self.r - f1)
            * bracket;
        let zp = self.paper_gauge_zeta(pt);
        let zp2 = zp.dot(&zp);
        if zp2 == 0.0 {
            return Err(WaveError::DegenerateKernel);
        }
        let c = zeta.dot(&zp) / zp2;
        Ok(DispersiveProjection {
            value: zk_gauge * c * c,
            variant: None,
        })
    }

    fn slice_names(&self) -> [&'static str; 3] {
        ["r", "k1", "k2"]
    }

    fn slice_of(&self, pt: &ModelPoint) -> [f64; 3] {
        [self.r, pt.k.x, pt.k.y]
    }

    fn with_slice_param(&self, value: f64) -> Result<Box<dyn TwoPhaseModel>> {
        let mut p = *self;
        p.r = value;
        p.validate()?;
        Ok(Box::new(p))
    }

    fn normalization_factors(&self, pt: &ModelPoint) -> Result<NormalizationFactors> {
        let (f1sq, _) = self.froude_sq(&pt.k, &pt.state);
        let f0 = -2.0
            * self.g.powi(2)
            * self.rho1.powi(2)
            * pt.state.y
            * pt.state.x.powi(2)
            * (1.0 - self.r - f1sq);
        if f0 == 0.0 {
            return Err(WaveError::DivisionByZero("normalization factor"));
        }
        Ok(NormalizationFactors {
            f0,
            f1: -self.rho2() * f0,
            f2: f0,
        })
    }

    fn paper_forms(&self, pt: &ModelPoint) -> Result<PaperForms> {
        let (g, rho1, rho2, r) = (self.g, self.rho1, self.rho2(), self.r);
        let (e, x) = (pt.state.x, pt.state.y);
        let (k1, k2) = (pt.k.x, pt.k.y);
        let (f1, f2) = self.froude_sq(&pt.k, &pt.state);
        let q = 1.0 - r - f1;
        let time_bracket = k1 / (g * e) * (1.0 - f2) + k2 / (g * x) * (1.0 - f1);
        let time_coeff = -2.0 * g.powi(2) * rho1.powi(2) * rho2 * x * e.powi(2) * q * time_bracket;
        let z_d3b = 3.0 * g.powi(3) * rho1.powi(5) * e.powi(4) * q.powi(4) / (1.0 - r)
            * ((1.0 - f1) * (2.0 * r - 1.0 + f1) - r);
        let z_d2b_delta = g.powi(3) * rho1.powi(3) * rho2.powi(2) * x * e.powi(3) * q.powi(2)
            / (1.0 - r)
            * (2.0 * (1.0 - r) + f1 * f2).powi(2);
        let poly = f1 * f2 + 4.0 * (f1 + f2);
        let combined_cubic =
            -3.0 * g.powi(3) * rho2.powi(2) * rho1.powi(3) * x * e.powi(3) * q.powi(2) * poly;
        let delta1 = rho2 * k1 / (g * e * q)
            * (-3.0 * rho2 * k1 * k1 * k2 * k2 - 2.0 * g * rho2 * k2 * k2 * e * q
                + g.powi(2) * rho1 * e.powi(2) * q.powi(2));
        let (a11, a12, a22) = self.dispersion_constants(&pt.state);
        let zk_bracket = a11 * r * (1.0 - f2) - 2.0 * r * a12 + (1.0 - f1) * a22;
        Ok(PaperForms {
            zeta_gauge: self.paper_gauge_zeta(pt),
            time_coeff,
            z_d3b,
            z_d2b_delta,
            combined_cubic,
            delta_gauge: Vec2::new(delta1, 0.0),
            a0: rho2 * time_bracket,
            a1: -0.75 * g * rho1 * rho2 * e * f2 * (1.0 - f1) * poly,
            a2: -zk_bracket / (2.0 * g),
            zk_printed: g * rho1.powi(2) * e.powi(2) * x * q * zk_bracket,
            zk_variant: None,
        })
    }

    fn params_json(&self) -> serde_json::Value {
        serde_json::json!({
            "g": self.g,
            "rho1": self.rho1,
            "r": self.r,
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
            "R1": self.bernoulli1,
            "R2": self.bernoulli2,
        })
    }

    fn state_field_names(&self) -> [&'static str; 2] {
        ["eta0", "chi0"]
    }
}
