//! Two-phase wave models defined by their wave-action conservation laws.
//!
//! A model maps a wavenumber/frequency pair `(k, omega)` to the conserved
//! action density `A` and flux `B`. Every downstream quantity (criticality
//! surfaces, the null vector, the mKdV coefficients) is built from `A`, `B`
//! and their derivatives, so the model interface is deliberately small.
//!
//! Concrete models register by name ("sw", "cnls") and are selected at
//! runtime through [`by_name`] or a [`ModelSpec`] config file.

mod cnls;
mod sw;

pub use cnls::NlsParams;
pub use sw::SwParams;

use crate::error::{Result, WaveError};
use nalgebra::{Matrix2, Vector2};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// A wavenumber/frequency pair together with the model state it induces.
///
/// `state` holds the layer thicknesses `(eta0, chi0)` for the shallow-water
/// model and the plane-wave intensities `(|Psi1|^2, |Psi2|^2)` for the
/// coupled NLS. `physical` records componentwise positivity; scans cross
/// non-physical regions so this is a flag, not an error.
#[derive(Debug, Clone, Copy)]
pub struct ModelPoint {
    pub k: Vec2,
    pub omega: Vec2,
    pub state: Vec2,
    pub physical: bool,
}

/// Squared dimensionless numbers: Froude numbers `F_i^2` (shallow water) or
/// the signed quantities `E_i^2` (coupled NLS).
#[derive(Debug, Clone, Copy)]
pub struct DimensionlessNumbers {
    pub sq1: f64,
    pub sq2: f64,
}

/// Analytic first derivatives of the conservation laws, exact for both
/// shipped models (A and B are low-degree polynomials in `(k, omega)`).
#[derive(Debug, Clone, Copy)]
pub struct FirstDerivatives {
    pub dka: Mat2,
    pub dwa: Mat2,
    pub dkb: Mat2,
    pub dwb: Mat2,
}

/// The dispersive projection `zeta^T K`, supplied per model in closed form.
///
/// For the coupled NLS the printed closed form carries a `(1 + beta11 E1^2)`
/// prefactor where the time-derivative coefficient carries
/// `(1 + beta22 E1^2)`; both variants are recorded rather than silently
/// picking one. For the shallow-water model `variant` is `None`.
#[derive(Debug, Clone, Copy)]
pub struct DispersiveProjection {
    /// Value of the closed form as printed.
    pub value: f64,
    /// The `(1 + beta22 E1^2)` bracket variant (coupled NLS only).
    pub variant: Option<f64>,
}

/// Per-model factors converting raw unit-gauge projections to the reference
/// coefficient tables. Reverse-engineered from the closed forms; `f1` is not
/// the same factor as `f0`/`f2` for either model, which is why comparisons
/// that depend on them are flagged in reports.
#[derive(Debug, Clone, Copy)]
pub struct NormalizationFactors {
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Closed-form reference values for the per-term comparison report, all in
/// the model's own gauge (`zeta_gauge`).
#[derive(Debug, Clone)]
pub struct PaperForms {
    pub zeta_gauge: Vec2,
    pub time_coeff: f64,
    pub z_d3b: f64,
    pub z_d2b_delta: f64,
    pub combined_cubic: f64,
    pub delta_gauge: Vec2,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub zk_printed: f64,
    pub zk_variant: Option<f64>,
}

/// A two-phase wave system given by closed-form conservation laws.
///
/// All methods are pure functions of their arguments; implementations hold
/// only immutable parameters and are safe to evaluate concurrently.
pub trait TwoPhaseModel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Model state (thicknesses or intensities) at `(k, omega)`.
    fn state(&self, k: &Vec2, omega: &Vec2) -> Vec2;

    /// Componentwise positivity of a state vector.
    fn is_physical(&self, state: &Vec2) -> bool {
        state.x > 0.0 && state.y > 0.0
    }

    /// Frequencies that reproduce `state` at the given `k`; the exact
    /// inverse of [`state`](Self::state), used to hold scans at a fixed
    /// basic state.
    fn invert(&self, state: &Vec2, k: &Vec2) -> Vec2;

    /// Conservation-law vectors `(A, B)` evaluated at `(k, omega)`.
    fn conservation(&self, k: &Vec2, omega: &Vec2) -> (Vec2, Vec2);

    fn point(&self, k: Vec2, omega: Vec2) -> ModelPoint {
        let state = self.state(&k, &omega);
        ModelPoint {
            k,
            omega,
            state,
            physical: self.is_physical(&state),
        }
    }

    fn dimensionless(&self, pt: &ModelPoint) -> Result<DimensionlessNumbers>;

    /// Exact first derivatives of `(A, B)`, used by the analytic derivative
    /// route and as oracles for the finite-difference engine.
    fn analytic_first(&self, k: &Vec2, omega: &Vec2) -> Option<FirstDerivatives>;

    /// The null-vector gauge in which the model's closed forms are stated.
    fn paper_gauge_zeta(&self, pt: &ModelPoint) -> Vec2;

    /// `zeta^T K` for the supplied null vector; scales quadratically under
    /// `zeta -> c zeta`.
    fn dispersive_projection(&self, pt: &ModelPoint, zeta: &Vec2) -> Result<DispersiveProjection>;

    /// Names of the scanned parameter slice, e.g. `["r", "k1", "k2"]`.
    fn slice_names(&self) -> [&'static str; 3];

    /// Slice coordinates of a point under this model's parameters.
    fn slice_of(&self, pt: &ModelPoint) -> [f64; 3];

    /// A copy of the model with the slice's parameter component replaced
    /// (`r` for shallow water, `beta12` for the coupled NLS). The `k`
    /// components of the slice are handled by the caller.
    fn with_slice_param(&self, value: f64) -> Result<Box<dyn TwoPhaseModel>>;

    fn normalization_factors(&self, pt: &ModelPoint) -> Result<NormalizationFactors>;

    fn paper_forms(&self, pt: &ModelPoint) -> Result<PaperForms>;

    /// Model parameters as a JSON object, for machine-readable outputs.
    fn params_json(&self) -> serde_json::Value;

    /// JSON field names of the state components in `fixed_state` objects.
    fn state_field_names(&self) -> [&'static str; 2];
}

/// Registered model names.
pub fn names() -> &'static [&'static str] {
    &["sw", "cnls"]
}

/// Build a model from its registry name and a JSON parameter object.
pub fn by_name(name: &str, params: &serde_json::Value) -> Result<Box<dyn TwoPhaseModel>> {
    match name {
        "sw" => Ok(Box::new(SwParams::from_json(params)?)),
        "cnls" => Ok(Box::new(NlsParams::from_json(params)?)),
        other => Err(WaveError::InvalidInput(format!(
            "unknown model '{other}' (registered: {})",
            names().join(", ")
        ))),
    }
}

