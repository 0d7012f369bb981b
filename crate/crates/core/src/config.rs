//! Model/fixture configuration files.
//!
//! A config is a JSON object `{"model": "sw"|"cnls", "params": {...},
//! "fixed_state": {...}}` with optional `slice`, `window` and `trace`
//! sections used by the criticality subcommands. Field names follow the
//! parameter types exactly (`g`, `rho1`, `r`, `sigma1`, `sigma2`, `R1`,
//! `R2`; `alpha1`, `alpha2`, `beta11`, `beta12`, `beta22`); the state fields
//! are `eta0`/`chi0` (shallow water) and `psi1_sq`/`psi2_sq` (coupled NLS).

use crate::criticality::Window;
use crate::error::{Result, WaveError};
use crate::models::{by_name, TwoPhaseModel, Vec2};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
pub struct PinSpec {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SliceSpec {
    pub pin: PinSpec,
    /// Map from slice-parameter name to initial guess for the two free
    /// parameters.
    pub guess: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct TraceSpec {
    pub steps: usize,
    pub max_step: f64,
    #[serde(default = "default_direction")]
    pub direction: f64,
}

fn default_direction() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
pub struct ModelSpec {
    pub model: String,
    pub params: serde_json::Value,
    #[serde(default)]
    pub fixed_state: Option<serde_json::Map<String, serde_json::Value>>,
    #[serde(default)]
    pub slice: Option<SliceSpec>,
    /// Map from slice-parameter name to `[lo, hi]`.
    #[serde(default)]
    pub window: Option<serde_json::Map<String, serde_json::Value>>,
    #[serde(default)]
    pub trace: Option<TraceSpec>,
}

impl ModelSpec {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            WaveError::InvalidInput(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            WaveError::InvalidInput(format!(
                "config {}: line {} column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }

    pub fn build_model(&self) -> Result<Box<dyn TwoPhaseModel>> {
        by_name(&self.model, &self.params)
    }

    /// The fixed basic state (thicknesses or intensities), when present.
    pub fn fixed_state(&self, model: &dyn TwoPhaseModel) -> Result<Option<Vec2>> {
        let Some(map) = &self.fixed_state else {
            return Ok(None);
        };
        let names = model.state_field_names();
        let get = |name: &str| -> Result<f64> {
            map.get(name).and_then(|v| v.as_f64()).ok_or_else(|| {
                WaveError::InvalidInput(format!(
                    "fixed_state: missing or non-numeric field '{name}'"
                ))
            })
        };
        Ok(Some(Vec2::new(get(names[0])?, get(names[1])?)))
    }

    pub fn require_fixed_state(&self, model: &dyn TwoPhaseModel) -> Result<Vec2> {
        self.fixed_state(model)?.ok_or_else(|| {
            WaveError::InvalidInput("this operation needs a fixed_state section".into())
        })
    }

    /// Resolve the slice section to (pin index, pin value, guess for the two
    /// free parameters in slice order).
    pub fn pin_and_guess(&self, model: &dyn TwoPhaseModel) -> Result<(usize, f64, [f64; 2])> {
        let slice = self
            .slice
            .as_ref()
            .ok_or_else(|| WaveError::InvalidInput("config has no slice section".into()))?;
        resolve_slice(model, &slice.pin, &slice.guess)
    }

    pub fn window(&self, model: &dyn TwoPhaseModel) -> Result<Option<Window>> {
        let Some(map) = &self.window else {
            return Ok(None);
        };
        let names = model.slice_names();
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for (i, name) in names.iter().enumerate() {
            let pair = map
                .get(*name)
                .and_then(|v| v.as_array())
                .filter(|a| a.len() == 2)
                .ok_or_else(|| {
                    WaveError::InvalidInput(format!("window: field '{name}' must be [lo, hi]"))
                })?;
            lo[i] = pair[0].as_f64().ok_or_else(|| {
                WaveError::InvalidInput(format!("window: '{name}' lower bound not numeric"))
            })?;
            hi[i] = pair[1].as_f64().ok_or_else(|| {
                WaveError::InvalidInput(format!("window: '{name}' upper bound not numeric"))
            })?;
            if lo[i] > hi[i] {
                return Err(WaveError::InvalidInput(format!(
                    "window: '{name}' has lo > hi"
                )));
            }
        }
        Ok(Some(Window { lo, hi }))
    }
}

pub fn resolve_slice(
    model: &dyn TwoPhaseModel,
    pin: &PinSpec,
    guess: &serde_json::Map<String, serde_json::Value>,
) -> Result<(usize, f64, [f64; 2])> {
    let names = model.slice_names();
    let pin_index = names
        .iter()
        .position(|n| *n == pin.name)
        .ok_or_else(|| {
            WaveError::InvalidInput(format!(
                "pin '{}' is not a slice parameter of model '{}' ({})",
                pin.name,
                model.name(),
                names.join(", ")
            ))
        })?;
    let free: Vec<usize> = (0..3).filter(|&i| i != pin_index).collect();
    let mut out = [0.0; 2];
    for (slot, &i) in free.iter().enumerate() {
        out[slot] = guess
            .get(names[i])
            .and_then(|v| v.as_f64())
            .ok_or_else(|| {
                WaveError::InvalidInput(format!("guess: missing free parameter '{}'", names[i]))
            })?;
    }
    Ok((pin_index, pin.value, out))
}
