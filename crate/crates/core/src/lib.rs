//! Criticality detection and mKdV reduction for two-phase wave systems.
//!
//! Given a model defined by its wave-action conservation laws `A(k, omega)`
//! and `B(k, omega)`, this crate locates the double criticality
//! `det[D_k B] = 0`, `zeta^T D_k^2 B(zeta, zeta) = 0` under which a modified
//! KdV equation emerges, assembles the mKdV coefficients from
//! conservation-law derivatives, cross-validates the cubic coefficient with
//! an independent Taylor-expansion route, and integrates the resulting mKdV
//! on a periodic domain.

pub mod config;
pub mod criticality;
pub mod error;
pub mod mkdv;
pub mod models;
pub mod reduction;
pub mod tensors;
pub mod verify;

pub use error::{Result, WaveError};
