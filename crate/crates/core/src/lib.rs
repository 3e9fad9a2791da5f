//! Quantum first-detection statistics under continuous projective
//! measurement.
//!
//! Three equivalent descriptions are implemented and cross-checked:
//! the stroboscopic repeated-projection protocol, evolution under effective
//! non-Hermitian lattice Hamiltonians (with closed-form and spectral
//! solutions on the half line and full line), and the continuum Schrödinger
//! problem with a complex Robin boundary condition.

// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod continuum;
pub mod effective;
pub mod error;
pub mod linalg;
pub mod numerics;
pub mod params;
pub mod spectral;
pub mod stroboscopic;
pub mod verify;

pub use error::{Error, Result};
pub use params::C64;
