//! Spectrum of the quantum Rabi model `H = ω a†a + Δ σz + g σx (a + a†)`.
//!
//! Regular eigenvalues are zeros of the parity G-functions; exceptional ones
//! sit on the displaced-oscillator baselines `E = nω − g²/ω` and are split
//! into Juddean (algebraic, doubly degenerate) and non-Juddean
//! (transcendental, one parity only). A truncated Fock-space diagonalization
//! serves as an independent reference for all of it.

pub mod conjecture;
pub mod error;
pub mod exceptional;
pub mod gfunction;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod report;
pub mod spectrum;

pub use error::{RabiError, Result};
pub use model::{energy_from_x, scaled_x, validate, ModelParams, Parity, ScaledEnergy};
