//! Hamiltonian convention, parameter normalization and the scaled spectral
//! coordinate.
//!
//! The model is `H = ω a†a + Δ σz + g σx (a + a†)`; the qubit splitting is
//! `2Δ`. Parity `Π = σz (−1)^{a†a}` splits it into two tridiagonal chains
//! `H_± = ω a†a + g (a + a†) ± Δ (−1)^{a†a}`. Every downstream formula works
//! in `ω = 1` units: `g/ω`, `Δ/ω` and the scaled coordinate
//! `x = E/ω + (g/ω)²`, in which baselines (displaced-oscillator levels) sit at
//! the non-negative integers.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{RabiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub g: f64,
    pub delta: f64,
}

impl ModelParams {
    pub fn new(omega: f64, g: f64, delta: f64) -> Self {
        Self { omega, g, delta }
    }

    /// Unit-frequency parameters.
    pub fn unit(g: f64, delta: f64) -> Self {
        Self::new(1.0, g, delta)
    }

    /// Coupling in ω = 1 units.
    pub fn g_reduced(&self) -> f64 {
        self.g / self.omega
    }

    /// Δ in ω = 1 units.
    pub fn delta_reduced(&self) -> f64 {
        self.delta / self.omega
    }

    /// Energy of baseline `n`: `nω − g²/ω`.
    pub fn baseline_energy(&self, n: i64) -> f64 {
        energy_from_x(ScaledEnergy(n as f64), self)
    }
}

/// Parameters after sign normalization, with the flips that were applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub params: ModelParams,
    pub g_flipped: bool,
    pub delta_flipped: bool,
}

impl Normalized {
    /// Maps a parity label of the normalized problem back to the caller's
    /// convention. `Δ → −Δ` exchanges the two sectors.
    pub fn report_parity(&self, parity: Parity) -> Parity {
        if self.delta_flipped {
            parity.flipped()
        } else {
            parity
        }
    }
}

pub fn validate(params: &ModelParams) -> Result<Normalized> {
    let ModelParams { omega, g, delta } = *params;
    if !omega.is_finite() || omega <= 0.0 {
        return Err(RabiError::InvalidParameter { field: "omega", value: omega });
    }
    if !g.is_finite() {
        return Err(RabiError::InvalidParameter { field: "g", value: g });
    }
    if !delta.is_finite() {
        return Err(RabiError::InvalidParameter { field: "delta", value: delta });
    }
    Ok(Normalized {
        params: ModelParams::new(omega, g.abs(), delta.abs()),
        g_flipped: g.is_sign_negative() && g != 0.0,
        delta_flipped: delta.is_sign_negative() && delta != 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Plus, Parity::Minus];

    /// `+1` for `Plus`, `−1` for `Minus`.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Parity {
        match self {
            Parity::Plus => Parity::Minus,
            Parity::Minus => Parity::Plus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Plus => "plus",
            Parity::Minus => "minus",
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Parity {
    type Err = RabiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "+" | "p" => Ok(Parity::Plus),
            "minus" | "-" | "m" => Ok(Parity::Minus),
            other => Err(RabiError::InvalidInput(format!("unknown parity '{other}'"))),
        }
    }
}

/// Dimensionless spectral coordinate `x = E/ω + (g/ω)²`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScaledEnergy(pub f64);

impl ScaledEnergy {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Distance to the nearest pole of G, i.e. to the nearest integer `m ≥ 0`,
    /// together with that integer.
    pub fn pole_distance(self) -> (f64, i64) {
        let m = self.0.round().max(0.0);
        ((self.0 - m).abs(), m as i64)
    }
}

pub fn scaled_x(energy: f64, params: &ModelParams) -> ScaledEnergy {
    let gr = params.g_reduced();
    ScaledEnergy(energy / params.omega + gr * gr)
}

pub fn energy_from_x(x: ScaledEnergy, params: &ModelParams) -> f64 {
    params.omega * x.0 - params.g * params.g / params.omega
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validate_examples() {
        let p = ModelParams::unit(0.5, 0.3);
        let v = validate(&p).unwrap();
        assert_eq!(v.params, p);
        assert!(!v.g_flipped && !v.delta_flipped);

        let v = validate(&ModelParams::unit(-0.5, 0.3)).unwrap();
        assert_eq!(v.params, ModelParams::unit(0.5, 0.3));
        assert!(v.g_flipped);

        assert_eq!(
            validate(&ModelParams::new(0.0, 1.0, 1.0)),
            Err(RabiError::InvalidParameter { field: "omega", value: 0.0 })
        );
        assert!(validate(&ModelParams::unit(f64::NAN, 1.0)).is_err());
        assert!(validate(&ModelParams::unit(1.0, f64::INFINITY)).is_err());
    }

    #[test]
    fn delta_flip_swaps_reported_parity() {
        let v = validate(&ModelParams::unit(0.5, -0.3)).unwrap();
        assert!(v.delta_flipped);
        assert_eq!(v.report_parity(Parity::Plus), Parity::Minus);
    }

    #[test]
    fn scaled_coordinate_examples() {
        let p = ModelParams::unit(0.5, 0.0);
        assert_eq!(scaled_x(-0.25, &p).0, 0.0);
        assert_eq!(scaled_x(0.75, &p).0, 1.0);
        let p2 = ModelParams::new(2.0, 1.0, 0.0);
        assert!((scaled_x(0.3, &p2).0 - 0.4).abs() < 1e-15);

        assert_eq!(energy_from_x(ScaledEnergy(0.0), &ModelParams::unit(1.0, 0.0)), -1.0);
        assert_eq!(energy_from_x(ScaledEnergy(3.0), &ModelParams::unit(0.0, 0.0)), 3.0);
        assert!((energy_from_x(ScaledEnergy(0.4), &p2) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn baseline_grid_maps_to_integers() {
        for &(omega, g) in &[(1.0, 0.7), (2.0, 1.3), (0.5, 0.2)] {
            let p = ModelParams::new(omega, g, 0.4);
            for n in 0..=20 {
                let x = scaled_x(p.baseline_energy(n), &p).0;
                assert!((x - n as f64).abs() <= 8.0 * f64::EPSILON * (1.0 + n as f64), "{x} vs {n}");
            }
        }
    }

    #[test]
    fn pole_distance_ignores_negative_integers() {
        assert_eq!(ScaledEnergy(-0.9).pole_distance(), (0.9, 0));
        let (d, m) = ScaledEnergy(2.75).pole_distance();
        assert_eq!(m, 3);
        assert!((d - 0.25).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn energy_round_trip(e in -50.0f64..50.0, omega in 0.1f64..5.0, g in -3.0f64..3.0) {
            let p = ModelParams::new(omega, g, 0.3);
            let back = energy_from_x(scaled_x(e, &p), &p);
            let scale = e.abs().max(g * g / omega).max(1e-300);
            prop_assert!((back - e).abs() <= 8.0 * f64::EPSILON * scale);
        }

        #[test]
        fn validate_is_idempotent(omega in 0.1f64..5.0, g in -3.0f64..3.0, d in -3.0f64..3.0) {
            let once = validate(&ModelParams::new(omega, g, d)).unwrap();
            let twice = validate(&once.params).unwrap();
            prop_assert_eq!(once.params, twice.params);
        }
    }
}
