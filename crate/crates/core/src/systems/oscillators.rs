//! Fast oscillator `(q₁, p₁)` nonlinearly coupled to a slow oscillator `(q₂, p₂)`
//! through `U(q₁, q₂) = q₁ q₂ sin(2q₁ + 2q₂)`. State packing `(q₁, q₂, p₁, p₂)`.

use super::HamiltonianSystem;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupledOscillatorSystem {
    pub epsilon: f64,
}

impl CoupledOscillatorSystem {
    pub fn new(epsilon: f64) -> Result<Self> {
        let s = Self { epsilon };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon >= 0.0 && self.epsilon.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("epsilon must be finite and non-negative, got {}", self.epsilon)))
        }
    }

    pub fn coupling(q1: f64, q2: f64) -> f64 {
        q1 * q2 * (2.0 * q1 + 2.0 * q2).sin()
    }

    /// `(∂U/∂q₁, ∂U/∂q₂)`.
    pub fn coupling_gradient(q1: f64, q2: f64) -> (f64, f64) {
        let (s, c) = (2.0 * q1 + 2.0 * q2).sin_cos();
        let cross = 2.0 * q1 * q2 * c;
        (q2 * s + cross, q1 * s + cross)
    }
}

impl HamiltonianSystem for CoupledOscillatorSystem {
    fn dim(&self) -> usize {
        4
    }

    fn hamiltonian_unchecked(&self, z: &[f64]) -> f64 {
        let (q1, q2, p1, p2) = (z[0], z[1], z[2], z[3]);
        0.5 * (q1 * q1 + p1 * p1) + 0.5 * self.epsilon * (q2 * q2 + p2 * p2) + self.epsilon * Self::coupling(q1, q2)
    }

    fn vector_field_into(&self, z: &[f64], out: &mut [f64]) {
        let (q1, q2, p1, p2) = (z[0], z[1], z[2], z[3]);
        let (du1, du2) = Self::coupling_gradient(q1, q2);
        let eps = self.epsilon;
        out[0] = p1;
        out[1] = eps * p2;
        out[2] = -q1 - eps * du1;
        out[3] = -eps * q2 - eps * du2;
    }
}
