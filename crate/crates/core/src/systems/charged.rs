//! Charged particle `(q, p)` coupled to `K` field oscillators `(Q_k, P_k)`.
//! State packing `(q, Q₁..Q_K, p, P₁..P_K)`.

use super::HamiltonianSystem;
use crate::error::{check_dim, Error, Result};
use crate::phase::PhaseState;
use serde::{Deserialize, Serialize};

/// Single-variable field potential `V_k(Q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldPotential {
    Zero,
    /// `amplitude · sin(wavenumber · Q)`
    Sine { amplitude: f64, wavenumber: f64 },
    /// `amplitude · exp(−rate · Q²)`
    Gaussian { amplitude: f64, rate: f64 },
}

impl FieldPotential {
    pub fn value(&self, q: f64) -> f64 {
        match *self {
            FieldPotential::Zero => 0.0,
            FieldPotential::Sine { amplitude, wavenumber } => amplitude * (wavenumber * q).sin(),
            FieldPotential::Gaussian { amplitude, rate } => amplitude * (-rate * q * q).exp(),
        }
    }

    pub fn derivative(&self, q: f64) -> f64 {
        match *self {
            FieldPotential::Zero => 0.0,
            FieldPotential::Sine { amplitude, wavenumber } => amplitude * wavenumber * (wavenumber * q).cos(),
            FieldPotential::Gaussian { amplitude, rate } => -2.0 * rate * q * amplitude * (-rate * q * q).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargedParticleSystem {
    pub epsilon: f64,
    /// One potential per field mode; `K` is the length.
    #[serde(default = "default_potentials")]
    pub potentials: Vec<FieldPotential>,
}

fn default_potentials() -> Vec<FieldPotential> {
    vec![
        FieldPotential::Sine {
            amplitude: 0.5,
            wavenumber: 2.0,
        },
        FieldPotential::Gaussian { amplitude: 0.5, rate: 5.0 },
    ]
}

impl ChargedParticleSystem {
    /// Two modes with `V₁(Q) = ½ sin(2Q)` and `V₂(Q) = ½ exp(−5Q²)`.
    pub fn with_default_fields(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, default_potentials())
    }

    pub fn new(epsilon: f64, potentials: Vec<FieldPotential>) -> Result<Self> {
        let s = Self { epsilon, potentials };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.potentials.is_empty() {
            return Err(Error::Config("charged-particle system needs at least one field mode".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be finite and non-negative, got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn modes(&self) -> usize {
        self.potentials.len()
    }

    fn check(&self, z: &PhaseState) -> Result<()> {
        check_dim("charged-particle state", self.dim(), z.dim())
    }

    /// `p − Σ sin(kq) Q_k`.
    fn kinetic_momentum(&self, z: &[f64]) -> f64 {
        let k_modes = self.modes();
        let (q, p) = (z[0], z[k_modes + 1]);
        p - (1..=k_modes).map(|k| (k as f64 * q).sin() * z[k]).sum::<f64>()
    }

    /// `(…, Π_k, …) ↦ (…, P_k = Π_k + V_k(Q_k), …)`.
    pub fn lambda0(&self, z: &PhaseState) -> Result<PhaseState> {
        self.check(z)?;
        let k_modes = self.modes();
        let mut out = z.clone();
        for (k, v) in self.potentials.iter().enumerate() {
            out[k_modes + 2 + k] += v.value(z[1 + k]);
        }
        Ok(out)
    }

    /// `(…, P_k, …) ↦ (…, Π_k = P_k − V_k(Q_k), …)`.
    pub fn lambda0_inverse(&self, z: &PhaseState) -> Result<PhaseState> {
        self.check(z)?;
        let k_modes = self.modes();
        let mut out = z.clone();
        for (k, v) in self.potentials.iter().enumerate() {
            out[k_modes + 2 + k] -= v.value(z[1 + k]);
        }
        Ok(out)
    }

    /// Leading-order adiabatic invariant `½ Σ k ([P_k − V_k(Q_k)]² + Q_k²)`.
    pub fn mu0(&self, z: &PhaseState) -> Result<f64> {
        self.check(z)?;
        Ok(self.mu0_unchecked(z.as_slice()))
    }

    pub(crate) fn mu0_unchecked(&self, z: &[f64]) -> f64 {
        let k_modes = self.modes();
        0.5 * self
            .potentials
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let qk = z[1 + i];
                let pik = z[k_modes + 2 + i] - v.value(qk);
                (i + 1) as f64 * (pik * pik + qk * qk)
            })
            .sum::<f64>()
    }

    /// Point on the zero level set of `μ₀`: `Q_k = 0`, `P_k = V_k(0)`.
    pub fn slow_manifold_point(&self, q: f64, p: f64) -> PhaseState {
        let k_modes = self.modes();
        let mut z = PhaseState::zeros(k_modes + 1);
        z[0] = q;
        z[k_modes + 1] = p;
        for (k, v) in self.potentials.iter().enumerate() {
            z[k_modes + 2 + k] = v.value(0.0);
        }
        z
    }
}

impl HamiltonianSystem for ChargedParticleSystem {
    fn dim(&self) -> usize {
        2 * (self.modes() + 1)
    }

    fn hamiltonian_unchecked(&self, z: &[f64]) -> f64 {
        let w = self.kinetic_momentum(z);
        0.5 * self.epsilon * w * w + self.mu0_unchecked(z)
    }

    fn vector_field_into(&self, z: &[f64], out: &mut [f64]) {
        let k_modes = self.modes();
        let q = z[0];
        let w = self.kinetic_momentum(z);
        let ew = self.epsilon * w;
        out[0] = ew;
        let mut dp = 0.0;
        for (i, v) in self.potentials.iter().enumerate() {
            let k = (i + 1) as f64;
            let (qk, pk) = (z[1 + i], z[k_modes + 2 + i]);
            let (s, c) = (k * q).sin_cos();
            dp += k * c * qk;
            let pi = pk - v.value(qk);
            out[1 + i] = k * pi;
            out[k_modes + 2 + i] = -k * qk + k * pi * v.derivative(qk) + ew * s;
        }
        out[k_modes + 1] = ew * dp;
    }
}

/// Leading-order slow-manifold motion `q(t) = q₀ + ε p₀ t`, `p(t) = p₀`.
pub fn slow_manifold_reference(q0: f64, p0: f64, epsilon: f64, t: f64) -> (f64, f64) {
    (q0 + epsilon * p0 * t, p0)
}
