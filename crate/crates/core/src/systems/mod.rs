//! Ground-truth Hamiltonian benchmarks, a classical Runge–Kutta integrator and
//! flow-map dataset generation.

mod averaged;
mod charged;
mod dataset;
mod oscillators;

pub use averaged::{averaged_hamiltonian, bessel_j1};
pub use charged::{slow_manifold_reference, ChargedParticleSystem, FieldPotential};
pub use dataset::{generate_dataset, meta_path, read_dataset_csv, write_dataset_csv, DatasetMeta, FlowDataset, SamplingBox};
pub use oscillators::CoupledOscillatorSystem;

use crate::error::{check_dim, Error, Result};
use crate::phase::PhaseState;
use serde::{Deserialize, Serialize};

/// Default RK4 step targeted by [`substeps_for`].
pub const DEFAULT_RK4_STEP: f64 = 1e-3;

/// A canonical Hamiltonian system on ℝ²ⁿ in `(x, y)` packing.
pub trait HamiltonianSystem: Sync {
    fn dim(&self) -> usize;
    fn hamiltonian_unchecked(&self, z: &[f64]) -> f64;
    /// Writes `(∂H/∂y, −∂H/∂x)` into `out`.
    fn vector_field_into(&self, z: &[f64], out: &mut [f64]);

    fn hamiltonian(&self, z: &PhaseState) -> Result<f64> {
        check_dim("hamiltonian state", self.dim(), z.dim())?;
        Ok(self.hamiltonian_unchecked(z.as_slice()))
    }

    fn vector_field(&self, z: &PhaseState) -> Result<PhaseState> {
        check_dim("vector_field state", self.dim(), z.dim())?;
        let mut out = PhaseState::zeros(z.half_dim());
        self.vector_field_into(z.as_slice(), out.as_mut_slice());
        Ok(out)
    }
}

/// Either benchmark, selected by configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchmarkSystem {
    CoupledOscillators(CoupledOscillatorSystem),
    ChargedParticle(ChargedParticleSystem),
}

impl BenchmarkSystem {
    pub fn epsilon(&self) -> f64 {
        match self {
            BenchmarkSystem::CoupledOscillators(s) => s.epsilon,
            BenchmarkSystem::ChargedParticle(s) => s.epsilon,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            BenchmarkSystem::CoupledOscillators(_) => "coupled_oscillators",
            BenchmarkSystem::ChargedParticle(_) => "charged_particle",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BenchmarkSystem::CoupledOscillators(s) => s.validate(),
            BenchmarkSystem::ChargedParticle(s) => s.validate(),
        }
    }
}

impl HamiltonianSystem for BenchmarkSystem {
    fn dim(&self) -> usize {
        match self {
            BenchmarkSystem::CoupledOscillators(s) => s.dim(),
            BenchmarkSystem::ChargedParticle(s) => s.dim(),
        }
    }

    fn hamiltonian_unchecked(&self, z: &[f64]) -> f64 {
        match self {
            BenchmarkSystem::CoupledOscillators(s) => s.hamiltonian_unchecked(z),
            BenchmarkSystem::ChargedParticle(s) => s.hamiltonian_unchecked(z),
        }
    }

    fn vector_field_into(&self, z: &[f64], out: &mut [f64]) {
        match self {
            BenchmarkSystem::CoupledOscillators(s) => s.vector_field_into(z, out),
            BenchmarkSystem::ChargedParticle(s) => s.vector_field_into(z, out),
        }
    }
}

/// Scratch for [`rk4_step_in_place`].
#[derive(Debug, Clone)]
pub struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }
}

pub fn rk4_step_in_place<S: HamiltonianSystem + ?Sized>(system: &S, z: &mut [f64], h: f64, s: &mut Rk4Scratch) {
    let d = z.len();
    system.vector_field_into(z, &mut s.k1);
    for i in 0..d {
        s.tmp[i] = z[i] + 0.5 * h * s.k1[i];
    }
    system.vector_field_into(&s.tmp, &mut s.k2);
    for i in 0..d {
        s.tmp[i] = z[i] + 0.5 * h * s.k2[i];
    }
    system.vector_field_into(&s.tmp, &mut s.k3);
    for i in 0..d {
        s.tmp[i] = z[i] + h * s.k3[i];
    }
    system.vector_field_into(&s.tmp, &mut s.k4);
    for i in 0..d {
        z[i] += h / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
    }
}

pub fn rk4_step<S: HamiltonianSystem + ?Sized>(system: &S, z: &PhaseState, h: f64) -> Result<PhaseState> {
    check_dim("rk4_step state", system.dim(), z.dim())?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Contract(format!("RK4 step must be positive, got {h}")));
    }
    let mut out = z.clone();
    rk4_step_in_place(system, out.as_mut_slice(), h, &mut Rk4Scratch::new(z.dim()));
    if !out.is_finite() {
        return Err(Error::NonFinite {
            context: "rk4_step".into(),
            step: 1,
        });
    }
    Ok(out)
}

/// Number of RK4 steps so that the step is as close as possible to `DEFAULT_RK4_STEP`.
pub fn substeps_for(t: f64) -> usize {
    ((t / DEFAULT_RK4_STEP).round() as usize).max(1)
}

/// Integrates for time `t` with `substeps` equal RK4 steps.
pub fn integrate<S: HamiltonianSystem + ?Sized>(system: &S, z0: &PhaseState, t: f64, substeps: usize) -> Result<PhaseState> {
    check_dim("integrate state", system.dim(), z0.dim())?;
    if substeps == 0 {
        return Err(Error::Contract("integrate needs at least one substep".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Contract(format!("integration time must be finite and non-negative, got {t}")));
    }
    let mut z = z0.clone();
    if t == 0.0 {
        return Ok(z);
    }
    let h = t / substeps as f64;
    let mut scratch = Rk4Scratch::new(z0.dim());
    for k in 0..substeps {
        rk4_step_in_place(system, z.as_mut_slice(), h, &mut scratch);
        if !z.is_finite() {
            return Err(Error::NonFinite {
                context: "RK4 integration".into(),
                step: k + 1,
            });
        }
    }
    Ok(z)
}

/// States at times `0, t, 2t, …, steps·t`, each flow segment integrated with `substeps` RK4 steps.
pub fn trajectory<S: HamiltonianSystem + ?Sized>(system: &S, z0: &PhaseState, t: f64, substeps: usize, steps: usize) -> Result<Vec<PhaseState>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(z0.clone());
    for _ in 0..steps {
        let next = integrate(system, out.last().expect("non-empty"), t, substeps)?;
        out.push(next);
    }
    Ok(out)
}

/// `max_k |H(z_k) − H(z_0)|`.
pub fn energy_drift<S: HamiltonianSystem + ?Sized>(system: &S, trajectory: &[PhaseState]) -> Result<f64> {
    let Some(first) = trajectory.first() else {
        return Ok(0.0);
    };
    let h0 = system.hamiltonian(first)?;
    trajectory.iter().try_fold(0.0_f64, |acc, z| Ok(acc.max((system.hamiltonian(z)? - h0).abs())))
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::HamiltonianSystem;

    /// Canonical vector field from central differences of the Hamiltonian.
    pub fn fd_vector_field<S: HamiltonianSystem>(system: &S, z: &[f64]) -> Vec<f64> {
        let d = z.len();
        let n = d / 2;
        let h = 1e-6;
        let grad: Vec<f64> = (0..d)
            .map(|i| {
                let mut a = z.to_vec();
                let mut b = z.to_vec();
                a[i] += h;
                b[i] -= h;
                (system.hamiltonian_unchecked(&a) - system.hamiltonian_unchecked(&b)) / (2.0 * h)
            })
            .collect();
        (0..d).map(|i| if i < n { grad[n + i] } else { -grad[i - n] }).collect()
    }
}
