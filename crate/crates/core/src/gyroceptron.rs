//! Symplectic gyroceptron `P_ε = I_ε ∘ ψ ∘ Φ_θ ∘ ψ⁻¹`.
//!
//! `ψ` is a HénonNet, `I_ε` a near-identity HénonNet and `Φ_θ` a circle action.
//! The quantity `μ = 𝔍₀ ∘ ψ⁻¹` is exactly conserved at ε = 0 and adiabatically
//! conserved for small ε.

use crate::circle::CircleAction;
use crate::error::{check_dim, Error, Result};
use crate::henon::{HenonNet, NearIdentityHenonNet};
use crate::phase::PhaseState;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticGyroceptron {
    pub psi: HenonNet,
    pub iota: NearIdentityHenonNet,
    pub action: CircleAction,
    pub epsilon: f64,
}

/// Layer counts and hidden widths for a randomly initialised gyroceptron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub psi_layers: usize,
    pub psi_hidden: usize,
    pub iota_layers: usize,
    pub iota_hidden: usize,
    /// Layer shifts are drawn uniformly from `[−shift_scale, shift_scale]`; zero by default.
    #[serde(default)]
    pub shift_scale: f64,
}

impl Architecture {
    pub const fn new(psi_layers: usize, psi_hidden: usize, iota_layers: usize, iota_hidden: usize) -> Self {
        Self {
            psi_layers,
            psi_hidden,
            iota_layers,
            iota_hidden,
            shift_scale: 0.0,
        }
    }

    pub fn with_shift_scale(self, shift_scale: f64) -> Self {
        Self { shift_scale, ..self }
    }
}

/// States visited by [`SymplecticGyroceptron::rollout`]; `diverged_at` is the
/// first step whose state was non-finite, in which case the rollout stops there.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub states: Vec<PhaseState>,
    pub diverged_at: Option<usize>,
}

impl SymplecticGyroceptron {
    pub fn new(
        psi: HenonNet,
        iota: NearIdentityHenonNet,
        action: CircleAction,
        epsilon: f64,
    ) -> Result<Self> {
        let g = Self {
            psi,
            iota,
            action,
            epsilon,
        };
        g.validate()?;
        Ok(g)
    }

    /// Random `ψ` and `I_ε` with the given shapes.
    pub fn random<R: Rng + ?Sized>(
        action: CircleAction,
        epsilon: f64,
        arch: Architecture,
        rng: &mut R,
    ) -> Result<Self> {
        if !(arch.shift_scale.is_finite() && arch.shift_scale >= 0.0) {
            return Err(Error::Config(format!("shift_scale must be finite and non-negative, got {}", arch.shift_scale)));
        }
        let n = action.dim() / 2;
        let mut psi = HenonNet::random(n, arch.psi_layers, arch.psi_hidden, rng);
        let mut iota = NearIdentityHenonNet::random(n, arch.iota_layers, arch.iota_hidden, rng);
        if arch.shift_scale > 0.0 {
            psi.randomize_shifts(arch.shift_scale, rng);
            iota.net.randomize_shifts(arch.shift_scale, rng);
        }
        Self::new(psi, iota, action, epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        self.action.validate()?;
        let dim = self.action.dim();
        if let Some(n) = self.psi.half_dim() {
            check_dim("gyroceptron psi", dim, 2 * n)?;
        }
        if let Some(n) = self.iota.half_dim() {
            check_dim("gyroceptron iota", dim, 2 * n)?;
        }
        // re-run per-layer shape checks on deserialized nets
        HenonNet::new(self.psi.layers.clone())?;
        HenonNet::new(self.iota.net.layers.clone())?;
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be finite and non-negative, got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.action.dim()
    }

    pub fn half_dim(&self) -> usize {
        self.dim() / 2
    }

    /// Trainable scalars: all ψ and I_ε parameters plus θ.
    pub fn param_count(&self) -> usize {
        self.psi.param_count() + self.iota.param_count() + 1
    }

    /// Flat parameter vector ordered ψ layers, I_ε layers, θ.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.psi.write_params(&mut out);
        self.iota.net.write_params(&mut out);
        out.push(self.action.theta);
        out
    }

    pub fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        check_dim("gyroceptron parameters", self.param_count(), p.len())?;
        let used = self.psi.read_params(p);
        let used = used + self.iota.net.read_params(&p[used..]);
        self.action.theta = p[used];
        Ok(())
    }

    fn check(&self, z: &PhaseState) -> Result<()> {
        check_dim("gyroceptron state", self.dim(), z.dim())
    }

    pub fn forward(&self, z: &PhaseState) -> Result<PhaseState> {
        self.check(z)?;
        let mut out = z.clone();
        let n = self.half_dim();
        let (mut u, mut g) = (vec![0.0; n], vec![0.0; n]);
        self.forward_in_place(out.as_mut_slice(), &mut u, &mut g);
        Ok(out)
    }

    /// `ψ ∘ Φ_θ⁻¹ ∘ ψ⁻¹ ∘ I_ε⁻¹`.
    pub fn inverse(&self, z: &PhaseState) -> Result<PhaseState> {
        self.check(z)?;
        let mut w = z.clone();
        let n = self.half_dim();
        let (mut u, mut g) = (vec![0.0; n], vec![0.0; n]);
        let s = w.as_mut_slice();
        self.iota.net.inverse_in_place(self.epsilon, s, &mut u, &mut g);
        self.psi.inverse_in_place(1.0, s, &mut u, &mut g);
        self.action.rotate_in_place(-self.action.theta, s);
        self.psi.forward_in_place(1.0, s, &mut g);
        Ok(w)
    }

    #[inline]
    pub(crate) fn forward_in_place(&self, z: &mut [f64], u: &mut [f64], g: &mut [f64]) {
        self.psi.inverse_in_place(1.0, z, u, g);
        self.action.rotate_in_place(self.action.theta, z);
        self.psi.forward_in_place(1.0, z, g);
        self.iota.net.forward_in_place(self.epsilon, z, g);
    }

    /// `μ = 𝔍₀ ∘ ψ⁻¹`.
    pub fn adiabatic_invariant(&self, z: &PhaseState) -> Result<f64> {
        self.check(z)?;
        let w = self.psi.net_inverse(z)?;
        Ok(self.action.invariant_unchecked(w.as_slice()))
    }

    /// `[z0, P(z0), P²(z0), …]` with `steps + 1` entries unless a non-finite state
    /// appears, in which case the states up to (excluding) it are returned.
    pub fn rollout(&self, z0: &PhaseState, steps: usize) -> Result<Rollout> {
        self.check(z0)?;
        let n = self.half_dim();
        let (mut u, mut g) = (vec![0.0; n], vec![0.0; n]);
        let mut states = Vec::with_capacity(steps + 1);
        states.push(z0.clone());
        let mut z = z0.clone();
        for k in 1..=steps {
            self.forward_in_place(z.as_mut_slice(), &mut u, &mut g);
            if !z.is_finite() {
                return Ok(Rollout {
                    states,
                    diverged_at: Some(k),
                });
            }
            states.push(z.clone());
        }
        Ok(Rollout {
            states,
            diverged_at: None,
        })
    }

    /// Iterates the map without storing states, calling `visit(k, z_k)` for
    /// `k = 0..=steps`. Returns the index of the first non-finite state, if any.
    pub fn iterate<F: FnMut(usize, &[f64])>(&self, z0: &PhaseState, steps: usize, mut visit: F) -> Result<Option<usize>> {
        self.check(z0)?;
        let n = self.half_dim();
        let (mut u, mut g) = (vec![0.0; n], vec![0.0; n]);
        let mut z = z0.clone().into_vec();
        visit(0, &z);
        for k in 1..=steps {
            self.forward_in_place(&mut z, &mut u, &mut g);
            if z.iter().any(|v| !v.is_finite()) {
                return Ok(Some(k));
            }
            visit(k, &z);
        }
        Ok(None)
    }

    /// Adiabatic invariant evaluated on a raw packed state, reusing scratch.
    pub(crate) fn mu_in_place(&self, z: &[f64], work: &mut [f64], u: &mut [f64], g: &mut [f64]) -> f64 {
        work.copy_from_slice(z);
        self.psi.inverse_in_place(1.0, work, u, g);
        self.action.invariant_unchecked(work)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Checkpoint::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        ck.try_into()
    }
}

/// On-disk model checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub dim: usize,
    pub epsilon: f64,
    pub theta_action: CircleAction,
    pub psi: HenonNet,
    pub iota: HenonNet,
}

impl From<&SymplecticGyroceptron> for Checkpoint {
    fn from(g: &SymplecticGyroceptron) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            dim: g.dim(),
            epsilon: g.epsilon,
            theta_action: g.action.clone(),
            psi: g.psi.clone(),
            iota: g.iota.net.clone(),
        }
    }
}

impl TryFrom<Checkpoint> for SymplecticGyroceptron {
    type Error = Error;

    fn try_from(ck: Checkpoint) -> Result<Self> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!("unsupported checkpoint version {}", ck.version)));
        }
        check_dim("checkpoint dim", ck.dim, ck.theta_action.dim())?;
        SymplecticGyroceptron::new(ck.psi, NearIdentityHenonNet::new(ck.iota), ck.theta_action, ck.epsilon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::Mode;
    use crate::symplectic::symplectic_defect;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const ARCH: Architecture = Architecture::new(3, 8, 3, 8);

    fn action(dim: usize, theta: f64) -> CircleAction {
        if dim == 6 {
            CircleAction::new(6, vec![Mode { pair: 1, freq: 1 }, Mode { pair: 2, freq: 2 }], theta).unwrap()
        } else {
            CircleAction::single(dim, theta).unwrap()
        }
    }

    fn random_g(rng: &mut ChaCha8Rng, dim: usize, eps: f64) -> SymplecticGyroceptron {
        let mut g = SymplecticGyroceptron::random(action(dim, rng.gen_range(0.0..2.0 * PI)), eps, ARCH, rng).unwrap();
        for layer in g.psi.layers.iter_mut().chain(g.iota.net.layers.iter_mut()) {
            layer.shift.iter_mut().for_each(|s| *s = rng.gen_range(-0.5..0.5));
        }
        g
    }

    fn box_state(rng: &mut ChaCha8Rng, dim: usize, b: f64) -> PhaseState {
        PhaseState::new((0..dim).map(|_| rng.gen_range(-b..b)).collect()).unwrap()
    }

    #[test]
    fn trivial_conjugator_reduces_to_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = action(4, 0.7);
        let iota = NearIdentityHenonNet::random(2, 2, 4, &mut rng);
        let g = SymplecticGyroceptron::new(HenonNet::identity(), iota, a.clone(), 0.0).unwrap();
        let z = box_state(&mut rng, 4, 1.0);
        assert!(g.forward(&z).unwrap().max_abs_diff(&a.apply(&z).unwrap()) <= 1e-15);
        assert!(g.inverse(&z).unwrap().max_abs_diff(&a.apply_inverse(&z).unwrap()) <= 1e-15);
        let still = SymplecticGyroceptron { action: a.with_theta(0.0), ..g };
        assert!(still.forward(&z).unwrap().max_abs_diff(&z) <= 1e-15);
    }

    #[test]
    fn adiabatic_invariant_of_unit_state() {
        let g = SymplecticGyroceptron::new(HenonNet::identity(), NearIdentityHenonNet::default(), action(2, 0.3), 0.0)
            .unwrap();
        assert_eq!(g.adiabatic_invariant(&PhaseState::new(vec![1.0, 0.0]).unwrap()).unwrap(), 0.5);
    }

    #[test]
    fn exact_conservation_at_zero_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for dim in [2, 4, 6] {
            let g = random_g(&mut rng, dim, 0.0);
            let z = box_state(&mut rng, dim, 1.0);
            let mu0 = g.adiabatic_invariant(&z).unwrap();
            let mu1 = g.adiabatic_invariant(&g.forward(&z).unwrap()).unwrap();
            assert!((mu1 - mu0).abs() <= 1e-10);
        }
    }

    #[test]
    fn forward_is_symplectic_and_invertible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 4, 6] {
            let g = random_g(&mut rng, dim, 0.01);
            for _ in 0..20 {
                let z = box_state(&mut rng, dim, 1.0);
                let d = symplectic_defect(|s| g.forward(s), &z, 1e-5).unwrap();
                assert!(d <= 1e-5, "dim {dim}: {d}");
                let back = g.inverse(&g.forward(&z).unwrap()).unwrap();
                assert!(back.max_abs_diff(&z) <= 1e-11);
            }
        }
    }

    #[test]
    fn rollout_quarter_turns() {
        let g = SymplecticGyroceptron::new(HenonNet::identity(), NearIdentityHenonNet::default(), action(2, PI / 2.0), 0.0)
            .unwrap();
        let z0 = PhaseState::new(vec![1.0, 0.0]).unwrap();
        let r = g.rollout(&z0, 4).unwrap();
        assert_eq!(r.states.len(), 5);
        assert!(r.states[4].max_abs_diff(&z0) <= 1e-14);
        assert_eq!(g.rollout(&z0, 0).unwrap().states, vec![z0]);
    }

    #[test]
    fn rollout_reports_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut g = random_g(&mut rng, 2, 1.0);
        g.iota.net.layers[0].shift[0] = f64::NAN;
        let r = g.rollout(&PhaseState::new(vec![0.1, 0.2]).unwrap(), 10).unwrap();
        assert_eq!(r.diverged_at, Some(1));
        assert_eq!(r.states.len(), 1);
    }

    #[test]
    fn iterates_at_zero_epsilon_follow_conjugated_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_g(&mut rng, 4, 0.0);
        let z = box_state(&mut rng, 4, 1.0);
        let m = 7;
        let r = g.rollout(&z, m).unwrap();
        let direct = g
            .psi
            .net_forward(&g.action.with_theta(m as f64 * g.action.theta).apply(&g.psi.net_inverse(&z).unwrap()).unwrap())
            .unwrap();
        assert!(r.states[m].max_abs_diff(&direct) <= 1e-9);
    }

    #[test]
    fn parameter_roundtrip_and_checkpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = random_g(&mut rng, 4, 0.01);
        let mut h = g.clone();
        let p = g.parameters();
        assert_eq!(p.len(), g.param_count());
        h.set_parameters(&p).unwrap();
        assert_eq!(g, h);

        let text = g.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["version", "dim", "epsilon", "theta_action", "psi", "iota"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["psi"]["layers"][0]["potential"]["hidden_weights"].is_array());
        assert_eq!(v["theta_action"]["modes"][0]["freq"], 1);
        let back = SymplecticGyroceptron::from_json(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn mismatched_components_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let psi = HenonNet::random(1, 2, 3, &mut rng);
        let iota = NearIdentityHenonNet::random(2, 2, 3, &mut rng);
        assert!(SymplecticGyroceptron::new(psi, iota, action(4, 0.0), 0.1).is_err());
        let g = random_g(&mut rng, 4, 0.1);
        assert!(g.forward(&PhaseState::zeros(1)).is_err());
        assert!(SymplecticGyroceptron { epsilon: -1.0, ..g }.validate().is_err());
    }
}
