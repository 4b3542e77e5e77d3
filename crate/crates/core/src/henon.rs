//! Hénon-like maps `(x, y) ↦ (y + η, −x + s·∇V(y))`, Hénon layers (their fourth
//! iterates) and HénonNets. Every map here is symplectic for any parameter values
//! and has a closed-form inverse.
//!
//! The scale `s` is 1 for ordinary layers and ε for near-identity layers; at
//! `s = 0` the fourth iterate is exactly the identity.

use crate::error::{check_dim, Error, Result};
use crate::phase::PhaseState;
use crate::potential::PotentialNet;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Number of Hénon-like iterates in one layer.
pub const ITERATES_PER_LAYER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HenonLayer {
    pub potential: PotentialNet,
    pub shift: Vec<f64>,
}

impl HenonLayer {
    pub fn new(potential: PotentialNet, shift: Vec<f64>) -> Result<Self> {
        check_dim("HenonLayer shift", potential.input_dim(), shift.len())?;
        Ok(Self { potential, shift })
    }

    /// Random potential with zero shift.
    pub fn random<R: Rng + ?Sized>(half_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        Self {
            potential: PotentialNet::random(half_dim, hidden_dim, rng),
            shift: vec![0.0; half_dim],
        }
    }

    pub fn half_dim(&self) -> usize {
        self.shift.len()
    }

    /// Potential parameters plus the shift.
    pub fn param_count(&self) -> usize {
        self.potential.param_count() + self.shift.len()
    }

    pub fn write_params(&self, out: &mut Vec<f64>) {
        self.potential.write_params(out);
        out.extend_from_slice(&self.shift);
    }

    pub fn read_params(&mut self, src: &[f64]) -> usize {
        let used = self.potential.read_params(src);
        let n = self.shift.len();
        self.shift.copy_from_slice(&src[used..used + n]);
        used + n
    }

    fn check(&self, z: &PhaseState) -> Result<()> {
        check_dim("Hénon map state", 2 * self.half_dim(), z.dim())
    }

    /// One Hénon-like map `(x, y) ↦ (y + η, −x + ∇V(y))`.
    pub fn henon_step(&self, z: &PhaseState) -> Result<PhaseState> {
        self.check(z)?;
        let mut out = z.clone();
        let mut g = vec![0.0; self.half_dim()];
        self.step_in_place(1.0, out.as_mut_slice(), &mut g);
        Ok(out)
    }

    /// Inverse Hénon-like map `(x, y) ↦ (∇V(x − η) − y, x − η)`.
    pub fn henon_inverse(&self, z: &PhaseState) -> Result<PhaseState> {
        self.check(z)?;
        let mut out = z.clone();
        let n = self.half_dim();
        let (mut u, mut g) = (vec![0.0; n], vec![0.0; n]);
        self.inverse_in_place(1.0, out.as_mut_slice(), &mut u, &mut g);
        Ok(out)
    }

    /// Fourth iterate of the Hénon-like map.
    pub fn layer_forward(&self, z: &PhaseState) -> Result<PhaseState> {
        self.layer_forward_scaled(1.0, z)
    }

    /// Fourth iterate of the near-identity map `(x, y) ↦ (y + η, −x + ε∇V(y))`.
    pub fn layer_forward_near_identity(&self, epsilon: f64, z: &PhaseState) -> Result<PhaseState> {
        self.layer_forward_scaled(epsilon, z)
    }

    pub fn layer_inverse_scaled(&self, scale: f64, z: &PhaseState) -> Result<PhaseState> {
        self.check(z)?;
        let mut out = z.clone();
        let n = self.half_dim();
        let (mut u, mut g) = (vec![0.0; n], vec![0.0; n]);
        for _ in 0..ITERATES_PER_LAYER {
            self.inverse_in_place(scale, out.as_mut_slice(), &mut u, &mut g);
        }
        Ok(out)
    }

    fn layer_forward_scaled(&self, scale: f64, z: &PhaseState) -> Result<PhaseState> {
        self.check(z)?;
        let mut out = z.clone();
        let mut g = vec![0.0; self.half_dim()];
        for _ in 0..ITERATES_PER_LAYER {
            self.step_in_place(scale, out.as_mut_slice(), &mut g);
        }
        Ok(out)
    }

    /// Unchecked in-place Hénon-like step; `g` is scratch of length `n`.
    #[inline]
    pub(crate) fn step_in_place(&self, scale: f64, z: &mut [f64], g: &mut [f64]) {
        let n = self.half_dim();
        let (x, y) = z.split_at_mut(n);
        if scale != 0.0 {
            self.potential.gradient_into(y, g, None);
        } else {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for i in 0..n {
            let xi = x[i];
            x[i] = y[i] + self.shift[i];
            y[i] = -xi + scale * g[i];
        }
    }

    /// Unchecked in-place inverse step; `u`, `g` are scratch of length `n`.
    #[inline]
    pub(crate) fn inverse_in_place(&self, scale: f64, z: &mut [f64], u: &mut [f64], g: &mut [f64]) {
        let n = self.half_dim();
        let (x, y) = z.split_at_mut(n);
        for i in 0..n {
            u[i] = x[i] - self.shift[i];
        }
        if scale != 0.0 {
            self.potential.gradient_into(u, g, None);
        } else {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for i in 0..n {
            x[i] = scale * g[i] - y[i];
            y[i] = u[i];
        }
    }
}

/// A composition of Hénon layers, applied first to last.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HenonNet {
    pub layers: Vec<HenonLayer>,
}

impl HenonNet {
    pub fn new(layers: Vec<HenonLayer>) -> Result<Self> {
        if let Some(first) = layers.first() {
            let n = first.half_dim();
            for layer in &layers {
                check_dim("HenonNet layer", n, layer.half_dim())?;
            }
        }
        Ok(Self { layers })
    }

    pub fn identity() -> Self {
        Self { layers: Vec::new() }
    }

    pub fn random<R: Rng + ?Sized>(
        half_dim: usize,
        num_layers: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            layers: (0..num_layers)
                .map(|_| HenonLayer::random(half_dim, hidden_dim, rng))
                .collect(),
        }
    }

    /// Redraws every layer shift uniformly from `[−scale, scale]`.
    pub fn randomize_shifts<R: Rng + ?Sized>(&mut self, scale: f64, rng: &mut R) {
        for layer in &mut self.layers {
            for s in &mut layer.shift {
                *s = rng.gen_range(-scale..=scale);
            }
        }
    }

    /// `None` for the empty (identity) net.
    pub fn half_dim(&self) -> Option<usize> {
        self.layers.first().map(HenonLayer::half_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(HenonLayer::param_count).sum()
    }

    pub fn write_params(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            layer.write_params(out);
        }
    }

    pub fn read_params(&mut self, src: &[f64]) -> usize {
        let mut used = 0;
        for layer in &mut self.layers {
            used += layer.read_params(&src[used..]);
        }
        used
    }

    /// The net that applies `self` and then `next`.
    pub fn then(mut self, next: HenonNet) -> Result<HenonNet> {
        if let (Some(a), Some(b)) = (self.half_dim(), next.half_dim()) {
            check_dim("HenonNet::then", a, b)?;
        }
        self.layers.extend(next.layers);
        Ok(self)
    }

    pub(crate) fn check_state(&self, z: &PhaseState) -> Result<()> {
        match self.half_dim() {
            Some(n) => check_dim("HenonNet state", 2 * n, z.dim()),
            None => Ok(()),
        }
    }

    pub fn net_forward(&self, z: &PhaseState) -> Result<PhaseState> {
        self.forward_scaled(1.0, z)
    }

    pub fn net_inverse(&self, z: &PhaseState) -> Result<PhaseState> {
        self.inverse_scaled(1.0, z)
    }

    pub(crate) fn forward_scaled(&self, scale: f64, z: &PhaseState) -> Result<PhaseState> {
        self.check_state(z)?;
        let mut out = z.clone();
        let mut g = vec![0.0; z.half_dim()];
        self.forward_in_place(scale, out.as_mut_slice(), &mut g);
        Ok(out)
    }

    pub(crate) fn inverse_scaled(&self, scale: f64, z: &PhaseState) -> Result<PhaseState> {
        self.check_state(z)?;
        let mut out = z.clone();
        let n = z.half_dim();
        let (mut u, mut g) = (vec![0.0; n], vec![0.0; n]);
        self.inverse_in_place(scale, out.as_mut_slice(), &mut u, &mut g);
        Ok(out)
    }

    #[inline]
    pub(crate) fn forward_in_place(&self, scale: f64, z: &mut [f64], g: &mut [f64]) {
        for layer in &self.layers {
            for _ in 0..ITERATES_PER_LAYER {
                layer.step_in_place(scale, z, g);
            }
        }
    }

    #[inline]
    pub(crate) fn inverse_in_place(&self, scale: f64, z: &mut [f64], u: &mut [f64], g: &mut [f64]) {
        for layer in self.layers.iter().rev() {
            for _ in 0..ITERATES_PER_LAYER {
                layer.inverse_in_place(scale, z, u, g);
            }
        }
    }
}

/// A HénonNet whose potential gradients are scaled by ε at evaluation time, so
/// that the map is the identity at ε = 0 and symplectic for every ε.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NearIdentityHenonNet {
    pub net: HenonNet,
}

impl NearIdentityHenonNet {
    pub fn new(net: HenonNet) -> Self {
        Self { net }
    }

    pub fn random<R: Rng + ?Sized>(
        half_dim: usize,
        num_layers: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        Self::new(HenonNet::random(half_dim, num_layers, hidden_dim, rng))
    }

    pub fn layers(&self) -> &[HenonLayer] {
        &self.net.layers
    }

    pub fn half_dim(&self) -> Option<usize> {
        self.net.half_dim()
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }

    pub fn forward(&self, epsilon: f64, z: &PhaseState) -> Result<PhaseState> {
        check_epsilon(epsilon)?;
        self.net.forward_scaled(epsilon, z)
    }

    pub fn inverse(&self, epsilon: f64, z: &PhaseState) -> Result<PhaseState> {
        check_epsilon(epsilon)?;
        self.net.inverse_scaled(epsilon, z)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::Contract(format!("epsilon must be finite, got {epsilon}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_layer(n: usize, shift: Vec<f64>) -> HenonLayer {
        HenonLayer::new(PotentialNet::zeros(n, 2), shift).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize, bound: f64) -> PhaseState {
        PhaseState::new((0..2 * n).map(|_| rng.gen_range(-bound..bound)).collect()).unwrap()
    }

    fn random_layer(rng: &mut ChaCha8Rng, n: usize) -> HenonLayer {
        let mut layer = HenonLayer::random(n, 8, rng);
        layer.shift = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        layer
    }

    #[test]
    fn step_with_zero_potential() {
        let layer = zero_layer(1, vec![0.0]);
        let z = PhaseState::new(vec![1.0, 2.0]).unwrap();
        let out = layer.henon_step(&z).unwrap();
        assert_eq!(out.as_slice(), &[2.0, -1.0]);
        assert_eq!(layer.henon_inverse(&out).unwrap(), z);
    }

    #[test]
    fn inverse_cancels_shift() {
        let layer = zero_layer(1, vec![5.0]);
        let z = PhaseState::new(vec![5.0, 0.0]).unwrap();
        assert_eq!(layer.henon_inverse(&z).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn fourth_iterate_of_zero_potential_is_identity() {
        for shift in [vec![0.0, 0.0], vec![0.7, -3.25], vec![1e3, 2.5]] {
            let layer = zero_layer(2, shift);
            let z = PhaseState::new(vec![0.5, -1.0, 2.0, 0.125]).unwrap();
            assert_eq!(layer.layer_forward(&z).unwrap(), z);
        }
    }

    #[test]
    fn near_identity_layer_at_zero_epsilon_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=3 {
            let layer = random_layer(&mut rng, n);
            let z = random_state(&mut rng, n, 3.0);
            let out = layer.layer_forward_near_identity(0.0, &z).unwrap();
            assert!(out.max_abs_diff(&z) <= 1e-15);
            assert_eq!(
                layer.layer_forward_near_identity(1.0, &z).unwrap(),
                layer.layer_forward(&z).unwrap()
            );
        }
    }

    #[test]
    fn step_and_inverse_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..100 {
            let n = 1 + trial % 3;
            let layer = random_layer(&mut rng, n);
            let z = random_state(&mut rng, n, 10.0);
            let fwd = layer.henon_inverse(&layer.henon_step(&z).unwrap()).unwrap();
            let bwd = layer.henon_step(&layer.henon_inverse(&z).unwrap()).unwrap();
            assert!(fwd.max_abs_diff(&z) <= 1e-13);
            assert!(bwd.max_abs_diff(&z) <= 1e-13);
        }
    }

    #[test]
    fn empty_net_is_identity_and_singleton_is_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = random_state(&mut rng, 2, 1.0);
        let empty = HenonNet::identity();
        assert_eq!(empty.net_forward(&z).unwrap(), z);
        assert_eq!(empty.net_inverse(&z).unwrap(), z);

        let layer = random_layer(&mut rng, 2);
        let single = HenonNet::new(vec![layer.clone()]).unwrap();
        assert_eq!(single.net_forward(&z).unwrap(), layer.layer_forward(&z).unwrap());
    }

    #[test]
    fn net_roundtrip_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=3 {
            let mut net = HenonNet::random(n, 3, 8, &mut rng);
            for layer in &mut net.layers {
                layer.shift = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            }
            for _ in 0..100 {
                let z = random_state(&mut rng, n, 10.0);
                let back = net.net_inverse(&net.net_forward(&z).unwrap()).unwrap();
                assert!(back.max_abs_diff(&z) <= 1e-12, "n={n}: {}", back.max_abs_diff(&z));
            }
        }
    }

    #[test]
    fn composition_is_associative_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = HenonNet::random(2, 2, 4, &mut rng);
        let b = HenonNet::random(2, 3, 4, &mut rng);
        let z = random_state(&mut rng, 2, 2.0);
        let nested = b.net_forward(&a.net_forward(&z).unwrap()).unwrap();
        let flat = a.clone().then(b.clone()).unwrap().net_forward(&z).unwrap();
        assert_eq!(nested, flat);
    }

    #[test]
    fn mismatched_dimensions_are_errors() {
        let layer = zero_layer(2, vec![0.0, 0.0]);
        let z = PhaseState::new(vec![1.0, 2.0]).unwrap();
        assert!(layer.henon_step(&z).is_err());
        assert!(layer.henon_inverse(&z).is_err());
        assert!(HenonNet::new(vec![layer.clone(), zero_layer(1, vec![0.0])]).is_err());
        assert!(HenonLayer::new(PotentialNet::zeros(2, 3), vec![1.0]).is_err());
    }

    #[test]
    fn param_counts_reproduce_reported_totals() {
        let layer = |n, h| HenonLayer::new(PotentialNet::zeros(n, h), vec![0.0; n]).unwrap();
        let net = |n, layers, h| HenonNet::new((0..layers).map(|_| layer(n, h)).collect()).unwrap();
        assert_eq!(net(2, 10, 8).param_count() + net(2, 8, 6).param_count() + 1, 549);
        assert_eq!(2 * net(2, 10, 8).param_count() + 1, 681);
        assert_eq!(2 * net(3, 12, 8).param_count() + 1, 1033);
        assert_eq!(net(2, 16, 10).param_count(), 672);
    }
}
