//! Multi-frequency symplectic circle actions: clockwise rotations of selected
//! `(x_j, y_j)` pairs at integer rates, and their invariant `½ Σ k (x_j² + y_j²)`.

use crate::error::{check_dim, Error, Result};
use crate::phase::PhaseState;
use serde::{Deserialize, Serialize};

/// Coordinate pair `(x_j, y_j)` rotating at integer frequency `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mode {
    pub pair: usize,
    pub freq: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleAction {
    dim: usize,
    modes: Vec<Mode>,
    pub theta: f64,
}

impl CircleAction {
    /// Validates that `dim` is even, every pair index is in range and distinct,
    /// and every frequency is positive.
    pub fn new(dim: usize, modes: Vec<Mode>, theta: f64) -> Result<Self> {
        let action = Self { dim, modes, theta };
        action.validate()?;
        Ok(action)
    }

    /// Single unit-frequency rotation of the pair `(x_0, y_0)`.
    pub fn single(dim: usize, theta: f64) -> Result<Self> {
        Self::new(dim, vec![Mode { pair: 0, freq: 1 }], theta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim % 2 != 0 {
            return Err(Error::Config(format!("circle action dimension must be even and positive, got {}", self.dim)));
        }
        let n = self.dim / 2;
        let mut seen = vec![false; n];
        for m in &self.modes {
            if m.freq == 0 {
                return Err(Error::Config(format!("mode on pair {} has non-positive frequency", m.pair)));
            }
            if m.pair >= n {
                return Err(Error::Config(format!("mode pair {} out of range for dimension {}", m.pair, self.dim)));
            }
            if std::mem::replace(&mut seen[m.pair], true) {
                return Err(Error::Config(format!("pair {} listed twice", m.pair)));
            }
        }
        if !self.theta.is_finite() {
            return Err(Error::Config("theta must be finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, ..self.clone() }
    }

    fn check(&self, z: &PhaseState) -> Result<()> {
        check_dim("CircleAction state", self.dim, z.dim())
    }

    pub fn apply(&self, z: &PhaseState) -> Result<PhaseState> {
        self.check(z)?;
        let mut out = z.clone();
        self.rotate_in_place(self.theta, out.as_mut_slice());
        Ok(out)
    }

    pub fn apply_inverse(&self, z: &PhaseState) -> Result<PhaseState> {
        self.check(z)?;
        let mut out = z.clone();
        self.rotate_in_place(-self.theta, out.as_mut_slice());
        Ok(out)
    }

    /// `∂/∂θ` of [`apply`](Self::apply).
    pub fn theta_derivative(&self, z: &PhaseState) -> Result<PhaseState> {
        self.check(z)?;
        let mut out = PhaseState::zeros(z.half_dim());
        let n = self.dim / 2;
        for m in &self.modes {
            let k = f64::from(m.freq);
            let (s, c) = (k * self.theta).sin_cos();
            let (x, y) = (z[m.pair], z[n + m.pair]);
            out[m.pair] = k * (-s * x + c * y);
            out[n + m.pair] = k * (-c * x - s * y);
        }
        Ok(out)
    }

    pub fn invariant(&self, z: &PhaseState) -> Result<f64> {
        self.check(z)?;
        Ok(self.invariant_unchecked(z.as_slice()))
    }

    pub(crate) fn invariant_unchecked(&self, z: &[f64]) -> f64 {
        let n = self.dim / 2;
        0.5 * self
            .modes
            .iter()
            .map(|m| f64::from(m.freq) * (z[m.pair] * z[m.pair] + z[n + m.pair] * z[n + m.pair]))
            .sum::<f64>()
    }

    /// Clockwise rotation by `k·angle` of each listed pair.
    #[inline]
    pub(crate) fn rotate_in_place(&self, angle: f64, z: &mut [f64]) {
        let n = self.dim / 2;
        for m in &self.modes {
            let (s, c) = (f64::from(m.freq) * angle).sin_cos();
            let (x, y) = (z[m.pair], z[n + m.pair]);
            z[m.pair] = c * x + s * y;
            z[n + m.pair] = -s * x + c * y;
        }
    }

    /// Adds `dθ` contributions: returns `⟨adj, ∂Φ/∂θ(z_in)⟩` and overwrites `adj`
    /// (cotangent at the output) with the cotangent at the input.
    pub(crate) fn backprop(&self, z_in: &[f64], adj: &mut [f64]) -> f64 {
        let n = self.dim / 2;
        let mut dtheta = 0.0;
        for m in &self.modes {
            let k = f64::from(m.freq);
            let (s, c) = (k * self.theta).sin_cos();
            let (x, y) = (z_in[m.pair], z_in[n + m.pair]);
            let (ax, ay) = (adj[m.pair], adj[n + m.pair]);
            dtheta += ax * k * (-s * x + c * y) + ay * k * (-c * x - s * y);
            // transpose of [[c, s], [−s, c]]
            adj[m.pair] = c * ax - s * ay;
            adj[n + m.pair] = s * ax + c * ay;
        }
        dtheta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::symplectic_defect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn six_d(theta: f64) -> CircleAction {
        CircleAction::new(6, vec![Mode { pair: 1, freq: 1 }, Mode { pair: 2, freq: 2 }], theta).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> PhaseState {
        PhaseState::new((0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
    }

    #[test]
    fn clockwise_quarter_turn() {
        let a = CircleAction::single(2, PI / 2.0).unwrap();
        let out = a.apply(&PhaseState::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert!((out[0] - 0.0).abs() < 1e-15);
        assert!((out[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_turn_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = PhaseState::new((0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let out = six_d(2.0 * PI).apply(&z).unwrap();
        assert!(out.max_abs_diff(&z) <= 1e-15);
    }

    #[test]
    fn half_turn_on_multi_frequency_action() {
        let z = PhaseState::new(vec![0.3, 1.0, 2.0, -0.4, -1.5, 0.5]).unwrap();
        let out = six_d(PI).apply(&z).unwrap();
        assert_eq!((out[0], out[3]), (0.3, -0.4));
        assert!((out[1] + 1.0).abs() < 1e-15 && (out[4] - 1.5).abs() < 1e-15);
        assert!((out[2] - 2.0).abs() < 1e-15 && (out[5] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inverse_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let a = six_d(rng.gen_range(-10.0..10.0));
            let z = random_state(&mut rng, 6);
            assert!(a.apply_inverse(&a.apply(&z).unwrap()).unwrap().max_abs_diff(&z) <= 1e-14);
        }
        let a = CircleAction::single(2, PI / 2.0).unwrap();
        let z = PhaseState::new(vec![0.4, -0.9]).unwrap();
        assert!(a.apply_inverse(&a.apply(&z).unwrap()).unwrap().max_abs_diff(&z) <= 1e-14);
        assert_eq!(a.with_theta(0.0).apply_inverse(&z).unwrap(), z);
    }

    #[test]
    fn group_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (t1, t2) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let z = random_state(&mut rng, 6);
            let composed = six_d(t1).apply(&six_d(t2).apply(&z).unwrap()).unwrap();
            assert!(composed.max_abs_diff(&six_d(t1 + t2).apply(&z).unwrap()) <= 1e-13);
            let periodic = six_d(t1 + 2.0 * PI).apply(&z).unwrap();
            assert!(periodic.max_abs_diff(&six_d(t1).apply(&z).unwrap()) <= 1e-13);
        }
        let z = random_state(&mut rng, 6);
        assert_eq!(six_d(0.0).apply(&z).unwrap(), z);
    }

    #[test]
    fn theta_derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-6;
        for _ in 0..50 {
            let theta = rng.gen_range(-3.0..3.0);
            let z = random_state(&mut rng, 6);
            let d = six_d(theta).theta_derivative(&z).unwrap();
            let p = six_d(theta + h).apply(&z).unwrap();
            let m = six_d(theta - h).apply(&z).unwrap();
            for i in 0..6 {
                let fd = (p[i] - m[i]) / (2.0 * h);
                assert!((d[i] - fd).abs() / fd.abs().max(1.0) <= 1e-7);
            }
        }
        let zero = PhaseState::zeros(3);
        assert!(six_d(1.3).theta_derivative(&zero).unwrap().as_slice().iter().all(|&v| v == 0.0));
        let d = CircleAction::single(2, 0.0)
            .unwrap()
            .theta_derivative(&PhaseState::new(vec![1.0, 0.0]).unwrap())
            .unwrap();
        assert_eq!(d.as_slice(), &[0.0, -1.0]);
    }

    #[test]
    fn invariant_values_and_conservation() {
        let a = CircleAction::single(2, 0.0).unwrap();
        assert_eq!(a.invariant(&PhaseState::new(vec![1.0, 0.0]).unwrap()).unwrap(), 0.5);
        let z = PhaseState::new(vec![7.0, 1.0, 0.0, -3.0, 0.0, 1.0]).unwrap();
        assert_eq!(six_d(0.0).invariant(&z).unwrap(), 1.5);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = six_d(rng.gen_range(-10.0..10.0));
            let z = random_state(&mut rng, 6);
            let diff = a.invariant(&a.apply(&z).unwrap()).unwrap() - a.invariant(&z).unwrap();
            assert!(diff.abs() <= 1e-12);
        }
    }

    #[test]
    fn rotation_is_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let a = six_d(rng.gen_range(-5.0..5.0));
            let z = random_state(&mut rng, 6);
            assert!(symplectic_defect(|s| a.apply(s), &z, 1e-5).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn invalid_configurations() {
        assert!(CircleAction::new(4, vec![Mode { pair: 2, freq: 1 }], 0.0).is_err());
        assert!(CircleAction::new(4, vec![Mode { pair: 0, freq: 0 }], 0.0).is_err());
        assert!(CircleAction::new(3, vec![], 0.0).is_err());
        assert!(CircleAction::new(4, vec![Mode { pair: 0, freq: 1 }, Mode { pair: 0, freq: 2 }], 0.0).is_err());
        let a = CircleAction::single(4, 0.0).unwrap();
        assert!(a.apply(&PhaseState::zeros(1)).is_err());
    }
}
