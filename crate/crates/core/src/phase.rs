//! Points of the phase space ℝⁿ × ℝⁿ.

use crate::error::{check_dim, Error, Result};
use serde::{Deserialize, Serialize};

/// A phase-space point packed as `(x₁..xₙ, y₁..yₙ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseState(Vec<f64>);

impl PhaseState {
    /// Builds a state from its packed coordinates. The length must be even and nonzero.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() % 2 != 0 {
            return Err(Error::Contract(format!(
                "phase state needs an even, nonzero number of coordinates, got {}",
                coords.len()
            )));
        }
        Ok(Self(coords))
    }

    pub fn from_halves(x: &[f64], y: &[f64]) -> Result<Self> {
        check_dim("PhaseState::from_halves", x.len(), y.len())?;
        let mut v = Vec::with_capacity(2 * x.len());
        v.extend_from_slice(x);
        v.extend_from_slice(y);
        Self::new(v)
    }

    pub fn zeros(half_dim: usize) -> Self {
        Self(vec![0.0; 2 * half_dim])
    }

    /// Half dimension `n`.
    pub fn half_dim(&self) -> usize {
        self.0.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.0[..self.half_dim()]
    }

    pub fn y(&self) -> &[f64] {
        &self.0[self.half_dim()..]
    }

    pub fn split_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let n = self.half_dim();
        self.0.split_at_mut(n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Max-norm distance to another state of the same dimension.
    pub fn max_abs_diff(&self, other: &PhaseState) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for PhaseState {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for PhaseState {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}
