//! Adiabatic-invariant drift scans: `μ = 𝔍₀ ∘ ψ⁻¹` along gyroceptron rollouts
//! for a sweep of ε, and the threshold iteration count `N(ε)`.

use crate::circle::CircleAction;
use crate::error::{Error, Result};
use crate::gyroceptron::{Architecture, SymplecticGyroceptron};
use crate::io::{fmt_f64, write_atomic};
use crate::phase::PhaseState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// `μ(z_k) − μ(z₀)` for `k = 0..=iterations`. When the rollout produces a
/// non-finite state the series stops before it and `diverged` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSeries {
    pub values: Vec<f64>,
    pub diverged: bool,
}

impl DriftSeries {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Steps the map in place, evaluating `μ` after every step; `visit` returns
/// `false` to stop. Returns `true` if a non-finite state was hit.
fn walk_mu<F: FnMut(usize, f64) -> bool>(g: &SymplecticGyroceptron, z0: &PhaseState, max_steps: usize, mut visit: F) -> bool {
    let n = g.half_dim();
    let (mut u, mut gbuf) = (vec![0.0; n], vec![0.0; n]);
    let mut work = vec![0.0; 2 * n];
    let mut z = z0.as_slice().to_vec();
    let mu0 = g.mu_in_place(&z, &mut work, &mut u, &mut gbuf);
    if !visit(0, mu0) {
        return false;
    }
    for k in 1..=max_steps {
        g.forward_in_place(&mut z, &mut u, &mut gbuf);
        let mu = g.mu_in_place(&z, &mut work, &mut u, &mut gbuf);
        if !mu.is_finite() || z.iter().any(|v| !v.is_finite()) {
            return true;
        }
        if !visit(k, mu) {
            return false;
        }
    }
    false
}

pub fn drift_series(g: &SymplecticGyroceptron, z0: &PhaseState, iterations: usize) -> Result<DriftSeries> {
    if iterations == 0 {
        return Err(Error::Contract("drift_series needs at least one iteration".into()));
    }
    g.adiabatic_invariant(z0)?;
    let mut values = Vec::with_capacity(iterations + 1);
    let mut mu0 = 0.0;
    let diverged = walk_mu(g, z0, iterations, |k, mu| {
        if k == 0 {
            mu0 = mu;
        }
        values.push(mu - mu0);
        true
    });
    Ok(DriftSeries { values, diverged })
}

/// Burn-in length `K(ε) = ⌊10 + ε^{−1/4}⌋`.
pub fn burn_in(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Contract(format!("burn-in needs a positive epsilon, got {epsilon}")));
    }
    Ok((10.0 + epsilon.powf(-0.25)).floor() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NEpsilon {
    Found(usize),
    /// No iteration up to the cap crossed the threshold. `degenerate` marks a
    /// zero burn-in deviation, where the threshold itself is zero.
    Exceeded { degenerate: bool },
}

/// Smallest `N > K(ε)` with `|μ_N − μ₀| > ρ · max_{k ≤ K(ε)} |μ_k − μ₀|`.
///
/// A non-finite state counts as crossing the threshold at that step.
pub fn n_epsilon(g: &SymplecticGyroceptron, z0: &PhaseState, rho: f64, max_iterations: usize) -> Result<NEpsilon> {
    if !(rho > 1.0 && rho.is_finite()) {
        return Err(Error::Contract(format!("rho must exceed 1, got {rho}")));
    }
    g.adiabatic_invariant(z0)?;
    if g.epsilon == 0.0 {
        return Ok(NEpsilon::Exceeded { degenerate: true });
    }
    let k_burn = burn_in(g.epsilon)?;
    if max_iterations < k_burn {
        return Err(Error::Contract(format!("max_iterations {max_iterations} is below the burn-in {k_burn}")));
    }
    let (mut mu0, mut burn_max, mut found) = (0.0, 0.0f64, None);
    let (mut degenerate, mut last) = (false, 0);
    let diverged = walk_mu(g, z0, max_iterations, |k, mu| {
        last = k;
        if k == 0 {
            mu0 = mu;
        }
        let dev = (mu - mu0).abs();
        if k <= k_burn {
            burn_max = burn_max.max(dev);
            if k == k_burn && burn_max == 0.0 {
                degenerate = true;
                return false;
            }
            return true;
        }
        if dev > rho * burn_max {
            found = Some(k);
            return false;
        }
        true
    });
    if degenerate {
        return Ok(NEpsilon::Exceeded { degenerate: true });
    }
    if diverged {
        return Ok(NEpsilon::Found(last + 1));
    }
    Ok(match found {
        Some(n) => NEpsilon::Found(n),
        None => NEpsilon::Exceeded { degenerate: false },
    })
}

fn default_epsilons() -> Vec<f64> {
    (1..=8).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdiabaticScanConfig {
    /// Positive and strictly decreasing.
    pub epsilons: Vec<f64>,
    pub iterations: usize,
    pub rho: f64,
    /// Iteration cap for the `N(ε)` search.
    pub max_iterations: usize,
    /// Phase-space dimension of the random model.
    pub dim: usize,
    pub architecture: Architecture,
    /// Seeds the model weights and the rotation angle.
    pub seed: u64,
    /// Each coordinate of the common initial state.
    pub initial_value: f64,
    /// Also write SVG charts next to the CSVs.
    pub plot: bool,
}

impl Default for AdiabaticScanConfig {
    fn default() -> Self {
        Self {
            epsilons: default_epsilons(),
            iterations: 10_000,
            rho: 1.1,
            max_iterations: 2_000_000,
            dim: 2,
            architecture: Architecture::new(3, 8, 3, 8),
            seed: 0,
            initial_value: 0.5,
            plot: false,
        }
    }
}

impl AdiabaticScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::Config("epsilons must not be empty".into()));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Config("epsilons must be positive and finite".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("epsilons must be sorted in descending order".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(Error::Config("rho must be greater than 1".into()));
        }
        if self.dim == 0 || self.dim % 2 != 0 {
            return Err(Error::Config(format!("dim must be even and positive, got {}", self.dim)));
        }
        let smallest = *self.epsilons.last().expect("non-empty");
        if self.max_iterations < burn_in(smallest)? {
            return Err(Error::Config("max_iterations is below the burn-in of the smallest epsilon".into()));
        }
        Ok(())
    }

    /// The shared random model (ε set per scan row) and initial state.
    pub fn model(&self) -> Result<(SymplecticGyroceptron, PhaseState)> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let action = CircleAction::single(self.dim, theta)?;
        let g = SymplecticGyroceptron::random(action, self.epsilons[0], self.architecture, &mut rng)?;
        let z0 = PhaseState::new(vec![self.initial_value; self.dim])?;
        Ok((g, z0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub epsilon: f64,
    pub burn_in: usize,
    pub n: NEpsilon,
    pub max_drift: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub series: Vec<DriftSeries>,
}

pub fn run_adiabatic_scan(config: &AdiabaticScanConfig) -> Result<ScanResult> {
    let (g, z0) = config.model()?;
    let results: Vec<(ScanRow, DriftSeries)> = config
        .epsilons
        .par_iter()
        .map(|&eps| {
            let mut model = g.clone();
            model.epsilon = eps;
            let series = drift_series(&model, &z0, config.iterations)?;
            let n = n_epsilon(&model, &z0, config.rho, config.max_iterations)?;
            let row = ScanRow {
                epsilon: eps,
                burn_in: burn_in(eps)?,
                n,
                max_drift: series.max_abs(),
                diverged: series.diverged,
            };
            Ok((row, series))
        })
        .collect::<Result<_>>()?;
    let (rows, series) = results.into_iter().unzip();
    Ok(ScanResult { rows, series })
}

/// `drift_eps_1e-3.csv` style name for a scan row.
pub fn drift_file_name(epsilon: f64) -> String {
    format!("drift_eps_{epsilon:e}.csv")
}

/// Writes `adiabatic_scan.csv` and one `drift_eps_<ε>.csv` per row; returns the paths.
pub fn write_scan(out_dir: &Path, config: &AdiabaticScanConfig, result: &ScanResult) -> Result<Vec<PathBuf>> {
    let mut table = String::from("epsilon,N,exceeded_flag,max_drift\n");
    for row in &result.rows {
        let (n, flag) = match row.n {
            NEpsilon::Found(n) => (n, 0),
            NEpsilon::Exceeded { .. } => (config.max_iterations, 1),
        };
        table.push_str(&format!("{},{n},{flag},{}\n", fmt_f64(row.epsilon), fmt_f64(row.max_drift)));
    }
    let mut written = vec![out_dir.join("adiabatic_scan.csv")];
    write_atomic(&written[0], table.as_bytes())?;
    for (row, series) in result.rows.iter().zip(&result.series) {
        let mut csv = String::from("step,mu_minus_mu0\n");
        for (k, v) in series.values.iter().enumerate() {
            csv.push_str(&format!("{k},{}\n", fmt_f64(*v)));
        }
        let path = out_dir.join(drift_file_name(row.epsilon));
        write_atomic(&path, csv.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
