//! Flow-map datasets: uniformly sampled initial states pushed through RK4.

use super::{integrate, BenchmarkSystem, HamiltonianSystem};
use crate::error::{check_dim, Error, Result};
use crate::io::{fmt_f64, parse_numeric_csv, read_to_string, write_atomic};
use crate::phase::PhaseState;
use crate::training::UpdatePair;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Per-coordinate bounds of the initial-state sampling box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SamplingBox {
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            lower: vec![lo; dim],
            upper: vec![hi; dim],
        }
    }

    /// Oscillators: every coordinate in `[−1.5, 1.5]`. Charged particle:
    /// `q ∈ [−π, π]`, `p ∈ [−1, 1]`, field coordinates in `[−1, 1]`.
    pub fn default_for(system: &BenchmarkSystem) -> Self {
        match system {
            BenchmarkSystem::CoupledOscillators(_) => Self::uniform(4, -1.5, 1.5),
            BenchmarkSystem::ChargedParticle(s) => {
                let mut b = Self::uniform(s.dim(), -1.0, 1.0);
                b.lower[0] = -PI;
                b.upper[0] = PI;
                b
            }
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        check_dim("sampling box lower", dim, self.lower.len())?;
        check_dim("sampling box upper", dim, self.upper.len())?;
        for (lo, hi) in self.lower.iter().zip(&self.upper) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("invalid sampling interval [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PhaseState {
        let coords = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| if lo == hi { lo } else { rng.gen_range(lo..hi) })
            .collect();
        PhaseState::new(coords).expect("box dimension is even")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub system: BenchmarkSystem,
    pub flow_time: f64,
    pub substeps: usize,
    pub sampling_box: SamplingBox,
    pub seed: u64,
    pub count: usize,
    /// Samples whose integration failed and were redrawn.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowDataset {
    pub meta: DatasetMeta,
    pub pairs: Vec<UpdatePair>,
}

const MAX_REDRAWS: usize = 100;

/// Samples `count` initial states and integrates each for time `flow_time`.
///
/// Sample `i` draws from its own ChaCha stream, so the dataset does not depend on
/// scheduling. A sample whose integration fails is redrawn from the same stream.
pub fn generate_dataset(
    system: &BenchmarkSystem,
    flow_time: f64,
    count: usize,
    sampling_box: &SamplingBox,
    substeps: usize,
    seed: u64,
) -> Result<FlowDataset> {
    system.validate()?;
    if count == 0 {
        return Err(Error::Contract("dataset count must be at least 1".into()));
    }
    sampling_box.validate(system.dim())?;
    let results: Vec<(UpdatePair, usize)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            for failures in 0..MAX_REDRAWS {
                let z0 = sampling_box.sample(&mut rng);
                match integrate(system, &z0, flow_time, substeps) {
                    Ok(z1) => return Ok((UpdatePair::new(z0, z1)?, failures)),
                    Err(Error::NonFinite { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::NonFinite {
                context: format!("dataset sample {i} after {MAX_REDRAWS} redraws"),
                step: 0,
            })
        })
        .collect::<Result<_>>()?;
    let failures = results.iter().map(|(_, f)| f).sum();
    Ok(FlowDataset {
        meta: DatasetMeta {
            system: system.clone(),
            flow_time,
            substeps,
            sampling_box: sampling_box.clone(),
            seed,
            count,
            failures,
        },
        pairs: results.into_iter().map(|(p, _)| p).collect(),
    })
}

/// Sidecar metadata path: `data.csv` ↦ `data.meta.json`.
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// Writes `in_0..in_{2n−1},out_0..out_{2n−1}` rows plus the sidecar JSON.
pub fn write_dataset_csv(path: &Path, dataset: &FlowDataset) -> Result<()> {
    let dim = dataset.pairs.first().map_or(0, |p| p.input.dim());
    let mut header: Vec<String> = (0..dim).map(|i| format!("in_{i}")).collect();
    header.extend((0..dim).map(|i| format!("out_{i}")));
    let mut out = header.join(",");
    out.push('\n');
    for p in &dataset.pairs {
        let row: Vec<String> = p.input.as_slice().iter().chain(p.target.as_slice()).map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())?;
    write_atomic(&meta_path(path), serde_json::to_string_pretty(&dataset.meta)?.as_bytes())
}

pub fn read_dataset_csv(path: &Path) -> Result<Vec<UpdatePair>> {
    let (header, rows) = parse_numeric_csv(&read_to_string(path)?)?;
    if header.is_empty() || header.len() % 4 != 0 {
        return Err(Error::Parse(format!("dataset header has {} columns", header.len())));
    }
    let dim = header.len() / 2;
    for (i, name) in header.iter().enumerate() {
        let expect = if i < dim { format!("in_{i}") } else { format!("out_{}", i - dim) };
        if *name != expect {
            return Err(Error::Parse(format!("unexpected dataset column {name:?}, wanted {expect:?}")));
        }
    }
    rows.into_iter()
        .map(|r| UpdatePair::new(PhaseState::new(r[..dim].to_vec())?, PhaseState::new(r[dim..].to_vec())?))
        .collect()
}
