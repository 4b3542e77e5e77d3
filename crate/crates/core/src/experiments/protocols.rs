//! Config-driven experiment protocols behind the CLI subcommands. Each protocol
//! writes its artifacts into an output directory and finishes with `manifest.json`.

use super::config::config_hash;
use super::svg::{line_chart, Series};
use crate::circle::{CircleAction, Mode};
use crate::error::{Error, Result};
use crate::gyroceptron::{Architecture, SymplecticGyroceptron};
use crate::henon::HenonNet;
use crate::io::{fmt_f64, read_to_string, trajectory_csv, write_atomic};
use crate::phase::PhaseState;
use crate::symplectic::{symplectic_defect, DEFAULT_FD_STEP};
use crate::systems::{
    HamiltonianSystem,
    averaged_hamiltonian, generate_dataset, meta_path, read_dataset_csv, slow_manifold_reference, substeps_for, trajectory,
    write_dataset_csv, BenchmarkSystem, DatasetMeta, SamplingBox,
};
use crate::training::{train_with_callback, TrainConfig, TrainReport, UpdatePair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Run record written as `manifest.json` by every protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub versions: BTreeMap<String, String>,
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, serde_json::to_string_pretty(value)?.as_bytes())
}

pub fn write_manifest<C: Serialize>(
    out_dir: &Path,
    command: &str,
    config: &C,
    timings: BTreeMap<String, f64>,
    outputs: &[PathBuf],
) -> Result<RunManifest> {
    let versions = BTreeMap::from([
        ("gyroceptron".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("checkpoint_format".to_string(), crate::gyroceptron::CHECKPOINT_VERSION.to_string()),
    ]);
    let manifest = RunManifest {
        command: command.to_string(),
        config_hash: config_hash(config)?,
        config: serde_json::to_value(config)?,
        versions,
        timings,
        outputs: outputs
            .iter()
            .map(|p| p.strip_prefix(out_dir).unwrap_or(p).display().to_string())
            .collect(),
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub system: BenchmarkSystem,
    pub flow_time: f64,
    pub count: usize,
    /// Defaults to the per-system box.
    #[serde(default)]
    pub sampling_box: Option<SamplingBox>,
    /// Defaults to a step of about 1e-3.
    #[serde(default)]
    pub substeps: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl DataConfig {
    pub fn generate(&self) -> Result<crate::systems::FlowDataset> {
        let sampling_box = self.sampling_box.clone().unwrap_or_else(|| SamplingBox::default_for(&self.system));
        let substeps = self.substeps.unwrap_or_else(|| substeps_for(self.flow_time));
        generate_dataset(&self.system, self.flow_time, self.count, &sampling_box, substeps, self.seed)
    }
}

pub fn run_generate_data(config: &DataConfig, out_dir: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let dataset = config.generate()?;
    let path = out_dir.join("data.csv");
    write_dataset_csv(&path, &dataset)?;
    let timings = BTreeMap::from([("generate_seconds".to_string(), started.elapsed().as_secs_f64())]);
    write_manifest(out_dir, "generate-data", config, timings, &[path.clone(), meta_path(&path)])
}

/// Training data: generated inline, or read from a dataset CSV whose sidecar
/// metadata (if present) supplies the system and flow time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Generate(DataConfig),
    File(PathBuf),
}

impl DataSource {
    fn load(&self, base: &Path) -> Result<(Vec<UpdatePair>, Option<DatasetMeta>)> {
        match self {
            DataSource::Generate(cfg) => {
                let ds = cfg.generate()?;
                Ok((ds.pairs, Some(ds.meta)))
            }
            DataSource::File(path) => {
                let path = resolve(base, path);
                let pairs = read_dataset_csv(&path)?;
                let meta_file = meta_path(&path);
                let meta: Option<DatasetMeta> = if meta_file.exists() {
                    Some(serde_json::from_str(&read_to_string(&meta_file)?)?)
                } else {
                    None
                };
                Ok((pairs, meta))
            }
        }
    }
}

/// Rotation modes of the limiting circle action for a benchmark: the first
/// oscillator for the 4-D system, field mode `k` at frequency `k` otherwise.
pub fn default_modes(system: &BenchmarkSystem) -> Vec<Mode> {
    match system {
        BenchmarkSystem::CoupledOscillators(_) => vec![Mode { pair: 0, freq: 1 }],
        BenchmarkSystem::ChargedParticle(s) => (1..=s.modes()).map(|k| Mode { pair: k, freq: k as u32 }).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub epsilon: f64,
    pub architecture: Architecture,
    /// Defaults to the benchmark's limiting rotation.
    #[serde(default)]
    pub modes: Option<Vec<Mode>>,
    /// Defaults to the dataset's flow time.
    #[serde(default)]
    pub theta_init: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRunConfig {
    pub data: DataSource,
    pub model: ModelConfig,
    #[serde(default)]
    pub training: TrainConfig,
    /// Seeds the model initialisation.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub plot: bool,
}

fn loss_chart(report: &TrainReport) -> String {
    let pts = |v: &[f64]| report.epochs.iter().zip(v).map(|(&e, &l)| (e as f64, l)).collect();
    let series = [
        Series { label: "train", points: pts(&report.train_loss) },
        Series { label: "validation", points: pts(&report.val_loss) },
    ];
    line_chart("Training loss", "epoch", "MSE", &series, true)
}

/// Builds the initial model described by `config` for the given data.
pub fn initial_model(config: &TrainRunConfig, pairs: &[UpdatePair], meta: Option<&DatasetMeta>) -> Result<SymplecticGyroceptron> {
    let dim = pairs.first().map(|p| p.input.dim()).ok_or_else(|| Error::Contract("empty dataset".into()))?;
    let modes = match (&config.model.modes, meta) {
        (Some(m), _) => m.clone(),
        (None, Some(meta)) => default_modes(&meta.system),
        (None, None) => return Err(Error::Config("model.modes is required when the dataset has no metadata".into())),
    };
    let theta = match (config.model.theta_init, meta) {
        (Some(t), _) => t,
        (None, Some(meta)) => meta.flow_time,
        (None, None) => return Err(Error::Config("model.theta_init is required when the dataset has no metadata".into())),
    };
    let action = CircleAction::new(dim, modes, theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    SymplecticGyroceptron::random(action, config.model.epsilon, config.model.architecture, &mut rng)
}

pub fn run_train(config: &TrainRunConfig, base: &Path, out_dir: &Path) -> Result<(SymplecticGyroceptron, TrainReport, RunManifest)> {
    let t0 = Instant::now();
    let (pairs, meta) = config.data.load(base)?;
    let data_seconds = t0.elapsed().as_secs_f64();
    let mut model = initial_model(config, &pairs, meta.as_ref())?;
    let mut outputs = Vec::new();
    let ck_dir = out_dir.join("checkpoints");
    let report = train_with_callback(&mut model, &pairs, &config.training, |epoch, m| {
        if config.training.checkpoint_every > 0 {
            let path = ck_dir.join(format!("epoch_{epoch:06}.json"));
            write_atomic(&path, m.to_json()?.as_bytes())?;
            outputs.push(path);
        }
        Ok(())
    })?;
    let model_path = out_dir.join("model.json");
    write_atomic(&model_path, model.to_json()?.as_bytes())?;
    let report_path = out_dir.join("train_report.json");
    write_json(&report_path, &report)?;
    outputs.splice(0..0, [model_path, report_path]);
    if config.plot {
        let path = out_dir.join("loss.svg");
        write_atomic(&path, loss_chart(&report).as_bytes())?;
        outputs.push(path);
    }
    let timings = BTreeMap::from([
        ("data_seconds".to_string(), data_seconds),
        ("train_seconds".to_string(), report.wall_seconds),
        ("total_seconds".to_string(), t0.elapsed().as_secs_f64()),
    ]);
    let manifest = write_manifest(out_dir, "train", config, timings, &outputs)?;
    Ok((model, report, manifest))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub data: DataSource,
    pub layers: usize,
    pub hidden: usize,
    #[serde(default)]
    pub shift_scale: f64,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub seed: u64,
}

/// Fits a plain HénonNet surrogate to the same kind of data as `train`.
pub fn run_baseline(config: &BaselineConfig, base: &Path, out_dir: &Path) -> Result<(HenonNet, TrainReport, RunManifest)> {
    let t0 = Instant::now();
    let (pairs, _) = config.data.load(base)?;
    let dim = pairs.first().map(|p| p.input.dim()).ok_or_else(|| Error::Contract("empty dataset".into()))?;
    if !(config.shift_scale >= 0.0 && config.shift_scale.is_finite()) {
        return Err(Error::Config("shift_scale must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = HenonNet::random(dim / 2, config.layers, config.hidden, &mut rng);
    if config.shift_scale > 0.0 {
        net.randomize_shifts(config.shift_scale, &mut rng);
    }
    let report = train_with_callback(&mut net, &pairs, &config.training, |_, _| Ok(()))?;
    let model_path = out_dir.join("baseline_model.json");
    write_json(&model_path, &net)?;
    let report_path = out_dir.join("train_report.json");
    write_json(&report_path, &report)?;
    let timings = BTreeMap::from([
        ("train_seconds".to_string(), report.wall_seconds),
        ("total_seconds".to_string(), t0.elapsed().as_secs_f64()),
    ]);
    let manifest = write_manifest(out_dir, "baseline-henonnet", config, timings, &[model_path, report_path])?;
    Ok((net, report, manifest))
}

/// RK4 ground truth to compare a rollout against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    pub system: BenchmarkSystem,
    pub flow_time: f64,
    #[serde(default)]
    pub substeps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutConfig {
    pub model: PathBuf,
    pub initial_conditions: Vec<Vec<f64>>,
    pub steps: usize,
    #[serde(default)]
    pub reference: Option<ReferenceConfig>,
    #[serde(default)]
    pub plot: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub min: f64,
    pub max: f64,
    pub width: f64,
}

impl Band {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let (min, max) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Self { min, max, width: max - min }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub initial_state: Vec<f64>,
    pub steps_completed: usize,
    pub diverged_at: Option<usize>,
    /// Band of the learned invariant `𝔍₀ ∘ ψ⁻¹` along the rollout.
    pub learned_invariant: Band,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_state_error: Option<f64>,
    /// Oscillators: band of `H̄` (first-oscillator radius frozen at its initial
    /// value) along the prediction and the reference.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub averaged_hamiltonian: Option<ComparedBands>,
    /// Charged particle: band of `μ₀` evaluated on the prediction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu0_on_prediction: Option<Band>,
    /// Charged particle started on `μ₀ = 0`: max `|q − (q₀ + ε p₀ t)|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slow_manifold_q_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparedBands {
    pub predicted: Band,
    pub reference: Band,
    /// `predicted.width / reference.width`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutSummary {
    pub steps: usize,
    pub trajectories: Vec<TrajectorySummary>,
    pub surrogate_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_seconds: Option<f64>,
    /// `reference_seconds / surrogate_seconds`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speedup: Option<f64>,
}

/// Slow-manifold points are recognised by `μ₀` below this value.
const SLOW_MANIFOLD_TOL: f64 = 1e-12;

fn oscillator_hbar(states: &[PhaseState], radius: f64) -> Band {
    Band::of(states.iter().map(|z| averaged_hamiltonian(z[1], z[3], radius)))
}

/// Rolls the model out from every initial condition; with a reference system
/// the same initial conditions are integrated by RK4 and compared.
pub fn rollout_compare(
    model: &SymplecticGyroceptron,
    initial_conditions: &[PhaseState],
    steps: usize,
    reference: Option<&ReferenceConfig>,
) -> Result<(RolloutSummary, Vec<Vec<PhaseState>>, Vec<Vec<PhaseState>>)> {
    if initial_conditions.is_empty() {
        return Err(Error::Config("at least one initial condition is required".into()));
    }
    let t0 = Instant::now();
    let rollouts = initial_conditions
        .iter()
        .map(|z0| model.rollout(z0, steps))
        .collect::<Result<Vec<_>>>()?;
    let surrogate_seconds = t0.elapsed().as_secs_f64();

    let (references, reference_seconds) = match reference {
        Some(r) => {
            if r.system.dim() != model.dim() {
                return Err(Error::Dimension {
                    context: "rollout reference system",
                    expected: model.dim(),
                    got: r.system.dim(),
                });
            }
            let substeps = r.substeps.unwrap_or_else(|| substeps_for(r.flow_time));
            let t1 = Instant::now();
            let refs = initial_conditions
                .iter()
                .map(|z0| trajectory(&r.system, z0, r.flow_time, substeps, steps))
                .collect::<Result<Vec<_>>>()?;
            (refs, Some(t1.elapsed().as_secs_f64()))
        }
        None => (Vec::new(), None),
    };

    let mut trajectories = Vec::new();
    for (i, (z0, roll)) in initial_conditions.iter().zip(&rollouts).enumerate() {
        let learned = Band::of(roll.states.iter().map(|z| model.adiabatic_invariant(z)).collect::<Result<Vec<_>>>()?);
        let mut summary = TrajectorySummary {
            initial_state: z0.as_slice().to_vec(),
            steps_completed: roll.states.len() - 1,
            diverged_at: roll.diverged_at,
            learned_invariant: learned,
            max_state_error: None,
            averaged_hamiltonian: None,
            mu0_on_prediction: None,
            slow_manifold_q_error: None,
        };
        if let (Some(r), Some(truth)) = (reference, references.get(i)) {
            summary.max_state_error = Some(
                roll.states
                    .iter()
                    .zip(truth)
                    .map(|(a, b)| a.max_abs_diff(b))
                    .fold(0.0, f64::max),
            );
            match &r.system {
                BenchmarkSystem::CoupledOscillators(_) => {
                    let radius = z0[0].hypot(z0[2]);
                    let predicted = oscillator_hbar(&roll.states, radius);
                    let reference = oscillator_hbar(truth, radius);
                    summary.averaged_hamiltonian = Some(ComparedBands {
                        predicted,
                        reference,
                        ratio: predicted.width / reference.width,
                    });
                }
                BenchmarkSystem::ChargedParticle(s) => {
                    summary.mu0_on_prediction = Some(Band::of(roll.states.iter().map(|z| s.mu0(z)).collect::<Result<Vec<_>>>()?));
                    if s.mu0(z0)? <= SLOW_MANIFOLD_TOL {
                        let k = s.modes();
                        let (q0, p0) = (z0[0], z0[k + 1]);
                        let err = roll
                            .states
                            .iter()
                            .enumerate()
                            .map(|(step, z)| (z[0] - slow_manifold_reference(q0, p0, s.epsilon, step as f64 * r.flow_time).0).abs())
                            .fold(0.0, f64::max);
                        summary.slow_manifold_q_error = Some(err);
                    }
                }
            }
        }
        trajectories.push(summary);
    }
    let speedup = reference_seconds.map(|r| r / surrogate_seconds.max(f64::MIN_POSITIVE));
    let summary = RolloutSummary {
        steps,
        trajectories,
        surrogate_seconds,
        reference_seconds,
        speedup,
    };
    Ok((summary, rollouts.into_iter().map(|r| r.states).collect(), references))
}

fn indexed(name: &str, i: usize) -> String {
    if i == 0 {
        format!("{name}.csv")
    } else {
        format!("{name}_{i}.csv")
    }
}

fn phase_chart(title: &str, pred: &[Vec<PhaseState>], truth: &[Vec<PhaseState>], ix: usize, iy: usize) -> String {
    let mut series = Vec::new();
    let labels: Vec<String> = (0..pred.len()).flat_map(|i| [format!("predicted {i}"), format!("reference {i}")]).collect();
    for (i, states) in pred.iter().enumerate() {
        series.push(Series {
            label: &labels[2 * i],
            points: states.iter().map(|z| (z[ix], z[iy])).collect(),
        });
        if let Some(t) = truth.get(i) {
            series.push(Series {
                label: &labels[2 * i + 1],
                points: t.iter().map(|z| (z[ix], z[iy])).collect(),
            });
        }
    }
    line_chart(title, &format!("z{ix}"), &format!("z{iy}"), &series, false)
}

pub fn run_rollout(config: &RolloutConfig, base: &Path, out_dir: &Path) -> Result<(RolloutSummary, RunManifest)> {
    let t0 = Instant::now();
    let model = SymplecticGyroceptron::from_json(&read_to_string(&resolve(base, &config.model))?)?;
    let ics = config
        .initial_conditions
        .iter()
        .map(|v| PhaseState::new(v.clone()))
        .collect::<Result<Vec<_>>>()?;
    let (summary, predicted, references) = rollout_compare(&model, &ics, config.steps, config.reference.as_ref())?;
    let mut outputs = Vec::new();
    for (i, states) in predicted.iter().enumerate() {
        let path = out_dir.join(indexed("trajectory", i));
        write_atomic(&path, trajectory_csv(states).as_bytes())?;
        outputs.push(path);
    }
    for (i, states) in references.iter().enumerate() {
        let path = out_dir.join(indexed("reference", i));
        write_atomic(&path, trajectory_csv(states).as_bytes())?;
        outputs.push(path);
    }
    let summary_path = out_dir.join("rollout_summary.json");
    write_json(&summary_path, &summary)?;
    outputs.push(summary_path);
    if config.plot && model.dim() >= 4 {
        let n = model.half_dim();
        // slow pair: second oscillator, or the particle
        let (ix, iy) = match config.reference.as_ref().map(|r| &r.system) {
            Some(BenchmarkSystem::ChargedParticle(_)) => (0, n),
            _ => (1, n + 1),
        };
        let path = out_dir.join("trajectories.svg");
        write_atomic(&path, phase_chart("Slow coordinates", &predicted, &references, ix, iy).as_bytes())?;
        outputs.push(path);
    }
    let mut timings = BTreeMap::from([
        ("surrogate_seconds".to_string(), summary.surrogate_seconds),
        ("total_seconds".to_string(), t0.elapsed().as_secs_f64()),
    ]);
    if let Some(r) = summary.reference_seconds {
        timings.insert("reference_seconds".to_string(), r);
    }
    let manifest = write_manifest(out_dir, "rollout", config, timings, &outputs)?;
    Ok((summary, manifest))
}

fn default_samples() -> usize {
    100
}
fn default_step() -> f64 {
    DEFAULT_FD_STEP
}
fn default_tolerance() -> f64 {
    1e-5
}
fn default_half_width() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSymplecticConfig {
    pub model: PathBuf,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// States are drawn uniformly from `[−half_width, half_width]^{2n}`.
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticReport {
    pub samples: usize,
    pub max_defect: f64,
    pub max_roundtrip_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Finite-difference symplecticity defect and forward/inverse roundtrip error
/// of `model` at random states.
pub fn check_model(model: &SymplecticGyroceptron, config: &CheckSymplecticConfig) -> Result<SymplecticReport> {
    if config.samples == 0 || !(config.half_width > 0.0 && config.half_width.is_finite()) {
        return Err(Error::Config("samples and half_width must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut max_defect, mut max_roundtrip) = (0.0f64, 0.0f64);
    for _ in 0..config.samples {
        let z = PhaseState::new((0..model.dim()).map(|_| rng.gen_range(-config.half_width..config.half_width)).collect())?;
        max_defect = max_defect.max(symplectic_defect(|s| model.forward(s), &z, config.step)?);
        max_roundtrip = max_roundtrip.max(model.inverse(&model.forward(&z)?)?.max_abs_diff(&z));
    }
    Ok(SymplecticReport {
        samples: config.samples,
        max_defect,
        max_roundtrip_error: max_roundtrip,
        tolerance: config.tolerance,
        passed: max_defect <= config.tolerance,
    })
}

/// Writes `symplectic_check.json`; a defect above tolerance is returned as a
/// contract error after the report is written.
pub fn run_check_symplectic(config: &CheckSymplecticConfig, base: &Path, out_dir: &Path) -> Result<(SymplecticReport, RunManifest)> {
    let t0 = Instant::now();
    let model = SymplecticGyroceptron::from_json(&read_to_string(&resolve(base, &config.model))?)?;
    let report = check_model(&model, config)?;
    let path = out_dir.join("symplectic_check.json");
    write_json(&path, &report)?;
    let timings = BTreeMap::from([("total_seconds".to_string(), t0.elapsed().as_secs_f64())]);
    let manifest = write_manifest(out_dir, "check-symplectic", config, timings, &[path])?;
    if !report.passed {
        return Err(Error::Contract(format!(
            "symplectic defect {} exceeds tolerance {}",
            fmt_f64(report.max_defect),
            config.tolerance
        )));
    }
    Ok((report, manifest))
}

pub fn run_adiabatic_scan_protocol(config: &super::AdiabaticScanConfig, out_dir: &Path) -> Result<(super::ScanResult, RunManifest)> {
    let t0 = Instant::now();
    let result = super::run_adiabatic_scan(config)?;
    let scan_seconds = t0.elapsed().as_secs_f64();
    let mut outputs = super::write_scan(out_dir, config, &result)?;
    let rows_path = out_dir.join("adiabatic_scan.json");
    write_json(&rows_path, &result.rows)?;
    outputs.push(rows_path);
    if config.plot {
        let labels: Vec<String> = result.rows.iter().map(|r| format!("eps={:e}", r.epsilon)).collect();
        let series: Vec<Series> = result
            .series
            .iter()
            .zip(&labels)
            .map(|(s, l)| Series {
                label: l,
                points: s.values.iter().enumerate().map(|(k, v)| (k as f64, v.abs())).collect(),
            })
            .collect();
        let path = out_dir.join("drift.svg");
        write_atomic(&path, line_chart("Adiabatic invariant drift", "iteration", "|mu - mu0|", &series, true).as_bytes())?;
        outputs.push(path);
        let n_points = result
            .rows
            .iter()
            .map(|r| {
                let n = match r.n {
                    super::NEpsilon::Found(n) => n,
                    super::NEpsilon::Exceeded { .. } => config.max_iterations,
                };
                (r.epsilon.log10(), n as f64)
            })
            .collect();
        let path = out_dir.join("n_epsilon.svg");
        let chart = line_chart("Threshold iteration", "log10 epsilon", "N", &[Series { label: "N", points: n_points }], true);
        write_atomic(&path, chart.as_bytes())?;
        outputs.push(path);
    }
    let timings = BTreeMap::from([
        ("scan_seconds".to_string(), scan_seconds),
        ("total_seconds".to_string(), t0.elapsed().as_secs_f64()),
    ]);
    let manifest = write_manifest(out_dir, "adiabatic-scan", config, timings, &outputs)?;
    Ok((result, manifest))
}
