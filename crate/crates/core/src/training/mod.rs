//! Mean-squared-error training of structure-preserving surrogates.

mod adam;
mod grad;

pub use adam::Adam;
pub use grad::Workspace;

use crate::error::{check_dim, Error, Result};
use crate::gyroceptron::SymplecticGyroceptron;
use crate::henon::HenonNet;
use crate::phase::PhaseState;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// One observed flow-map update `z ↦ z̃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdatePair {
    pub input: PhaseState,
    pub target: PhaseState,
}

impl UpdatePair {
    pub fn new(input: PhaseState, target: PhaseState) -> Result<Self> {
        check_dim("UpdatePair target", input.dim(), target.dim())?;
        if !input.is_finite() || !target.is_finite() {
            return Err(Error::Contract("update pair has non-finite entries".into()));
        }
        Ok(Self { input, target })
    }
}

/// A trainable map with exact reverse-mode gradients of the squared error.
pub trait Surrogate: Clone + Send + Sync {
    fn dim(&self) -> usize;
    fn param_count(&self) -> usize;
    fn parameters(&self) -> Vec<f64>;
    fn set_parameters(&mut self, params: &[f64]) -> Result<()>;
    fn predict(&self, z: &PhaseState) -> Result<PhaseState>;

    /// Returns `Σᵢ (f(input)ᵢ − targetᵢ)²` and adds half its parameter gradient to `grad`.
    fn accumulate(&self, input: &[f64], target: &[f64], grad: &mut [f64], ws: &mut Workspace) -> f64;

    /// Names the first component whose output is non-finite for `input`.
    fn locate_non_finite(&self, input: &PhaseState) -> Option<String>;
}

impl Surrogate for SymplecticGyroceptron {
    fn dim(&self) -> usize {
        SymplecticGyroceptron::dim(self)
    }

    fn param_count(&self) -> usize {
        SymplecticGyroceptron::param_count(self)
    }

    fn parameters(&self) -> Vec<f64> {
        SymplecticGyroceptron::parameters(self)
    }

    fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        SymplecticGyroceptron::set_parameters(self, params)
    }

    fn predict(&self, z: &PhaseState) -> Result<PhaseState> {
        self.forward(z)
    }

    fn accumulate(&self, input: &[f64], target: &[f64], grad: &mut [f64], ws: &mut Workspace) -> f64 {
        grad::gyroceptron_sample(self, input, target, grad, ws)
    }

    fn locate_non_finite(&self, input: &PhaseState) -> Option<String> {
        let mut z = input.clone();
        for (i, layer) in self.psi.layers.iter().enumerate().rev() {
            z = layer.layer_inverse_scaled(1.0, &z).ok()?;
            if !z.is_finite() {
                return Some(format!("psi inverse, layer {i}"));
            }
        }
        z = self.action.apply(&z).ok()?;
        if !z.is_finite() {
            return Some("circle action".into());
        }
        for (i, layer) in self.psi.layers.iter().enumerate() {
            z = layer.layer_forward(&z).ok()?;
            if !z.is_finite() {
                return Some(format!("psi, layer {i}"));
            }
        }
        for (i, layer) in self.iota.layers().iter().enumerate() {
            z = layer.layer_forward_near_identity(self.epsilon, &z).ok()?;
            if !z.is_finite() {
                return Some(format!("iota, layer {i}"));
            }
        }
        None
    }
}

impl Surrogate for HenonNet {
    fn dim(&self) -> usize {
        2 * self.half_dim().unwrap_or(0)
    }

    fn param_count(&self) -> usize {
        HenonNet::param_count(self)
    }

    fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(HenonNet::param_count(self));
        self.write_params(&mut out);
        out
    }

    fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        check_dim("HenonNet parameters", HenonNet::param_count(self), params.len())?;
        self.read_params(params);
        Ok(())
    }

    fn predict(&self, z: &PhaseState) -> Result<PhaseState> {
        self.net_forward(z)
    }

    fn accumulate(&self, input: &[f64], target: &[f64], grad: &mut [f64], ws: &mut Workspace) -> f64 {
        grad::henon_net_sample(self, input, target, grad, ws)
    }

    fn locate_non_finite(&self, input: &PhaseState) -> Option<String> {
        let mut z = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            z = layer.layer_forward(&z).ok()?;
            if !z.is_finite() {
                return Some(format!("layer {i}"));
            }
        }
        None
    }
}

/// Gradient of the loss laid out like [`SymplecticGyroceptron::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGradient {
    flat: Vec<f64>,
    psi_blocks: Vec<(usize, usize, usize)>,
    iota_blocks: Vec<(usize, usize, usize)>,
}

/// Per-layer view into a [`ParameterGradient`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerGradient<'a> {
    pub hidden_weights: &'a [f64],
    pub hidden_bias: &'a [f64],
    pub output_weights: &'a [f64],
    pub shift: &'a [f64],
}

impl ParameterGradient {
    fn new(model: &SymplecticGyroceptron, flat: Vec<f64>) -> Self {
        let mut offset = 0;
        let mut blocks = |net: &HenonNet| {
            net.layers
                .iter()
                .map(|l| {
                    let b = (offset, l.potential.input_dim(), l.potential.hidden_dim());
                    offset += l.param_count();
                    b
                })
                .collect::<Vec<_>>()
        };
        let psi_blocks = blocks(&model.psi);
        let iota_blocks = blocks(&model.iota.net);
        Self {
            flat,
            psi_blocks,
            iota_blocks,
        }
    }

    fn view(&self, (off, n, h): (usize, usize, usize)) -> LayerGradient<'_> {
        let s = &self.flat[off..];
        LayerGradient {
            hidden_weights: &s[..n * h],
            hidden_bias: &s[n * h..n * h + h],
            output_weights: &s[n * h + h..n * h + 2 * h],
            shift: &s[n * h + 2 * h..n * h + 2 * h + n],
        }
    }

    pub fn psi_layer(&self, i: usize) -> LayerGradient<'_> {
        self.view(self.psi_blocks[i])
    }

    pub fn iota_layer(&self, i: usize) -> LayerGradient<'_> {
        self.view(self.iota_blocks[i])
    }

    pub fn theta(&self) -> f64 {
        *self.flat.last().expect("gradient always holds theta")
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.flat
    }
}

const CHUNK: usize = 64;

fn check_batch<S: Surrogate>(model: &S, batch: &[UpdatePair]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Contract("loss over an empty batch".into()));
    }
    for p in batch {
        check_dim("batch input", model.dim(), p.input.dim())?;
        check_dim("batch target", model.dim(), p.target.dim())?;
    }
    Ok(())
}

/// Mean over samples and coordinates of the squared prediction error.
pub fn mse_loss<S: Surrogate>(model: &S, batch: &[UpdatePair]) -> Result<f64> {
    check_batch(model, batch)?;
    let sums: Vec<f64> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|p| -> Result<f64> {
                    let out = model.predict(&p.input)?;
                    Ok(out.as_slice().iter().zip(p.target.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum())
                })
                .sum::<Result<f64>>()
        })
        .collect::<Result<_>>()?;
    Ok(sums.iter().sum::<f64>() / (batch.len() * model.dim()) as f64)
}

/// Loss and flat parameter gradient; the reduction order is fixed so results
/// are bit-identical across thread counts.
pub fn loss_gradient_flat<S: Surrogate>(model: &S, batch: &[UpdatePair]) -> Result<(f64, Vec<f64>)> {
    check_batch(model, batch)?;
    let dim = model.dim();
    let np = model.param_count();
    let partials: Vec<(f64, Vec<f64>)> = batch
        .par_chunks(CHUNK)
        .map_init(
            || Workspace::new(dim),
            |ws, chunk| {
                let mut grad = vec![0.0; np];
                let sq: f64 = chunk
                    .iter()
                    .map(|p| model.accumulate(p.input.as_slice(), p.target.as_slice(), &mut grad, ws))
                    .sum();
                (sq, grad)
            },
        )
        .collect();
    let mut total = 0.0;
    let mut grad = vec![0.0; np];
    for (sq, g) in partials {
        total += sq;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    let norm = (batch.len() * dim) as f64;
    let loss = total / norm;
    grad.iter_mut().for_each(|v| *v *= 2.0 / norm);
    if !loss.is_finite() || grad.iter().any(|v| !v.is_finite()) {
        let place = batch
            .iter()
            .find_map(|p| model.locate_non_finite(&p.input))
            .unwrap_or_else(|| "loss reduction".into());
        return Err(Error::NonFinite {
            context: format!("gradient evaluation ({place})"),
            step: 0,
        });
    }
    Ok((loss, grad))
}

/// Loss and exact gradient with respect to every trainable scalar of the gyroceptron.
pub fn loss_gradient(model: &SymplecticGyroceptron, batch: &[UpdatePair]) -> Result<(f64, ParameterGradient)> {
    let (loss, flat) = loss_gradient_flat(model, batch)?;
    Ok((loss, ParameterGradient::new(model, flat)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// When set, the rate decays geometrically to this value by the last epoch.
    pub final_learning_rate: Option<f64>,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    pub validation_fraction: f64,
    /// Invoke the checkpoint callback every this many epochs (0 disables).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            final_learning_rate: None,
            batch_size: 200,
            epochs: 1000,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            validation_fraction: 0.1,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if let Some(f) = self.final_learning_rate {
            if !(f > 0.0 && f.is_finite()) || self.learning_rate == 0.0 {
                return bad("final_learning_rate must be positive and needs a positive learning_rate");
            }
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.adam_eps <= 0.0 {
            return bad("optimizer hyperparameters out of range");
        }
        Ok(())
    }

    fn rate_at(&self, epoch: usize) -> f64 {
        match self.final_learning_rate {
            Some(end) if self.epochs > 1 => {
                let frac = epoch as f64 / (self.epochs - 1) as f64;
                self.learning_rate * (end / self.learning_rate).powf(frac)
            }
            _ => self.learning_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<usize>,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub final_theta: Option<f64>,
    pub wall_seconds: f64,
    /// Epoch at which the loss became non-finite; parameters were restored to the
    /// last finite state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diverged_at_epoch: Option<usize>,
}

/// Deterministic split: shuffle with the seed, keep the last `fraction` for validation.
pub fn split_dataset(dataset: &[UpdatePair], fraction: f64, seed: u64) -> (Vec<UpdatePair>, Vec<UpdatePair>) {
    let mut idx: Vec<usize> = (0..dataset.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((dataset.len() as f64) * fraction).floor() as usize;
    let cut = dataset.len() - n_val;
    let train = idx[..cut].iter().map(|&i| dataset[i].clone()).collect();
    let val = idx[cut..].iter().map(|&i| dataset[i].clone()).collect();
    (train, val)
}

/// Theta of a gyroceptron, for reporting; `None` for other surrogates.
pub trait ReportsTheta {
    fn theta(&self) -> Option<f64>;
}

impl ReportsTheta for SymplecticGyroceptron {
    fn theta(&self) -> Option<f64> {
        Some(self.action.theta)
    }
}

impl ReportsTheta for HenonNet {
    fn theta(&self) -> Option<f64> {
        None
    }
}

pub fn train<S: Surrogate + ReportsTheta>(model: &mut S, dataset: &[UpdatePair], config: &TrainConfig) -> Result<TrainReport> {
    train_with_callback(model, dataset, config, |_, _| Ok(()))
}

/// Minibatch Adam on the MSE loss. `on_checkpoint(epoch, model)` runs every
/// `checkpoint_every` epochs and after the final one.
pub fn train_with_callback<S, F>(model: &mut S, dataset: &[UpdatePair], config: &TrainConfig, mut on_checkpoint: F) -> Result<TrainReport>
where
    S: Surrogate + ReportsTheta,
    F: FnMut(usize, &S) -> Result<()>,
{
    config.validate()?;
    if dataset.len() < config.batch_size {
        return Err(Error::Contract(format!(
            "dataset of {} pairs is smaller than batch size {}",
            dataset.len(),
            config.batch_size
        )));
    }
    let started = Instant::now();
    let (train_set, val_set) = split_dataset(dataset, config.validation_fraction, config.seed);
    check_batch(model, &train_set)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut params = model.parameters();
    let mut last_good = params.clone();
    let mut opt = Adam::new(params.len(), config.beta1, config.beta2, config.adam_eps);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut report = TrainReport {
        epochs: Vec::new(),
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        final_theta: model.theta(),
        wall_seconds: 0.0,
        diverged_at_epoch: None,
    };
    let mut batch = Vec::with_capacity(config.batch_size);

    'epochs: for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = config.rate_at(epoch);
        let mut weighted = 0.0;
        for idx in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(idx.iter().map(|&i| train_set[i].clone()));
            match loss_gradient_flat(model, &batch) {
                Ok((loss, grad)) => {
                    weighted += loss * batch.len() as f64;
                    last_good.copy_from_slice(&params);
                    opt.step(&mut params, &grad, lr);
                    model.set_parameters(&params)?;
                }
                Err(Error::NonFinite { .. }) => {
                    model.set_parameters(&last_good)?;
                    report.diverged_at_epoch = Some(epoch);
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
        }
        let train_loss = weighted / train_set.len() as f64;
        let val_loss = if val_set.is_empty() { f64::NAN } else { mse_loss(model, &val_set)? };
        if !train_loss.is_finite() || (!val_set.is_empty() && !val_loss.is_finite()) {
            model.set_parameters(&last_good)?;
            report.diverged_at_epoch = Some(epoch);
            break;
        }
        report.epochs.push(epoch + 1);
        report.train_loss.push(train_loss);
        report.val_loss.push(val_loss);
        let last = epoch + 1 == config.epochs;
        if last || (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) {
            on_checkpoint(epoch + 1, model)?;
        }
    }
    report.final_theta = model.theta();
    report.wall_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}
