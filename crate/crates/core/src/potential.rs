//! Scalar single-hidden-layer potentials `V(y) = cᵀ tanh(W y + b)` and their
//! closed-form first and second derivatives.

use crate::error::{check_dim, Error, Result};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Scalar feed-forward network on ℝⁿ with one tanh hidden layer and no output bias.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialNet {
    input_dim: usize,
    hidden_dim: usize,
    /// Row-major `hidden_dim × input_dim`.
    hidden_weights: Vec<f64>,
    hidden_bias: Vec<f64>,
    output_weights: Vec<f64>,
}

/// Closed-form Jacobians of `∇V(y)` with respect to each parameter block.
///
/// Every matrix is row-major with `input_dim` rows (one per gradient component).
/// Columns follow the parameter's own flat order: `hidden_weights` columns are
/// indexed `j * input_dim + k` for entry `W[j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientJacobians {
    pub hessian: Vec<f64>,
    pub wrt_hidden_weights: Vec<f64>,
    pub wrt_hidden_bias: Vec<f64>,
    pub wrt_output_weights: Vec<f64>,
}

#[inline]
fn tanh_d2(t: f64) -> f64 {
    // d²/da² tanh(a) expressed through t = tanh(a)
    -2.0 * t * (1.0 - t * t)
}

impl PotentialNet {
    /// All-zero potential (`V ≡ 0`).
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            hidden_weights: vec![0.0; input_dim * hidden_dim],
            hidden_bias: vec![0.0; hidden_dim],
            output_weights: vec![0.0; hidden_dim],
        }
    }

    /// Uniform initialisation: hidden weights and biases in `[-1/√n, 1/√n]`,
    /// output weights in `[-1/√h, 1/√h]`.
    pub fn random<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let a = 1.0 / (input_dim as f64).sqrt();
        let c = 1.0 / (hidden_dim as f64).sqrt();
        let hidden_weights = (0..input_dim * hidden_dim)
            .map(|_| rng.gen_range(-a..=a))
            .collect();
        let hidden_bias = (0..hidden_dim).map(|_| rng.gen_range(-a..=a)).collect();
        let output_weights = (0..hidden_dim).map(|_| rng.gen_range(-c..=c)).collect();
        Self {
            input_dim,
            hidden_dim,
            hidden_weights,
            hidden_bias,
            output_weights,
        }
    }

    pub fn from_parts(
        hidden_weights: Vec<Vec<f64>>,
        hidden_bias: Vec<f64>,
        output_weights: Vec<f64>,
    ) -> Result<Self> {
        let hidden_dim = hidden_weights.len();
        if hidden_dim == 0 {
            return Err(Error::Config("potential needs at least one hidden unit".into()));
        }
        let input_dim = hidden_weights[0].len();
        if input_dim == 0 {
            return Err(Error::Config("potential input dimension must be positive".into()));
        }
        for row in &hidden_weights {
            check_dim("PotentialNet hidden_weights row", input_dim, row.len())?;
        }
        check_dim("PotentialNet hidden_bias", hidden_dim, hidden_bias.len())?;
        check_dim("PotentialNet output_weights", hidden_dim, output_weights.len())?;
        Ok(Self {
            input_dim,
            hidden_dim,
            hidden_weights: hidden_weights.into_iter().flatten().collect(),
            hidden_bias,
            output_weights,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    /// Entry `W[j][k]` of the hidden weight matrix.
    pub fn hidden_weight(&self, j: usize, k: usize) -> f64 {
        self.hidden_weights[j * self.input_dim + k]
    }

    pub fn hidden_weights_flat(&self) -> &[f64] {
        &self.hidden_weights
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    /// Multiplies the output layer, and hence `V`, by `factor`.
    pub fn scale_output(&mut self, factor: f64) {
        self.output_weights.iter_mut().for_each(|c| *c *= factor);
    }

    /// `h·n + h + h`.
    pub fn param_count(&self) -> usize {
        self.hidden_dim * (self.input_dim + 2)
    }

    /// Appends parameters in the order hidden weights, hidden bias, output weights.
    pub fn write_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.hidden_weights);
        out.extend_from_slice(&self.hidden_bias);
        out.extend_from_slice(&self.output_weights);
    }

    /// Inverse of [`write_params`](Self::write_params); returns the number of values consumed.
    pub fn read_params(&mut self, src: &[f64]) -> usize {
        let (nw, h) = (self.hidden_weights.len(), self.hidden_dim);
        self.hidden_weights.copy_from_slice(&src[..nw]);
        self.hidden_bias.copy_from_slice(&src[nw..nw + h]);
        self.output_weights.copy_from_slice(&src[nw + h..nw + 2 * h]);
        nw + 2 * h
    }

    pub fn evaluate(&self, y: &[f64]) -> Result<f64> {
        check_dim("PotentialNet::evaluate", self.input_dim, y.len())?;
        let mut v = 0.0;
        for j in 0..self.hidden_dim {
            v += self.output_weights[j] * self.preactivation(j, y).tanh();
        }
        Ok(v)
    }

    pub fn gradient(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim("PotentialNet::gradient", self.input_dim, y.len())?;
        let mut g = vec![0.0; self.input_dim];
        self.gradient_into(y, &mut g, None);
        Ok(g)
    }

    #[inline]
    fn preactivation(&self, j: usize, y: &[f64]) -> f64 {
        let row = &self.hidden_weights[j * self.input_dim..(j + 1) * self.input_dim];
        row.iter().zip(y).fold(self.hidden_bias[j], |acc, (w, yk)| acc + w * yk)
    }

    /// Writes `∇V(y)` into `out` without dimension checks. When `tanh_cache` is
    /// given it receives `tanh(W y + b)` for reuse by [`backprop`](Self::backprop).
    #[inline]
    pub(crate) fn gradient_into(&self, y: &[f64], out: &mut [f64], mut tanh_cache: Option<&mut [f64]>) {
        let n = self.input_dim;
        out.iter_mut().for_each(|o| *o = 0.0);
        for j in 0..self.hidden_dim {
            let t = self.preactivation(j, y).tanh();
            if let Some(cache) = tanh_cache.as_deref_mut() {
                cache[j] = t;
            }
            let s = self.output_weights[j] * (1.0 - t * t);
            let row = &self.hidden_weights[j * n..(j + 1) * n];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * s;
            }
        }
    }

    /// Vector-Jacobian product through `y ↦ scale·∇V(y)` for a cotangent `v`.
    ///
    /// Adds `scale·H(y)·v` to `dy` and `scale·(∂∇V/∂params)ᵀ v` to `dparams`
    /// (laid out as in [`write_params`](Self::write_params)). `tanh_cache` must hold
    /// `tanh(W y + b)` and `wv` is scratch of length `hidden_dim`.
    pub(crate) fn backprop(
        &self,
        y: &[f64],
        tanh_cache: &[f64],
        v: &[f64],
        scale: f64,
        dy: &mut [f64],
        dparams: &mut [f64],
        wv: &mut [f64],
    ) {
        let (n, h) = (self.input_dim, self.hidden_dim);
        let (dw, rest) = dparams.split_at_mut(n * h);
        let (db, dc) = rest.split_at_mut(h);
        for j in 0..h {
            let row = &self.hidden_weights[j * n..(j + 1) * n];
            wv[j] = row.iter().zip(v).map(|(w, vk)| w * vk).sum();
        }
        for j in 0..h {
            let t = tanh_cache[j];
            let d1 = 1.0 - t * t;
            let c = self.output_weights[j];
            // c_j σ''_j (W v)_j
            let curv = scale * c * tanh_d2(t) * wv[j];
            dc[j] += scale * d1 * wv[j];
            db[j] += curv;
            let row = &self.hidden_weights[j * n..(j + 1) * n];
            let dwrow = &mut dw[j * n..(j + 1) * n];
            let cd1 = scale * c * d1;
            for k in 0..n {
                dwrow[k] += cd1 * v[k] + curv * y[k];
                dy[k] += curv * row[k];
            }
        }
    }

    /// Hessian of `V` and the parameter Jacobians of `∇V`, all at `y`.
    pub fn gradient_jacobians(&self, y: &[f64]) -> Result<GradientJacobians> {
        check_dim("PotentialNet::gradient_jacobians", self.input_dim, y.len())?;
        let (n, h) = (self.input_dim, self.hidden_dim);
        let mut hessian = vec![0.0; n * n];
        let mut dw = vec![0.0; n * n * h];
        let mut db = vec![0.0; n * h];
        let mut dc = vec![0.0; n * h];
        for j in 0..h {
            let t = self.preactivation(j, y).tanh();
            let d1 = 1.0 - t * t;
            let d2 = tanh_d2(t);
            let c = self.output_weights[j];
            for i in 0..n {
                let wji = self.hidden_weight(j, i);
                for k in 0..n {
                    let wjk = self.hidden_weight(j, k);
                    hessian[i * n + k] += c * d2 * wji * wjk;
                    // ∂g_i/∂W_jk = δ_ik c_j σ'_j + W_ji c_j σ''_j y_k
                    let delta = if i == k { c * d1 } else { 0.0 };
                    dw[i * (n * h) + j * n + k] = delta + wji * c * d2 * y[k];
                }
                db[i * h + j] = wji * c * d2;
                dc[i * h + j] = wji * d1;
            }
        }
        Ok(GradientJacobians {
            hessian,
            wrt_hidden_weights: dw,
            wrt_hidden_bias: db,
            wrt_output_weights: dc,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PotentialRepr {
    input_dim: usize,
    hidden_dim: usize,
    hidden_weights: Vec<Vec<f64>>,
    hidden_bias: Vec<f64>,
    output_weights: Vec<f64>,
}

impl Serialize for PotentialNet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PotentialRepr {
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            hidden_weights: self
                .hidden_weights
                .chunks(self.input_dim)
                .map(<[f64]>::to_vec)
                .collect(),
            hidden_bias: self.hidden_bias.clone(),
            output_weights: self.output_weights.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PotentialNet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = PotentialRepr::deserialize(d)?;
        let net = PotentialNet::from_parts(r.hidden_weights, r.hidden_bias, r.output_weights)
            .map_err(D::Error::custom)?;
        if net.input_dim != r.input_dim || net.hidden_dim != r.hidden_dim {
            return Err(D::Error::custom(format!(
                "declared shape {}x{} disagrees with weights {}x{}",
                r.hidden_dim, r.input_dim, net.hidden_dim, net.input_dim
            )));
        }
        Ok(net)
    }
}
