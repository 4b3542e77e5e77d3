//! Reverse-mode gradients through Hénon nets, their inverses, and the full
//! gyroceptron composition.
//!
//! Each pass records, per Hénon-like step, the point where `∇V` was evaluated
//! together with the hidden activations; the backward sweep then applies the
//! closed-form vector-Jacobian products of a single step.

use crate::gyroceptron::SymplecticGyroceptron;
use crate::henon::{HenonNet, ITERATES_PER_LAYER};

/// Recorded evaluation points and `tanh` activations for one net pass.
#[derive(Debug, Default, Clone)]
pub(crate) struct Tape {
    points: Vec<f64>,
    tanh: Vec<f64>,
}

impl Tape {
    fn clear(&mut self) {
        self.points.clear();
        self.tanh.clear();
    }
}

/// Reusable per-thread buffers for one sample's forward and backward sweep.
#[derive(Debug, Clone)]
pub struct Workspace {
    z: Vec<f64>,
    u: Vec<f64>,
    g: Vec<f64>,
    adj: Vec<f64>,
    dy: Vec<f64>,
    wv: Vec<f64>,
    rot_in: Vec<f64>,
    tapes: [Tape; 3],
}

impl Workspace {
    pub fn new(dim: usize) -> Self {
        let n = dim / 2;
        Self {
            z: vec![0.0; dim],
            u: vec![0.0; n],
            g: vec![0.0; n],
            adj: vec![0.0; dim],
            dy: vec![0.0; n],
            wv: Vec::new(),
            rot_in: vec![0.0; dim],
            tapes: Default::default(),
        }
    }
}

fn forward_record(net: &HenonNet, scale: f64, z: &mut [f64], g: &mut [f64], tape: &mut Tape) {
    let n = g.len();
    for layer in &net.layers {
        let h = layer.potential.hidden_dim();
        for _ in 0..ITERATES_PER_LAYER {
            tape.points.extend_from_slice(&z[n..]);
            let t0 = tape.tanh.len();
            tape.tanh.resize(t0 + h, 0.0);
            layer.potential.gradient_into(&z[n..], g, Some(&mut tape.tanh[t0..]));
            let (x, y) = z.split_at_mut(n);
            for i in 0..n {
                let xi = x[i];
                x[i] = y[i] + layer.shift[i];
                y[i] = -xi + scale * g[i];
            }
        }
    }
}

fn inverse_record(net: &HenonNet, scale: f64, z: &mut [f64], u: &mut [f64], g: &mut [f64], tape: &mut Tape) {
    let n = g.len();
    for layer in net.layers.iter().rev() {
        let h = layer.potential.hidden_dim();
        for _ in 0..ITERATES_PER_LAYER {
            let (x, y) = z.split_at_mut(n);
            for i in 0..n {
                u[i] = x[i] - layer.shift[i];
            }
            tape.points.extend_from_slice(u);
            let t0 = tape.tanh.len();
            tape.tanh.resize(t0 + h, 0.0);
            layer.potential.gradient_into(u, g, Some(&mut tape.tanh[t0..]));
            for i in 0..n {
                x[i] = scale * g[i] - y[i];
                y[i] = u[i];
            }
        }
    }
}

/// Pulls `adj` back through a recorded forward pass, accumulating into `grad`
/// (the net's own flat parameter slice).
fn forward_backprop(net: &HenonNet, scale: f64, tape: &Tape, adj: &mut [f64], grad: &mut [f64], dy: &mut [f64], wv: &mut Vec<f64>) {
    let n = dy.len();
    let (mut pp, mut tp) = (tape.points.len(), tape.tanh.len());
    let mut offset = net.param_count();
    for layer in net.layers.iter().rev() {
        offset -= layer.param_count();
        let h = layer.potential.hidden_dim();
        wv.resize(h, 0.0);
        let pc = layer.potential.param_count();
        for _ in 0..ITERATES_PER_LAYER {
            pp -= n;
            tp -= h;
            let y = &tape.points[pp..pp + n];
            let t = &tape.tanh[tp..tp + h];
            let (ax, ay) = adj.split_at_mut(n);
            dy.iter_mut().for_each(|v| *v = 0.0);
            let (gpot, gshift) = grad[offset..offset + pc + n].split_at_mut(pc);
            layer.potential.backprop(y, t, ay, scale, dy, gpot, wv);
            for i in 0..n {
                gshift[i] += ax[i];
                let (axi, ayi) = (ax[i], ay[i]);
                ax[i] = -ayi;
                ay[i] = axi + dy[i];
            }
        }
    }
}

fn inverse_backprop(net: &HenonNet, scale: f64, tape: &Tape, adj: &mut [f64], grad: &mut [f64], dy: &mut [f64], wv: &mut Vec<f64>) {
    let n = dy.len();
    let (mut pp, mut tp) = (tape.points.len(), tape.tanh.len());
    // the inverse pass visited layers last-to-first, so unwind first-to-last
    let mut next_offset = 0;
    for layer in &net.layers {
        let offset = next_offset;
        next_offset += layer.param_count();
        let h = layer.potential.hidden_dim();
        wv.resize(h, 0.0);
        let pc = layer.potential.param_count();
        for _ in 0..ITERATES_PER_LAYER {
            pp -= n;
            tp -= h;
            let u = &tape.points[pp..pp + n];
            let t = &tape.tanh[tp..tp + h];
            let (ax, ay) = adj.split_at_mut(n);
            dy.iter_mut().for_each(|v| *v = 0.0);
            let (gpot, gshift) = grad[offset..offset + pc + n].split_at_mut(pc);
            layer.potential.backprop(u, t, ax, scale, dy, gpot, wv);
            for i in 0..n {
                let au = dy[i] + ay[i];
                gshift[i] -= au;
                ay[i] = -ax[i];
                ax[i] = au;
            }
        }
    }
}

/// Squared error `Σ (P(input) − target)²` of one sample; adds `½ ∂/∂params` of it
/// to `grad` (the caller rescales).
pub(crate) fn gyroceptron_sample(
    model: &SymplecticGyroceptron,
    input: &[f64],
    target: &[f64],
    grad: &mut [f64],
    ws: &mut Workspace,
) -> f64 {
    let Workspace {
        z,
        u,
        g,
        adj,
        dy,
        wv,
        rot_in,
        tapes,
    } = ws;
    let [t_psi_inv, t_psi, t_iota] = tapes;
    t_psi_inv.clear();
    t_psi.clear();
    t_iota.clear();

    z.copy_from_slice(input);
    inverse_record(&model.psi, 1.0, z, u, g, t_psi_inv);
    rot_in.copy_from_slice(z);
    model.action.rotate_in_place(model.action.theta, z);
    forward_record(&model.psi, 1.0, z, g, t_psi);
    forward_record(&model.iota.net, model.epsilon, z, g, t_iota);

    let mut sq = 0.0;
    for i in 0..z.len() {
        let r = z[i] - target[i];
        adj[i] = r;
        sq += r * r;
    }

    let psi_count = model.psi.param_count();
    let iota_count = model.iota.param_count();
    let (g_psi, rest) = grad.split_at_mut(psi_count);
    let (g_iota, g_theta) = rest.split_at_mut(iota_count);

    forward_backprop(&model.iota.net, model.epsilon, t_iota, adj, g_iota, dy, wv);
    forward_backprop(&model.psi, 1.0, t_psi, adj, g_psi, dy, wv);
    g_theta[0] += model.action.backprop(rot_in, adj);
    inverse_backprop(&model.psi, 1.0, t_psi_inv, adj, g_psi, dy, wv);
    sq
}

/// Same as [`gyroceptron_sample`] for a plain HénonNet surrogate.
pub(crate) fn henon_net_sample(net: &HenonNet, input: &[f64], target: &[f64], grad: &mut [f64], ws: &mut Workspace) -> f64 {
    let Workspace { z, g, adj, dy, wv, tapes, .. } = ws;
    let tape = &mut tapes[0];
    tape.clear();
    z.copy_from_slice(input);
    forward_record(net, 1.0, z, g, tape);
    let mut sq = 0.0;
    for i in 0..z.len() {
        let r = z[i] - target[i];
        adj[i] = r;
        sq += r * r;
    }
    forward_backprop(net, 1.0, tape, adj, grad, dy, wv);
    sq
}
