//! Finite-difference Jacobians and the symplecticity defect `‖JᵀΩJ − Ω‖∞`.

use crate::error::{Error, Result};
use crate::phase::PhaseState;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central-difference Jacobian of `map` at `z`, row-major `2n × 2n`.
pub fn jacobian_fd<F>(map: F, z: &PhaseState, step: f64) -> Result<Vec<f64>>
where
    F: Fn(&PhaseState) -> Result<PhaseState>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Contract(format!("finite-difference step must be positive, got {step}")));
    }
    let d = z.dim();
    let mut jac = vec![0.0; d * d];
    for j in 0..d {
        let mut plus = z.clone();
        let mut minus = z.clone();
        plus[j] += step;
        minus[j] -= step;
        let fp = map(&plus)?;
        let fm = map(&minus)?;
        if fp.dim() != d || fm.dim() != d {
            return Err(Error::Dimension {
                context: "jacobian_fd map output",
                expected: d,
                got: fp.dim(),
            });
        }
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite {
                context: "jacobian_fd map output".into(),
                step: j,
            });
        }
        for i in 0..d {
            jac[i * d + j] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// Canonical form Ω = [[0, I], [−I, 0]] on the `(x, y)` splitting.
pub fn canonical_form(dim: usize) -> Vec<f64> {
    let n = dim / 2;
    let mut omega = vec![0.0; dim * dim];
    for i in 0..n {
        omega[i * dim + n + i] = 1.0;
        omega[(n + i) * dim + i] = -1.0;
    }
    omega
}

/// Max-norm of `JᵀΩJ − Ω` for a square row-major matrix `jac`.
pub fn defect_of_jacobian(jac: &[f64], dim: usize) -> f64 {
    let n = dim / 2;
    let mut worst = 0.0_f64;
    for a in 0..dim {
        for b in 0..dim {
            // (JᵀΩJ)_ab = Σ_i J_ia (ΩJ)_ib, with (ΩJ)_ib = J_{i+n,b} for i<n and −J_{i−n,b} otherwise
            let mut s = 0.0;
            for i in 0..n {
                s += jac[i * dim + a] * jac[(i + n) * dim + b] - jac[(i + n) * dim + a] * jac[i * dim + b];
            }
            let omega = if b == a + n && a < n {
                1.0
            } else if a == b + n && b < n {
                -1.0
            } else {
                0.0
            };
            worst = worst.max((s - omega).abs());
        }
    }
    worst
}

pub fn symplectic_defect<F>(map: F, z: &PhaseState, step: f64) -> Result<f64>
where
    F: Fn(&PhaseState) -> Result<PhaseState>,
{
    let jac = jacobian_fd(map, z, step)?;
    Ok(defect_of_jacobian(&jac, z.dim()))
}
