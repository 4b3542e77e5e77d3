//! Averaged slow Hamiltonian of the coupled oscillators.

use std::f64::consts::PI;

/// Bessel function of the first kind of order one, from the periodic integral
/// `J₁(x) = (1/2π) ∫₀^{2π} cos(τ − x sin τ) dτ`.
///
/// The integrand is smooth and periodic, so the trapezoidal rule converges
/// geometrically once the node count exceeds `|x|` by a margin.
pub fn bessel_j1(x: f64) -> f64 {
    let nodes = 64 + 2 * x.abs().ceil() as usize;
    let h = 2.0 * PI / nodes as f64;
    (0..nodes)
        .map(|i| {
            let tau = i as f64 * h;
            (tau - x * tau.sin()).cos()
        })
        .sum::<f64>()
        / nodes as f64
}

/// `H̄(q₂, p₂) = ½(q₂² + p₂²) + q₂ cos(2q₂) r J₁(2r)` where `r = √(q₁² + p₁²)` is
/// the radius of the fast oscillator.
pub fn averaged_hamiltonian(q2: f64, p2: f64, fast_radius: f64) -> f64 {
    0.5 * (q2 * q2 + p2 * p2) + q2 * (2.0 * q2).cos() * fast_radius * bessel_j1(2.0 * fast_radius)
}
