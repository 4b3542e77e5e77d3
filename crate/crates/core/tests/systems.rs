use gyroceptron::systems::{
    averaged_hamiltonian, energy_drift, generate_dataset, integrate, slow_manifold_reference, substeps_for, trajectory,
    BenchmarkSystem, ChargedParticleSystem, CoupledOscillatorSystem, HamiltonianSystem, SamplingBox,
};
use gyroceptron::PhaseState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn state(v: &[f64]) -> PhaseState {
    PhaseState::new(v.to_vec()).unwrap()
}

/// Trapezoidal average over one period of `(r cos t) q₂ sin(2 r cos t + 2q₂)`, plus the quadratic part.
fn averaged_by_quadrature(q2: f64, p2: f64, q: f64, p: f64) -> f64 {
    let n = 4000;
    let mean = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            let q1 = q * t.cos() + p * t.sin();
            q1 * (2.0 * q1 + 2.0 * q2).sin()
        })
        .sum::<f64>()
        / n as f64;
    0.5 * (q2 * q2 + p2 * p2) + q2 * mean
}

#[test]
fn averaged_hamiltonian_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (q2, p2) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let (q, p) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let r = f64::hypot(q, p);
        let diff = (averaged_hamiltonian(q2, p2, r) - averaged_by_quadrature(q2, p2, q, p)).abs();
        assert!(diff <= 1e-8, "q2={q2} r={r} diff={diff}");
    }
}

fn richardson_ratio<S: HamiltonianSystem>(system: &S, z0: &PhaseState, t: f64, coarse: usize) -> f64 {
    let fine = integrate(system, z0, t, coarse * 64).unwrap();
    let e1 = integrate(system, z0, t, coarse).unwrap().max_abs_diff(&fine);
    let e2 = integrate(system, z0, t, 2 * coarse).unwrap().max_abs_diff(&fine);
    e1 / e2
}

#[test]
fn rk4_is_fourth_order_on_both_systems() {
    let osc = CoupledOscillatorSystem::new(0.01).unwrap();
    let r = richardson_ratio(&osc, &state(&[1.0, 0.5, -0.3, 0.2]), 2.0, 20);
    assert!((12.0..=20.0).contains(&r), "oscillators ratio {r}");
    let charged = ChargedParticleSystem::with_default_fields(0.01).unwrap();
    let r = richardson_ratio(&charged, &state(&[0.3, 0.4, -0.2, 1.0, 0.1, 0.7]), 2.0, 20);
    assert!((12.0..=20.0).contains(&r), "charged ratio {r}");
}

#[test]
fn energy_drift_at_fine_step() {
    let osc = CoupledOscillatorSystem::new(0.01).unwrap();
    let charged = ChargedParticleSystem::with_default_fields(0.01).unwrap();
    let traj = trajectory(&osc, &state(&[1.0, 0.5, 0.0, 0.3]), 0.1, 100, 100).unwrap();
    assert!(energy_drift(&osc, &traj).unwrap() <= 1e-8);
    let traj = trajectory(&charged, &state(&[0.2, 0.5, -0.4, 1.0, 0.3, 0.9]), 0.1, 100, 100).unwrap();
    assert!(energy_drift(&charged, &traj).unwrap() <= 1e-8);
}

#[test]
fn decoupled_oscillator_follows_closed_form() {
    let osc = CoupledOscillatorSystem::new(0.0).unwrap();
    let (q, p) = (0.8, -0.6);
    let traj = trajectory(&osc, &state(&[q, 0.4, p, 0.1]), 0.5, 500, 20).unwrap();
    for (k, z) in traj.iter().enumerate() {
        let t = 0.5 * k as f64;
        assert!((z[0] - (q * t.cos() + p * t.sin())).abs() <= 1e-8);
        assert!((z[2] - (p * t.cos() - q * t.sin())).abs() <= 1e-8);
        assert_eq!((z[1], z[3]), (0.4, 0.1));
    }
}

fn mu0_drift(epsilon: f64) -> f64 {
    let s = ChargedParticleSystem::with_default_fields(epsilon).unwrap();
    let z0 = state(&[0.1, 0.5, -0.3, 1.0, 0.2, 0.9]);
    let mu = s.mu0(&z0).unwrap();
    trajectory(&s, &z0, 0.1, 100, 200)
        .unwrap()
        .iter()
        .map(|z| (s.mu0(z).unwrap() - mu).abs())
        .fold(0.0, f64::max)
}

#[test]
fn mu0_drift_scales_with_epsilon() {
    let (coarse, fine) = (mu0_drift(0.1), mu0_drift(0.01));
    assert!(coarse / fine >= 5.0, "drift {coarse} vs {fine}");
}

#[test]
fn averaged_hamiltonian_is_nearly_conserved() {
    let eps = 0.01;
    let osc = CoupledOscillatorSystem::new(eps).unwrap();
    for z0 in [[1.0, 0.5, 0.0, 0.0], [0.5, -0.3, 0.6, 0.8], [1.0, 0.0, 0.0, -1.0]] {
        let traj = trajectory(&osc, &state(&z0), 0.1, 100, 500).unwrap();
        let hbar = |z: &PhaseState| averaged_hamiltonian(z[1], z[3], f64::hypot(z[0], z[2]));
        let h0 = hbar(&traj[0]);
        let drift = traj.iter().map(|z| (hbar(z) - h0).abs()).fold(0.0, f64::max);
        assert!(drift <= 10.0 * eps, "{z0:?}: drift {drift}");
    }
}

#[test]
fn slow_manifold_motion_matches_integration() {
    let eps = 0.01;
    let s = ChargedParticleSystem::with_default_fields(eps).unwrap();
    let (q0, p0) = (0.3, 0.01);
    let traj = trajectory(&s, &s.slow_manifold_point(q0, p0), 1.0, 1000, 100).unwrap();
    for (k, z) in traj.iter().enumerate() {
        let (q, p) = slow_manifold_reference(q0, p0, eps, k as f64);
        assert!((z[0] - q).abs() <= 1e-4 && (z[3] - p).abs() <= 1e-4, "t={k}: {:?}", z.as_slice());
    }
}

#[test]
fn dataset_targets_survive_refinement() {
    for system in [
        BenchmarkSystem::CoupledOscillators(CoupledOscillatorSystem::new(0.01).unwrap()),
        BenchmarkSystem::ChargedParticle(ChargedParticleSystem::with_default_fields(0.01).unwrap()),
    ] {
        let t = 0.05;
        let substeps = substeps_for(t);
        let data = generate_dataset(&system, t, 50, &SamplingBox::default_for(&system), substeps, 3).unwrap();
        assert_eq!(data.meta.failures, 0);
        for pair in &data.pairs {
            let refined = integrate(&system, &pair.input, t, 2 * substeps).unwrap();
            assert!(refined.max_abs_diff(&pair.target) <= 1e-9);
        }
    }
}
