use gyroceptron::experiments::{drift_series, n_epsilon, AdiabaticScanConfig, NEpsilon};
use gyroceptron::{symplectic_defect, Architecture, CircleAction, HenonNet, Mode, NearIdentityHenonNet, PhaseState, SymplecticGyroceptron};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn action(dim: usize, theta: f64) -> CircleAction {
    if dim == 6 {
        CircleAction::new(6, vec![Mode { pair: 1, freq: 1 }, Mode { pair: 2, freq: 2 }], theta).unwrap()
    } else {
        CircleAction::single(dim, theta).unwrap()
    }
}

fn model(seed: u64, dim: usize, epsilon: f64, theta: f64) -> SymplecticGyroceptron {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SymplecticGyroceptron::random(action(dim, theta), epsilon, Architecture::new(3, 6, 2, 5).with_shift_scale(0.5), &mut rng).unwrap()
}

fn states(dim: usize) -> impl Strategy<Value = PhaseState> {
    proptest::collection::vec(-2.0..2.0f64, dim).prop_map(|v| PhaseState::new(v).unwrap())
}

fn model_and_state() -> impl Strategy<Value = (u64, usize, f64, f64, PhaseState)> {
    (any::<u64>(), prop::sample::select(vec![2usize, 4, 6]), prop::sample::select(vec![0.0, 1e-4, 1e-2, 1e-1]), 0.0..6.28f64)
        .prop_flat_map(|(seed, dim, eps, theta)| (Just(seed), Just(dim), Just(eps), Just(theta), states(dim)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn henon_nets_are_symplectic_and_invertible(seed in any::<u64>(), half in 1usize..4, layers in 1usize..4, eps in -0.5..0.5f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = HenonNet::random(half, layers, 5, &mut rng);
        let near = NearIdentityHenonNet::random(half, layers, 5, &mut rng);
        let z = PhaseState::new((0..2 * half).map(|i| (i as f64 * 0.37 + eps).sin()).collect()).unwrap();
        prop_assert!(net.net_inverse(&net.net_forward(&z).unwrap()).unwrap().max_abs_diff(&z) <= 1e-11);
        prop_assert!(near.inverse(eps, &near.forward(eps, &z).unwrap()).unwrap().max_abs_diff(&z) <= 1e-11);
        prop_assert!(symplectic_defect(|w| net.net_forward(w), &z, 1e-5).unwrap() <= 1e-5);
        prop_assert!(symplectic_defect(|w| near.forward(eps, w), &z, 1e-5).unwrap() <= 1e-5);
    }

    #[test]
    fn gyroceptrons_are_symplectic_and_invertible((seed, dim, eps, theta, z) in model_and_state()) {
        let g = model(seed, dim, eps, theta);
        prop_assert!(g.inverse(&g.forward(&z).unwrap()).unwrap().max_abs_diff(&z) <= 1e-11);
        prop_assert!(symplectic_defect(|w| g.forward(w), &z, 1e-5).unwrap() <= 1e-5);
    }

    #[test]
    fn rollout_reverses_under_inverse(seed in any::<u64>(), z in states(4)) {
        let g = model(seed, 4, 1e-2, 0.7);
        let r = g.rollout(&z, 30).unwrap();
        prop_assert!(r.diverged_at.is_none());
        let mut back = r.states.last().unwrap().clone();
        for expected in r.states.iter().rev().skip(1) {
            back = g.inverse(&back).unwrap();
            prop_assert!(back.max_abs_diff(expected) <= 1e-9);
        }
    }

    #[test]
    fn zero_epsilon_conserves_mu(seed in any::<u64>(), z in states(4)) {
        let g = model(seed, 4, 0.0, 1.3);
        let mu = g.adiabatic_invariant(&z).unwrap();
        let mut w = z;
        for _ in 0..200 {
            w = g.forward(&w).unwrap();
            prop_assert!((g.adiabatic_invariant(&w).unwrap() - mu).abs() <= 1e-10);
        }
    }
}

fn scan_model() -> (SymplecticGyroceptron, PhaseState) {
    AdiabaticScanConfig::default().model().unwrap()
}

#[test]
fn drift_shrinks_with_epsilon() {
    let (mut g, z0) = scan_model();
    let mut drift = |eps: f64| {
        g.epsilon = eps;
        let s = drift_series(&g, &z0, 10_000).unwrap();
        assert!(!s.diverged);
        assert_eq!(s.values[0], 0.0);
        s.max_abs()
    };
    let (d1, d2, d4, d6) = (drift(1e-1), drift(1e-2), drift(1e-4), drift(1e-6));
    assert!(d2 > d6, "{d2} vs {d6}");
    assert!(d4 < 0.1 * d1, "{d4} vs {d1}");
}

#[test]
fn threshold_iteration_grows_as_epsilon_shrinks() {
    let (mut g, z0) = scan_model();
    let cap = 200_000;
    let n: Vec<usize> = [1e-2, 1e-4, 1e-6]
        .iter()
        .map(|&eps| {
            g.epsilon = eps;
            match n_epsilon(&g, &z0, 1.1, cap).unwrap() {
                NEpsilon::Found(n) => n,
                NEpsilon::Exceeded { degenerate } => {
                    assert!(!degenerate);
                    cap + 1
                }
            }
        })
        .collect();
    assert!(n.windows(2).all(|w| w[0] as f64 <= 1.1 * w[1] as f64), "{n:?}");
}
