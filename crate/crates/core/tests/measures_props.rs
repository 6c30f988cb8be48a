use opendyn::channels::{apply_local, dilate_local, dilate_state, make_channel, polar, uniform};
use opendyn::measures::{
    analytic_curves, complementarity_triple, concurrence_two_qubit, negativity, predictability,
    single_qubit_curves, system_environment_concurrence, visibility, witness_best_gamma, witness_gamma,
};
use opendyn::random;
use opendyn::statealg::{partial_trace, DensityMatrix, PureStateVector};
use opendyn::{ChannelKind, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn amplitudes(seed: u64) -> (C64, C64) {
    random::qubit_amplitudes(&mut rng(seed))
}

fn grid() -> impl Iterator<Item = f64> {
    (0..=100).map(|k| k as f64 / 100.0)
}

#[test]
fn concurrence_matches_closed_forms() {
    let mut r = rng(2024);
    for _ in 0..1000 {
        let (a, b) = random::qubit_amplitudes(&mut r);
        let p: f64 = r.random();
        let psi = PureStateVector::two_qubit_correlated(a, b).unwrap().density();
        for kind in [ChannelKind::AmplitudeDamping, ChannelKind::Dephasing] {
            let got = concurrence_two_qubit(&apply_local(&uniform(kind, p, 2).unwrap(), &psi).unwrap()).unwrap();
            let curves = analytic_curves(kind, a, b, p).unwrap();
            assert!((got.value - curves.c_s1s2).abs() < 1e-9, "{kind} p={p}: {} vs {}", got.value, curves.c_s1s2);
        }
    }
}

#[test]
fn complementarity_sums_to_one_on_every_dilation() {
    let mut r = rng(7);
    for _ in 0..20 {
        let (a, b) = random::qubit_amplitudes(&mut r);
        let chi = PureStateVector::qubit(a, b).unwrap();
        for kind in ChannelKind::ALL {
            for p in grid() {
                let joint = dilate_state(&make_channel(kind, p).unwrap(), &chi).unwrap();
                let t = complementarity_triple(&joint.density(), 0).unwrap();
                assert!((t.sum() - 1.0).abs() < 1e-9, "{kind} p={p}");
            }
        }
    }
}

#[test]
fn single_qubit_closed_forms_match_dilations() {
    let mut r = rng(11);
    for _ in 0..30 {
        let (a, b) = random::qubit_amplitudes(&mut r);
        let chi = PureStateVector::qubit(a, b).unwrap();
        for kind in ChannelKind::ALL {
            for p in grid() {
                let joint = dilate_state(&make_channel(kind, p).unwrap(), &chi).unwrap().density();
                let rho = partial_trace(&joint, &[0]).unwrap();
                let closed = single_qubit_curves(kind, a, b, p).unwrap();
                let c_se = system_environment_concurrence(&joint, &[0]).unwrap();
                assert!((predictability(&rho).unwrap() - closed.pred).abs() < 1e-9, "{kind} P p={p}");
                assert!((visibility(&rho).unwrap() - closed.vis).abs() < 1e-9, "{kind} V p={p}");
                assert!((c_se - closed.c_se).abs() < 1e-9, "{kind} C p={p}: {c_se} vs {}", closed.c_se);
            }
        }
    }
}

#[test]
fn dephasing_never_entangles_a_qubit_with_its_environment() {
    let mut r = rng(5);
    for _ in 0..10 {
        let (a, b) = random::qubit_amplitudes(&mut r);
        let psi = PureStateVector::two_qubit_correlated(a, b).unwrap();
        for p in grid() {
            let joint = dilate_local(&uniform(ChannelKind::Dephasing, p, 2).unwrap(), &psi).unwrap().density();
            for keep in [[0, 2], [1, 3]] {
                let c = concurrence_two_qubit(&partial_trace(&joint, &keep).unwrap()).unwrap().value;
                assert!(c < 1e-9);
            }
        }
    }
}

#[test]
fn dephasing_concurrence_decreases_strictly() {
    let mut r = rng(13);
    for _ in 0..20 {
        let (a, b) = random::qubit_amplitudes(&mut r);
        let psi = PureStateVector::two_qubit_correlated(a, b).unwrap().density();
        let values: Vec<f64> = grid()
            .map(|p| concurrence_two_qubit(&apply_local(&uniform(ChannelKind::Dephasing, p, 2).unwrap(), &psi).unwrap()).unwrap().value)
            .collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
        assert!(values[..100].iter().all(|&c| c > 0.0));
        assert!(values[100] < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lambda_dominates_the_witness_family(
        seed in any::<u64>(), p in 0.0f64..=1.0, v in 0.5f64..=1.0, theta in -3.2f64..3.2, damping in any::<bool>(),
    ) {
        let (a, b) = amplitudes(seed);
        let psi = PureStateVector::two_qubit_correlated(a, b).unwrap();
        let kind = if damping { ChannelKind::AmplitudeDamping } else { ChannelKind::Dephasing };
        let rho = apply_local(&uniform(kind, p, 2).unwrap(), &DensityMatrix::white_noise_mixture(&psi, v).unwrap()).unwrap();
        let lambda = concurrence_two_qubit(&rho).unwrap().lambda;
        let (_, best) = witness_best_gamma(&rho).unwrap();
        prop_assert!(witness_gamma(&rho, theta).unwrap() <= best + 1e-12);
        prop_assert!(best <= lambda + 1e-12, "gamma {best} > lambda {lambda}");
    }

    #[test]
    fn witness_is_tight_for_ideal_damped_states(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let (a, b) = amplitudes(seed);
        let psi = PureStateVector::two_qubit_correlated(polar(a.norm(), 0.0), b).unwrap().density();
        let rho = apply_local(&uniform(ChannelKind::AmplitudeDamping, p, 2).unwrap(), &psi).unwrap();
        let lambda = 2.0 * (1.0 - p) * b.norm() * (a.norm() - p * b.norm());
        prop_assert!((witness_best_gamma(&rho).unwrap().1 - lambda).abs() < 1e-9);
    }

    #[test]
    fn negativity_and_concurrence_agree_on_entanglement(seed in any::<u64>(), rank in 1usize..=4) {
        let rho = random::density_matrix(&[2, 2], rank, &mut rng(seed));
        let c = concurrence_two_qubit(&rho).unwrap();
        let n = negativity(&rho, 1).unwrap();
        if c.lambda > 1e-8 {
            prop_assert!(n > 0.0);
        }
        if c.lambda < -1e-8 {
            prop_assert!(n < 1e-12);
        }
    }

    #[test]
    fn concurrence_is_bounded(seed in any::<u64>(), rank in 1usize..=4) {
        let rho = random::density_matrix(&[2, 2], rank, &mut rng(seed));
        let c = concurrence_two_qubit(&rho).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&c.value));
        prop_assert_eq!(c.value, c.lambda.max(0.0));
    }
}
