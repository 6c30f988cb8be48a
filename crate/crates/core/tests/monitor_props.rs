use opendyn::channels::{apply_channel, make_channel};
use opendyn::measures::concurrence_two_qubit;
use opendyn::monitor::{conditional_two_qubit, distillation_p, filter, monitored_vs_traced, no_jump_single};
use opendyn::random;
use opendyn::statealg::{purity, re, ComplexMatrix};
use opendyn::{ChannelKind, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn kind() -> impl Strategy<Value = ChannelKind> {
    prop::sample::select(ChannelKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn filtering_fine_grains_the_channel(kind in kind(), p in 0.0f64..=1.0, seed in any::<u64>(), rank in 1usize..=4, slot in 0usize..2) {
        let rho = random::density_matrix(&[2, 2], rank, &mut rng(seed));
        let ch = make_channel(kind, p).unwrap();
        let outcomes = filter(&ch, &rho, slot).unwrap();
        let total: f64 = outcomes.iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        let mut sum = ComplexMatrix::zeros(4, 4);
        for o in &outcomes {
            if let Some(state) = &o.conditional_state {
                sum = &sum + &state.matrix().scale(re(o.probability));
            }
        }
        prop_assert!(sum.max_abs_diff(apply_channel(&ch, &rho, slot).unwrap().matrix()) < 1e-12);
    }

    #[test]
    fn pure_inputs_stay_pure(kind in kind(), p in 0.0f64..=1.0, seed in any::<u64>()) {
        let psi = random::pure_state(&[2, 2], &mut rng(seed)).density();
        for o in filter(&make_channel(kind, p).unwrap(), &psi, 0).unwrap() {
            if let Some(state) = o.conditional_state {
                prop_assert!((purity(&state) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn monitored_population_formula(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let (a, b) = random::qubit_amplitudes(&mut rng(seed));
        let m = monitored_vs_traced(a, b, p).unwrap();
        let (a2, b2) = (a.norm_sqr(), b.norm_sqr());
        prop_assert!((m.pop_v_traced - b2 * (1.0 - p)).abs() < 1e-14);
        prop_assert!((m.pop_v_monitored - b2 * (1.0 - p) / (a2 + b2 * (1.0 - p))).abs() < 1e-14);
        prop_assert!(m.pop_v_monitored >= m.pop_v_traced - 1e-15);
        prop_assert!((m.purity_monitored - 1.0).abs() < 1e-9);
        let psi = no_jump_single(a, b, p).unwrap();
        prop_assert!((psi.amplitude(1).norm_sqr() - m.pop_v_monitored).abs() < 1e-14);
    }
}

#[test]
fn conditional_concurrence_is_unimodal() {
    let mut r = rng(3);
    let mut checked = 0;
    while checked < 20 {
        let (a, b): (C64, C64) = random::qubit_amplitudes(&mut r);
        let Ok(p_star) = distillation_p(a, b) else { continue };
        checked += 1;
        let grid: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).collect();
        let values: Vec<f64> = grid
            .iter()
            .map(|&p| concurrence_two_qubit(&conditional_two_qubit(a, b, p).unwrap().density()).unwrap().value)
            .collect();
        for (w, ps) in values.windows(2).zip(grid.windows(2)) {
            if ps[1] <= p_star {
                assert!(w[1] >= w[0] - 1e-12, "rising before p*");
            } else if ps[0] >= p_star {
                assert!(w[1] <= w[0] + 1e-12, "falling after p*");
            }
        }
        let peak = concurrence_two_qubit(&conditional_two_qubit(a, b, p_star).unwrap().density()).unwrap().value;
        assert!((peak - 1.0).abs() < 1e-9);
        assert!(values[400] < 1e-12);
    }
}
