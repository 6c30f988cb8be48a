//! Environment monitoring: Kraus filtering, the no-jump record, and distillation
//! of two-qubit entanglement by post-selecting on an unexcited environment.

use crate::channels::{lifted_operators, KrausChannel};
use crate::error::{Error, Result};
use crate::statealg::{purity, DensityMatrix, PureStateVector, C64};

/// Outcomes with probability below this carry no conditional state.
pub const OUTCOME_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct FilterOutcome {
    pub outcome_index: usize,
    /// `None` when the outcome is (numerically) impossible.
    pub conditional_state: Option<DensityMatrix>,
    pub probability: f64,
}

/// Splits the channel into its Kraus records: `M_i rho M_i^dagger / p_i` with `p_i = Tr(M_i rho M_i^dagger)`.
pub fn filter(ch: &KrausChannel, rho: &DensityMatrix, target: usize) -> Result<Vec<FilterOutcome>> {
    let lifted = lifted_operators(ch, rho, target)?;
    lifted
        .iter()
        .enumerate()
        .map(|(outcome_index, k)| {
            let branch = &(k * rho.matrix()) * &k.adjoint();
            let probability = branch.trace().re.max(0.0);
            let conditional_state = if probability < OUTCOME_FLOOR {
                None
            } else {
                Some(DensityMatrix::from_unnormalized(branch, rho.layout().to_vec())?)
            };
            Ok(FilterOutcome { outcome_index, conditional_state, probability })
        })
        .collect()
}

fn check(alpha: C64, beta: C64, p: f64) -> Result<()> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm.sqrt()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(())
}

/// `(alpha|H> + beta sqrt(1-p) |V>) / N`: the qubit given no photon reached the environment.
pub fn no_jump_single(alpha: C64, beta: C64, p: f64) -> Result<PureStateVector> {
    check(alpha, beta, p)?;
    PureStateVector::normalized(vec![alpha, beta * (1.0 - p).sqrt()], vec![2])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorRecord {
    pub pop_v_traced: f64,
    pub pop_v_monitored: f64,
    pub purity_traced: f64,
    pub purity_monitored: f64,
}

/// Damped-qubit V population and purity with the environment discarded and with it monitored.
pub fn monitored_vs_traced(alpha: C64, beta: C64, p: f64) -> Result<MonitorRecord> {
    check(alpha, beta, p)?;
    let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
    let pop_v_traced = b2 * (1.0 - p);
    let coherence = (alpha * beta.conj()).norm() * (1.0 - p).sqrt();
    let pop_h = 1.0 - pop_v_traced;
    let purity_traced = pop_h * pop_h + pop_v_traced * pop_v_traced + 2.0 * coherence * coherence;

    let monitored = no_jump_single(alpha, beta, p)?;
    let pop_v_monitored = monitored.amplitude(1).norm_sqr();
    debug_assert!((pop_v_monitored - pop_v_traced / (a2 + pop_v_traced)).abs() < 1e-12);
    Ok(MonitorRecord {
        pop_v_traced,
        pop_v_monitored,
        purity_traced,
        purity_monitored: purity(&monitored.density()),
    })
}

/// `(alpha|HH> + beta (1-p) |VV>) / N`: both environments found unexcited.
pub fn conditional_two_qubit(alpha: C64, beta: C64, p: f64) -> Result<PureStateVector> {
    check(alpha, beta, p)?;
    let zero = C64::new(0.0, 0.0);
    PureStateVector::normalized(vec![alpha, zero, zero, beta * (1.0 - p)], vec![2, 2])
}

/// Damping strength `1 - |alpha/beta|` at which the conditional state is maximally entangled.
pub fn distillation_p(alpha: C64, beta: C64) -> Result<f64> {
    check(alpha, beta, 0.0)?;
    if alpha.norm() >= beta.norm() {
        return Err(Error::NoDistillation);
    }
    Ok(1.0 - alpha.norm() / beta.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{apply_channel, make_channel, ChannelKind};
    use crate::measures::concurrence_two_qubit;
    use crate::statealg::re;

    fn chi() -> (C64, C64) {
        (re(0.5), re(3f64.sqrt() / 2.0))
    }

    #[test]
    fn filter_examples() {
        let (a, b) = chi();
        let psi = PureStateVector::qubit(a, b).unwrap().density();
        let out = filter(&make_channel(ChannelKind::AmplitudeDamping, 1.0).unwrap(), &psi, 0).unwrap();
        assert!((out[0].probability - 0.25).abs() < 1e-14);
        let h = out[0].conditional_state.as_ref().unwrap();
        assert!((h.get(0, 0).re - 1.0).abs() < 1e-14);

        for kind in ChannelKind::ALL {
            let out = filter(&make_channel(kind, 0.0).unwrap(), &psi, 0).unwrap();
            assert!((out[0].probability - 1.0).abs() < 1e-14);
            assert!(out[0].conditional_state.as_ref().unwrap().matrix().max_abs_diff(psi.matrix()) < 1e-14);
            assert!(out[1].conditional_state.is_none());
        }

        let one = PureStateVector::qubit(re(0.0), re(1.0)).unwrap().density();
        let out = filter(&make_channel(ChannelKind::AmplitudeDamping, 0.3).unwrap(), &one, 0).unwrap();
        assert!((out[1].probability - 0.3).abs() < 1e-14);
        assert!((out[1].conditional_state.as_ref().unwrap().get(0, 0).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn filter_fine_grains_channel() {
        let (a, b) = chi();
        let rho = PureStateVector::two_qubit_correlated(a, b).unwrap().density();
        for kind in ChannelKind::ALL {
            let ch = make_channel(kind, 0.37).unwrap();
            let out = filter(&ch, &rho, 1).unwrap();
            let total: f64 = out.iter().map(|o| o.probability).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let mut sum = crate::statealg::ComplexMatrix::zeros(4, 4);
            for o in &out {
                let state = o.conditional_state.as_ref().unwrap();
                assert!((purity(state) - 1.0).abs() < 1e-9);
                sum = &sum + &state.matrix().scale(re(o.probability));
            }
            assert!(sum.max_abs_diff(apply_channel(&ch, &rho, 1).unwrap().matrix()) < 1e-12);
        }
    }

    #[test]
    fn no_jump_examples() {
        let (a, b) = chi();
        let start = no_jump_single(a, b, 0.0).unwrap();
        assert!((start.amplitude(0) - a).norm() < 1e-15 && (start.amplitude(1) - b).norm() < 1e-15);
        let end = no_jump_single(a, b, 1.0).unwrap();
        assert!((end.amplitude(0).norm() - 1.0).abs() < 1e-15);
        assert!((no_jump_single(a, b, 0.5).unwrap().amplitude(1).norm_sqr() - 0.6).abs() < 1e-12);
        assert!(no_jump_single(re(1.0), re(1.0), 0.5).is_err());
    }

    #[test]
    fn monitoring_examples() {
        let (a, b) = chi();
        let r = monitored_vs_traced(a, b, 0.0).unwrap();
        assert!((r.pop_v_traced - 0.75).abs() < 1e-15 && (r.pop_v_monitored - 0.75).abs() < 1e-15);
        let r = monitored_vs_traced(a, b, 0.5).unwrap();
        assert!((r.pop_v_traced - 0.375).abs() < 1e-12);
        assert!((r.pop_v_monitored - 0.6).abs() < 1e-12);
        assert!((r.purity_monitored - 1.0).abs() < 1e-12);
        let r = monitored_vs_traced(a, b, 1.0).unwrap();
        assert!(r.pop_v_traced.abs() < 1e-15 && r.pop_v_monitored.abs() < 1e-15);
        assert!((r.purity_traced - 1.0).abs() < 1e-12);
    }

    #[test]
    fn traced_purity_matches_channel_output() {
        let (a, b) = chi();
        let rho = PureStateVector::qubit(a, b).unwrap().density();
        for p in [0.1, 0.5, 0.8] {
            let out = apply_channel(&make_channel(ChannelKind::AmplitudeDamping, p).unwrap(), &rho, 0).unwrap();
            let r = monitored_vs_traced(a, b, p).unwrap();
            assert!((r.purity_traced - purity(&out)).abs() < 1e-12);
            assert!((r.pop_v_traced - out.get(1, 1).re).abs() < 1e-12);
        }
    }

    #[test]
    fn distillation_examples() {
        let (a, b) = chi();
        let p = distillation_p(a, b).unwrap();
        assert!((p - (1.0 - 1.0 / 3f64.sqrt())).abs() < 1e-15);
        assert!((p - 0.4226).abs() < 1e-4);
        let c = concurrence_two_qubit(&conditional_two_qubit(a, b, p).unwrap().density()).unwrap();
        assert!((c.value - 1.0).abs() < 1e-9);

        let c0 = concurrence_two_qubit(&conditional_two_qubit(a, b, 0.0).unwrap().density()).unwrap();
        assert!((c0.value - 2.0 * 0.5 * 3f64.sqrt() / 2.0).abs() < 1e-12);
        let c1 = concurrence_two_qubit(&conditional_two_qubit(a, b, 1.0).unwrap().density()).unwrap();
        assert!(c1.value < 1e-12);

        assert_eq!(distillation_p(b, a), Err(Error::NoDistillation));
    }
}
