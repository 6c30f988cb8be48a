//! The five single-qubit decoherence channels as Kraus sets, their unitary
//! dilations, local products on multi-qubit states, the Sagnac-interferometer
//! realization, and the time parameterizations of `p`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statealg::{
    c, complete_unitary, embed_operator, partial_trace, pauli, re, ComplexMatrix, DensityMatrix,
    PureStateVector, C64,
};

/// Tolerance on `sum M^dagger M = I`.
pub const COMPLETENESS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    AmplitudeDamping,
    Dephasing,
    BitFlip,
    PhaseFlip,
    BitPhaseFlip,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 5] = [
        ChannelKind::AmplitudeDamping,
        ChannelKind::Dephasing,
        ChannelKind::BitFlip,
        ChannelKind::PhaseFlip,
        ChannelKind::BitPhaseFlip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::AmplitudeDamping => "amplitude_damping",
            ChannelKind::Dephasing => "dephasing",
            ChannelKind::BitFlip => "bit_flip",
            ChannelKind::PhaseFlip => "phase_flip",
            ChannelKind::BitPhaseFlip => "bit_phase_flip",
        }
    }

    pub fn is_flip(self) -> bool {
        matches!(self, ChannelKind::BitFlip | ChannelKind::PhaseFlip | ChannelKind::BitPhaseFlip)
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        match key.as_str() {
            "amplitude_damping" | "ad" | "amplitude_decay" => Ok(ChannelKind::AmplitudeDamping),
            "dephasing" | "phase_damping" | "phase_decay" => Ok(ChannelKind::Dephasing),
            "bit_flip" => Ok(ChannelKind::BitFlip),
            "phase_flip" => Ok(ChannelKind::PhaseFlip),
            "bit_phase_flip" => Ok(ChannelKind::BitPhaseFlip),
            _ => Err(Error::Config(format!("unknown channel kind {s:?}"))),
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// A `p`-parameterized single-qubit channel. Operator 0 is always the no-jump operator.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    kind: ChannelKind,
    p: f64,
    operators: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(kind: ChannelKind, p: f64) -> Result<Self> {
        check_probability(p)?;
        let keep = (1.0 - p).sqrt();
        let jump = p.sqrt();
        let operators = match kind {
            ChannelKind::AmplitudeDamping => vec![
                ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, keep]]),
                ComplexMatrix::from_real(&[&[0.0, jump], &[0.0, 0.0]]),
            ],
            ChannelKind::Dephasing => vec![
                ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, keep]]),
                ComplexMatrix::from_real(&[&[0.0, 0.0], &[0.0, jump]]),
            ],
            ChannelKind::BitFlip | ChannelKind::PhaseFlip | ChannelKind::BitPhaseFlip => {
                let sigma = match kind {
                    ChannelKind::BitFlip => pauli::x(),
                    ChannelKind::PhaseFlip => pauli::z(),
                    _ => pauli::y(),
                };
                vec![
                    pauli::identity().scale(re((1.0 - p / 2.0).sqrt())),
                    sigma.scale(re((p / 2.0).sqrt())),
                ]
            }
        };
        Ok(Self { kind, p, operators })
    }

    /// Wraps arbitrary operators without checking completeness. Used to feed
    /// deliberately broken channels through the invariant checks.
    pub fn from_raw(kind: ChannelKind, p: f64, operators: Vec<ComplexMatrix>) -> Self {
        Self { kind, p, operators }
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    /// `max |(sum M^dagger M - I)_ij|`.
    pub fn completeness_error(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(2, 2);
        for m in &self.operators {
            sum = &sum + &(&m.adjoint() * m);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(2))
    }

    pub fn is_complete(&self) -> bool {
        self.completeness_error() <= COMPLETENESS_TOL
    }

    /// Environment dimension of the dilation.
    pub fn env_dim(&self) -> usize {
        self.operators.len()
    }
}

pub fn make_channel(kind: ChannelKind, p: f64) -> Result<KrausChannel> {
    KrausChannel::new(kind, p)
}

fn check_qubit_slot(rho: &DensityMatrix, target: usize) -> Result<()> {
    let layout = rho.layout();
    match layout.get(target) {
        None => Err(Error::IndexOutOfRange { index: target, len: layout.len() }),
        Some(&2) => Ok(()),
        Some(&dim) => Err(Error::NotAQubit { slot: target, dim }),
    }
}

/// Lifts each Kraus operator of `ch` onto slot `target` of the layout.
pub(crate) fn lifted_operators(
    ch: &KrausChannel,
    rho: &DensityMatrix,
    target: usize,
) -> Result<Vec<ComplexMatrix>> {
    check_qubit_slot(rho, target)?;
    ch.operators()
        .iter()
        .map(|m| embed_operator(m, &[target], rho.layout()))
        .collect()
}

/// `sum_mu M_mu rho M_mu^dagger` on slot `target`, identity elsewhere.
pub fn apply_channel(ch: &KrausChannel, rho: &DensityMatrix, target: usize) -> Result<DensityMatrix> {
    let dim = rho.dim();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for k in lifted_operators(ch, rho, target)? {
        out = &out + &(&(&k * rho.matrix()) * &k.adjoint());
    }
    DensityMatrix::new(out, rho.layout().to_vec())
}

/// One channel per slot, applied on disjoint supports.
pub fn apply_local(chs: &[KrausChannel], rho: &DensityMatrix) -> Result<DensityMatrix> {
    if chs.len() != rho.layout().len() {
        return Err(Error::ChannelCountMismatch { channels: chs.len(), slots: rho.layout().len() });
    }
    chs.iter()
        .enumerate()
        .try_fold(rho.clone(), |state, (slot, ch)| apply_channel(ch, &state, slot))
}

/// The same channel on each of `n` slots.
pub fn uniform(kind: ChannelKind, p: f64, n: usize) -> Result<Vec<KrausChannel>> {
    let ch = make_channel(kind, p)?;
    Ok(vec![ch; n])
}

/// Unitary `V` on system ⊗ environment (environment dimension = operator count)
/// with `V |s>|0> = sum_mu M_mu |s>|mu>`; the remaining columns complete it.
pub fn dilate(ch: &KrausChannel) -> Result<ComplexMatrix> {
    let k = ch.env_dim();
    let dim = 2 * k;
    let mut fixed = Vec::with_capacity(2);
    for s in 0..2 {
        let mut col = DVector::from_element(dim, re(0.0));
        for (mu, m) in ch.operators().iter().enumerate() {
            for r in 0..2 {
                col[r * k + mu] = m.get(r, s);
            }
        }
        fixed.push((s * k, col));
    }
    complete_unitary(dim, &fixed)
}

/// Operators `<mu| U |0>` of a system ⊗ environment unitary.
pub fn kraus_from_dilation(u: &ComplexMatrix, sys_dim: usize, env_dim: usize) -> Vec<ComplexMatrix> {
    (0..env_dim)
        .map(|mu| {
            let mut m = ComplexMatrix::zeros(sys_dim, sys_dim);
            for r in 0..sys_dim {
                for s in 0..sys_dim {
                    m.set(r, s, u.get(r * env_dim + mu, s * env_dim));
                }
            }
            m
        })
        .collect()
}

/// `Tr_E[U (rho ⊗ |0><0|) U^dagger]` for a single-qubit system.
pub fn trace_environment(u: &ComplexMatrix, rho: &DensityMatrix, env_dim: usize) -> Result<DensityMatrix> {
    if rho.layout() != [2] || u.rows() != 2 * env_dim {
        return Err(Error::DimensionMismatch("expected a qubit and a matching dilation".into()));
    }
    let env0 = PureStateVector::basis(vec![env_dim], 0)?.density();
    let joint = rho.tensor(&env0);
    let evolved = DensityMatrix::new(&(u * joint.matrix()) * &u.adjoint(), joint.layout().to_vec())?;
    partial_trace(&evolved, &[0])
}

/// Joint system ⊗ environment pure state `V |psi>|0>` of a single qubit.
pub fn dilate_state(ch: &KrausChannel, psi: &PureStateVector) -> Result<PureStateVector> {
    dilate_local(std::slice::from_ref(ch), psi)
}

/// Joint pure state of `n` qubits and their private environments, layout
/// `[S_1..S_n, E_1..E_n]`, each environment starting in `|0>`.
pub fn dilate_local(chs: &[KrausChannel], psi: &PureStateVector) -> Result<PureStateVector> {
    let n = psi.layout().len();
    if chs.len() != n {
        return Err(Error::ChannelCountMismatch { channels: chs.len(), slots: n });
    }
    if let Some((slot, &dim)) = psi.layout().iter().enumerate().find(|(_, &d)| d != 2) {
        return Err(Error::NotAQubit { slot, dim });
    }
    let mut joint = psi.clone();
    for ch in chs {
        joint = joint.tensor(&PureStateVector::basis(vec![ch.env_dim()], 0)?);
    }
    let layout = joint.layout().to_vec();
    for (i, ch) in chs.iter().enumerate() {
        let lifted = embed_operator(&dilate(ch)?, &[i, n + i], &layout)?;
        joint = joint.evolve(&lifted)?;
    }
    Ok(joint)
}

/// Wave-plate angles and phase-plate phase of one Sagnac interferometer, in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SagnacSettings {
    pub theta_h: f64,
    pub theta_v: f64,
    pub theta_1: f64,
    pub phi: f64,
}

impl SagnacSettings {
    pub fn new(theta_h: f64, theta_v: f64, theta_1: f64, phi: f64) -> Result<Self> {
        if [theta_h, theta_v, theta_1, phi].iter().all(|x| x.is_finite()) {
            Ok(Self { theta_h, theta_v, theta_1, phi })
        } else {
            Err(Error::Numerical("non-finite Sagnac setting".into()))
        }
    }
}

/// Polarization ⊗ mode unitary of the interferometer, basis `{H0, H1, V0, V1}`.
/// Only the `|H>|0>` and `|V>|0>` columns are physical; the rest complete a unitary.
pub fn sagnac_unitary(s: &SagnacSettings) -> ComplexMatrix {
    let phase = c(s.phi.cos(), s.phi.sin());
    let (ch, sh) = ((2.0 * s.theta_h).cos(), (2.0 * s.theta_h).sin());
    let (cv, sv) = ((2.0 * s.theta_v).cos(), (2.0 * s.theta_v).sin());
    let (c1, s1) = ((2.0 * s.theta_1).cos(), (2.0 * s.theta_1).sin());
    let h0 = DVector::from_vec(vec![re(ch), phase * sh * s1, re(0.0), -phase * sh * c1]);
    let v0 = DVector::from_vec(vec![re(0.0), phase * sv * c1, re(cv), phase * sv * s1]);
    complete_unitary(4, &[(0, h0), (2, v0)]).expect("Sagnac columns are orthonormal")
}

/// Table of interferometer settings realizing each channel at strength `p`.
///
/// Amplitude damping and dephasing use `p = sin^2(2 theta)`. The flip channels
/// put weight `sin^2(2 theta)` on the Pauli error, which must equal `p/2` for
/// the Kraus sets `sqrt(1 - p/2) I, sqrt(p/2) sigma`, so there `sin^2(2 theta) = p/2`.
pub fn settings_for(kind: ChannelKind, p: f64) -> Result<SagnacSettings> {
    check_probability(p)?;
    let weight = if kind.is_flip() { p / 2.0 } else { p };
    let theta = 0.5 * weight.sqrt().asin();
    let quarter = std::f64::consts::FRAC_PI_4;
    let half = std::f64::consts::FRAC_PI_2;
    let (h, v, one, phi) = match kind {
        ChannelKind::AmplitudeDamping => (0.0, theta, 0.0, 0.0),
        ChannelKind::Dephasing => (0.0, theta, quarter, 0.0),
        ChannelKind::BitFlip => (-theta, theta, 0.0, 0.0),
        ChannelKind::PhaseFlip => (theta, -theta, quarter, 0.0),
        ChannelKind::BitPhaseFlip => (-theta, -theta, 0.0, half),
    };
    SagnacSettings::new(h, v, one, phi)
}

/// Polarization state after the interferometer with the output modes combined incoherently.
pub fn sagnac_channel_action(s: &SagnacSettings, rho: &DensityMatrix) -> Result<DensityMatrix> {
    trace_environment(&sagnac_unitary(s), rho, 2)
}

/// Relation between elapsed time and the transition probability `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TimeModel {
    /// `p = 1 - exp(-rate t)`.
    MarkovDecay { rate: f64 },
    /// `p = sin^2(omega t / 2)`.
    RabiOscillation { omega: f64 },
}

impl TimeModel {
    pub fn markov(rate: f64) -> Result<Self> {
        if rate > 0.0 && rate.is_finite() {
            Ok(TimeModel::MarkovDecay { rate })
        } else {
            Err(Error::InvalidRate(rate))
        }
    }

    pub fn rabi(omega: f64) -> Result<Self> {
        if omega > 0.0 && omega.is_finite() {
            Ok(TimeModel::RabiOscillation { omega })
        } else {
            Err(Error::InvalidRate(omega))
        }
    }
}

pub fn p_of_time(model: &TimeModel, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    Ok(match *model {
        TimeModel::MarkovDecay { rate } => -(-rate * t).exp_m1(),
        TimeModel::RabiOscillation { omega } => (omega * t / 2.0).sin().powi(2),
    })
}

/// Complex amplitude helper used by the scenario builders: `modulus * e^{i phase}`.
pub fn polar(modulus: f64, phase: f64) -> C64 {
    C64::from_polar(modulus, phase)
}
