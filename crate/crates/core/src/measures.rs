//! Scalar figures of merit: concurrences, negativity, predictability and
//! visibility, the witness family `|Phi(theta)>`, and the closed-form curves
//! that serve as references for the numerical routes.

use serde::Serialize;

use crate::channels::ChannelKind;
use crate::error::{Error, Result};
use crate::statealg::{
    herm_eigen, herm_eigenvalues, partial_trace, partial_transpose, pauli, projection_probability,
    psd_sqrt, purity, schmidt_coefficients, tensor, DensityMatrix, PureStateVector, C64,
};

/// Joint states with purity below `1 - PURE_TOL` are rejected where a pure state is required.
pub const PURE_TOL: f64 = 1e-8;

/// Wootters concurrence together with the signed combination it is clipped from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Concurrence {
    /// `max(0, lambda)`.
    pub value: f64,
    /// `sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4)`.
    pub lambda: f64,
}

fn require_layout(rho: &DensityMatrix, layout: &[usize], what: &str) -> Result<()> {
    if rho.layout() == layout {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} needs layout {layout:?}, got {:?}",
            rho.layout()
        )))
    }
}

/// Wootters concurrence of a two-qubit state.
///
/// The square roots of the eigenvalues of `rho (Y ⊗ Y) rho* (Y ⊗ Y)` equal the
/// singular values of `sqrt(rho) (Y ⊗ Y) sqrt(rho)*`; the SVD keeps them accurate
/// to machine precision even where the eigenvalues themselves vanish.
pub fn concurrence_two_qubit(rho: &DensityMatrix) -> Result<Concurrence> {
    require_layout(rho, &[2, 2], "two-qubit concurrence")?;
    let yy = tensor(&pauli::y(), &pauli::y());
    let root = psd_sqrt(rho.matrix())?;
    let a = &(&root * &yy) * &root.conj();
    let mut sv: Vec<f64> = a.inner().clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let lambda = sv[0] - sv[1] - sv[2] - sv[3];
    Ok(Concurrence { value: lambda.max(0.0), lambda })
}

/// `sqrt(2 (1 - Tr rho_A^2))` of a pure joint state, `A` being the `partition` slots.
///
/// Evaluated as `2 sqrt(sum_{i<j} s_i^2 s_j^2)` over the Schmidt coefficients, which
/// stays accurate near product states where `1 - Tr rho_A^2` cancels.
pub fn system_environment_concurrence(joint: &DensityMatrix, partition: &[usize]) -> Result<f64> {
    let total = purity(joint);
    if total < 1.0 - PURE_TOL {
        return Err(Error::NotPure(total));
    }
    let (_, vectors) = herm_eigen(joint.matrix())?;
    let psi = PureStateVector::normalized(vectors.column(0).iter().copied().collect(), joint.layout().to_vec())?;
    concurrence_pure_bipartite(&psi, partition)
}

pub fn concurrence_pure_bipartite(psi: &PureStateVector, partition: &[usize]) -> Result<f64> {
    let s = schmidt_coefficients(psi, partition)?;
    let mut pairs = 0.0;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            pairs += (s[i] * s[j]).powi(2);
        }
    }
    Ok(2.0 * pairs.sqrt())
}

/// Sum of the magnitudes of the negative eigenvalues of the partial transpose on `partition`.
pub fn negativity(rho: &DensityMatrix, partition: usize) -> Result<f64> {
    if rho.layout().len() != 2 {
        return Err(Error::DimensionMismatch("negativity needs a bipartite layout".into()));
    }
    let values = herm_eigenvalues(&partial_transpose(rho, partition)?)?;
    Ok(values.iter().filter(|&&v| v < 0.0).map(|v| -v).sum())
}

fn require_qubit(rho: &DensityMatrix) -> Result<()> {
    require_layout(rho, &[2], "single-qubit measure")
}

/// `|<sigma_z>|`.
pub fn predictability(rho: &DensityMatrix) -> Result<f64> {
    require_qubit(rho)?;
    Ok((rho.get(0, 0).re - rho.get(1, 1).re).abs())
}

/// `2 |<sigma^+>|` with `sigma^+ = |1><0|`, i.e. twice the coherence `|rho_01|`.
pub fn visibility(rho: &DensityMatrix) -> Result<f64> {
    require_qubit(rho)?;
    Ok(2.0 * rho.expectation(&pauli::raising())?.norm())
}

/// Squared predictability, visibility and system-environment concurrence of one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplementarityTriple {
    pub pred_sq: f64,
    pub vis_sq: f64,
    pub conc_sq: f64,
}

impl ComplementarityTriple {
    pub fn sum(&self) -> f64 {
        self.pred_sq + self.vis_sq + self.conc_sq
    }
}

/// Complementarity triple of qubit `system_slot` within a pure joint state.
pub fn complementarity_triple(joint: &DensityMatrix, system_slot: usize) -> Result<ComplementarityTriple> {
    let total = purity(joint);
    if total < 1.0 - PURE_TOL {
        return Err(Error::NotPure(total));
    }
    if joint.layout().get(system_slot) != Some(&2) {
        return Err(Error::NotAQubit {
            slot: system_slot,
            dim: joint.layout().get(system_slot).copied().unwrap_or(0),
        });
    }
    let rho = partial_trace(joint, &[system_slot])?;
    let pred = predictability(&rho)?;
    let vis = visibility(&rho)?;
    Ok(ComplementarityTriple {
        pred_sq: pred * pred,
        vis_sq: vis * vis,
        conc_sq: (2.0 * (1.0 - purity(&rho))).max(0.0),
    })
}

/// Twice the modulus of the `|11><00|` coherence.
pub fn bipartite_visibility(rho: &DensityMatrix) -> Result<f64> {
    require_layout(rho, &[2, 2], "bipartite visibility")?;
    Ok(2.0 * rho.get(3, 0).norm())
}

/// Generalized concurrence of a pure `N`-qubit state:
/// `2^(1 - N/2) sqrt((2^N - 2) - sum_i Tr rho_i^2)` over all nontrivial reductions.
pub fn multipartite_concurrence(psi: &PureStateVector) -> Result<f64> {
    let n = psi.layout().len();
    if n < 2 {
        return Err(Error::DimensionMismatch("multipartite concurrence needs N >= 2".into()));
    }
    if let Some((slot, &dim)) = psi.layout().iter().enumerate().find(|(_, &d)| d != 2) {
        return Err(Error::NotAQubit { slot, dim });
    }
    let rho = psi.density();
    let full = (1usize << n) - 1;
    let mut purities = 0.0;
    for mask in 1..full {
        let keep: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
        purities += purity(&partial_trace(&rho, &keep)?);
    }
    let nontrivial = (full - 1) as f64;
    Ok(2f64.powf(1.0 - n as f64 / 2.0) * (nontrivial - purities).max(0.0).sqrt())
}

/// `(|00> + e^{i theta} |11>) / sqrt(2)`.
pub fn phi_state(theta: f64) -> PureStateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    PureStateVector::two_qubit_correlated(C64::new(s, 0.0), C64::from_polar(s, theta))
        .expect("normalized by construction")
}

/// `Gamma_theta = 2 (<Phi(theta)| rho |Phi(theta)> - 1/2)`.
pub fn witness_gamma(rho: &DensityMatrix, theta: f64) -> Result<f64> {
    require_layout(rho, &[2, 2], "witness")?;
    Ok(2.0 * (projection_probability(rho, &phi_state(theta))? - 0.5))
}

/// The witness maximized over the family: `theta* = arg rho_{11,00}` (0 if that element vanishes).
pub fn witness_best_gamma(rho: &DensityMatrix) -> Result<(f64, f64)> {
    require_layout(rho, &[2, 2], "witness")?;
    let coherence = rho.get(3, 0);
    let theta = if coherence.norm() == 0.0 { 0.0 } else { coherence.arg() };
    Ok((theta, witness_gamma(rho, theta)?))
}

/// Closed-form two-qubit curves for `alpha|00> + beta|11>` under two identical local channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalyticCurves {
    pub kind: ChannelKind,
    pub p: f64,
    pub c_s1s2: f64,
    pub c_se: f64,
    pub c_s1e1: f64,
    pub c_e1e2: f64,
    pub v_s1s2: f64,
    /// Four-party concurrence; only tabulated for dephasing.
    pub c_4: Option<f64>,
    pub p_esd: Option<f64>,
    pub p_esb: Option<f64>,
}

fn check_amplitudes(alpha: C64, beta: C64) -> Result<()> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm.sqrt()));
    }
    Ok(())
}

/// Sudden-death point `|alpha/beta|` of dual amplitude damping, if it lies below 1.
pub fn p_esd(alpha: C64, beta: C64) -> Option<f64> {
    (alpha.norm() < beta.norm()).then(|| alpha.norm() / beta.norm())
}

pub fn analytic_curves(kind: ChannelKind, alpha: C64, beta: C64, p: f64) -> Result<AnalyticCurves> {
    check_amplitudes(alpha, beta)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let (a, b) = (alpha.norm(), beta.norm());
    let v_s1s2 = 2.0 * (1.0 - p) * a * b;
    match kind {
        ChannelKind::AmplitudeDamping => {
            let esd = p_esd(alpha, beta);
            Ok(AnalyticCurves {
                kind,
                p,
                c_s1s2: (2.0 * (1.0 - p) * b * (a - p * b)).max(0.0),
                c_se: 2.0 * 2f64.sqrt() * b * (p * (1.0 - p)).sqrt() * (1.0 - b * b * p * (1.0 - p)).sqrt(),
                c_s1e1: 2.0 * b * b * (p * (1.0 - p)).sqrt(),
                c_e1e2: (2.0 * p * b * (a - (1.0 - p) * b)).max(0.0),
                v_s1s2,
                c_4: None,
                p_esd: esd,
                p_esb: esd.map(|x| 1.0 - x),
            })
        }
        ChannelKind::Dephasing => Ok(AnalyticCurves {
            kind,
            p,
            c_s1s2: v_s1s2,
            c_se: 2.0 * a * b * (p * (2.0 - p)).sqrt(),
            c_s1e1: 0.0,
            c_e1e2: 0.0,
            v_s1s2,
            c_4: Some(a * b * (4.0 + 4.0 * p - p * p).sqrt()),
            p_esd: None,
            p_esb: None,
        }),
        other => Err(Error::Unsupported(format!("no two-qubit closed form for {other}"))),
    }
}

/// Closed-form predictability, visibility and system-environment concurrence of
/// `alpha|0> + beta|1>` under a single channel. The flip-channel rows use the squares
/// of the complex amplitudes, not their moduli.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingleQubitCurves {
    pub pred: f64,
    pub vis: f64,
    pub c_se: f64,
}

pub fn single_qubit_curves(kind: ChannelKind, alpha: C64, beta: C64, p: f64) -> Result<SingleQubitCurves> {
    check_amplitudes(alpha, beta)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
    let pred0 = (a2 - b2).abs();
    let vis0 = 2.0 * alpha.norm() * beta.norm();
    let flip = (p * (2.0 - p)).sqrt();
    let cross = alpha * beta.conj();
    Ok(match kind {
        ChannelKind::AmplitudeDamping => SingleQubitCurves {
            pred: (1.0 - 2.0 * (1.0 - p) * b2).abs(),
            vis: (1.0 - p).sqrt() * vis0,
            c_se: 2.0 * b2 * (p * (1.0 - p)).sqrt(),
        },
        ChannelKind::Dephasing => SingleQubitCurves {
            pred: pred0,
            vis: (1.0 - p).sqrt() * vis0,
            c_se: p.sqrt() * vis0,
        },
        ChannelKind::BitFlip => SingleQubitCurves {
            pred: (1.0 - p) * pred0,
            vis: (cross * (2.0 - p) + cross.conj() * p).norm(),
            c_se: flip * (alpha * alpha - beta * beta).norm(),
        },
        ChannelKind::PhaseFlip => SingleQubitCurves {
            pred: pred0,
            vis: (1.0 - p) * vis0,
            c_se: flip * vis0,
        },
        ChannelKind::BitPhaseFlip => SingleQubitCurves {
            pred: (1.0 - p) * pred0,
            vis: (cross * (2.0 - p) - cross.conj() * p).norm(),
            c_se: flip * (alpha * alpha + beta * beta).norm(),
        },
    })
}
