//! Simulated photon-count tomography: Poissonian counts for polarization
//! projectors, maximum-likelihood reconstruction, Monte-Carlo error bars, and the
//! direct count estimators.

use std::fmt::Write as _;
use std::path::Path;

use argmin::core::{CostFunction, Executor, Gradient, State, TerminationReason, TerminationStatus};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::statealg::{c, re, ComplexMatrix, DensityMatrix, PureStateVector, C64};

/// A polarization projector such as `"H"`, `"+"` or the two-photon `"RL"`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorSetting {
    label: String,
    projector: PureStateVector,
}

const SINGLE_LABELS: [&str; 6] = ["H", "V", "+", "-", "R", "L"];

fn single_projector(symbol: char) -> Result<[C64; 2]> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match symbol {
        'H' => [re(1.0), re(0.0)],
        'V' => [re(0.0), re(1.0)],
        '+' => [re(s), re(s)],
        '-' | '\u{2212}' => [re(s), re(-s)],
        'R' => [re(s), c(0.0, s)],
        'L' => [re(s), c(0.0, -s)],
        other => return Err(Error::UnknownSetting(other.to_string())),
    })
}

impl ProjectorSetting {
    /// One symbol per photon; `"−"` is accepted for `"-"`.
    pub fn from_label(label: &str) -> Result<Self> {
        let mut amplitudes = vec![re(1.0)];
        let mut layout = Vec::new();
        let mut canonical = String::new();
        for symbol in label.trim().chars() {
            let pair = single_projector(symbol).map_err(|_| Error::UnknownSetting(label.to_string()))?;
            amplitudes = amplitudes.iter().flat_map(|a| [a * pair[0], a * pair[1]]).collect();
            layout.push(2);
            canonical.push(if symbol == '\u{2212}' { '-' } else { symbol });
        }
        if layout.is_empty() {
            return Err(Error::UnknownSetting(label.to_string()));
        }
        Ok(Self { label: canonical, projector: PureStateVector::new(amplitudes, layout)? })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn projector(&self) -> &PureStateVector {
        &self.projector
    }

    fn operator(&self) -> ComplexMatrix {
        let v = self.projector.amplitudes();
        ComplexMatrix::outer(v, v)
    }
}

/// The `6^n` product settings over `{H, V, +, -, R, L}`.
pub fn standard_settings(n_qubits: usize) -> Vec<ProjectorSetting> {
    let mut labels = vec![String::new()];
    for _ in 0..n_qubits {
        labels = labels
            .iter()
            .flat_map(|prefix| SINGLE_LABELS.iter().map(move |s| format!("{prefix}{s}")))
            .collect();
    }
    labels
        .iter()
        .map(|l| ProjectorSetting::from_label(l).expect("standard labels parse"))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountRecord {
    pub setting: ProjectorSetting,
    pub counts: u64,
    /// Expected total counts for this setting.
    pub exposure: f64,
}

fn check_exposure(exposure: f64) -> Result<()> {
    if exposure > 0.0 && exposure.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidRate(exposure))
    }
}

fn settings_probabilities(rho: &DensityMatrix, settings: &[ProjectorSetting]) -> Result<Vec<f64>> {
    settings
        .iter()
        .map(|s| crate::statealg::projection_probability(rho, s.projector()))
        .collect()
}

fn poisson_sample<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Poisson counts with mean `exposure * <Pi>`; deterministic in `seed`.
pub fn simulate_counts(
    rho: &DensityMatrix,
    settings: &[ProjectorSetting],
    exposure: f64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    check_exposure(exposure)?;
    let probabilities = settings_probabilities(rho, settings)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(settings
        .iter()
        .zip(probabilities)
        .map(|(setting, prob)| CountRecord {
            setting: setting.clone(),
            counts: poisson_sample(exposure * prob, &mut rng),
            exposure,
        })
        .collect())
}

/// Noise-free counts: the expected values rounded to the nearest integer.
pub fn expected_counts(rho: &DensityMatrix, settings: &[ProjectorSetting], exposure: f64) -> Result<Vec<CountRecord>> {
    check_exposure(exposure)?;
    Ok(settings
        .iter()
        .zip(settings_probabilities(rho, settings)?)
        .map(|(setting, prob)| CountRecord {
            setting: setting.clone(),
            counts: (exposure * prob).round().max(0.0) as u64,
            exposure,
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct MLEResult {
    pub rho: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: u64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleOptions {
    pub max_iters: u64,
    /// Stop once the gradient of the count-normalized log-likelihood is this small.
    pub grad_tol: f64,
    /// Stop once the count-normalized log-likelihood changes by less than this.
    pub cost_tol: f64,
    /// Seeds the jitter added to the maximally mixed starting point.
    pub seed: u64,
    pub jitter: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iters: 10_000, grad_tol: 1e-8, cost_tol: 1e-12, seed: 0, jitter: 1e-3 }
    }
}

/// Poissonian likelihood over `rho = T^dagger T / Tr(T^dagger T)`, `T` lower
/// triangular with a real diagonal. Parameters: the `d` diagonal entries, then
/// real and imaginary parts of the strictly lower entries, row by row.
struct Likelihood {
    dim: usize,
    projectors: Vec<DMatrix<C64>>,
    counts: Vec<f64>,
    exposure: Vec<f64>,
    scale: f64,
}

impl Likelihood {
    fn unpack(&self, x: &[f64]) -> DMatrix<C64> {
        let d = self.dim;
        let mut t = DMatrix::zeros(d, d);
        for i in 0..d {
            t[(i, i)] = re(x[i]);
        }
        let mut k = d;
        for i in 0..d {
            for j in 0..i {
                t[(i, j)] = c(x[k], x[k + 1]);
                k += 2;
            }
        }
        t
    }

    fn pack(&self, t: &DMatrix<C64>) -> Vec<f64> {
        let d = self.dim;
        let mut x: Vec<f64> = (0..d).map(|i| t[(i, i)].re).collect();
        for i in 0..d {
            for j in 0..i {
                x.push(t[(i, j)].re);
                x.push(t[(i, j)].im);
            }
        }
        x
    }

    fn state(&self, t: &DMatrix<C64>) -> Option<DMatrix<C64>> {
        let a = t.adjoint() * t;
        let tr = a.trace().re;
        (tr > 0.0 && tr.is_finite()).then(|| a / re(tr))
    }

    fn rates(&self, rho: &DMatrix<C64>) -> Vec<f64> {
        self.projectors
            .iter()
            .zip(&self.exposure)
            .map(|(pi, e)| e * (pi * rho).trace().re)
            .collect()
    }

    fn log_likelihood(&self, rho: &DMatrix<C64>) -> f64 {
        let mut total = 0.0;
        for (&n, lambda) in self.counts.iter().zip(self.rates(rho)) {
            if n > 0.0 {
                if lambda <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                total += n * lambda.ln();
            }
            total -= lambda;
        }
        total
    }
}

impl CostFunction for Likelihood {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(match self.state(&self.unpack(x)) {
            Some(rho) => -self.log_likelihood(&rho) * self.scale,
            None => f64::INFINITY,
        })
    }
}

impl Gradient for Likelihood {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, x: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let t = self.unpack(x);
        let Some(rho) = self.state(&t) else {
            return Ok(vec![0.0; x.len()]);
        };
        let d = self.dim;
        let mut g = DMatrix::<C64>::zeros(d, d);
        for ((pi, (&n, lambda)), e) in self.projectors.iter().zip(self.counts.iter().zip(self.rates(&rho))).zip(&self.exposure) {
            let weight = if n > 0.0 { n / lambda.max(f64::MIN_POSITIVE) - 1.0 } else { -1.0 };
            g += pi * re(weight * e);
        }
        let shift = (&g * &rho).trace().re;
        let tr = (t.adjoint() * &t).trace().re;
        let h = (g - DMatrix::identity(d, d) * re(shift)) / re(tr);
        let w = &t * h * re(-2.0 * self.scale);
        let mut out: Vec<f64> = (0..d).map(|i| w[(i, i)].re).collect();
        for i in 0..d {
            for j in 0..i {
                out.push(w[(i, j)].re);
                out.push(w[(i, j)].im);
            }
        }
        Ok(out)
    }
}

fn numerical_rank(m: &DMatrix<C64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > top * 1e-10).count()
}

fn build_likelihood(records: &[CountRecord], dim: usize) -> Result<Likelihood> {
    if records.is_empty() {
        return Err(Error::NotInformationallyComplete { rank: 0, needed: dim * dim });
    }
    let mut projectors = Vec::with_capacity(records.len());
    for rec in records {
        if rec.setting.projector().dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "setting {} acts on dimension {}, expected {dim}",
                rec.setting.label(),
                rec.setting.projector().dim()
            )));
        }
        check_exposure(rec.exposure)?;
        projectors.push(rec.setting.operator().into_inner());
    }
    let stacked = DMatrix::from_fn(projectors.len(), dim * dim, |r, k| projectors[r][(k / dim, k % dim)]);
    let rank = numerical_rank(&stacked);
    if rank < dim * dim {
        return Err(Error::NotInformationallyComplete { rank, needed: dim * dim });
    }
    let counts: Vec<f64> = records.iter().map(|r| r.counts as f64).collect();
    let total: f64 = counts.iter().sum();
    Ok(Likelihood {
        dim,
        projectors,
        counts,
        exposure: records.iter().map(|r| r.exposure).collect(),
        scale: 1.0 / total.max(1.0),
    })
}

pub fn mle_reconstruct(records: &[CountRecord], dim: usize) -> Result<MLEResult> {
    mle_reconstruct_with(records, dim, &MleOptions::default())
}

/// Maximum-likelihood state by L-BFGS on the Cholesky-type parameters.
///
/// Hitting the iteration cap is not an error; the best iterate is returned with
/// `converged == false`.
pub fn mle_reconstruct_with(records: &[CountRecord], dim: usize, opts: &MleOptions) -> Result<MLEResult> {
    let problem = build_likelihood(records, dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut t0 = DMatrix::<C64>::identity(dim, dim) * re((1.0 / dim as f64).sqrt());
    for i in 0..dim {
        t0[(i, i)] += re(opts.jitter * (rng.random::<f64>() - 0.5));
    }
    let init = problem.pack(&t0);

    let numerical = |e: argmin::core::Error| Error::Numerical(e.to_string());
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
        .with_tolerance_grad(opts.grad_tol)
        .map_err(numerical)?
        .with_tolerance_cost(opts.cost_tol)
        .map_err(numerical)?;
    let outcome = Executor::new(problem, solver)
        .configure(|s| s.param(init.clone()).max_iters(opts.max_iters))
        .run()
        .map_err(numerical)?;

    let state = outcome.state();
    let converged = matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::SolverConverged)
    );
    let best = state.get_best_param().cloned().unwrap_or(init);
    let problem = &outcome.problem.problem.as_ref().expect("executor returns problem");
    let t = problem.unpack(&best);
    let rho = problem.state(&t).ok_or_else(|| Error::Numerical("degenerate Cholesky factor".into()))?;
    let log_likelihood = problem.log_likelihood(&rho);
    let layout = vec![2; dim.trailing_zeros() as usize];
    let layout = if 1usize << layout.len() == dim { layout } else { vec![dim] };
    Ok(MLEResult {
        rho: DensityMatrix::new(ComplexMatrix::from_inner(rho).hermitian_part(), layout)?,
        log_likelihood,
        iterations: state.get_iter(),
        converged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBar {
    pub mean: f64,
    /// Sample standard deviation over the successful resamples.
    pub std: f64,
    pub resamples: usize,
    pub dropped: usize,
}

/// A statistic evaluated on each re-fitted state.
pub type Statistic<'a> = &'a (dyn Fn(&DensityMatrix) -> Result<f64> + Sync);

/// Parametric bootstrap: every count is redrawn as `Poisson(n_j)`, the state is
/// re-fitted and `statistic` evaluated. Resample `k` uses seed `seed + k`, so the
/// result does not depend on thread scheduling.
pub fn monte_carlo_errorbars<F>(
    records: &[CountRecord],
    dim: usize,
    n_resamples: usize,
    statistic: F,
    seed: u64,
) -> Result<ErrorBar>
where
    F: Fn(&DensityMatrix) -> Result<f64> + Sync,
{
    Ok(monte_carlo_errorbars_many(records, dim, n_resamples, &[&statistic], seed)?[0])
}

/// Several statistics from one set of resamples. A resample is dropped if the fit
/// or any statistic fails on it.
pub fn monte_carlo_errorbars_many(
    records: &[CountRecord],
    dim: usize,
    n_resamples: usize,
    statistics: &[Statistic<'_>],
    seed: u64,
) -> Result<Vec<ErrorBar>> {
    if n_resamples < 2 {
        return Err(Error::Numerical(format!("need at least 2 resamples, got {n_resamples}")));
    }
    build_likelihood(records, dim)?;
    let values: Vec<Option<Vec<f64>>> = (0..n_resamples)
        .into_par_iter()
        .map(|k| {
            let derived = seed.wrapping_add(k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(derived);
            let resampled: Vec<CountRecord> = records
                .iter()
                .map(|r| CountRecord { counts: poisson_sample(r.counts as f64, &mut rng), ..r.clone() })
                .collect();
            let opts = MleOptions { seed: derived, ..MleOptions::default() };
            let fit = mle_reconstruct_with(&resampled, dim, &opts).ok()?;
            statistics
                .iter()
                .map(|stat| stat(&fit.rho).ok().filter(|v| v.is_finite()))
                .collect()
        })
        .collect();
    let kept: Vec<&Vec<f64>> = values.iter().flatten().collect();
    if kept.len() < 2 {
        return Err(Error::Numerical(format!("only {} of {n_resamples} resamples succeeded", kept.len())));
    }
    let n = kept.len() as f64;
    Ok((0..statistics.len())
        .map(|s| {
            let mean = kept.iter().map(|v| v[s]).sum::<f64>() / n;
            let var = kept.iter().map(|v| (v[s] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            ErrorBar { mean, std: var.sqrt(), resamples: kept.len(), dropped: n_resamples - kept.len() }
        })
        .collect())
}

/// `P = |cH - cV| / N` and `V = 2 sqrt((2c+/N - 1)^2 + (2cR/N - 1)^2)` with `N = cH + cV`.
///
/// Taken literally the visibility reaches 2 on perfect `|+>` statistics;
/// see [`pv_from_counts_normalized`].
pub fn pv_from_counts(c_h: u64, c_v: u64, c_plus: u64, c_r: u64) -> Result<(f64, f64)> {
    let n = (c_h + c_v) as f64;
    if n == 0.0 {
        return Err(Error::ZeroCounts);
    }
    let pred = (c_h as f64 - c_v as f64).abs() / n;
    let x = 2.0 * c_plus as f64 / n - 1.0;
    let y = 2.0 * c_r as f64 / n - 1.0;
    Ok((pred, 2.0 * (x * x + y * y).sqrt()))
}

/// Same estimator without the leading factor 2, clamped to `[0, 1]`; equals
/// `2|<sigma^+>|` on exact statistics when all bases share one exposure.
pub fn pv_from_counts_normalized(c_h: u64, c_v: u64, c_plus: u64, c_r: u64) -> Result<(f64, f64)> {
    let (pred, vis) = pv_from_counts(c_h, c_v, c_plus, c_r)?;
    Ok((pred, (vis / 2.0).clamp(0.0, 1.0)))
}

/// `c1 / (c0 + c1)`.
pub fn estimate_p(c0: u64, c1: u64) -> Result<f64> {
    if c0 + c1 == 0 {
        return Err(Error::ZeroCounts);
    }
    Ok(c1 as f64 / (c0 + c1) as f64)
}

/// `exposure=<real>` followed by one `<label>,<counts>` line per record.
pub fn format_counts(records: &[CountRecord]) -> Result<String> {
    let exposure = records.first().map(|r| r.exposure).ok_or(Error::Parse("no records".into()))?;
    if records.iter().any(|r| r.exposure != exposure) {
        return Err(Error::Unsupported("count files carry a single exposure".into()));
    }
    let mut out = format!("exposure={exposure}\n");
    for r in records {
        writeln!(out, "{},{}", r.setting.label(), r.counts).expect("write to string");
    }
    Ok(out)
}

pub fn parse_counts(text: &str) -> Result<Vec<CountRecord>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or(Error::Parse("empty count file".into()))?;
    let exposure: f64 = header
        .strip_prefix("exposure=")
        .ok_or_else(|| Error::Parse(format!("expected exposure header, got {header:?}")))?
        .trim()
        .parse()
        .map_err(|e| Error::Parse(format!("exposure: {e}")))?;
    check_exposure(exposure)?;
    lines
        .map(|line| {
            let (label, counts) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("expected <label>,<counts>, got {line:?}")))?;
            let counts = counts
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("counts in {line:?}: {e}")))?;
            Ok(CountRecord { setting: ProjectorSetting::from_label(label)?, counts, exposure })
        })
        .collect()
}

pub fn write_counts(path: &Path, records: &[CountRecord]) -> Result<()> {
    std::fs::write(path, format_counts(records)?)?;
    Ok(())
}

pub fn read_counts(path: &Path) -> Result<Vec<CountRecord>> {
    parse_counts(&std::fs::read_to_string(path)?)
}
