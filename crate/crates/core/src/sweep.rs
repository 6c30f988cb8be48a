//! Configuration-driven parameter sweeps over the channel strength `p`, their
//! CSV serialization, and the channel self-check suite.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::channels::{
    apply_channel, apply_local, dilate, dilate_state, make_channel, polar, sagnac_channel_action,
    settings_for, trace_environment, uniform, ChannelKind, KrausChannel, COMPLETENESS_TOL,
};
use crate::error::{Error, Result};
use crate::measures::{complementarity_triple, concurrence_two_qubit, witness_best_gamma};
use crate::monitor::{conditional_two_qubit, monitored_vs_traced};
use crate::statealg::{
    c, herm_eigenvalues, partial_trace, purity, re, ComplexMatrix, DensityMatrix, PureStateVector, C64,
};
use crate::tomo::{mle_reconstruct_with, monte_carlo_errorbars_many, simulate_counts, standard_settings, MleOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    ComplementaritySingle,
    MonitorSingle,
    EsdTwoQubit,
    WitnessTwoQubit,
    DephasingTwoQubit,
    PurityTwoQubit,
    Distillation,
    TomoDemo,
}

impl Scenario {
    fn single_qubit(self) -> bool {
        matches!(self, Scenario::ComplementaritySingle | Scenario::MonitorSingle)
    }
}

/// Named initial states `|alpha||HH> + |beta| e^{i delta} |VV>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatePreset {
    /// `|alpha| = 1/2`.
    Theta1,
    /// `|alpha| = sqrt(3)/2`.
    Theta2,
}

fn default_p_max() -> f64 {
    1.0
}

fn default_points() -> usize {
    101
}

fn default_resamples() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub scenario: Scenario,
    pub channel: Option<ChannelKind>,
    pub state: Option<StatePreset>,
    pub alpha_mod: Option<f64>,
    #[serde(default)]
    pub alpha_phase: f64,
    /// Defaults to `sqrt(1 - alpha_mod^2)`.
    pub beta_mod: Option<f64>,
    #[serde(default)]
    pub beta_phase: f64,
    /// Added to the phase of `beta`.
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub p_min: f64,
    #[serde(default = "default_p_max")]
    pub p_max: f64,
    #[serde(default = "default_points")]
    pub p_points: usize,
    /// Expected counts per setting; enables the simulated-tomography columns.
    pub exposure: Option<f64>,
    #[serde(default = "default_resamples")]
    pub n_resamples: usize,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Weight `v` of `v |Theta><Theta| + (1 - v) I/4`.
    pub mixing_v: Option<f64>,
    /// Chooses `v` so the initial concurrence takes this value.
    pub target_concurrence: Option<f64>,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn amplitudes(&self) -> Result<(C64, C64)> {
        let (a_mod, b_mod) = match (self.state, self.alpha_mod) {
            (Some(_), Some(_)) => return Err(Error::Config("give either state or alpha_mod, not both".into())),
            (Some(StatePreset::Theta1), None) => (0.5, 3f64.sqrt() / 2.0),
            (Some(StatePreset::Theta2), None) => (3f64.sqrt() / 2.0, 0.5),
            (None, Some(a)) => (a, self.beta_mod.unwrap_or_else(|| (1.0 - a * a).max(0.0).sqrt())),
            (None, None) => return Err(Error::Config("missing state or alpha_mod".into())),
        };
        if self.state.is_some() && self.beta_mod.is_some() {
            return Err(Error::Config("beta_mod cannot be combined with a state preset".into()));
        }
        let norm = a_mod * a_mod + b_mod * b_mod;
        if a_mod < 0.0 || b_mod < 0.0 || (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Config(format!("|alpha|^2 + |beta|^2 = {norm}, expected 1")));
        }
        Ok((polar(a_mod, self.alpha_phase), polar(b_mod, self.beta_phase + self.delta)))
    }

    pub fn channel_kind(&self) -> Result<ChannelKind> {
        let fixed = match self.scenario {
            Scenario::DephasingTwoQubit => Some(ChannelKind::Dephasing),
            Scenario::MonitorSingle | Scenario::Distillation => Some(ChannelKind::AmplitudeDamping),
            _ => None,
        };
        match (fixed, self.channel) {
            (Some(f), Some(k)) if f != k => Err(Error::Config(format!(
                "scenario {:?} requires channel {f}, got {k}",
                self.scenario
            ))),
            (Some(f), _) => Ok(f),
            (None, k) => Ok(k.unwrap_or(ChannelKind::AmplitudeDamping)),
        }
    }

    pub fn p_grid(&self) -> Result<Vec<f64>> {
        let ok = |x: f64| (0.0..=1.0).contains(&x);
        if !ok(self.p_min) || !ok(self.p_max) || self.p_min > self.p_max {
            return Err(Error::Config(format!("p range [{}, {}] must lie in [0, 1]", self.p_min, self.p_max)));
        }
        match self.p_points {
            0 => Err(Error::Config("p_points must be positive".into())),
            1 => Ok(vec![self.p_min]),
            n => Ok((0..n)
                .map(|i| {
                    if i == n - 1 {
                        self.p_max
                    } else {
                        self.p_min + (self.p_max - self.p_min) * i as f64 / (n - 1) as f64
                    }
                })
                .collect()),
        }
    }

    fn exposure(&self) -> Result<Option<f64>> {
        let exposure = match (self.scenario, self.exposure) {
            (Scenario::TomoDemo, None) => Some(1e4),
            (_, e) => e,
        };
        match exposure {
            Some(e) if !(e > 0.0 && e.is_finite()) => Err(Error::Config(format!("exposure {e} must be positive"))),
            Some(_) if self.n_resamples < 2 => Err(Error::Config("n_resamples must be at least 2".into())),
            e => Ok(e),
        }
    }

    /// The `v` in use, if the initial two-qubit state is impure.
    pub fn mixing(&self, alpha: C64, beta: C64) -> Result<Option<f64>> {
        let v = match (self.mixing_v, self.target_concurrence) {
            (Some(_), Some(_)) => return Err(Error::Config("give mixing_v or target_concurrence, not both".into())),
            (Some(v), None) => Some(v),
            (None, Some(target)) => Some(mixing_for_concurrence(alpha, beta, target)?),
            (None, None) => None,
        };
        if let Some(v) = v {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("mixing_v {v} outside [0, 1]")));
            }
            if self.scenario.single_qubit() || self.scenario == Scenario::Distillation {
                return Err(Error::Config(format!("scenario {:?} needs a pure initial state", self.scenario)));
            }
        }
        Ok(v)
    }
}

/// White-noise weight `v` giving `v |Theta><Theta| + (1 - v) I/4` concurrence `target`.
pub fn mixing_for_concurrence(alpha: C64, beta: C64, target: f64) -> Result<f64> {
    let psi = PureStateVector::two_qubit_correlated(alpha, beta)?;
    let conc = |v: f64| -> Result<f64> {
        Ok(concurrence_two_qubit(&DensityMatrix::white_noise_mixture(&psi, v)?)?.value)
    };
    let top = conc(1.0)?;
    if !(target > 0.0 && target <= top) {
        return Err(Error::Config(format!("target concurrence {target} outside (0, {top}]")));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if conc(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One sweep point. Absent fields are left empty in the CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub concurrence: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma_witness: Option<f64>,
    pub purity: Option<f64>,
    pub purity_monitored: Option<f64>,
    pub pred_sq: Option<f64>,
    pub vis_sq: Option<f64>,
    pub cse_sq: Option<f64>,
    pub complementarity_sum: Option<f64>,
    pub pop_v_traced: Option<f64>,
    pub pop_v_monitored: Option<f64>,
    pub concurrence_mle: Option<f64>,
    pub concurrence_std: Option<f64>,
    pub purity_mle: Option<f64>,
    pub purity_std: Option<f64>,
}

const COLUMNS: [&str; 16] = [
    "p",
    "concurrence",
    "lambda",
    "gamma_witness",
    "purity",
    "purity_monitored",
    "pred_sq",
    "vis_sq",
    "cse_sq",
    "complementarity_sum",
    "pop_V_traced",
    "pop_V_monitored",
    "concurrence_mle",
    "concurrence_std",
    "purity_mle",
    "purity_std",
];

impl SweepRow {
    fn values(&self) -> [Option<f64>; 16] {
        [
            Some(self.p),
            self.concurrence,
            self.lambda,
            self.gamma_witness,
            self.purity,
            self.purity_monitored,
            self.pred_sq,
            self.vis_sq,
            self.cse_sq,
            self.complementarity_sum,
            self.pop_v_traced,
            self.pop_v_monitored,
            self.concurrence_mle,
            self.concurrence_std,
            self.purity_mle,
            self.purity_std,
        ]
    }

    fn slot(&mut self, column: usize) -> &mut Option<f64> {
        match column {
            1 => &mut self.concurrence,
            2 => &mut self.lambda,
            3 => &mut self.gamma_witness,
            4 => &mut self.purity,
            5 => &mut self.purity_monitored,
            6 => &mut self.pred_sq,
            7 => &mut self.vis_sq,
            8 => &mut self.cse_sq,
            9 => &mut self.complementarity_sum,
            10 => &mut self.pop_v_traced,
            11 => &mut self.pop_v_monitored,
            12 => &mut self.concurrence_mle,
            13 => &mut self.concurrence_std,
            14 => &mut self.purity_mle,
            15 => &mut self.purity_std,
            _ => unreachable!("column index"),
        }
    }
}

/// Everything a row needs besides `p`.
struct Plan {
    scenario: Scenario,
    kind: ChannelKind,
    alpha: C64,
    beta: C64,
    initial: Option<DensityMatrix>,
    exposure: Option<f64>,
    n_resamples: usize,
    seed: u64,
}

fn row_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn fill_two_qubit(row: &mut SweepRow, scenario: Scenario, rho: &DensityMatrix) -> Result<()> {
    let conc = concurrence_two_qubit(rho)?;
    match scenario {
        Scenario::PurityTwoQubit => row.purity = Some(purity(rho)),
        Scenario::WitnessTwoQubit => {
            row.concurrence = Some(conc.value);
            row.lambda = Some(conc.lambda);
            row.gamma_witness = Some(witness_best_gamma(rho)?.1);
        }
        _ => {
            row.concurrence = Some(conc.value);
            row.lambda = Some(conc.lambda);
            row.purity = Some(purity(rho));
        }
    }
    Ok(())
}

impl Plan {
    fn row(&self, index: usize, p: f64) -> Result<SweepRow> {
        let mut row = SweepRow { p, ..SweepRow::default() };
        let state = match self.scenario {
            Scenario::ComplementaritySingle => {
                let chi = PureStateVector::qubit(self.alpha, self.beta)?;
                let joint = dilate_state(&make_channel(self.kind, p)?, &chi)?.density();
                let t = complementarity_triple(&joint, 0)?;
                row.pred_sq = Some(t.pred_sq);
                row.vis_sq = Some(t.vis_sq);
                row.cse_sq = Some(t.conc_sq);
                row.complementarity_sum = Some(t.sum());
                let reduced = partial_trace(&joint, &[0])?;
                row.purity = Some(purity(&reduced));
                reduced
            }
            Scenario::MonitorSingle => {
                let m = monitored_vs_traced(self.alpha, self.beta, p)?;
                row.pop_v_traced = Some(m.pop_v_traced);
                row.pop_v_monitored = Some(m.pop_v_monitored);
                row.purity = Some(m.purity_traced);
                row.purity_monitored = Some(m.purity_monitored);
                let chi = PureStateVector::qubit(self.alpha, self.beta)?.density();
                apply_channel(&make_channel(self.kind, p)?, &chi, 0)?
            }
            Scenario::Distillation => {
                let rho = conditional_two_qubit(self.alpha, self.beta, p)?.density();
                fill_two_qubit(&mut row, self.scenario, &rho)?;
                rho
            }
            _ => {
                let initial = self.initial.as_ref().expect("two-qubit plans carry a state");
                let rho = apply_local(&uniform(self.kind, p, 2)?, initial)?;
                fill_two_qubit(&mut row, self.scenario, &rho)?;
                rho
            }
        };
        if let Some(exposure) = self.exposure {
            self.noisy(&mut row, &state, exposure, row_seed(self.seed, index))?;
        }
        for (name, v) in COLUMNS.iter().zip(row.values()) {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::Numerical(format!("{name} is {v} at p = {p}")));
                }
            }
        }
        Ok(row)
    }

    fn noisy(&self, row: &mut SweepRow, state: &DensityMatrix, exposure: f64, seed: u64) -> Result<()> {
        let qubits = state.layout().len();
        let dim = state.dim();
        let records = simulate_counts(state, &standard_settings(qubits), exposure, seed)?;
        let fit = mle_reconstruct_with(&records, dim, &MleOptions { seed, ..MleOptions::default() })?;
        let purity_stat = |r: &DensityMatrix| Ok(purity(r));
        let conc_stat = |r: &DensityMatrix| concurrence_two_qubit(r).map(|c| c.value);
        let resample_seed = seed.wrapping_add(1 << 32);
        if qubits == 2 {
            let bars = monte_carlo_errorbars_many(&records, dim, self.n_resamples, &[&conc_stat, &purity_stat], resample_seed)?;
            row.concurrence_mle = Some(concurrence_two_qubit(&fit.rho)?.value);
            row.concurrence_std = Some(bars[0].std);
            row.purity_mle = Some(purity(&fit.rho));
            row.purity_std = Some(bars[1].std);
        } else {
            let bars = monte_carlo_errorbars_many(&records, dim, self.n_resamples, &[&purity_stat], resample_seed)?;
            row.purity_mle = Some(purity(&fit.rho));
            row.purity_std = Some(bars[0].std);
        }
        Ok(())
    }
}

/// Computes every grid point (in parallel, ordered by `p`) and writes the CSV if an output is set.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let (alpha, beta) = config.amplitudes()?;
    let kind = config.channel_kind()?;
    let grid = config.p_grid()?;
    let exposure = config.exposure()?;
    let mixing = config.mixing(alpha, beta)?;
    let initial = if config.scenario.single_qubit() || config.scenario == Scenario::Distillation {
        None
    } else {
        let psi = PureStateVector::two_qubit_correlated(alpha, beta)?;
        Some(match mixing {
            Some(v) => DensityMatrix::white_noise_mixture(&psi, v)?,
            None => psi.density(),
        })
    };
    let plan = Plan {
        scenario: config.scenario,
        kind,
        alpha,
        beta,
        initial,
        exposure,
        n_resamples: config.n_resamples,
        seed: config.seed,
    };
    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(i, &p)| plan.row(i, p))
        .collect::<Result<Vec<_>>>()?;
    if let Some(path) = &config.output {
        std::fs::write(path, format_csv(&rows)?)?;
    }
    Ok(rows)
}

/// 12 significant digits; lowercase scientific notation when `|x| < 1e-4` or `|x| >= 1e6`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if !(-4..6).contains(&exponent) {
        return format!("{}e{exponent}", trim_zeros(mantissa));
    }
    let decimals = (11 - exponent).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn format_csv(rows: &[SweepRow]) -> Result<String> {
    let present: Vec<usize> = (0..COLUMNS.len())
        .filter(|&k| rows.iter().any(|r| r.values()[k].is_some()))
        .collect();
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    writer.write_record(present.iter().map(|&k| COLUMNS[k])).map_err(csv_err)?;
    for row in rows {
        let values = row.values();
        writer
            .write_record(present.iter().map(|&k| values[k].map(format_number).unwrap_or_default()))
            .map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    let columns: Vec<usize> = header
        .iter()
        .map(|name| {
            COLUMNS
                .iter()
                .position(|c| *c == name)
                .ok_or_else(|| Error::Parse(format!("unknown column {name:?}")))
        })
        .collect::<Result<_>>()?;
    if columns.first() != Some(&0) {
        return Err(Error::Parse("first column must be p".into()));
    }
    reader
        .records()
        .map(|record| {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            let mut row = SweepRow::default();
            for (&k, field) in columns.iter().zip(record.iter()) {
                let value = if field.is_empty() {
                    None
                } else {
                    Some(field.parse::<f64>().map_err(|e| Error::Parse(format!("{field:?}: {e}")))?)
                };
                match (k, value) {
                    (0, Some(p)) => row.p = p,
                    (0, None) => return Err(Error::Parse("empty p".into())),
                    (k, v) => *row.slot(k) = v,
                }
            }
            Ok(row)
        })
        .collect()
}

/// One self-check: a measured error against its tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
}

impl CheckLine {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} {} error={:e} tol={:e}", self.name, self.error, self.tolerance)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.lines.iter().all(CheckLine::passed)
    }

    fn push(&mut self, name: String, error: f64, tolerance: f64) {
        let error = if error.is_nan() { f64::INFINITY } else { error };
        self.lines.push(CheckLine { name, error, tolerance });
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        let failed = self.lines.iter().filter(|l| !l.passed()).count();
        write!(f, "{} checks, {failed} failed", self.lines.len())
    }
}

const CHANNEL_TOL: f64 = 1e-10;

/// `H`, `V`, `+` and `R`: their images fix a qubit channel.
fn probe_states() -> Vec<DensityMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [(re(1.0), re(0.0)), (re(0.0), re(1.0)), (re(s), re(s)), (re(s), c(0.0, s))]
        .iter()
        .map(|&(a, b)| PureStateVector::qubit(a, b).expect("normalized").density())
        .collect()
}

/// Frobenius distance between the actions of two maps on the probe states.
fn action_distance<F, G>(f: F, g: G) -> f64
where
    F: Fn(&DensityMatrix) -> Result<DensityMatrix>,
    G: Fn(&DensityMatrix) -> Result<DensityMatrix>,
{
    probe_states()
        .iter()
        .map(|rho| match (f(rho), g(rho)) {
            (Ok(a), Ok(b)) => a.matrix().frobenius_distance(b.matrix()),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Smallest eigenvalue of the Choi matrix, reported as a non-positivity error.
fn choi_negativity(ch: &KrausChannel) -> f64 {
    let mut choi = ComplexMatrix::zeros(4, 4);
    for m in ch.operators() {
        let mut v = nalgebra::DVector::from_element(4, re(0.0));
        for i in 0..2 {
            for j in 0..2 {
                v[2 * i + j] = m.get(j, i);
            }
        }
        choi = &choi + &ComplexMatrix::outer(&v, &v);
    }
    match herm_eigenvalues(&choi.hermitian_part()) {
        Ok(values) => (-values.iter().copied().fold(f64::INFINITY, f64::min)).max(0.0),
        Err(_) => f64::INFINITY,
    }
}

fn check_channel(report: &mut CheckReport, ch: &KrausChannel) {
    let tag = format!("{}/p={}", ch.kind(), format_number(ch.p()));
    report.push(format!("completeness/{tag}"), ch.completeness_error(), COMPLETENESS_TOL);
    report.push(format!("choi_psd/{tag}"), choi_negativity(ch), COMPLETENESS_TOL);
    let dilation_error = match dilate(ch) {
        Ok(u) => {
            let unitarity = (&u.adjoint() * &u).max_abs_diff(&ComplexMatrix::identity(u.rows()));
            let action = action_distance(
                |rho| trace_environment(&u, rho, ch.env_dim()),
                |rho| apply_channel(ch, rho, 0),
            );
            unitarity.max(action)
        }
        Err(_) => f64::INFINITY,
    };
    report.push(format!("dilation/{tag}"), dilation_error, CHANNEL_TOL);
}

/// Completeness, complete positivity and dilation checks for the given channels.
pub fn channel_check_with(channels: &[KrausChannel]) -> CheckReport {
    let mut report = CheckReport::default();
    for ch in channels {
        check_channel(&mut report, ch);
    }
    report
}

/// The built-in suite: every channel on a grid of `p`, plus equality of each
/// interferometer realization with its Kraus channel.
pub fn channel_check() -> CheckReport {
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let channels: Vec<KrausChannel> = ChannelKind::ALL
        .iter()
        .flat_map(|&kind| grid.iter().map(move |&p| make_channel(kind, p).expect("p on grid")))
        .collect();
    let mut report = channel_check_with(&channels);
    for ch in &channels {
        let error = match settings_for(ch.kind(), ch.p()) {
            Ok(s) => action_distance(|rho| sagnac_channel_action(&s, rho), |rho| apply_channel(ch, rho, 0)),
            Err(_) => f64::INFINITY,
        };
        report.push(format!("sagnac/{}/p={}", ch.kind(), format_number(ch.p())), error, CHANNEL_TOL);
    }
    report
}

/// Column name to value for the fields a row carries.
pub fn row_fields(row: &SweepRow) -> BTreeMap<&'static str, f64> {
    COLUMNS
        .iter()
        .zip(row.values())
        .filter_map(|(name, v)| v.map(|v| (*name, v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> SweepConfig {
        SweepConfig::from_toml(text).unwrap()
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(format_number(123456.789), "123456.789");
        assert_eq!(format_number(1e6), "1e6");
        assert_eq!(format_number(5e-5), "5e-5");
        assert_eq!(format_number(1.0001e-4), "0.00010001");
        assert_eq!(format_number(3f64.sqrt() / 2.0), "0.866025403784");
        assert_eq!(format_number(-1.234567890123456e-7), "-1.23456789012e-7");
        assert_eq!(format_number(999999.99999999), "1e6");
    }

    #[test]
    fn config_parsing() {
        let c = config("scenario = \"esd_two_qubit\"\nstate = \"theta1\"\n");
        assert_eq!(c.p_points, 101);
        assert_eq!(c.channel_kind().unwrap(), ChannelKind::AmplitudeDamping);
        let (a, b) = c.amplitudes().unwrap();
        assert!((a.re - 0.5).abs() < 1e-15 && (b.re - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let grid = c.p_grid().unwrap();
        assert_eq!((grid[0], grid[100]), (0.0, 1.0));
        assert!((grid[50] - 0.5).abs() < 1e-15);

        let c = config("scenario = \"complementarity_single\"\nalpha_mod = 0.6\nbeta_phase = 0.3\ndelta = 0.2\n");
        let (_, b) = c.amplitudes().unwrap();
        assert!((b.norm() - 0.8).abs() < 1e-15 && (b.arg() - 0.5).abs() < 1e-15);

        assert!(SweepConfig::from_toml("scenario = \"nope\"").is_err());
        assert!(SweepConfig::from_toml("scenario = \"esd_two_qubit\"\nbogus = 1").is_err());
        let bad = config("scenario = \"esd_two_qubit\"\nalpha_mod = 0.6\nbeta_mod = 0.7\n");
        assert!(matches!(run_sweep(&bad), Err(Error::Config(_))));
        let bad = config("scenario = \"dephasing_two_qubit\"\nstate = \"theta1\"\nchannel = \"bit_flip\"\n");
        assert!(matches!(run_sweep(&bad), Err(Error::Config(_))));
        let bad = config("scenario = \"esd_two_qubit\"\nstate = \"theta1\"\np_max = 1.5\n");
        assert!(matches!(run_sweep(&bad), Err(Error::Config(_))));
        let bad = config("scenario = \"monitor_single\"\nstate = \"theta1\"\nmixing_v = 0.9\n");
        assert!(matches!(run_sweep(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn esd_sweep_hits_zero_at_sudden_death() {
        let rows = run_sweep(&config("scenario = \"esd_two_qubit\"\nstate = \"theta1\"\n")).unwrap();
        assert_eq!(rows.len(), 101);
        let esd = 1.0 / 3f64.sqrt();
        for r in &rows {
            let c = r.concurrence.unwrap();
            assert_eq!(c, r.lambda.unwrap().max(0.0));
            if r.p >= esd + 0.01 {
                assert_eq!(c, 0.0, "p = {}", r.p);
            }
            if r.p <= esd - 0.01 {
                assert!(c > 0.0);
            }
        }
        let rows = run_sweep(&config("scenario = \"esd_two_qubit\"\nstate = \"theta2\"\n")).unwrap();
        assert!(rows[..100].iter().all(|r| r.concurrence.unwrap() > 0.0));
    }

    #[test]
    fn complementarity_sweep_sums_to_one() {
        for kind in ChannelKind::ALL {
            let text = format!("scenario = \"complementarity_single\"\nalpha_mod = 0.6\nbeta_phase = 0.9\nchannel = \"{kind}\"\n");
            for r in run_sweep(&config(&text)).unwrap() {
                assert!((r.complementarity_sum.unwrap() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn csv_round_trip_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("rows.csv");
        let text = format!(
            "scenario = \"monitor_single\"\nalpha_mod = 0.5\np_points = 11\noutput = {:?}\n",
            out.display().to_string()
        );
        let rows = run_sweep(&config(&text)).unwrap();
        let first = std::fs::read(&out).unwrap();
        run_sweep(&config(&text)).unwrap();
        assert_eq!(first, std::fs::read(&out).unwrap());

        let written = String::from_utf8(first).unwrap();
        assert!(written.starts_with("p,purity,purity_monitored,pop_V_traced,pop_V_monitored\n"));
        assert!(!written.contains('\r'));
        let parsed = parse_csv(&written).unwrap();
        assert_eq!(format_csv(&parsed).unwrap(), written);
        for (a, b) in rows.iter().zip(&parsed) {
            for ((_, x), (_, y)) in row_fields(a).iter().zip(row_fields(b).iter()) {
                assert_eq!(format_number(*x).parse::<f64>().unwrap(), *y);
            }
        }
    }

    #[test]
    fn impure_mode_reaches_target() {
        let (a, b) = (re(0.5), re(3f64.sqrt() / 2.0));
        let v = mixing_for_concurrence(a, b, 0.82).unwrap();
        // C = 2 v |alpha beta| - (1 - v)/2 for this family.
        let closed = (0.82 + 0.5) / (2.0 * 0.5 * 3f64.sqrt() / 2.0 + 0.5);
        assert!((v - closed).abs() < 1e-12);
        assert!(mixing_for_concurrence(a, b, 0.95).is_err());

        let rows = run_sweep(&config("scenario = \"esd_two_qubit\"\nstate = \"theta1\"\ntarget_concurrence = 0.82\n")).unwrap();
        assert!((rows[0].concurrence.unwrap() - 0.82).abs() < 1e-9);
        assert!(rows[0].purity.unwrap() < 1.0);
    }

    #[test]
    fn check_suite() {
        let report = channel_check();
        assert!(report.all_passed(), "{report}");
        let sagnac = report.lines.iter().find(|l| l.name == "sagnac/amplitude_damping/p=0.5").unwrap();
        assert!(sagnac.error < 1e-10);

        let mut ops = make_channel(ChannelKind::AmplitudeDamping, 0.5).unwrap().operators().to_vec();
        ops[1] = ops[1].scale(re(1.1));
        let broken = KrausChannel::from_raw(ChannelKind::AmplitudeDamping, 0.5, ops);
        let report = channel_check_with(&[broken]);
        assert!(!report.all_passed());
        assert!(report.to_string().contains("FAIL completeness/amplitude_damping/p=0.5"));
    }

    #[test]
    fn noisy_columns_present_with_exposure() {
        let rows = run_sweep(&config(
            "scenario = \"esd_two_qubit\"\nstate = \"theta1\"\np_points = 3\nexposure = 1e4\nn_resamples = 4\nseed = 3\n",
        ))
        .unwrap();
        for r in &rows {
            assert!(r.concurrence_mle.is_some() && r.concurrence_std.unwrap() >= 0.0);
            assert!(r.purity_mle.unwrap() <= 1.0 + 1e-12);
        }
        assert!((rows[0].concurrence_mle.unwrap() - rows[0].concurrence.unwrap()).abs() < 0.05);
    }
}
