use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use opendyn::channels::{apply_local, uniform};
use opendyn::measures::concurrence_two_qubit;
use opendyn::statealg::{fidelity, purity, re, PureStateVector};
use opendyn::sweep::{channel_check, format_csv, format_number, run_sweep, SweepConfig};
use opendyn::tomo::{format_counts, mle_reconstruct, read_counts, simulate_counts, standard_settings};
use opendyn::{ChannelKind, DensityMatrix, Error};

#[derive(Parser)]
#[command(name = "opendyn", about = "Open qubit dynamics: channel sweeps, self-checks and simulated tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep described by a TOML file and emit CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the output path of the config; `-` writes to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the channel invariant suite; exits 1 on any failure.
    Check,
    /// Simulate a photon-count file for a named two-qubit state.
    TomoSim {
        /// theta1, theta2, bell or product.
        #[arg(long)]
        state: String,
        #[arg(long)]
        exposure: f64,
        #[arg(long)]
        seed: u64,
        /// Damp both qubits with this channel first.
        #[arg(long, requires = "p")]
        channel: Option<ChannelKind>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Maximum-likelihood reconstruction from a count file.
    TomoFit {
        #[arg(long)]
        counts: PathBuf,
        /// Named state to report the fidelity against.
        #[arg(long)]
        reference: Option<String>,
    },
    /// Print the version.
    Version,
}

enum Failure {
    Invariant(String),
    Config(String),
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        match err {
            Error::Config(_) | Error::Parse(_) | Error::UnknownSetting(_) | Error::Io(_) => {
                Failure::Config(err.to_string())
            }
            other => Failure::Invariant(other.to_string()),
        }
    }
}

fn named_state(name: &str) -> Result<DensityMatrix, Failure> {
    let half = 0.5;
    let root = 3f64.sqrt() / 2.0;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = match name.to_ascii_lowercase().as_str() {
        "theta1" => (half, root),
        "theta2" => (root, half),
        "bell" => (s, s),
        "product" => (1.0, 0.0),
        other => return Err(Failure::Config(format!("unknown state {other:?}"))),
    };
    Ok(PureStateVector::two_qubit_correlated(re(a), re(b))?.density())
}

fn emit(output: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) if path.as_os_str() != "-" => {
            std::fs::write(path, text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
        }
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::Config(e.to_string()))
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep { config, output } => {
            let mut cfg = SweepConfig::load(&config)?;
            let target = output.or_else(|| cfg.output.take());
            let rows = run_sweep(&cfg)?;
            emit(target.as_ref(), &format_csv(&rows)?)
        }
        Command::Check => {
            let report = channel_check();
            println!("{report}");
            if report.all_passed() {
                Ok(())
            } else {
                Err(Failure::Invariant("channel checks failed".into()))
            }
        }
        Command::TomoSim { state, exposure, seed, channel, p, output } => {
            let mut rho = named_state(&state)?;
            if let (Some(kind), Some(p)) = (channel, p) {
                rho = apply_local(&uniform(kind, p, 2)?, &rho)?;
            }
            let records = simulate_counts(&rho, &standard_settings(2), exposure, seed)
                .map_err(|e| Failure::Config(e.to_string()))?;
            emit(output.as_ref(), &format_counts(&records)?)
        }
        Command::TomoFit { counts, reference } => {
            let records = read_counts(&counts)?;
            let qubits = records.first().map(|r| r.setting.projector().layout().len()).unwrap_or(0);
            let fit = mle_reconstruct(&records, 1 << qubits)?;
            println!("converged={}", fit.converged);
            println!("iterations={}", fit.iterations);
            println!("log_likelihood={}", format_number(fit.log_likelihood));
            println!("purity={}", format_number(purity(&fit.rho)));
            if qubits == 2 {
                println!("concurrence={}", format_number(concurrence_two_qubit(&fit.rho)?.value));
            }
            if let Some(name) = reference {
                println!("fidelity={}", format_number(fidelity(&fit.rho, &named_state(&name)?)?));
            }
            for i in 0..fit.rho.dim() {
                let row: Vec<String> = (0..fit.rho.dim())
                    .map(|j| {
                        let z = fit.rho.get(i, j);
                        let im = format_number(z.im);
                        let sign = if im.starts_with('-') { "" } else { "+" };
                        format!("{}{sign}{im}i", format_number(z.re))
                    })
                    .collect();
                println!("rho[{i}]={}", row.join(" "));
            }
            Ok(())
        }
        Command::Version => {
            println!("opendyn {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
