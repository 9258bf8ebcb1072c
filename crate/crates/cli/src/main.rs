use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qmag::experiments::SearchOptions;
use qmag::hcrb::RealTwoQubitState;
use qmag_cli::config::{SearchKind, SweepConfig};
use qmag_cli::pure::{evaluate, format_table, parse_state};
use qmag_cli::record::{decode_state, Record};
use qmag_cli::sweep::{channel_record, copies_record, qc_record, run_sweep};
use qmag_cli::{CliError, CliResult};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Bounds for three-dimensional magnetometry with dephased two-qubit probes.
#[derive(Parser, Debug)]
#[command(name = "qmag", version)]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (JSON for single bounds, CSV for sweeps).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bounds of real noiseless probes r1|00> + r2|01> + r3|10> + r4|11>.
    PureHcrb {
        /// Amplitudes r1 r2 r3 r4.
        #[arg(num_args = 4, allow_negative_numbers = true, conflicts_with = "random")]
        r: Vec<f64>,
        /// Evaluate this many random states instead.
        #[arg(long)]
        random: Option<usize>,
    },
    /// Holevo bound minimized over two-qubit probes.
    ChannelHcrb {
        #[arg(long)]
        gamma: f64,
    },
    /// Best projective measurement on k copies of the optimal probe.
    CopiesBound {
        #[arg(long)]
        gamma: f64,
        #[arg(long, short)]
        k: usize,
        /// Probe from an earlier `channel-hcrb` output instead of a new search.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Entangled four-qubit probe with a pair measurement on each half.
    QcBound {
        #[arg(long)]
        gamma: f64,
        /// Allow a different measurement on each pair.
        #[arg(long)]
        independent_qc_measurements: bool,
    },
    /// Every bound over a grid of noise strengths, written as CSV.
    Sweep {
        /// Keep grid points finished by an earlier run.
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        independent_qc_measurements: bool,
    },
}

fn load_config(cli: &Cli) -> CliResult<SweepConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            SweepConfig::parse(&text)?
        }
        None => SweepConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn check_gamma(gamma: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(CliError::Config(format!("gamma {gamma} outside [0, 1]")))
    }
}

/// Prints or stores a record, then reports restart disagreement.
fn emit(cli: &Cli, rec: &Record, opts: &SearchOptions) -> CliResult<()> {
    let text = serde_json::to_string_pretty(rec)?;
    match &cli.out {
        Some(p) => fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    if rec.result.restart_spread > opts.agreement_tol {
        return Err(CliError::NonConvergence(format!(
            "restarts disagree: spread {:.3e} exceeds {:.1e}",
            rec.result.restart_spread, opts.agreement_tol
        )));
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = load_config(cli)?;
    let seed = cfg.seed;
    match &cli.command {
        Command::PureHcrb { r, random } => {
            let states: Vec<RealTwoQubitState> = match random {
                Some(n) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..*n).map(|_| RealTwoQubitState::random(&mut rng)).collect()
                }
                None => {
                    let r: [f64; 4] = r
                        .as_slice()
                        .try_into()
                        .map_err(|_| CliError::Config("give four amplitudes or --random N".into()))?;
                    vec![parse_state(r)?]
                }
            };
            let rows = states.iter().map(evaluate).collect::<CliResult<Vec<_>>>()?;
            let table = format_table(&rows);
            match &cli.out {
                Some(p) => fs::write(p, table)?,
                None => print!("{table}"),
            }
            Ok(())
        }
        Command::ChannelHcrb { gamma } => {
            check_gamma(*gamma)?;
            let opts = cfg.search_options(SearchKind::Channel, seed);
            let rec = channel_record(*gamma, &opts, true)?;
            emit(cli, &rec, &opts)
        }
        Command::CopiesBound { gamma, k, state } => {
            check_gamma(*gamma)?;
            if !(1..=3).contains(k) {
                return Err(CliError::Config(format!("k = {k}: supported values are 1, 2, 3")));
            }
            let psi = match state {
                Some(p) => {
                    let rec: Record = serde_json::from_str(&fs::read_to_string(p)?)
                        .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                    decode_state(&rec.state)?
                }
                None => {
                    let opts = cfg.search_options(SearchKind::Channel, seed);
                    let ch = channel_record(*gamma, &opts, false)?;
                    if ch.result.restart_spread > opts.agreement_tol {
                        return Err(CliError::NonConvergence(format!(
                            "probe search restarts disagree: spread {:.3e}",
                            ch.result.restart_spread
                        )));
                    }
                    decode_state(&ch.state)?
                }
            };
            let opts = cfg.search_options(SearchKind::Copies, seed);
            let rec = copies_record(&psi, *gamma, *k, &opts, true)?;
            emit(cli, &rec, &opts)
        }
        Command::QcBound { gamma, independent_qc_measurements } => {
            check_gamma(*gamma)?;
            let opts = cfg.search_options(SearchKind::Qc, seed);
            let independent = *independent_qc_measurements || cfg.independent_qc_measurements;
            let rec = qc_record(*gamma, independent, &opts, true)?;
            emit(cli, &rec, &opts)
        }
        Command::Sweep { resume, independent_qc_measurements } => {
            let mut cfg = cfg;
            cfg.independent_qc_measurements |= *independent_qc_measurements;
            let outcome = run_sweep(&cfg, *resume)?;
            eprintln!(
                "wrote {} rows to {} ({} grid points resumed)",
                outcome.records.len(),
                cfg.out.display(),
                outcome.resumed
            );
            if !outcome.nonconverged.is_empty() {
                return Err(CliError::NonConvergence(outcome.nonconverged.join("\n")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
