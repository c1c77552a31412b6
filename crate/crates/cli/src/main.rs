use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ucesim_cli::config::{Checkpoints, SizingRule, OUTPUT_DIR_ENV};
use ucesim_cli::converge::cmd_converge;
use ucesim_cli::nstar_fit::{cmd_nstar_fit, read_curves};
use ucesim_cli::oracle::{cmd_oracle_check, Fault};
use ucesim_cli::{cmd_dump_circuit, cmd_gap, gap_json, CliError, ExperimentConfig};
use ucesim_core::gateset::DEFAULT_P_SINGLE;
use ucesim_core::scaling::DEFAULT_GUARD_FACTOR;
use ucesim_core::stats::StatisticKind;

#[derive(Parser)]
#[command(name = "ucesim", version, about = "Random quantum circuit ensembles versus the circular unitary ensemble")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate ensembles and write convergence curves plus a manifest.
    Converge(ConvergeArgs),
    /// Extract n* from curve files and fit the scaling models.
    NstarFit(NStarFitArgs),
    /// Spectral gap of the two-qubit gate-set moment operator.
    Gap(GapArgs),
    /// Check the simulator and estimators against exact references.
    OracleCheck(OracleArgs),
    /// Print one sampled circuit in text form.
    DumpCircuit(DumpArgs),
}

#[derive(Args)]
struct ConvergeArgs {
    /// TOML experiment config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    nq: Vec<usize>,
    /// e.g. pl,mu2,c2,mu2@0
    #[arg(long, value_delimiter = ',')]
    statistics: Vec<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ln_eps: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Explicit checkpoint list.
    #[arg(long, value_delimiter = ',', conflicts_with = "geometric")]
    checkpoints: Vec<usize>,
    /// Geometric checkpoint grid `start,ratio,max`.
    #[arg(long, value_delimiter = ',')]
    geometric: Vec<f64>,
    /// Explicit realization count.
    #[arg(long, conflicts_with = "sizing")]
    n_r: Option<u64>,
    /// Realizations `a * 2^(b - nq)`, given as `a,b`.
    #[arg(long, value_delimiter = ',')]
    sizing: Vec<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    max_nq: Option<usize>,
    #[arg(long)]
    p_single: Option<f64>,
    /// Write the log-intensity histogram at every checkpoint.
    #[arg(long)]
    histograms: bool,
}

#[derive(Args)]
struct NStarFitArgs {
    /// Curve CSV files written by `converge`.
    #[arg(required = true)]
    curves: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ln_eps: Vec<f64>,
    /// Take ln_eps from this config when --ln-eps is absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Statistic to use when the files hold several.
    #[arg(long)]
    statistic: Option<StatisticKind>,
    /// Minimum ratio eps / d_min.
    #[arg(long, default_value_t = DEFAULT_GUARD_FACTOR)]
    guard: f64,
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = "ucesim-out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct GapArgs {
    /// Monte Carlo draws of the single-qubit average; 0 uses the closed form.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the JSON report to this file.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 5)]
    nq_max: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Deliberately break the simulator (`swap-cnot`) to confirm the checks fail.
    #[arg(long)]
    inject_fault: Option<Fault>,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long)]
    nq: usize,
    #[arg(long)]
    ng: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Realization index within the ensemble.
    #[arg(long, default_value_t = 0)]
    index: u64,
    #[arg(long, default_value_t = DEFAULT_P_SINGLE)]
    p_single: f64,
}

fn converge_config(args: ConvergeArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None if args.nq.is_empty() => return Err(CliError::Usage("give --config or --nq".into())),
        None => ExperimentConfig::new(args.nq.clone()),
    };
    if !args.nq.is_empty() {
        config.nq = args.nq;
    }
    if !args.statistics.is_empty() {
        config.statistics = args.statistics;
    }
    if !args.ln_eps.is_empty() {
        config.ln_eps = args.ln_eps;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if !args.checkpoints.is_empty() {
        config.checkpoints = Some(Checkpoints::List(args.checkpoints));
    }
    if !matches!(args.geometric.len(), 0 | 3) {
        return Err(CliError::Usage("--geometric takes start,ratio,max".into()));
    }
    if !matches!(args.sizing.len(), 0 | 2) {
        return Err(CliError::Usage("--sizing takes a,b".into()));
    }
    if let [start, ratio, max] = args.geometric[..] {
        if max < 0.0 || max.fract() != 0.0 {
            return Err(CliError::Usage(format!("geometric max must be a whole number, got {max}")));
        }
        config.checkpoints = Some(Checkpoints::Geometric { start, ratio, max: max as usize });
    }
    if let Some(n_r) = args.n_r {
        config.n_r = Some(n_r);
        config.sizing = None;
    }
    if let [a, b] = args.sizing[..] {
        let b = u32::try_from(b).map_err(|_| CliError::Usage(format!("sizing b = {b} is too large")))?;
        config.sizing = Some(SizingRule { a, b });
        config.n_r = None;
    }
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    if args.output_dir.is_some() {
        config.output_dir = args.output_dir;
    }
    if let Some(max_nq) = args.max_nq {
        config.max_nq = max_nq;
    }
    if let Some(p) = args.p_single {
        config.p_single = p;
    }
    if args.histograms {
        config.dump_histograms = true;
    }
    Ok(config)
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Converge(args) => {
            let out = cmd_converge(&converge_config(args)?)?;
            for path in out.curve_files.iter().chain(&out.histogram_files).chain([&out.manifest]) {
                println!("{}", path.display());
            }
        }
        Command::NstarFit(args) => {
            let ln_eps = match (&args.ln_eps[..], &args.config) {
                ([], Some(path)) => ExperimentConfig::from_file(path)?.ln_eps,
                ([], None) => return Err(CliError::Usage("give --ln-eps or --config".into())),
                (list, _) => list.to_vec(),
            };
            let curves = read_curves(&args.curves)?;
            let out = cmd_nstar_fit(&curves, &ln_eps, args.statistic, args.guard)?;
            for w in &out.warnings {
                let nq = w.n_qubits.map(|n| format!("nq={n} ")).unwrap_or_default();
                eprintln!("warning: {nq}ln_eps={}: {}", w.ln_eps, w.reason);
            }
            for path in out.write(&args.output_dir)? {
                println!("{}", path.display());
            }
            if !out.warnings.is_empty() {
                eprintln!("{} warning(s)", out.warnings.len());
            }
        }
        Command::Gap(args) => {
            let json = gap_json(&cmd_gap(args.samples, args.seed)?);
            if let Some(path) = args.output {
                std::fs::write(&path, &json)?;
            }
            print!("{json}");
        }
        Command::OracleCheck(args) => {
            let report = cmd_oracle_check(args.nq_max, args.trials, args.seed, args.inject_fault)?;
            for case in &report.cases {
                println!("{case}");
            }
            if !report.passed() {
                return Err(CliError::Verification(format!(
                    "{} of {} cases failed",
                    report.failures(),
                    report.cases.len()
                )));
            }
        }
        Command::DumpCircuit(args) => {
            print!("{}", cmd_dump_circuit(args.nq, args.ng, args.seed, args.index, args.p_single)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
