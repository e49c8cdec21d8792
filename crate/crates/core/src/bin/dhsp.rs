//! Command-line harness for the parity-recovery experiments and the
//! standalone subset sum solver.
//!
//! Exit codes: 0 on success, 1 when a run violates one of its own checks
//! (wrong parity, oracle mismatch), 2 on configuration or I/O errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;

use dhsp::experiments::{
    end_to_end, estimate_phase_flip, estimate_ptau, sv_success_sweep, sv_timing_bench,
    CsvReport, ExperimentConfig, ExperimentKind,
};
use dhsp::lattice::LllDelta;
use dhsp::subset_sum::{
    brute_force_subset_sum, default_lambda, density, sv_solve, LambdaPolicy, SubsetSumInstance,
};

#[derive(Parser)]
#[command(
    name = "dhsp",
    version,
    about = "Dihedral hidden-subgroup parity recovery via low-density subset sum"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate P(τ ≥ 2) for the collapse congruence
    Ptau(WidthArgs),
    /// Estimate the probability of an exponent gap of 2^(n-1)
    PhaseFlip(WidthArgs),
    /// Success rate of algorithm SV on planted instances per (m, bits) cell
    SvSweep(CellArgs),
    /// Wall-clock benchmark of algorithm SV with a log-log fit
    SvBench(CellArgs),
    /// End-to-end parity recovery with a random planted slope per trial
    Run(RunArgs),
    /// Solve one subset sum instance read from a file
    Solve(SolveArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Master seed; every random draw derives from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lovász parameter as a rational p/q in (1/4, 1)
    #[arg(long, default_value = "3/4")]
    lll_delta: String,
    /// Embedding scale: 'auto' or a positive integer
    #[arg(long, default_value = "auto")]
    lambda_policy: String,
    /// Write the report to this path instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Cross-check results against exhaustive enumeration (n ≤ 9 / m ≤ 24)
    #[arg(long)]
    brute_force_check: bool,
    /// Worker threads for trials; 0 runs serially
    #[arg(long, default_value_t = 0)]
    parallel: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct WidthArgs {
    /// Register widths, comma separated (e.g. 4,9,16)
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u32>,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CellArgs {
    /// Instance sizes, comma separated (e.g. 10,20,40,80)
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<usize>,
    /// Weight bit sizes, comma separated (e.g. 32,64,128)
    #[arg(long, value_delimiter = ',', required = true)]
    bits: Vec<u32>,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Register widths, comma separated (e.g. 4,9,16)
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u32>,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Attempts per run before giving up
    #[arg(long, default_value_t = 32)]
    max_retries: u32,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file: whitespace-separated tokens m, a_1 ... a_m, target
    #[arg(long)]
    file: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(violations) => {
            if violations == 0 {
                ExitCode::SUCCESS
            } else {
                eprintln!("dhsp: {violations} check(s) violated");
                ExitCode::from(1)
            }
        }
        Err(msg) => {
            eprintln!("dhsp: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u64, String> {
    match cli.command {
        Command::Ptau(args) => {
            let cfg = experiment_config(ExperimentKind::Ptau, &args.common)?
                .with_ns(args.n, args.trials);
            if cfg.brute_force_check && cfg.ns.iter().any(|&n| n > 9) {
                return Err("--brute-force-check requires n ≤ 9".into());
            }
            let report = estimate_ptau(&cfg).map_err(|e| e.to_string())?;
            emit(&args.common, &report, report.to_csv())?;
            Ok(report
                .aggregates
                .iter()
                .map(|a| a.oracle_mismatches)
                .sum())
        }
        Command::PhaseFlip(args) => {
            let cfg = experiment_config(ExperimentKind::PhaseFlip, &args.common)?
                .with_ns(args.n, args.trials);
            if cfg.brute_force_check && cfg.ns.iter().any(|&n| n > 9) {
                return Err("--brute-force-check requires n ≤ 9".into());
            }
            let report = estimate_phase_flip(&cfg).map_err(|e| e.to_string())?;
            emit(&args.common, &report, report.to_csv())?;
            Ok(report
                .aggregates
                .iter()
                .map(|a| a.oracle_mismatches)
                .sum())
        }
        Command::SvSweep(args) => {
            let mut cfg = experiment_config(ExperimentKind::SvSweep, &args.common)?;
            cfg.m_values = args.m;
            cfg.bit_values = args.bits;
            cfg.trials = args.trials;
            let report = sv_success_sweep(&cfg).map_err(|e| e.to_string())?;
            emit(&args.common, &report, report.to_csv())?;
            Ok(report
                .aggregates
                .iter()
                .map(|c| c.oracle_mismatches)
                .sum())
        }
        Command::SvBench(args) => {
            let mut cfg = experiment_config(ExperimentKind::SvBench, &args.common)?;
            cfg.m_values = args.m;
            cfg.bit_values = args.bits;
            cfg.trials = args.trials;
            if cfg.brute_force_check {
                return Err("--brute-force-check would distort the benchmark".into());
            }
            let report = sv_timing_bench(&cfg).map_err(|e| e.to_string())?;
            let fit = &report.aggregates.fit;
            eprintln!(
                "sv-bench: log-log fit slope {:.4} (intercept {:.2}, r² {:.4}){}",
                fit.slope,
                fit.intercept,
                fit.r_squared,
                if fit.flagged {
                    " -- FLAGGED: outside [0.5, 1.5]"
                } else {
                    ""
                }
            );
            emit(&args.common, &report, report.to_csv())?;
            Ok(0)
        }
        Command::Run(args) => {
            let mut cfg = experiment_config(ExperimentKind::Run, &args.common)?
                .with_ns(args.n, args.trials);
            cfg.max_retries = args.max_retries;
            let report = end_to_end(&cfg).map_err(|e| e.to_string())?;
            emit(&args.common, &report, report.to_csv())?;
            Ok(report
                .aggregates
                .iter()
                .map(|a| a.wrong_parity + a.oracle_mismatches)
                .sum())
        }
        Command::Solve(args) => solve_command(args),
    }
}

trait WithNs {
    fn with_ns(self, ns: Vec<u32>, trials: u64) -> Self;
}

impl WithNs for ExperimentConfig {
    fn with_ns(mut self, ns: Vec<u32>, trials: u64) -> Self {
        self.ns = ns;
        self.trials = trials;
        self
    }
}

fn experiment_config(kind: ExperimentKind, common: &CommonArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.seed = common.seed;
    cfg.lll_delta = common
        .lll_delta
        .parse::<LllDelta>()
        .map_err(|e| e.to_string())?;
    cfg.lambda_policy = common
        .lambda_policy
        .parse::<LambdaPolicy>()
        .map_err(|e| e.to_string())?;
    cfg.brute_force_check = common.brute_force_check;
    cfg.parallel = common.parallel;
    Ok(cfg)
}

fn emit<R: Serialize, A: Serialize>(
    common: &CommonArgs,
    report: &dhsp::experiments::ExperimentReport<R, A>,
    csv: String,
) -> Result<(), String> {
    let body = match common.format {
        Format::Json => report.to_json(),
        Format::Csv => csv,
    };
    write_output(common, &body)
}

fn write_output(common: &CommonArgs, body: &str) -> Result<(), String> {
    match &common.out {
        Some(path) => fs::write(path, body).map_err(|e| format!("cannot write {path:?}: {e}")),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SolveReport {
    m: usize,
    weights: Vec<String>,
    target: String,
    density: Option<f64>,
    lll_delta: String,
    lambda: String,
    found: bool,
    solutions: Vec<SolveSolution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    brute_force: Option<SolveOracle>,
}

#[derive(Serialize)]
struct SolveSolution {
    bits: String,
    verified: bool,
}

#[derive(Serialize)]
struct SolveOracle {
    solution_count: usize,
    all_contained: bool,
}

fn solve_command(args: SolveArgs) -> Result<u64, String> {
    let text = fs::read_to_string(&args.file)
        .map_err(|e| format!("cannot read {:?}: {e}", args.file))?;
    let mut tokens = text.split_whitespace();
    let m: usize = tokens
        .next()
        .ok_or("instance file is empty")?
        .parse()
        .map_err(|_| "first token must be the weight count m".to_string())?;
    if m == 0 {
        return Err("m must be at least 1".into());
    }
    let mut weights = Vec::with_capacity(m);
    for i in 0..m {
        let tok = tokens
            .next()
            .ok_or_else(|| format!("expected {m} weights, found {i}"))?;
        let w: BigUint = tok
            .parse()
            .map_err(|_| format!("weight {} is not a decimal integer", i + 1))?;
        weights.push(w);
    }
    let target: BigUint = tokens
        .next()
        .ok_or("missing target after the weights")?
        .parse()
        .map_err(|_| "target is not a decimal integer".to_string())?;
    if tokens.next().is_some() {
        return Err("trailing tokens after the target".into());
    }

    let delta = args
        .common
        .lll_delta
        .parse::<LllDelta>()
        .map_err(|e| e.to_string())?;
    let policy = args
        .common
        .lambda_policy
        .parse::<LambdaPolicy>()
        .map_err(|e| e.to_string())?;
    let inst = SubsetSumInstance::new(weights, target).map_err(|e| e.to_string())?;
    if args.common.brute_force_check && inst.len() > 24 {
        return Err("--brute-force-check requires m ≤ 24".into());
    }

    let lambda = match &policy {
        LambdaPolicy::Auto => default_lambda(inst.len(), inst.max_weight().bits()),
        LambdaPolicy::Fixed(v) => v.clone(),
    };
    let solutions = sv_solve(&inst, delta, &policy);

    let mut violations = 0u64;
    let brute_force = if args.common.brute_force_check {
        let oracle = brute_force_subset_sum(&inst).map_err(|e| e.to_string())?;
        let all_contained = solutions.iter().all(|s| oracle.contains(&s.bits));
        if !all_contained {
            violations += 1;
        }
        Some(SolveOracle {
            solution_count: oracle.len(),
            all_contained,
        })
    } else {
        None
    };

    let report = SolveReport {
        m: inst.len(),
        weights: inst.weights().iter().map(|w| w.to_string()).collect(),
        target: inst.target().to_string(),
        density: density(&inst).ok(),
        lll_delta: delta.to_string(),
        lambda: lambda.to_string(),
        found: !solutions.is_empty(),
        solutions: solutions
            .iter()
            .map(|s| SolveSolution {
                bits: s.bits.iter().map(|b| b.to_string()).collect(),
                verified: inst.verify(&s.bits),
            })
            .collect(),
        brute_force,
    };

    let body = match args.common.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("serialize"),
        Format::Csv => {
            let mut out = String::from("bits,verified\n");
            for s in &report.solutions {
                out.push_str(&format!("{},{}\n", s.bits, s.verified));
            }
            out
        }
    };
    write_output(&args.common, &body)?;
    Ok(violations)
}
