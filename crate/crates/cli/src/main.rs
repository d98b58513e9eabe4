use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use qlr_cli::corpus::run_corpus;
use qlr_cli::generate::{generate_instance, GenParams};
use qlr_cli::oracle::{oracle_solve, OracleVerdict};
use qlr_cli::{parse_instance, print_instance, solve, verify_report, Instance, Logic, RunError, SolveOptions, WitnessReport};

/// Probabilistic, counting and Łukasiewicz satisfiability.
#[derive(Parser)]
#[command(name = "qlr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Column-generation rounds before giving up.
    #[arg(long, global = true)]
    budget_iterations: Option<u64>,
    /// Branch-and-bound nodes before giving up.
    #[arg(long, global = true)]
    budget_nodes: Option<u64>,
    /// Seed for `generate` and the first seed of `corpus`.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Run the brute-force oracle instead of the solver.
    #[arg(long, global = true)]
    oracle: bool,
    /// Check a previously emitted report against the instance.
    #[arg(long, global = true, value_name = "WITNESS_JSON")]
    verify_only: Option<PathBuf>,
    /// Write every SAT query to this directory in DIMACS form.
    #[arg(long, global = true, value_name = "DIR")]
    emit_dimacs_debug: Option<PathBuf>,
    /// Worker threads for `corpus`.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file and print a JSON report.
    Solve { path: PathBuf },
    /// Print a random instance.
    Generate {
        #[arg(long)]
        logic: Logic,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Solve a seeded corpus and compare every verdict with the oracle.
    Corpus {
        #[arg(long)]
        logic: Logic,
        #[arg(long, default_value_t = 100)]
        count: u64,
        /// Skip the oracle and only check witnesses.
        #[arg(long)]
        no_oracle: bool,
        #[command(flatten)]
        params: ParamArgs,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    symbols: Option<usize>,
    #[arg(long)]
    constraints: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    max_denominator: Option<i64>,
    #[arg(long)]
    max_bound: Option<u64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    roles: Option<usize>,
    /// LIPSAT: draw probabilities freely instead of from a hidden distribution.
    #[arg(long)]
    unplanted: bool,
}

impl ParamArgs {
    fn resolve(&self, logic: Logic) -> GenParams {
        let d = GenParams::defaults(logic);
        GenParams {
            symbols: self.symbols.unwrap_or(d.symbols),
            constraints: self.constraints.unwrap_or(d.constraints),
            density: self.density.unwrap_or(d.density),
            max_denominator: self.max_denominator.unwrap_or(d.max_denominator),
            max_bound: self.max_bound.unwrap_or(d.max_bound),
            depth: self.depth.unwrap_or(d.depth),
            roles: self.roles.unwrap_or(d.roles),
            planted: d.planted && !self.unplanted,
        }
    }
}

fn read_instance(path: &Path) -> anyhow::Result<Instance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_instance(&text).map_err(|e| anyhow::anyhow!("{}:{}:{}: {}", path.display(), e.line, e.column, e.message))
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn exit(sat: bool) -> ExitCode {
    ExitCode::from(if sat { 0 } else { 1 })
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let opts = SolveOptions {
        max_iterations: cli.budget_iterations,
        max_nodes: cli.budget_nodes,
        dimacs_dir: cli.emit_dimacs_debug.clone(),
    };
    match &cli.command {
        Command::Solve { path } => {
            let inst = read_instance(path)?;
            if let Some(witness) = &cli.verify_only {
                let text = std::fs::read_to_string(witness)
                    .with_context(|| format!("cannot read {}", witness.display()))?;
                let report = WitnessReport::from_json(&text).context("malformed report")?;
                return Ok(match verify_report(&inst, &report) {
                    Ok(()) => {
                        println!("accepted");
                        ExitCode::from(0)
                    }
                    Err(reason) => {
                        println!("rejected: {reason}");
                        ExitCode::from(1)
                    }
                });
            }
            if cli.oracle {
                let verdict = oracle_solve(&inst)?;
                let sat = verdict == OracleVerdict::Sat;
                let json = serde_json::json!({
                    "logic": inst.logic().name(),
                    "verdict": if sat { "sat" } else { "unsat" },
                    "oracle": true,
                });
                emit(&serde_json::to_string_pretty(&json)?);
                return Ok(exit(sat));
            }
            match solve(&inst, &opts) {
                Ok(report) => {
                    emit(&report.to_json());
                    Ok(exit(report.is_sat()))
                }
                Err(e @ RunError::Budget(_)) => {
                    eprintln!("qlr: {e}");
                    Ok(ExitCode::from(2))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Generate { logic, params } => {
            emit(print_instance(&generate_instance(*logic, cli.seed, &params.resolve(*logic))).trim_end());
            Ok(ExitCode::SUCCESS)
        }
        Command::Corpus { logic, count, no_oracle, params } => {
            let params = params.resolve(*logic);
            let results = run_corpus(*logic, cli.seed, *count, &params, &opts, !no_oracle, cli.jobs);
            let mut agree = 0;
            let mut within = 0;
            for r in &results {
                let solver = match &r.solver {
                    Ok(report) => report.verdict.clone(),
                    Err(e) => format!("error ({e})"),
                };
                let oracle = match &r.oracle {
                    None => "-".to_string(),
                    Some(Ok(v)) => format!("{v:?}").to_lowercase(),
                    Some(Err(e)) => format!("error ({e})"),
                };
                let support = match r.support() {
                    Some((found, bound)) => {
                        within += usize::from(found <= bound);
                        format!("{found}/{bound}")
                    }
                    None => {
                        within += 1;
                        "-".into()
                    }
                };
                agree += usize::from(r.agrees());
                let mark = if r.agrees() { "ok" } else { "MISMATCH" };
                emit(&format!("seed {}: solver {solver}, oracle {oracle}, support {support} {mark}", r.seed));
            }
            emit(&format!("agreement {agree}/{}, support within bound {within}/{}", results.len(), results.len()));
            Ok(exit(agree == results.len() && within == results.len()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("QLR_LOG")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("qlr: {e:#}");
            ExitCode::from(2)
        }
    }
}
