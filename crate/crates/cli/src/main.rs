use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cpdl::corpus::{self, Expect};
use cpdl::formula::{Formula, FormulaNode};
use cpdl::oracle::{bounded_sat, random_formula, OracleBudget};
use cpdl::report::{self, export_dot, export_stats, trace_text, SolveReport, Verdict};
use cpdl::syntax::{parse_formula, render};
use cpdl::tableau::{Mode, Solver, SolverConfig};

const EXIT_SAT: u8 = 10;
const EXIT_UNSAT: u8 = 20;
const EXIT_RESOURCE: u8 = 30;
const EXIT_USAGE: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "cpdl", version, about = "Satisfiability for PDL with converse")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide satisfiability of a formula.
    Solve(SolveArgs),
    /// Decide satisfiability and check a model for SAT verdicts.
    Certify(SolveArgs),
    /// Search small models by brute force.
    Oracle(OracleArgs),
    /// Run every formula of a corpus directory.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheduler {
    Queue,
    Naive,
}

#[derive(Args)]
struct FormulaArgs {
    /// A formula, or a file holding one.
    #[arg(long)]
    formula: Option<String>,
    /// Use a random formula from this seed when no formula is given.
    #[arg(long)]
    seed: Option<u64>,
    /// Size of the random formula.
    #[arg(long, default_value_t = 10)]
    size: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: FormulaArgs,
    #[arg(long, value_enum, default_value = "queue")]
    scheduler: Scheduler,
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Wall-clock budget in milliseconds.
    #[arg(long)]
    timeout: Option<u64>,
    #[arg(long)]
    dot: Option<PathBuf>,
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[arg(long)]
    stats_json: Option<PathBuf>,
    /// Print one line per rule application.
    #[arg(long)]
    trace: bool,
    /// Root the tableau at a state holding the top-level conjuncts instead
    /// of behind a dummy program.
    #[arg(long)]
    root_state: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: FormulaArgs,
    /// Largest number of worlds to try.
    #[arg(long)]
    max_worlds: Option<usize>,
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of `.cpdl` files.
    #[arg(long, default_value = "corpus")]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "queue")]
    scheduler: Scheduler,
    #[arg(long)]
    max_nodes: Option<usize>,
    #[arg(long)]
    timeout: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Solve(args) => solve(args, false),
        Command::Certify(args) => solve(args, true),
        Command::Oracle(args) => oracle(args),
        Command::Bench(args) => bench(args),
    }
}

fn read_formula(input: &FormulaArgs) -> Result<Formula> {
    match (&input.formula, input.seed) {
        (Some(text), _) => {
            let source = if Path::new(text).is_file() {
                fs::read_to_string(text).with_context(|| format!("reading {text}"))?
            } else {
                text.clone()
            };
            parse_formula(&source).map_err(|e| anyhow::anyhow!("parse error at {e}"))
        }
        (None, Some(seed)) => {
            if input.size == 0 {
                bail!("--size must be positive");
            }
            Ok(random_formula(seed, input.size))
        }
        (None, None) => bail!("give --formula or --seed"),
    }
}

fn config(scheduler: Scheduler, max_nodes: Option<usize>, timeout: Option<u64>, trace: bool) -> SolverConfig {
    SolverConfig {
        mode: match scheduler {
            Scheduler::Queue => Mode::Queue,
            Scheduler::Naive => Mode::Naive,
        },
        max_nodes,
        timeout: timeout.map(Duration::from_millis),
        trace,
        ..SolverConfig::default()
    }
}

fn conjuncts(phi: &Formula, out: &mut Vec<Formula>) {
    match phi.node() {
        FormulaNode::And(l, r) => {
            conjuncts(l, out);
            conjuncts(r, out);
        }
        _ => out.push(phi.clone()),
    }
}

fn exit_code(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Sat => EXIT_SAT,
        Verdict::Unsat => EXIT_UNSAT,
        Verdict::Resource => EXIT_RESOURCE,
    }
}

fn solve(args: SolveArgs, with_certificate: bool) -> Result<u8> {
    let phi = read_formula(&args.input)?;
    let config = config(args.scheduler, args.max_nodes, args.timeout, args.trace);
    let solver = if args.root_state {
        let mut gamma = Vec::new();
        conjuncts(&phi, &mut gamma);
        Solver::rooted_at_state(&gamma, config)
    } else {
        Solver::new(&phi, config)
    };
    let report: SolveReport = report::run(solver, with_certificate)?;
    if args.trace {
        print!("{}", trace_text(&report.solver));
    }
    let verdict = match report.verdict {
        Verdict::Sat => "SAT",
        Verdict::Unsat => "UNSAT",
        Verdict::Resource => "RESOURCE",
    };
    println!("{verdict}");
    if let Some(path) = &args.dot {
        fs::write(path, export_dot(report.solver.tableau())).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.stats_json {
        fs::write(path, export_stats(&report.stats)).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(cert) = &report.certificate {
        if let Some(path) = &args.model_out {
            fs::write(path, cert.model.to_text()).with_context(|| format!("writing {}", path.display()))?;
        }
        if !cert.is_valid() {
            for phi in &cert.refuted {
                eprintln!("certificate: {} fails at world 0", render(phi));
            }
            if let Err(v) = &cert.hintikka {
                eprintln!("certificate: {v}");
            }
            return Ok(EXIT_CHECK_FAILED);
        }
        println!("certified: {} worlds", cert.model.worlds);
    }
    Ok(exit_code(report.verdict))
}

fn oracle(args: OracleArgs) -> Result<u8> {
    let phi = read_formula(&args.input)?;
    let mut budget = OracleBudget::for_formula(&phi);
    if let Some(n) = args.max_worlds {
        budget.max_worlds = n;
    }
    println!("formula: {}", render(&phi));
    match bounded_sat(&phi, &budget)? {
        Some(model) => {
            println!("model found");
            print!("{}", model.to_text());
            if let Some(path) = &args.model_out {
                fs::write(path, model.to_text()).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(EXIT_SAT)
        }
        None => {
            println!("no model with at most {} worlds", budget.max_worlds);
            Ok(0)
        }
    }
}

fn bench(args: BenchArgs) -> Result<u8> {
    let entries = corpus::load_dir(&args.corpus).with_context(|| format!("reading {}", args.corpus.display()))?;
    if entries.is_empty() {
        bail!("no .cpdl files in {}", args.corpus.display());
    }
    let start = Instant::now();
    let mut mismatches = 0;
    for entry in &entries {
        let phi = entry.formula().map_err(|e| anyhow::anyhow!("{}: parse error at {e}", entry.name))?;
        let config = config(args.scheduler, args.max_nodes, args.timeout, false);
        let report = report::solve(&phi, config, false)?;
        let verdict = report.verdict;
        let expected = match entry.expect {
            Some(Expect::Sat) => Some(Verdict::Sat),
            Some(Expect::Unsat) => Some(Verdict::Unsat),
            None => None,
        };
        let mark = match expected {
            Some(e) if e != verdict => {
                mismatches += 1;
                "  MISMATCH"
            }
            _ => "",
        };
        println!(
            "{:<28} {:<8} nodes={:<6} time_ms={}{mark}",
            entry.name,
            format!("{verdict:?}").to_uppercase(),
            report.stats.nodes_total,
            report.stats.time_ms
        );
    }
    println!("{} formulas, {} mismatches, {} ms", entries.len(), mismatches, start.elapsed().as_millis());
    Ok(if mismatches == 0 { 0 } else { EXIT_CHECK_FAILED })
}
