//! `chc`: decides satisfiability of a constrained Horn clause file.
//!
//! Prints `sat`, `unsat`, or `unknown` as the first line of standard output.
//! Exit codes: 0 for a definitive verdict, 1 for unknown, 2 for input errors.

mod bench;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use chc_core::model::print_model;
use chc_core::portfolio::{plan_for, plan_of, run_portfolio, FinalVerdict, Isolation, PortfolioPlan, StageName, Task};
use chc_core::smt::{ItpCapability, SolverConfig};
use chc_core::smtlib::parse_chc;

#[derive(Parser, Debug)]
#[command(name = "chc", version, about = "Constrained Horn clause solver", args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// SMT-LIB Horn file, or `-` for standard input.
    input: Option<PathBuf>,
    #[command(flatten)]
    opts: SolveOpts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Runs every `.smt2` task of a directory and prints a results table.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum IsolationMode {
    InProcess,
    Subprocess,
}

#[derive(Args, Debug, Clone)]
struct SolveOpts {
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 300.0)]
    timeout: f64,
    /// Run a single stage: BMC, KIND, IMC, BOOL, CART, or EXPL.
    #[arg(long)]
    config: Option<StageName>,
    /// Print the model after `sat` when one was produced and validated.
    #[arg(long)]
    print_model: bool,
    /// Keep running model-producing stages after a model-less `sat`.
    #[arg(long)]
    require_model: bool,
    /// Solver executable, optionally tagged with a role: `main=PATH` or `itp=PATH`.
    #[arg(long = "smt-solver", value_name = "[ROLE=]PATH")]
    smt_solver: Vec<String>,
    /// Random seed passed to the solver.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Append the per-stage run log (tab-separated) to this file.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Report unknown instead of a model-less `sat` when validation is inconclusive.
    #[arg(long)]
    strict_validation: bool,
    /// How stages are isolated from each other.
    #[arg(long, value_enum, default_value_t = IsolationMode::InProcess)]
    isolation: IsolationMode,
}

impl SolveOpts {
    fn total(&self) -> Result<Duration> {
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            bail!("--timeout must be a positive number of seconds");
        }
        Ok(Duration::from_secs_f64(self.timeout))
    }

    fn solver(&self) -> Result<SolverConfig> {
        let mut config = SolverConfig { seed: Some(self.seed), ..SolverConfig::default() };
        for spec in &self.smt_solver {
            match spec.split_once('=') {
                Some(("main", p)) => config.path = p.into(),
                Some(("itp", p)) => {
                    config.itp_path = Some(p.into());
                    config.interpolation = ItpCapability::GetInterpolant;
                }
                Some((role, _)) => bail!("unknown solver role `{role}`; expected main or itp"),
                None => config.path = spec.into(),
            }
        }
        Ok(config)
    }

    fn plan(&self, task: &Task, solver: &SolverConfig) -> Result<PortfolioPlan> {
        let total = self.total()?;
        let mut plan = match self.config {
            Some(stage) => plan_of(&[stage], total),
            None => plan_for(&task.sys, total, solver.interpolation),
        };
        plan.require_model = self.require_model;
        plan.strict_validation = self.strict_validation;
        if self.isolation == IsolationMode::Subprocess {
            plan.isolation = Isolation::Subprocess { program: std::env::current_exe().context("locating own executable")? };
        }
        Ok(plan)
    }
}

fn read_input(path: &std::path::Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading standard input")?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn append_log(path: &std::path::Path, text: &str) -> Result<()> {
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path).with_context(|| format!("opening {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn solve(input: &std::path::Path, opts: &SolveOpts) -> Result<ExitCode, ExitCode> {
    let input_error = |e: anyhow::Error| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    };
    let text = read_input(input).map_err(input_error)?;
    let sys = parse_chc(&text).map_err(|e| input_error(e.into()))?;
    let solver = opts.solver().map_err(input_error)?;
    let task = match Task::new(sys) {
        Ok(t) => Arc::new(t),
        Err(e) => {
            eprintln!("unsupported: {e}");
            println!("unknown");
            return Ok(ExitCode::from(1));
        }
    };
    let plan = opts.plan(&task, &solver).map_err(input_error)?;
    let result = run_portfolio(&task, &plan, &solver);
    println!("{}", result.verdict.word());
    if let (true, FinalVerdict::Sat(Some(m))) = (opts.print_model, &result.verdict) {
        println!("{}", print_model(&task.sys, m));
    }
    if let Some(winner) = result.winner {
        log::info!("decided by {winner}");
    }
    if let Some(path) = &opts.log {
        if let Err(e) = append_log(path, &result.log_tsv()) {
            eprintln!("warning: {e:#}");
        }
    }
    Ok(match result.verdict {
        FinalVerdict::Unknown => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).target(env_logger::Target::Stderr).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match (cli.command, cli.input) {
        (Some(Command::Bench { dir, opts }), _) => match bench::run(&dir, &opts) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
        (None, Some(input)) => solve(&input, &cli.opts).unwrap_or_else(|code| code),
        (None, None) => {
            eprintln!("error: no input file given (use `-` for standard input)");
            ExitCode::from(2)
        }
    }
}
