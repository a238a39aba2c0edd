//! `atp`: LP upper bounds, policy simulation, horizon sweeps and numerical
//! verification for online resource allocation instances.

mod format;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use atp_core::instance_file::parse_instance;
use atp_core::verify::{verify_instance, CheckStatus, VerifyConfig};
use atp_core::{estimate_regret, solve_split, sweep_horizons, Error, Instance, PolicyKind, RegretReport};
use clap::{Args, Parser, Subcommand};

use format::sig;

/// Instances shipped with the binary for `verify --builtin-suite`.
const BUILTIN: [(&str, &str); 4] = [
    ("unit", include_str!("../instances/unit.json")),
    ("pooled_two_resources", include_str!("../instances/pooled_two_resources.json")),
    ("multi_resource", include_str!("../instances/multi_resource.json")),
    ("weighted_single_resource", include_str!("../instances/weighted_single_resource.json")),
];

const EXIT_VERIFY: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_ASSUMPTION: u8 = 4;
const EXIT_USAGE: u8 = 5;

const CSV_HEADER: &str = "policy,T,reps,seed,upper_bound,mean_reward,regret,std_error";

#[derive(Parser)]
#[command(name = "atp", version, about = "Adaptive threshold policies for online resource allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the capacity split and print the LP upper bound as JSON.
    Lpub {
        instance: PathBuf,
    },
    /// Estimate the regret of one policy at the instance horizon.
    Simulate {
        instance: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Override the horizon from the file.
        #[arg(long = "horizon")]
        horizon: Option<usize>,
    },
    /// Estimate regret over a grid of horizons with capacities held fixed.
    Sweep {
        instance: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated, strictly increasing horizons.
        #[arg(long = "t-grid", value_delimiter = ',', default_value = "250,500,1000,2000,4000")]
        t_grid: Vec<usize>,
    },
    /// Run the numerical check suite on an instance or the shipped instances.
    Verify {
        #[arg(required_unless_present = "builtin_suite", conflicts_with = "builtin_suite")]
        instance: Option<PathBuf>,
        #[arg(long)]
        builtin_suite: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random states per check.
        #[arg(long, default_value_t = 300)]
        samples: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// atp1, atp2, greedy or static.
    #[arg(long, default_value = "atp1")]
    policy: String,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) | Error::InvalidInstance(_) | Error::InvalidProbabilities { .. } | Error::InvalidDistribution(_) => {
                EXIT_PARSE
            }
            Error::AssumptionViolation(_) | Error::RegularityViolation(_) => EXIT_ASSUMPTION,
            Error::InvalidArgument(_) | Error::TooLarge { .. } => EXIT_USAGE,
            _ => EXIT_SOLVER,
        };
        Failure { code, message: e.to_string() }
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure { code: EXIT_PARSE, message: format!("cannot read {}: {e}", path.display()) })?;
    Ok(parse_instance(&text)?)
}

fn policy(name: &str) -> Result<PolicyKind, Failure> {
    name.parse().map_err(|_| Failure::usage(format!("unknown policy '{name}' (expected atp1, atp2, greedy or static)")))
}

fn csv_row(r: &RegretReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.policy,
        r.horizon,
        r.replications,
        r.base_seed,
        sig(r.upper_bound),
        sig(r.mean_reward),
        sig(r.regret),
        sig(r.std_error)
    )
}

fn cmd_lpub(path: &Path) -> Result<(), Failure> {
    let instance = load(path)?;
    let split = solve_split(&instance)?;
    let out = serde_json::json!({
        "lp_ub": split.objective,
        "split": split.c_star,
        "iterations": split.iterations,
        "final_gap": split.final_gap,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json output"));
    Ok(())
}

fn check_reps(reps: usize) -> Result<(), Failure> {
    if reps < 2 {
        return Err(Failure::usage(format!("--reps must be at least 2 (got {reps})")));
    }
    Ok(())
}

fn cmd_simulate(path: &Path, run: &RunArgs, horizon: Option<usize>) -> Result<(), Failure> {
    let kind = policy(&run.policy)?;
    check_reps(run.reps)?;
    let mut instance = load(path)?;
    if let Some(t) = horizon {
        instance = instance.with_horizon(t);
    }
    let report = estimate_regret(&instance, kind, run.reps, run.seed)?;
    println!("{CSV_HEADER}");
    println!("{}", csv_row(&report));
    Ok(())
}

fn cmd_sweep(path: &Path, run: &RunArgs, grid: &[usize]) -> Result<(), Failure> {
    let kind = policy(&run.policy)?;
    check_reps(run.reps)?;
    if grid.len() < 3 || grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
        return Err(Failure::usage("--t-grid needs at least 3 positive, strictly increasing horizons"));
    }
    let instance = load(path)?;
    let sweep = sweep_horizons(&instance, kind, grid, run.reps, run.seed)?;
    println!("{CSV_HEADER}");
    for p in &sweep.points {
        println!("{}", csv_row(p));
    }
    println!(
        "# logT_slope={},scaling_exponent={},log_fit_rss={},linear_fit_rss={}",
        sig(sweep.log_t_slope),
        sig(sweep.scaling_exponent),
        sig(sweep.log_fit_rss),
        sig(sweep.linear_fit_rss)
    );
    Ok(())
}

/// Prints one line per check; returns the number of failures.
fn report(name: &str, instance: &Instance, cfg: &VerifyConfig) -> usize {
    println!("== {name} ==");
    let outcomes = verify_instance(instance, cfg);
    let mut failed = 0;
    for o in &outcomes {
        let tag = match o.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => {
                failed += 1;
                "FAIL"
            }
            CheckStatus::Skip => "SKIP",
        };
        println!("{tag} {}: {}", o.name, o.detail);
    }
    failed
}

fn cmd_verify(instance: Option<&Path>, builtin: bool, seed: u64, samples: usize) -> Result<(), Failure> {
    let cfg = VerifyConfig { seed, samples: samples.max(1), ..VerifyConfig::default() };
    let mut failed = 0;
    if builtin {
        for (name, text) in BUILTIN {
            let inst = parse_instance(text)?;
            failed += report(name, &inst, &cfg);
        }
    } else if let Some(path) = instance {
        let inst = load(path)?;
        failed += report(&path.display().to_string(), &inst, &cfg);
    }
    if failed > 0 {
        return Err(Failure { code: EXIT_VERIFY, message: format!("{failed} checks failed") });
    }
    println!("all checks passed");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Lpub { instance } => cmd_lpub(instance),
        Command::Simulate { instance, run, horizon } => cmd_simulate(instance, run, *horizon),
        Command::Sweep { instance, run, t_grid } => cmd_sweep(instance, run, t_grid),
        Command::Verify { instance, builtin_suite, seed, samples } => {
            cmd_verify(instance.as_deref(), *builtin_suite, *seed, *samples)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
