use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmab_core::analysis::lower_bound_m;
use cmab_core::env::BanditProblem;
use cmab_core::harness::{plot_csv, plot_rows, read_summary, run_experiment, write_bundle, ExperimentConfig};
use cmab_core::policy::Bisection;
use cmab_core::{Error, Result};

#[derive(Parser)]
#[command(name = "cmab", version, about = "Block UCB policies for bandits with replenished resource budgets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the policy and write raw.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long, env = "CMAB_OUTPUT_DIR")]
        output_dir: Option<PathBuf>,
    },
    /// Print the asymptotic lower bound report of an instance as JSON.
    LowerBound {
        #[arg(long)]
        instance: PathBuf,
        /// Reward family; must match the instance file.
        #[arg(long)]
        family: String,
    },
    /// Emit n, average regret and the M log n reference as CSV.
    PlotData {
        /// summary.json or the directory holding it.
        #[arg(long)]
        bundle: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, output_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let bundle = run_experiment(&cfg)?;
            let dir = output_dir.unwrap_or_else(|| cfg.output_path());
            let (raw, summary) = write_bundle(&bundle, &dir)?;
            if let Some(last) = bundle.summary.checkpoints.last() {
                println!("n={} average regret {}", last.n, last.avg_regret);
            }
            println!("wrote {} and {}", raw.display(), summary.display());
        }
        Command::LowerBound { instance, family } => {
            let problem = BanditProblem::load(&instance)?;
            if family != problem.family.name() {
                return Err(Error::Config(format!(
                    "--family {family} does not match {} (family {})",
                    instance.display(),
                    problem.family.name()
                )));
            }
            let report = lower_bound_m(&problem, Bisection::default())?;
            println!("{}", report.to_json());
        }
        Command::PlotData { bundle } => {
            let summary = read_summary(&bundle)?;
            print!("{}", plot_csv(&plot_rows(&summary)));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Replication { rep, seed, source } = &e {
                if let Error::BudgetViolation { period, bandit, resource, slack } = source.as_ref() {
                    eprintln!(
                        "budget violation dump: replication={rep} seed={seed} period={period} bandit={bandit} resource={resource} slack_after={slack}"
                    );
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
