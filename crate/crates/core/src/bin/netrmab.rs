use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use netrmab::error::{Error, Result};
use netrmab::experiment::{compare_policies, write_comparison_csv, Manifest};
use netrmab::generator::{generate_synthetic, Preset};
use netrmab::io::{load_instance, save_instance};
use netrmab::model::ActionVector;
use netrmab::periods::{plan_periods, write_periods_csv, PlanOptions};
use netrmab::scheduler::{engage, Policy, Schedule};
use netrmab::simulator::{perturb_network, replicate, write_stats_csv};

#[derive(Parser)]
#[command(name = "netrmab", version, about = "Plan and evaluate periodic intervention schedules")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check an instance file and list every violated constraint.
    Validate { file: PathBuf },
    /// Generate a synthetic instance.
    Gen {
        #[arg(long)]
        preset: Preset,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o')]
        out: PathBuf,
    },
    /// Choose visiting periods and dispatch them.
    Plan {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        tmin: usize,
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        /// Minimum visiting frequency for visited arms.
        #[arg(long)]
        fmin: Option<f64>,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        /// `periods.csv,schedule.csv`
        #[arg(short = 'o', value_delimiter = ',', required = true)]
        out: Vec<PathBuf>,
    },
    /// Replicate one policy.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        policy: Policy,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        #[arg(long, default_value_t = 30)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o')]
        out: PathBuf,
    },
    /// Replicate every policy over a list of budgets.
    Compare {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        #[arg(long, default_value_t = 30)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o')]
        out: PathBuf,
    },
    /// Rewire a fraction of the travel edges.
    Perturb {
        file: PathBuf,
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o')]
        out: PathBuf,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn usage(msg: String) -> Error {
    Error::OutOfRange(msg)
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Validate { file } => {
            load_instance(&file)?;
            println!("{}: ok", file.display());
        }
        Cmd::Gen { preset, m, seed, out } => {
            let cfg = preset.config(m, seed);
            save_instance(&generate_synthetic(&cfg)?, &out)?;
            Manifest::new("gen", vec![seed], serde_json::to_value(&cfg)?, vec![out.display().to_string()])
                .write_next_to(&out)?;
        }
        Cmd::Plan {
            file,
            tmin,
            alpha,
            fmin,
            horizon,
            out,
        } => {
            if out.len() != 2 {
                return Err(usage("-o takes periods.csv,schedule.csv".into()));
            }
            let instance = load_instance(&file)?;
            let t_max = match fmin {
                Some(f) if f > 0.0 && f <= 1.0 => Some((1.0 / f).floor() as usize),
                Some(f) => return Err(usage(format!("--fmin {f} must lie in (0, 1]"))),
                None => None,
            };
            let opts = PlanOptions {
                t_min: tmin,
                t_max,
                alpha,
            };
            let plan = plan_periods(&instance, &opts)?;
            let schedule = if plan.periods.assigned().is_empty() {
                Schedule::new(vec![ActionVector::zeros(instance.len()); horizon])
            } else {
                engage(&instance, &plan.periods, horizon)?
            };
            write_periods_csv(create(&out[0])?, &plan.tables, &plan.periods)?;
            schedule.write_csv(create(&out[1])?)?;
            let config = json!({"tmin": tmin, "alpha": alpha, "fmin": fmin, "horizon": horizon});
            let outputs = out.iter().map(|p| p.display().to_string()).collect();
            Manifest::new("plan", vec![], config, outputs).write_next_to(&out[0])?;
        }
        Cmd::Simulate {
            file,
            policy,
            horizon,
            reps,
            seed,
            out,
        } => {
            let instance = load_instance(&file)?;
            let stats = replicate(&instance, policy, horizon, reps, seed)?;
            write_stats_csv(create(&out)?, &[(policy, stats, horizon, seed)])?;
            let config = json!({"policy": policy.name(), "horizon": horizon, "reps": reps});
            Manifest::new("simulate", vec![seed], config, vec![out.display().to_string()]).write_next_to(&out)?;
        }
        Cmd::Compare {
            file,
            budgets,
            horizon,
            reps,
            seed,
            out,
        } => {
            let instance = load_instance(&file)?;
            if budgets.contains(&0) {
                return Err(usage("budgets must be positive".into()));
            }
            let rows = compare_policies(&instance, &Policy::ALL, &budgets, horizon, reps, seed)?;
            write_comparison_csv(create(&out)?, &rows, horizon, seed)?;
            let config = json!({"budgets": budgets, "horizon": horizon, "reps": reps});
            Manifest::new("compare", vec![seed], config, vec![out.display().to_string()]).write_next_to(&out)?;
        }
        Cmd::Perturb {
            file,
            fraction,
            seed,
            out,
        } => {
            let instance = load_instance(&file)?;
            save_instance(&perturb_network(&instance, fraction, seed)?, &out)?;
            let config = json!({"fraction": fraction});
            Manifest::new("perturb", vec![seed], config, vec![out.display().to_string()]).write_next_to(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::OutOfRange(_) | Error::Precondition(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
