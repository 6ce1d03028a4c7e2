use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stc_core::harness::csv::{export_csv, to_csv_string};
use stc_core::harness::{self, compare, run_scenario, sweep, ScenarioConfig, SweepParam};
use stc_core::{Error, Variant};

#[derive(Parser)]
#[command(name = "stc", version, about = "Self-tuning excitation control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of simulated samples.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Output file (`run`) or directory (`compare`, `sweep`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress reports on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectory as CSV.
    Run { config: PathBuf },
    /// Run two scenarios differing only in controller and report both.
    Compare { first: PathBuf, second: PathBuf },
    /// Re-run one scenario over a list of values of one parameter.
    Sweep {
        config: PathBuf,
        /// r, lambda, sigma2, magnitude or p0_scale.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
    },
    /// Print the load-step study configuration as JSON.
    Template {
        #[arg(long, default_value = "J1", value_parser = parse_variant)]
        variant: Variant,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_uppercase()))
        .map_err(|_| format!("unknown variant {s:?} (expected J1, J2 or GENERAL)"))
}

fn load(path: &Path, o: &Overrides) -> Result<ScenarioConfig, Error> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(steps) = o.steps {
        cfg.steps = steps;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn execute(cli: Cli) -> Result<(), Error> {
    let o = cli.overrides;
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config, &o)?;
            let run = run_scenario(&cfg)?;
            match o.out.as_ref().or(cfg.output_path.as_ref()) {
                Some(path) => {
                    export_csv(&run.records, path)?;
                    if !o.quiet {
                        let window = harness::MetricsWindow::post_disturbance(&cfg, harness::DEFAULT_SKIP);
                        let m = harness::compute_metrics(&run.records, &window)?;
                        println!(
                            "{} samples -> {} | sse {:.3e} u_var {:.3e} ise {:.3e}",
                            run.records.len(),
                            path.display(),
                            m.sse,
                            m.u_var,
                            m.ise
                        );
                    }
                }
                None => print!("{}", to_csv_string(&run.records)),
            }
        }
        Command::Compare { first, second } => {
            let (a, b) = (load(&first, &o)?, load(&second, &o)?);
            let report = compare(&a, &b)?;
            let targets = match &o.out {
                Some(dir) => {
                    ensure_dir(dir)?;
                    [Some(dir.join("first.csv")), Some(dir.join("second.csv"))]
                }
                None => [a.output_path.clone(), b.output_path.clone()],
            };
            for (arm, target) in [&report.first, &report.second].into_iter().zip(targets) {
                if let Some(path) = target {
                    export_csv(&arm.trajectory.records, &path)?;
                }
            }
            if !o.quiet {
                println!("{report}");
            }
        }
        Command::Sweep { config, param, values } => {
            let cfg = load(&config, &o)?;
            let param: SweepParam = param.parse()?;
            let points = sweep(&cfg, param, &values)?;
            if let Some(dir) = &o.out {
                ensure_dir(dir)?;
                for (i, p) in points.iter().enumerate() {
                    export_csv(&p.result.trajectory.records, &dir.join(format!("sweep_{i:03}.csv")))?;
                }
            }
            if !o.quiet {
                println!("{:>14}{:>14}{:>14}{:>14}{:>14}", "value", "sse", "u_var", "settle", "ise");
                for p in &points {
                    let m = &p.result.metrics;
                    let settle = m.settle_time.map_or("never".into(), |s| s.to_string());
                    println!(
                        "{:>14.6e}{:>14.4e}{:>14.4e}{:>14}{:>14.4e}",
                        p.value, m.sse, m.u_var, settle, m.ise
                    );
                }
            }
        }
        Command::Template { variant } => {
            println!("{}", ScenarioConfig::load_step_study(variant).to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Simulation(_) => ExitCode::from(2),
                Error::Config(_) | Error::Io { .. } => ExitCode::from(1),
            }
        }
    }
}
