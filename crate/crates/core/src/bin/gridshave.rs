use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gridshave::config::{ConfigFile, ConfigWriter};
use gridshave::regression::{fit_cop_model, read_triples, Provenance, SampleSet, RAW_LOG_HEADER};
use gridshave::report::{read_schedule, write_file, RunReport};
use gridshave::{
    generate_synthetic, load_scenario, run_fixed_schedule, run_optimization, CopModel, Models,
    PMeanMode, PlantConfig, RunOutcome, Scenario, SolverOptions, SynthParams, TesConfig,
};

#[derive(Parser)]
#[command(name = "gridshave", version, about = "Peak shaving with chilled-water storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Previous,
    Same,
}

#[derive(clap::Args)]
struct ModelArgs {
    /// Plant configuration; defaults when omitted.
    #[arg(long)]
    plant: Option<PathBuf>,
    /// COP model configuration.
    #[arg(long)]
    cop: Option<PathBuf>,
    /// Storage configuration.
    #[arg(long)]
    tes: Option<PathBuf>,
    /// Source of each day's flat-profile target.
    #[arg(long, value_enum, default_value = "previous")]
    p_mean: Target,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the COP surface to samples or raw chiller logs.
    Fit {
        #[arg(long, conflicts_with = "raw", required_unless_present = "raw")]
        samples: Option<PathBuf>,
        /// Hourly logs with columns q_ch_mw,p_ch_mw,twb_c.
        #[arg(long)]
        raw: Option<PathBuf>,
        /// Storage configuration supplying q_ch_max for raw logs.
        #[arg(long)]
        tes: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic scenario.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        days: usize,
        /// First day, YYYY-MM-DD.
        #[arg(long)]
        start: Option<chrono::NaiveDate>,
        /// Multiplier on every afternoon amplitude; 0 gives flat profiles.
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Noise as a fraction of each amplitude.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Optimize the storage schedule of every day in a scenario.
    Optimize {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        models: ModelArgs,
        /// Solver options file.
        #[arg(long)]
        solver: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a given storage schedule.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// CSV with a q_stor_mw column, one row per scenario hour.
        #[arg(long)]
        schedule: PathBuf,
        #[command(flatten)]
        models: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render summary and chart from a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        plant: Option<PathBuf>,
        /// Output directory; defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

type Failure = (u8, String);

fn fail<E: std::fmt::Display>(e: E) -> Failure {
    (1, e.to_string())
}

fn load_or_default<T: ConfigFile + Default>(path: &Option<PathBuf>) -> Result<T, Failure> {
    match path {
        Some(p) => T::load(p).map_err(fail),
        None => Ok(T::default()),
    }
}

fn models(a: &ModelArgs) -> Result<(Models, PMeanMode), Failure> {
    let m = Models {
        plant: load_or_default::<PlantConfig>(&a.plant)?,
        cop: load_or_default::<CopModel>(&a.cop)?,
        tes: load_or_default::<TesConfig>(&a.tes)?,
    };
    let mode = match a.p_mean {
        Target::Previous => PMeanMode::PreviousDay,
        Target::Same => PMeanMode::SameDay,
    };
    Ok((m, mode))
}

fn write_run(s: &Scenario, run: &RunOutcome, m: &Models, out: &Path) -> Result<RunReport, Failure> {
    let report = RunReport::from_outcome(s, run, &m.plant).map_err(fail)?;
    report.write_dir(out).map_err(fail)?;
    let steam: Vec<f64> = s.rows.iter().map(|r| r.q_steam).collect();
    match report.dispatch_csv_string(&steam, &m.plant) {
        Ok(body) => write_file(&out.join("dispatch.csv"), &body).map_err(fail)?,
        Err(e) => log::warn!("plant dispatch not written: {e}"),
    }
    print!("{}", report.summary());
    Ok(report)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Fit {
            samples,
            raw,
            tes,
            out,
        } => {
            let set = match (samples, raw) {
                (Some(p), _) => SampleSet::read_csv(&p).map_err(fail)?,
                (None, Some(p)) => {
                    let tes = load_or_default::<TesConfig>(&tes)?;
                    let text = fs::read_to_string(&p).map_err(|e| fail(format!("{}: {e}", p.display())))?;
                    let body: String = text
                        .lines()
                        .filter(|l| !l.starts_with('#'))
                        .flat_map(|l| [l, "\n"])
                        .collect();
                    let logs = read_triples(&body, &RAW_LOG_HEADER)
                        .map_err(|e| fail(format!("{}: {e}", p.display())))?;
                    SampleSet::from_raw_logs(&logs, tes.q_ch_max, Provenance::Measured).map_err(fail)?
                }
                (None, None) => return Err(fail("one of --samples or --raw is required")),
            };
            let fit = fit_cop_model(&set).map_err(fail)?;
            let mut w = ConfigWriter::new();
            for line in fit.metrics_text().lines() {
                w.comment(line);
            }
            fit.model.write_flat(&mut w);
            fs::write(&out, w.finish()).map_err(|e| fail(format!("{}: {e}", out.display())))?;
            print!("{}", fit.metrics_text());
            Ok(())
        }
        Command::Synth {
            out,
            seed,
            days,
            start,
            amplitude,
            noise,
        } => {
            let d = SynthParams::default();
            let p = SynthParams {
                seed,
                days,
                start: start.unwrap_or(d.start),
                base_peak_mw: d.base_peak_mw * amplitude,
                cool_peak_mw: d.cool_peak_mw * amplitude,
                twb_peak_c: d.twb_peak_c * amplitude,
                noise: noise.unwrap_or(d.noise),
                ..d
            };
            let s = generate_synthetic(&p).map_err(fail)?;
            s.write(&out).map_err(fail)?;
            println!("wrote {} rows to {}", s.len(), out.display());
            Ok(())
        }
        Command::Optimize {
            scenario,
            models: margs,
            solver,
            out,
        } => {
            let s = load_scenario(&scenario).map_err(fail)?;
            let (m, mode) = models(&margs)?;
            let opts = load_or_default::<SolverOptions>(&solver)?;
            let run = run_optimization(&s, &m, &opts, mode).map_err(fail)?;
            write_run(&s, &run, &m, &out)?;
            if !run.converged() {
                return Err((2, "solver did not converge on every day".into()));
            }
            Ok(())
        }
        Command::Simulate {
            scenario,
            schedule,
            models: margs,
            out,
        } => {
            let s = load_scenario(&scenario).map_err(fail)?;
            let (m, mode) = models(&margs)?;
            let q = read_schedule(&schedule).map_err(fail)?;
            let run = run_fixed_schedule(&s, &m, &q, mode).map_err(fail)?;
            write_run(&s, &run, &m, &out)?;
            Ok(())
        }
        Command::Report { run, plant, out } => {
            let plant = load_or_default::<PlantConfig>(&plant)?;
            let report = RunReport::read(&run.join("report.csv"), &plant).map_err(fail)?;
            report.write_dir(out.as_deref().unwrap_or(&run)).map_err(fail)?;
            print!("{}", report.summary());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
