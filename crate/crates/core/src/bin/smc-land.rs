use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use smc_land::config::{emit_config, parse_config, preset, preset_names, write_csv_file};
use smc_land::phase::active_phase;
use smc_land::sim::{compare_phases, randomized_scenarios, run_batch, Estimator, Outcome, RunResult};
use smc_land::target::target_command;
use smc_land::tuning::tuning_report;
use smc_land::{run_scenario, Error, PhaseMode, Result, ScenarioConfig};

#[derive(Parser)]
#[command(name = "smc-land", version, about = "Sliding-mode UAV landing guidance simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; writes trajectory.csv, summary.json and tuning.json.
    Run(Common),
    /// Run a scenario in single- and two-phase mode and report the deltas.
    Compare(Common),
    /// Print the gain-selection report for the initial state.
    Tune(Common),
    /// Run randomized initial conditions derived from a scenario.
    Batch {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// List preset names.
    Presets,
    /// Print the resolved scenario as JSON.
    Show(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    TwoPhase,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Exact,
    FiniteDiff,
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig> {
        let mut cfg = match (&self.preset, &self.config) {
            (Some(name), None) => preset(name)?,
            (None, Some(path)) => parse_config(path)?,
            _ => return Err(Error::Config("give exactly one of --preset or --config".into())),
        };
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(mode) = self.mode {
            cfg.phases.mode = match mode {
                ModeArg::Single => PhaseMode::SinglePhase,
                ModeArg::TwoPhase => PhaseMode::TwoPhase,
            };
        }
        if let Some(est) = self.estimator {
            cfg.estimator = match est {
                EstimatorArg::Exact => Estimator::Exact,
                EstimatorArg::FiniteDiff => Estimator::FiniteDiff,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn tune_document(cfg: &ScenarioConfig) -> Result<serde_json::Value> {
    let state = cfg.initial_state();
    let tgt = target_command(&cfg.target, 0.0);
    let phase = active_phase(state.range_xy, &cfg.phases);
    let report = tuning_report(&state, &tgt, cfg.phases.params_for(phase), phase)?;
    serde_json::to_value(report).map_err(|e| Error::Io(e.to_string()))
}

/// Prints a line, ignoring a closed pipe.
fn say(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn exit_for(outcome: Outcome) -> ExitCode {
    match outcome {
        Outcome::Touchdown => ExitCode::SUCCESS,
        Outcome::Timeout => ExitCode::from(2),
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Presets => {
            for name in preset_names() {
                say(&name);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Show(common) => {
            say(&emit_config(&common.scenario()?)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(common) => {
            let cfg = common.scenario()?;
            fs::create_dir_all(&common.out)?;
            let RunResult { log, metrics } = run_scenario(&cfg)?;
            write_csv_file(&log, common.out.join("trajectory.csv"))?;
            write_json(&common.out, "summary.json", &metrics)?;
            write_json(&common.out, "tuning.json", &tune_document(&cfg)?)?;
            say(&serde_json::to_string(&metrics).map_err(|e| Error::Io(e.to_string()))?);
            Ok(exit_for(metrics.outcome))
        }
        Command::Compare(common) => {
            let cfg = common.scenario()?;
            fs::create_dir_all(&common.out)?;
            let cmp = compare_phases(&cfg)?;
            write_json(&common.out, "comparison.json", &cmp)?;
            say(&serde_json::to_string_pretty(&cmp).map_err(|e| Error::Io(e.to_string()))?);
            let both = cmp.single.outcome == Outcome::Touchdown && cmp.two_phase.outcome == Outcome::Touchdown;
            Ok(if both { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Tune(common) => {
            let cfg = common.scenario()?;
            let doc = tune_document(&cfg)?;
            fs::create_dir_all(&common.out)?;
            write_json(&common.out, "tuning.json", &doc)?;
            say(&serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Batch { common, count } => {
            let cfg = common.scenario()?;
            fs::create_dir_all(&common.out)?;
            let cfgs = randomized_scenarios(&cfg, count, common.seed)?;
            let results = run_batch(&cfgs);
            let mut wtr = csv::Writer::from_path(common.out.join("batch.csv"))?;
            wtr.write_record(["name", "outcome", "final_time", "peak_range_xy_rate", "peak_speed", "error"])?;
            let mut timeouts = 0;
            for (c, r) in cfgs.iter().zip(&results) {
                let row = match r {
                    Ok(RunResult { metrics: m, .. }) => {
                        timeouts += usize::from(m.outcome == Outcome::Timeout);
                        let outcome = format!("{:?}", m.outcome).to_lowercase();
                        [
                            c.name.clone(),
                            outcome,
                            m.final_time.to_string(),
                            m.peak_range_xy_rate.to_string(),
                            m.peak_speed.to_string(),
                            String::new(),
                        ]
                    }
                    Err(e) => {
                        [c.name.clone(), "error".into(), String::new(), String::new(), String::new(), e.to_string()]
                    }
                };
                wtr.write_record(&row)?;
            }
            wtr.flush()?;
            let errors = results.iter().filter(|r| r.is_err()).count();
            say(&format!("{count} runs: {timeouts} timeouts, {errors} errors"));
            Ok(if errors > 0 {
                ExitCode::FAILURE
            } else if timeouts > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
    }
}

fn main() -> ExitCode {
    // usage errors exit 1; 2 is reserved for timeouts
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("smc-land: {e}");
            ExitCode::FAILURE
        }
    }
}
