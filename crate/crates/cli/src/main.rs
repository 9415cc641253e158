//! `arachne`: batch runs, gait traces, sensor reports and the live telemetry service.

mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use arachne_core::arena::load_arena;
use arachne_core::command::Command as SimCommand;
use arachne_core::gait::{joint_trace, plan_cycle, Direction, LegId};
use arachne_core::report::sensor_accuracy_report;
use arachne_core::sim::{run_sim, ConfigError, Outcome, Simulation};
use arachne_telemetry::{drive, BindError, DriveOptions, ServeConfig, Server, DEFAULT_TCP_PORT, DEFAULT_WS_PORT};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use config::{arena_for, load_config, parse_goal, script_for, Overrides};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}{source}", file.as_ref().map(|f| format!("{}: ", f.display())).unwrap_or_default())]
    Config { file: Option<PathBuf>, source: ConfigError },
    #[error("{}: {message}", path.display())]
    Arena { path: PathBuf, message: String },
    #[error(transparent)]
    Bind(#[from] BindError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Parser)]
#[command(name = "arachne", version, about = "Quadruped crawl-gait simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON config file; flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Random seed for sensor noise.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Arena file; an empty 10 m square when neither this nor the config names one.
    #[arg(long, value_name = "PATH")]
    arena: Option<PathBuf>,
    /// Tick budget.
    #[arg(long, value_name = "N")]
    ticks: Option<u64>,
    /// Command script: a JSON list of [t_sim, command] pairs.
    #[arg(long, value_name = "PATH")]
    script: Option<PathBuf>,
    /// Goal set at t = 0, as X,Y in meters.
    #[arg(long, value_name = "X,Y", value_parser = parse_goal, allow_hyphen_values = true)]
    goal: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Forward,
    Left,
    Right,
    Backward,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Forward => Direction::Forward,
            DirectionArg::Left => Direction::Left,
            DirectionArg::Right => Direction::Right,
            DirectionArg::Backward => Direction::Backward,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run a simulation to completion and print its summary.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Write the per-tick trace here as JSON lines, ending with the summary.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Export joint angles over whole gait cycles as CSV.
    GaitCsv {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum, default_value = "forward")]
        direction: DirectionArg,
        #[arg(long, default_value_t = 2)]
        cycles: usize,
        #[arg(long, default_value_t = 25)]
        samples_per_phase: usize,
        /// One file per leg, named `<stem>_leg<N>.csv` next to `--out`.
        #[arg(long, requires = "out")]
        per_leg: bool,
        /// Output path; stdout when absent.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Compare sensor readings against ground truth over random trials.
    SensorReport {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u32).range(1..))]
        trials: u32,
        /// Write the JSON report here; the table goes to stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run a live simulation with the telemetry service until interrupted.
    Serve {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// TCP port for line-delimited JSON clients.
        #[arg(long, env = "ARACHNE_PORT", default_value_t = DEFAULT_TCP_PORT)]
        port: u16,
        /// Websocket port for browser clients.
        #[arg(long, env = "ARACHNE_WS_PORT", default_value_t = DEFAULT_WS_PORT)]
        ws_port: u16,
        /// Run as fast as possible instead of in real time.
        #[arg(long)]
        no_throttle: bool,
        /// Messages a client may fall behind before it is dropped.
        #[arg(long, default_value_t = 16_384)]
        queue_bound: usize,
    },
    /// Check arena files against the schema.
    ArenaValidate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn stdout(text: &str) {
    let mut out = io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}

fn overrides(cfg: &ConfigArgs, sim: Option<&SimArgs>) -> Overrides {
    Overrides {
        seed: cfg.seed,
        ticks: sim.and_then(|s| s.ticks),
        arena: sim.and_then(|s| s.arena.clone()),
        script: sim.and_then(|s| s.script.clone()),
        goal: sim.and_then(|s| s.goal),
    }
}

/// Pretty JSON text ending in LF.
fn pretty(json: serde_json::Result<String>) -> String {
    json.expect("serializable") + "\n"
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Cmd::Run { cfg, sim, out } => {
            let mut c = load_config(cfg.config.as_deref())?;
            overrides(&cfg, Some(&sim)).apply(&mut c)?;
            let arena = arena_for(&c)?;
            let script = script_for(&c)?;
            let trace = run_sim(&c, &arena, &script).map_err(|e| CliError::Config { file: None, source: e })?;
            if let Some(out) = out {
                write_file(&out, &trace.to_jsonl())?;
            }
            stdout(&pretty(serde_json::to_string_pretty(&trace.summary)));
            Ok(true)
        }
        Cmd::GaitCsv {
            cfg,
            direction,
            cycles,
            samples_per_phase,
            per_leg,
            out,
        } => {
            let mut c = load_config(cfg.config.as_deref())?;
            overrides(&cfg, None).apply(&mut c)?;
            let config_err = |path: &str, e: &dyn std::fmt::Display| CliError::Config {
                file: None,
                source: ConfigError::new(path, e),
            };
            let g = c
                .leg
                .geometry()
                .map_err(|e| CliError::Config { file: None, source: e })?;
            let plan = plan_cycle(&c.gait, &g, direction.into()).map_err(|e| config_err("gait", &e))?;
            let trace = joint_trace(&plan, &g, samples_per_phase)
                .map_err(|e| config_err("samples_per_phase", &e))?
                .repeat(cycles);
            match (out, per_leg) {
                (Some(out), true) => {
                    let stem = out
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    for leg in LegId::ALL {
                        let path = out.with_file_name(format!("{stem}_leg{}.csv", leg.number()));
                        write_file(&path, &trace.leg_csv(leg))?;
                    }
                }
                (Some(out), false) => write_file(&out, &trace.to_csv())?,
                (None, _) => stdout(&trace.to_csv()),
            }
            Ok(true)
        }
        Cmd::SensorReport { cfg, trials, out } => {
            let mut c = load_config(cfg.config.as_deref())?;
            overrides(&cfg, None).apply(&mut c)?;
            let report = sensor_accuracy_report(&c.sensors, c.body_radius, trials, c.seed);
            if let Some(out) = out {
                write_file(&out, &pretty(serde_json::to_string_pretty(&report)))?;
            }
            stdout(&report.to_table());
            Ok(true)
        }
        Cmd::Serve {
            cfg,
            sim,
            host,
            port,
            ws_port,
            no_throttle,
            queue_bound,
        } => {
            let mut c = load_config(cfg.config.as_deref())?;
            overrides(&cfg, Some(&sim)).apply(&mut c)?;
            let arena = arena_for(&c)?;
            let script = script_for(&c)?;
            let mut simulation = Simulation::new(&c, &arena).map_err(|e| CliError::Config { file: None, source: e })?;
            if let Some(task) = c.task {
                simulation.apply_command(&SimCommand::SetTask(task));
            }
            let server = Server::bind(&ServeConfig {
                host,
                tcp_port: port,
                ws_port,
                queue_bound,
            })?;
            stdout(&format!(
                "listening tcp://{} ws://{}\n",
                server.tcp_addr(),
                server.ws_addr()
            ));
            let stop = Arc::new(AtomicBool::new(false));
            let flag = stop.clone();
            if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
                log::warn!("cannot install interrupt handler: {e}");
            }
            let opts = DriveOptions {
                throttle: !no_throttle,
                max_ticks: sim.ticks,
                script,
            };
            drive(&mut simulation, server.hub(), &opts, &stop, |_| {});
            server.shutdown();
            let outcome = if simulation.controller().mode == arachne_core::controller::Mode::Reached {
                Outcome::Reached
            } else if stop.load(Ordering::SeqCst) {
                Outcome::ScriptExhausted
            } else {
                Outcome::TickBudgetExceeded
            };
            stdout(&pretty(serde_json::to_string_pretty(&simulation.summary(outcome))));
            Ok(true)
        }
        Cmd::ArenaValidate { paths } => {
            let mut ok = true;
            for p in paths {
                let text = match fs::read_to_string(&p) {
                    Ok(t) => t,
                    Err(e) => {
                        eprintln!("error {}: {e}", p.display());
                        ok = false;
                        continue;
                    }
                };
                match load_arena(&text) {
                    Ok(a) => stdout(&format!(
                        "ok {}: {} obstacles, {} smoke sources, {} hot spots\n",
                        p.display(),
                        a.world.obstacles.len(),
                        a.world.smoke_sources.len(),
                        a.world.temperature.hot_spots.len()
                    )),
                    Err(e) => {
                        eprintln!("error {}: {e}", p.display());
                        ok = false;
                    }
                }
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("arachne: {e}");
            ExitCode::FAILURE
        }
    }
}
