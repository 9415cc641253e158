//! Config file loading and flag overrides.

use std::fs;
use std::path::{Path, PathBuf};

use arachne_core::arena::{load_arena, Arena, Bounds, RobotStart, WorldState};
use arachne_core::command::{parse_script, ScriptEntry, TaskSpec};
use arachne_core::sim::{ConfigError, SimConfig};

use crate::CliError;

/// Loads the config file, or the defaults when none is given. Relative file
/// paths inside a config file are resolved against its directory.
pub fn load_config(path: Option<&Path>) -> Result<SimConfig, CliError> {
    let Some(path) = path else {
        return Ok(SimConfig::default());
    };
    let text = read(path)?;
    let mut cfg = SimConfig::from_json(&text).map_err(|e| CliError::Config {
        file: Some(path.to_path_buf()),
        source: e,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: &mut Option<String>| {
        if let Some(s) = p {
            if Path::new(s.as_str()).is_relative() {
                *s = base.join(s.as_str()).to_string_lossy().into_owned();
            }
        }
    };
    resolve(&mut cfg.arena);
    resolve(&mut cfg.script);
    Ok(cfg)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn field(path: &str, message: impl ToString) -> CliError {
    CliError::Config {
        file: None,
        source: ConfigError::new(path, message),
    }
}

/// Flags shared by the commands that run the simulation. Set flags win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub ticks: Option<u64>,
    pub arena: Option<PathBuf>,
    pub script: Option<PathBuf>,
    pub goal: Option<(f64, f64)>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut SimConfig) -> Result<(), CliError> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.ticks {
            cfg.ticks = t;
        }
        if let Some(a) = &self.arena {
            cfg.arena = Some(a.to_string_lossy().into_owned());
        }
        if let Some(s) = &self.script {
            cfg.script = Some(s.to_string_lossy().into_owned());
        }
        if let Some((x, y)) = self.goal {
            cfg.task = Some(TaskSpec { x, y, radius: None });
        }
        cfg.validate().map_err(|e| CliError::Config { file: None, source: e })
    }
}

/// Arena used when none is configured: 10 m square, no obstacles, robot in the middle.
pub fn default_arena() -> Arena {
    Arena::new(
        WorldState::empty(Bounds::new(0.0, 0.0, 10.0, 10.0)),
        RobotStart {
            x: 5.0,
            y: 5.0,
            heading_deg: 0.0,
        },
    )
    .expect("default arena is valid")
}

pub fn load_arena_file(path: &Path) -> Result<Arena, CliError> {
    load_arena(&read(path)?).map_err(|e| CliError::Arena {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn arena_for(cfg: &SimConfig) -> Result<Arena, CliError> {
    match &cfg.arena {
        Some(p) => load_arena_file(Path::new(p)),
        None => Ok(default_arena()),
    }
}

pub fn script_for(cfg: &SimConfig) -> Result<Vec<ScriptEntry>, CliError> {
    let Some(p) = &cfg.script else {
        return Ok(Vec::new());
    };
    let script = parse_script(&read(Path::new(p))?).map_err(|e| field("script", format!("{p}: {e}")))?;
    for (i, ScriptEntry(t, _)) in script.iter().enumerate() {
        if !(t.is_finite() && *t >= 0.0) {
            return Err(field(&format!("script[{i}]"), "time must be finite and >= 0"));
        }
        if i > 0 && *t < script[i - 1].0 {
            return Err(field(&format!("script[{i}]"), "times must be non-decreasing"));
        }
    }
    Ok(script)
}

/// Parses `X,Y`.
pub fn parse_goal(s: &str) -> Result<(f64, f64), String> {
    let (x, y) = s.split_once(',').ok_or("expected X,Y")?;
    let x: f64 = x.trim().parse().map_err(|e| format!("x: {e}"))?;
    let y: f64 = y.trim().parse().map_err(|e| format!("y: {e}"))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err("coordinates must be finite".into());
    }
    Ok((x, y))
}
