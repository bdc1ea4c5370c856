//! `key = value` run configuration.
//!
//! Flow grids are three-dimensional unless `nz = 0`, which selects a 2-D
//! grid. `n` and `L` set every axis at once (`L` is the half-width, so the
//! side length is `2L`); `nx`/`ny`/`nz` and `lx`/`ly`/`lz` (full side
//! lengths) override single axes.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::diagnostics::DEFAULT_ALPHA;
use crate::dirac::DEFAULT_RHO_FLOOR;
use crate::error::ConfigError;
use crate::flow::{DtPolicy, FlowConfig, InitSpec, MetricMode, Preset};
use crate::grid::MIN_NODES;
use crate::toy2d::{ToyConfig, MIN_HALF_WIDTH};

pub const KEYS: &[&str] = &[
    "mode",
    "nx",
    "ny",
    "nz",
    "lx",
    "ly",
    "lz",
    "n",
    "L",
    "t_end",
    "dt",
    "cfl_safety",
    "epsilon",
    "rho_floor",
    "gauge",
    "alpha",
    "init",
    "init_r0",
    "init_amp",
    "seed",
    "snapshot_every",
    "outdir",
];

const TOY_KEYS: &[&str] = &["mode", "n", "L", "t_end", "dt", "cfl_safety", "outdir"];

const DEFAULT_CFL_SAFETY: f64 = 0.5;
const DEFAULT_FLOW_N: usize = 32;
const DEFAULT_FLOW_HALF_WIDTH: f64 = 1.0;
const DEFAULT_FLOW_T_END: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Flow,
    Toy2d,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Flow => "flow",
            Mode::Toy2d => "toy2d",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunConfig {
    Flow(FlowConfig),
    Toy2d(ToyConfig),
}

/// A resolved configuration plus the values it was resolved from.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub run: RunConfig,
    pub outdir: PathBuf,
}

impl ResolvedConfig {
    pub fn mode(&self) -> Mode {
        match self.run {
            RunConfig::Flow(_) => Mode::Flow,
            RunConfig::Toy2d(_) => Mode::Toy2d,
        }
    }

    /// Every resolved parameter as `(key, value)`, in a fixed order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = vec![("mode".into(), self.mode().name().into())];
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        match &self.run {
            RunConfig::Flow(c) => {
                let axes = ["x", "y", "z"];
                for axis in 0..3 {
                    let n = c.n.get(axis).copied().unwrap_or(0);
                    push(&format!("n{}", axes[axis]), n.to_string());
                }
                for (axis, l) in c.length.iter().enumerate() {
                    push(&format!("l{}", axes[axis]), l.to_string());
                }
                push("t_end", c.t_end.to_string());
                push_dt(&mut push, c.dt_policy);
                push("epsilon", c.epsilon.to_string());
                push("rho_floor", c.rho_floor.to_string());
                push("gauge", c.gauge.to_string());
                push("alpha", c.alpha.to_string());
                push("init", c.init.preset.name().to_string());
                push("init_r0", c.init.r0.to_string());
                push("init_amp", c.init.amp.to_string());
                push("seed", c.seed.to_string());
                push("snapshot_every", c.snapshot_every.to_string());
            }
            RunConfig::Toy2d(c) => {
                push("n", c.n.to_string());
                push("L", c.half_width.to_string());
                push("t_end", c.t_end.to_string());
                push_dt(&mut push, c.dt_policy);
            }
        }
        out.push(("outdir".into(), self.outdir.display().to_string()));
        out
    }
}

fn push_dt(push: &mut impl FnMut(&str, String), policy: DtPolicy) {
    match policy {
        DtPolicy::Fixed(dt) => push("dt", dt.to_string()),
        DtPolicy::Cfl { safety } => push("cfl_safety", safety.to_string()),
    }
}

/// One `key = value` entry and the line it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits config text into entries, rejecting unknown keys and duplicates.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: raw.trim().to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: raw.trim().to_string(),
            });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if out.iter().any(|e| e.key == key) {
            return Err(ConfigError::Constraint {
                line,
                key: key.to_string(),
                message: "duplicate key".into(),
            });
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}

/// Parses and resolves config text.
pub fn parse_config(text: &str) -> Result<ResolvedConfig, ConfigError> {
    resolve(&parse_entries(text)?)
}

/// Applies `overrides` on top of `base`; the override wins per key.
pub fn merge(base: Vec<Entry>, overrides: Vec<Entry>) -> Vec<Entry> {
    let mut out: Vec<Entry> = base
        .into_iter()
        .filter(|e| !overrides.iter().any(|o| o.key == e.key))
        .collect();
    out.extend(overrides);
    out
}

struct Lookup<'a> {
    entries: BTreeMap<&'a str, &'a Entry>,
}

impl<'a> Lookup<'a> {
    fn new(entries: &'a [Entry]) -> Self {
        Lookup {
            entries: entries.iter().map(|e| (e.key.as_str(), e)).collect(),
        }
    }

    fn get(&self, key: &str) -> Option<&'a Entry> {
        self.entries.get(key).copied()
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, expected: &'static str) -> Result<Option<(T, &'a Entry)>, ConfigError> {
        let Some(e) = self.get(key) else { return Ok(None) };
        match e.value.parse::<T>() {
            Ok(v) => Ok(Some((v, e))),
            Err(_) => Err(type_error(e, expected)),
        }
    }

    fn real(&self, key: &str) -> Result<Option<(f64, &'a Entry)>, ConfigError> {
        match self.parsed::<f64>(key, "a real number")? {
            Some((v, e)) if !v.is_finite() => Err(type_error(e, "a finite real number")),
            other => Ok(other),
        }
    }

    fn real_where(&self, key: &str, ok: impl Fn(f64) -> bool, message: &str) -> Result<Option<f64>, ConfigError> {
        match self.real(key)? {
            Some((v, e)) if !ok(v) => Err(constraint(e, message)),
            Some((v, _)) => Ok(Some(v)),
            None => Ok(None),
        }
    }

    fn count(&self, key: &str, allow_zero: bool) -> Result<Option<usize>, ConfigError> {
        match self.parsed::<usize>(key, "a non-negative integer")? {
            Some((0, _)) if allow_zero => Ok(Some(0)),
            Some((v, e)) if v < MIN_NODES => Err(constraint(e, &format!("must be >= {MIN_NODES}"))),
            Some((v, _)) => Ok(Some(v)),
            None => Ok(None),
        }
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        let Some(e) = self.get(key) else { return Ok(None) };
        match e.value.as_str() {
            "true" | "on" | "1" => Ok(Some(true)),
            "false" | "off" | "0" => Ok(Some(false)),
            _ => Err(type_error(e, "a boolean (true/false/on/off)")),
        }
    }
}

fn type_error(e: &Entry, expected: &'static str) -> ConfigError {
    ConfigError::Type {
        line: e.line,
        key: e.key.clone(),
        expected,
        value: e.value.clone(),
    }
}

fn constraint(e: &Entry, message: &str) -> ConfigError {
    ConfigError::Constraint {
        line: e.line,
        key: e.key.clone(),
        message: message.to_string(),
    }
}

fn dt_policy(look: &Lookup) -> Result<DtPolicy, ConfigError> {
    let dt = look.real_where("dt", |v| v > 0.0, "must be > 0")?;
    let safety = look.real_where("cfl_safety", |v| v > 0.0 && v <= 1.0, "must lie in (0, 1]")?;
    match (dt, safety) {
        (Some(_), Some(_)) => Err(constraint(
            look.get("cfl_safety").expect("present"),
            "cannot be combined with dt",
        )),
        (Some(dt), None) => Ok(DtPolicy::Fixed(dt)),
        (None, s) => Ok(DtPolicy::Cfl {
            safety: s.unwrap_or(DEFAULT_CFL_SAFETY),
        }),
    }
}

/// Resolves entries into a run configuration with defaults filled in.
pub fn resolve(entries: &[Entry]) -> Result<ResolvedConfig, ConfigError> {
    let look = Lookup::new(entries);
    let mode = match look.get("mode") {
        None => Mode::Flow,
        Some(e) => match e.value.as_str() {
            "flow" => Mode::Flow,
            "toy2d" => Mode::Toy2d,
            _ => return Err(type_error(e, "`flow` or `toy2d`")),
        },
    };
    let outdir = PathBuf::from(look.get("outdir").map_or("out", |e| e.value.as_str()));
    let t_end = look.real_where("t_end", |v| v > 0.0, "must be > 0")?;
    let dt_policy = dt_policy(&look)?;

    let run = match mode {
        Mode::Toy2d => {
            if let Some(e) = entries.iter().find(|e| !TOY_KEYS.contains(&e.key.as_str())) {
                return Err(constraint(e, "not used in toy2d mode"));
            }
            let defaults = ToyConfig::default();
            RunConfig::Toy2d(ToyConfig {
                n: look.count("n", false)?.unwrap_or(defaults.n),
                half_width: look
                    .real_where("L", |v| v >= MIN_HALF_WIDTH, "must be >= 6")?
                    .unwrap_or(defaults.half_width),
                t_end: t_end.unwrap_or(defaults.t_end),
                dt_policy,
            })
        }
        Mode::Flow => {
            let n_all = look.count("n", false)?.unwrap_or(DEFAULT_FLOW_N);
            let half = look
                .real_where("L", |v| v > 0.0, "must be > 0")?
                .unwrap_or(DEFAULT_FLOW_HALF_WIDTH);
            let nx = look.count("nx", false)?.unwrap_or(n_all);
            let ny = look.count("ny", false)?.unwrap_or(n_all);
            let nz = look.count("nz", true)?.unwrap_or(n_all);
            let mut length = Vec::new();
            let mut n = vec![nx, ny];
            if nz > 0 {
                n.push(nz);
            } else if let Some(e) = look.get("lz") {
                return Err(constraint(e, "not used on a 2-D grid (nz = 0)"));
            }
            for key in ["lx", "ly", "lz"].iter().take(n.len()) {
                length.push(look.real_where(key, |v| v > 0.0, "must be > 0")?.unwrap_or(2.0 * half));
            }
            let preset = match look.get("init") {
                None => InitSpec::default().preset,
                Some(e) => e
                    .value
                    .parse::<Preset>()
                    .map_err(|_| type_error(e, "one of constant, gaussian_bump, nodal_ring, random_smooth"))?,
            };
            RunConfig::Flow(FlowConfig {
                n,
                length,
                t_end: t_end.unwrap_or(DEFAULT_FLOW_T_END),
                dt_policy,
                epsilon: look.real_where("epsilon", |v| v >= 0.0, "must be >= 0")?.unwrap_or(0.0),
                rho_floor: look
                    .real_where("rho_floor", |v| v > 0.0 && v < 1.0, "must lie in (0, 1)")?
                    .unwrap_or(DEFAULT_RHO_FLOOR),
                gauge: look.flag("gauge")?.unwrap_or(false),
                alpha: look.real_where("alpha", |v| v >= 0.0, "must be >= 0")?.unwrap_or(DEFAULT_ALPHA),
                init: InitSpec {
                    preset,
                    r0: look.real_where("init_r0", |v| v > 0.0, "must be > 0")?.unwrap_or(1.0),
                    amp: look.real("init_amp")?.map_or(1.0, |(v, _)| v),
                },
                seed: look.parsed::<u64>("seed", "an unsigned 64-bit integer")?.map_or(0, |(v, _)| v),
                snapshot_every: look
                    .parsed::<u64>("snapshot_every", "a non-negative integer")?
                    .map_or(0, |(v, _)| v),
                outdir: outdir.clone(),
                metric: MetricMode::Dynamic,
            })
        }
    };
    Ok(ResolvedConfig { run, outdir })
}
