//! Network and mobility parameterization, plus the flat `key = value` config format.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Complete parameterization of a network: `n` nodes in an `L x L` square,
/// radio range `R`, link rate `G`, node speed `v`, direction-change rate `tau`.
///
/// Immutable once built; the node density is always recomputed from `n` and `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    n: usize,
    side_l: f64,
    range_r: f64,
    rate_g: f64,
    speed_v: f64,
    tau: f64,
}

impl ScenarioParams {
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn side(&self) -> f64 {
        self.side_l
    }
    pub fn range(&self) -> f64 {
        self.range_r
    }
    pub fn rate(&self) -> f64 {
        self.rate_g
    }
    pub fn speed(&self) -> f64 {
        self.speed_v
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Node density `n / L^2` in nodes per square meter.
    pub fn density(&self) -> f64 {
        self.n as f64 / (self.side_l * self.side_l)
    }

    /// Mean number of neighbors of a node, `pi * nu * R^2`.
    pub fn mean_degree(&self) -> f64 {
        std::f64::consts::PI * self.density() * self.range_r * self.range_r
    }

    /// Same scenario with another direction-change rate.
    pub fn with_tau(&self, tau: f64) -> Result<ScenarioParams> {
        ScenarioParams::new(self.n, self.side_l, self.range_r, self.rate_g, self.speed_v, tau)
    }

    pub fn new(n: usize, side: f64, range: f64, rate: f64, speed: f64, tau: f64) -> Result<Self> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if n < 2 {
            return fail(format!("nodes must be >= 2 (got {n})"));
        }
        if !(side.is_finite() && side > 0.0) {
            return fail(format!("side must be finite and > 0 (got {side})"));
        }
        if !(range.is_finite() && range > 0.0) {
            return fail(format!("range must be finite and > 0 (got {range})"));
        }
        if range >= side {
            return fail(format!("range ({range}) must be smaller than side ({side})"));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return fail(format!("rate must be finite and > 0 (got {rate})"));
        }
        if !(speed.is_finite() && speed >= 0.0) {
            return fail(format!("speed must be finite and >= 0 (got {speed})"));
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return fail(format!("tau must be finite and >= 0 (got {tau})"));
        }
        Ok(ScenarioParams {
            n,
            side_l: side,
            range_r: range,
            rate_g: rate,
            speed_v: speed,
            tau,
        })
    }
}

/// Raw, possibly partial configuration as read from a config file or CLI flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawConfig {
    pub nodes: Option<usize>,
    pub side: Option<f64>,
    pub range: Option<f64>,
    pub speed: Option<f64>,
    pub tau: Option<f64>,
    pub rate: Option<f64>,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub capacity: Option<Vec<f64>>,
    pub source_time: Option<f64>,
    pub replications: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl RawConfig {
    /// Parses the flat `key = value` format. Blank lines and `#` comments are
    /// ignored; `capacity` accepts a comma-separated list.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RawConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| Error::Validation(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Validation(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RawConfig::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse {key} = {v:?}"))
        }
        match key {
            "nodes" => self.nodes = Some(num(key, value)?),
            "side" => self.side = Some(num(key, value)?),
            "range" => self.range = Some(num(key, value)?),
            "speed" => self.speed = Some(num(key, value)?),
            "tau" => self.tau = Some(num(key, value)?),
            "rate" => self.rate = Some(num(key, value)?),
            "seed" => self.seed = Some(num(key, value)?),
            "horizon" => self.horizon = Some(num(key, value)?),
            "capacity" => self.capacity = Some(parse_list(value)?),
            "source_time" => self.source_time = Some(num(key, value)?),
            "replications" => self.replications = Some(num(key, value)?),
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Values present in `over` replace those in `self`.
    pub fn overridden_by(mut self, over: &RawConfig) -> RawConfig {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f.clone(); } )* };
        }
        take!(nodes, side, range, speed, tau, rate, seed, horizon, capacity, source_time, replications, out_dir);
        self
    }
}

/// Parses `"1,2,3"` (or whitespace separated) into a list of floats.
pub fn parse_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("cannot parse list element {s:?}")))
        .collect()
}

/// Validates a raw config into [`ScenarioParams`]. Every scenario field must be present.
pub fn build_scenario(raw: &RawConfig) -> Result<ScenarioParams> {
    let missing = |k: &str| Error::Validation(format!("missing required key {k:?}"));
    ScenarioParams::new(
        raw.nodes.ok_or_else(|| missing("nodes"))?,
        raw.side.ok_or_else(|| missing("side"))?,
        raw.range.ok_or_else(|| missing("range"))?,
        raw.rate.ok_or_else(|| missing("rate"))?,
        raw.speed.ok_or_else(|| missing("speed"))?,
        raw.tau.ok_or_else(|| missing("tau"))?,
    )
}
