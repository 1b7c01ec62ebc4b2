//! Flat `key=value` experiment configuration.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::adversary::{make_schedule, JamSchedule, ScheduleError, StrategySpec};
use crate::protocols::{Alpha, ParamError, ProtocolKind, ProtocolParams};

pub const DEFAULT_MAX_SLOTS: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("key {0:?} given twice")]
    DuplicateKey(String),
    #[error("missing required key {0:?}")]
    Missing(&'static str),
    #[error("bad value for {key}: {value:?}")]
    BadValue { key: &'static str, value: String },
    #[error("multicastcore needs the adversary budget T")]
    MissingBudget,
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("strategy: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("unknown sweep axis {0:?}; expected T, n, C or alpha")]
    BadAxis(String),
    #[error("sweep needs at least one value")]
    NoValues,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub protocol: ProtocolKind,
    pub n: u32,
    pub channels: Option<u32>,
    pub alpha: Alpha,
    pub a: f64,
    pub b: f64,
    /// Adversary budget T; `None` means 0 except for MultiCastCore, which
    /// must be told.
    pub budget: Option<u64>,
    pub strategy: StrategySpec,
    pub seed: u64,
    pub trials: u64,
    pub max_slots: u64,
    pub out: Option<PathBuf>,
    pub emit_trace: bool,
}

const KEYS: [&str; 13] = [
    "protocol",
    "n",
    "C",
    "alpha",
    "a",
    "b",
    "T",
    "strategy",
    "seed",
    "trials",
    "max_slots",
    "out",
    "emit_trace",
];

impl ExperimentConfig {
    pub fn new(protocol: ProtocolKind, n: u32) -> Self {
        ExperimentConfig {
            protocol,
            n,
            channels: None,
            alpha: Alpha::default(),
            a: 4.0,
            b: 4.0,
            budget: None,
            strategy: StrategySpec::Silent,
            seed: 0,
            trials: 1,
            max_slots: DEFAULT_MAX_SLOTS,
            out: None,
            emit_trace: false,
        }
    }

    pub fn budget(&self) -> u64 {
        self.budget.unwrap_or(0)
    }

    pub fn params(&self) -> ProtocolParams {
        ProtocolParams {
            kind: self.protocol,
            n: self.n,
            channels: self.channels,
            alpha: self.alpha,
            a: self.a,
            b: self.b,
            budget: self.budget(),
        }
    }

    /// Checks everything that can be checked without running, including
    /// compiling the jam schedule. Returns the schedule.
    pub fn validate(&self) -> Result<JamSchedule, ConfigError> {
        let params = self.params();
        params.validate()?;
        if self.protocol == ProtocolKind::MultiCastCore && self.budget.is_none() {
            return Err(ConfigError::MissingBudget);
        }
        if self.trials == 0 {
            return Err(ConfigError::NoTrials);
        }
        Ok(make_schedule(&self.strategy, &params, self.budget())?)
    }

    /// Canonical text form; parses back to the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "protocol={}", self.protocol);
        let _ = writeln!(s, "n={}", self.n);
        if let Some(c) = self.channels {
            let _ = writeln!(s, "C={c}");
        }
        let _ = writeln!(s, "alpha={}", self.alpha);
        let _ = writeln!(s, "a={}", self.a);
        let _ = writeln!(s, "b={}", self.b);
        if let Some(t) = self.budget {
            let _ = writeln!(s, "T={t}");
        }
        let _ = writeln!(s, "strategy={}", self.strategy);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "trials={}", self.trials);
        let _ = writeln!(s, "max_slots={}", self.max_slots);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out={}", out.display());
        }
        let _ = writeln!(s, "emit_trace={}", self.emit_trace);
        s
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: FromStr>(key: &'static str, v: &str) -> Result<T, ConfigError> {
            v.parse().map_err(|_| ConfigError::BadValue { key, value: v.to_string() })
        }
        match key {
            "protocol" => self.protocol = parse("protocol", value)?,
            "n" => self.n = parse("n", value)?,
            "C" => self.channels = Some(parse("C", value)?),
            "alpha" => self.alpha = parse("alpha", value)?,
            "a" => self.a = parse("a", value)?,
            "b" => self.b = parse("b", value)?,
            "T" => self.budget = Some(parse("T", value)?),
            "strategy" => self.strategy = value.parse()?,
            "seed" => self.seed = parse("seed", value)?,
            "trials" => self.trials = parse("trials", value)?,
            "max_slots" => self.max_slots = parse("max_slots", value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "emit_trace" => self.emit_trace = parse("emit_trace", value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut pairs = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected key=value, got {line:?}"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey(k.to_string()));
            }
            if !seen.insert(k) {
                return Err(ConfigError::DuplicateKey(k.to_string()));
            }
            pairs.push((k, v));
        }
        let get = |key: &'static str| pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let protocol = get("protocol").ok_or(ConfigError::Missing("protocol"))?;
        let n = get("n").ok_or(ConfigError::Missing("n"))?;
        let mut cfg = ExperimentConfig::new(ProtocolKind::MultiCast, 2);
        cfg.set("protocol", protocol)?;
        cfg.set("n", n)?;
        for (k, v) in &pairs {
            if *k != "protocol" && *k != "n" {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }
}

/// Parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Budget,
    Nodes,
    Channels,
    Alpha,
}

impl Axis {
    pub fn key(self) -> &'static str {
        match self {
            Axis::Budget => "T",
            Axis::Nodes => "n",
            Axis::Channels => "C",
            Axis::Alpha => "alpha",
        }
    }

    /// Numeric value for plotting.
    pub fn x(self, cfg: &ExperimentConfig) -> f64 {
        match self {
            Axis::Budget => cfg.budget() as f64,
            Axis::Nodes => cfg.n as f64,
            Axis::Channels => cfg.channels.unwrap_or(0) as f64,
            Axis::Alpha => cfg.alpha.to_f64(),
        }
    }
}

impl FromStr for Axis {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "T" => Ok(Axis::Budget),
            "n" => Ok(Axis::Nodes),
            "C" => Ok(Axis::Channels),
            "alpha" => Ok(Axis::Alpha),
            _ => Err(ConfigError::BadAxis(s.to_string())),
        }
    }
}

/// Configs for every sweep point, all validated before returning.
pub fn sweep_points(
    base: &ExperimentConfig,
    axis: Axis,
    values: &[String],
) -> Result<Vec<(ExperimentConfig, JamSchedule)>, ConfigError> {
    if values.is_empty() {
        return Err(ConfigError::NoValues);
    }
    values
        .iter()
        .map(|v| {
            let mut cfg = base.clone();
            cfg.set(axis.key(), v)?;
            let schedule = cfg.validate()?;
            Ok((cfg, schedule))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# budget sweep base
protocol=multicast
n=16
T=4096
strategy=full_burst(k=8)
seed=7
trials=3
";

    #[test]
    fn parse_and_round_trip() {
        let cfg: ExperimentConfig = SAMPLE.parse().unwrap();
        assert_eq!(cfg.protocol, ProtocolKind::MultiCast);
        assert_eq!(cfg.budget, Some(4096));
        assert_eq!(cfg.max_slots, DEFAULT_MAX_SLOTS);
        let again: ExperimentConfig = cfg.to_text().parse().unwrap();
        assert_eq!(again, cfg);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(
            "protocol=multicast\nn=8\nfoo=1".parse::<ExperimentConfig>(),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            "protocol=multicast\nn=8\nn=16".parse::<ExperimentConfig>(),
            Err(ConfigError::DuplicateKey(_))
        ));
        assert!(matches!("n=8".parse::<ExperimentConfig>(), Err(ConfigError::Missing("protocol"))));
        assert!(matches!(
            "protocol=multicast\nn=8\njunk".parse::<ExperimentConfig>(),
            Err(ConfigError::Syntax { line: 3, .. })
        ));
    }

    #[test]
    fn compatibility_rules() {
        let cfg: ExperimentConfig = "protocol=multicast\nn=12".parse().unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Params(ParamError::BadNodeCount(12)))));
        let cfg: ExperimentConfig = "protocol=multicastcore\nn=8".parse().unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::MissingBudget)));
        let cfg: ExperimentConfig = "protocol=multicast-c\nn=16\nC=16".parse().unwrap();
        assert!(cfg.validate().is_err());
        let cfg: ExperimentConfig = "protocol=multicastadv-c\nn=16\nC=3".parse().unwrap();
        assert!(cfg.validate().is_err());
        let cfg: ExperimentConfig = "protocol=multicastadv\nn=16\nalpha=0.3".parse().unwrap();
        assert!(cfg.validate().is_err());
        let cfg: ExperimentConfig = "protocol=multicast\nn=16\nT=10\nstrategy=full_burst(k=4,s=5)".parse().unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Schedule(_))));
    }

    #[test]
    fn sweep_validates_every_point() {
        let base: ExperimentConfig = "protocol=multicastadv\nn=16".parse().unwrap();
        let vals: Vec<String> = ["1/8", "0.3"].iter().map(|s| s.to_string()).collect();
        assert!(sweep_points(&base, Axis::Alpha, &vals).is_err());
        let vals: Vec<String> = ["1/8", "0.2"].iter().map(|s| s.to_string()).collect();
        assert_eq!(sweep_points(&base, Axis::Alpha, &vals).unwrap().len(), 2);
        assert!("m".parse::<Axis>().is_err());
    }
}
