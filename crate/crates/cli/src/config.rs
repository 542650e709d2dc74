//! Experiment configuration: TOML (`key = value` lines under `[section]`
//! headers), with defaults for every omitted key except `kind`.

use std::fmt;
use std::path::PathBuf;

use mblq::propagator::PropagatorConfig;
use mblq::spectral::KlDirection;
use mblq::spin_model::{ChainParams, MAX_DENSE_LENGTH};
use mblq::trainer::TrainingConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("`{field}` = {value}: {reason}")]
    Range {
        field: &'static str,
        value: String,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LevelStats,
    CueCheck,
    SupremacyCurve,
    Memory,
    MakeDataset,
    Train,
    WSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::LevelStats,
        Self::CueCheck,
        Self::SupremacyCurve,
        Self::Memory,
        Self::MakeDataset,
        Self::Train,
        Self::WSweep,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::LevelStats => "level-stats",
            Self::CueCheck => "cue-check",
            Self::SupremacyCurve => "supremacy-curve",
            Self::Memory => "memory",
            Self::MakeDataset => "make-dataset",
            Self::Train => "train",
            Self::WSweep => "w-sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A scalar or a list; lists span a grid of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::One(x) => vec![*x],
            Self::Many(xs) => xs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(rename = "L", default = "defaults::length")]
    pub length: usize,
    #[serde(rename = "J", default = "defaults::coupling")]
    pub coupling: f64,
    #[serde(default = "defaults::field")]
    pub h: f64,
    #[serde(default = "defaults::omega")]
    pub omega: f64,
    #[serde(rename = "F", default = "defaults::drive")]
    pub drive: OneOrMany,
    #[serde(rename = "W", default = "defaults::disorder")]
    pub disorder: OneOrMany,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorSection {
    #[serde(default = "defaults::n_steps")]
    pub n_steps: usize,
    #[serde(default = "defaults::yes")]
    pub exact_static: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchSection {
    #[serde(rename = "M", default = "defaults::quench_layers")]
    pub layers: usize,
    #[serde(default = "defaults::window_start")]
    pub window_start: usize,
    #[serde(default = "defaults::window_len")]
    pub window_len: usize,
    #[serde(default = "defaults::dm_max")]
    pub dm_max: usize,
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    #[serde(default = "defaults::quench_checkpoint")]
    pub checkpoint_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    #[serde(rename = "M", default = "defaults::training_layers")]
    pub layers: usize,
    #[serde(rename = "D", default = "defaults::candidates")]
    pub candidates: usize,
    #[serde(rename = "kT0", default = "defaults::kt0", with = "inf_float")]
    pub kt0: f64,
    #[serde(default = "defaults::dataset_size")]
    pub dataset_size: usize,
    #[serde(default = "defaults::datasets")]
    pub datasets: usize,
    #[serde(default = "defaults::direction")]
    pub kld_direction: Direction,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub shot_count: usize,
    #[serde(default = "defaults::ratio_realizations")]
    pub ratio_realizations: usize,
    #[serde(default = "defaults::training_checkpoint")]
    pub checkpoint_every: usize,
}

/// Validated experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub master_seed: u64,
    pub realizations: usize,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
    pub chain: ChainSection,
    pub propagator: PropagatorSection,
    pub quench: QuenchSection,
    pub training: TrainingSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Option<String>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "defaults::realizations")]
    realizations: usize,
    #[serde(default = "defaults::output_dir")]
    output_dir: PathBuf,
    #[serde(default)]
    emit_plots: bool,
    #[serde(default = "defaults::chain")]
    chain: ChainSection,
    #[serde(default = "defaults::propagator")]
    propagator: PropagatorSection,
    #[serde(default = "defaults::quench")]
    quench: QuenchSection,
    #[serde(default = "defaults::training")]
    training: TrainingSection,
}

mod defaults {
    use super::*;

    pub fn length() -> usize {
        9
    }
    pub fn coupling() -> f64 {
        1.0
    }
    pub fn field() -> f64 {
        2.5
    }
    pub fn omega() -> f64 {
        8.0
    }
    pub fn drive() -> OneOrMany {
        OneOrMany::Many(vec![0.0, 2.5])
    }
    pub fn disorder() -> OneOrMany {
        OneOrMany::Many(vec![1.0, 20.0])
    }
    pub fn n_steps() -> usize {
        128
    }
    pub fn yes() -> bool {
        true
    }
    pub fn quench_layers() -> usize {
        400
    }
    pub fn window_start() -> usize {
        378
    }
    pub fn window_len() -> usize {
        22
    }
    pub fn dm_max() -> usize {
        10
    }
    pub fn delta() -> f64 {
        1.0
    }
    pub fn quench_checkpoint() -> usize {
        50
    }
    pub fn training_layers() -> usize {
        10_000
    }
    pub fn candidates() -> usize {
        200
    }
    pub fn kt0() -> f64 {
        1.0
    }
    pub fn dataset_size() -> usize {
        3000
    }
    pub fn datasets() -> usize {
        10
    }
    pub fn direction() -> Direction {
        Direction::Forward
    }
    pub fn epsilon() -> f64 {
        1e-12
    }
    pub fn ratio_realizations() -> usize {
        20
    }
    pub fn training_checkpoint() -> usize {
        100
    }
    pub fn realizations() -> usize {
        500
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
    pub fn chain() -> ChainSection {
        toml::from_str("").expect("chain defaults")
    }
    pub fn propagator() -> PropagatorSection {
        toml::from_str("").expect("propagator defaults")
    }
    pub fn quench() -> QuenchSection {
        toml::from_str("").expect("quench defaults")
    }
    pub fn training() -> TrainingSection {
        toml::from_str("").expect("training defaults")
    }
}

/// `f64` that may be `+inf`, written as the string `"inf"` where the
/// format has no infinity (JSON).
pub mod inf_float {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *x == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(x) => Ok(x),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(D::Error::custom(format!("expected a number or \"inf\", found {t:?}"))),
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn range(field: &'static str, value: impl fmt::Display, reason: &str) -> ConfigError {
    ConfigError::Range {
        field,
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

/// Parses and validates configuration text.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, ConfigError> {
    let parsed: RawConfig = toml::from_str(raw).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(raw, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let kind = match parsed.kind.as_deref().map(str::trim) {
        None | Some("") => return Err(ConfigError::MissingKey("kind")),
        Some(name) => ExperimentKind::parse(name).ok_or_else(|| {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            range("kind", format!("{name:?}"), &format!("must be one of {}", names.join(", ")))
        })?,
    };
    let config = ExperimentConfig {
        kind,
        master_seed: parsed.seed,
        realizations: parsed.realizations,
        output_dir: parsed.output_dir,
        emit_plots: parsed.emit_plots,
        chain: parsed.chain,
        propagator: parsed.propagator,
        quench: parsed.quench,
        training: parsed.training,
    };
    config.check()?;
    Ok(config)
}

impl ExperimentConfig {
    /// Range checks on every numeric field.
    pub fn check(&self) -> Result<(), ConfigError> {
        let c = &self.chain;
        if c.length == 0 || c.length > MAX_DENSE_LENGTH {
            return Err(range("chain.L", c.length, &format!("must be in 1..={MAX_DENSE_LENGTH}")));
        }
        for (field, x) in [("chain.J", c.coupling), ("chain.h", c.h)] {
            if !x.is_finite() {
                return Err(range(field, x, "must be finite"));
            }
        }
        if !(c.omega.is_finite() && c.omega > 0.0) {
            return Err(range("chain.omega", c.omega, "must be positive"));
        }
        let drives = c.drive.values();
        if drives.is_empty() {
            return Err(range("chain.F", "[]", "needs at least one value"));
        }
        if let Some(f) = drives.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
            return Err(range("chain.F", f, "must be non-negative"));
        }
        let disorders = c.disorder.values();
        if disorders.is_empty() {
            return Err(range("chain.W", "[]", "needs at least one value"));
        }
        if let Some(w) = disorders.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(range("chain.W", w, "must be non-negative"));
        }
        if self.realizations == 0 {
            return Err(range("realizations", 0, "must be at least 1"));
        }
        if self.propagator.n_steps == 0 {
            return Err(range("propagator.n_steps", 0, "must be at least 1"));
        }
        let q = &self.quench;
        if q.layers == 0 {
            return Err(range("quench.M", 0, "must be at least 1"));
        }
        if q.checkpoint_every == 0 {
            return Err(range("quench.checkpoint_every", 0, "must be at least 1"));
        }
        if !(q.delta.is_finite() && q.delta > 0.0) {
            return Err(range("quench.delta", q.delta, "must be positive"));
        }
        if self.kind == ExperimentKind::Memory {
            if q.window_len == 0 {
                return Err(range("quench.window_len", 0, "must be at least 1"));
            }
            if q.window_start + q.window_len - 1 + q.dm_max > q.layers {
                return Err(range(
                    "quench.window_start",
                    q.window_start,
                    &format!("window plus dm_max exceeds M = {}", q.layers),
                ));
            }
        }
        let t = &self.training;
        for (field, x) in [
            ("training.M", t.layers),
            ("training.D", t.candidates),
            ("training.dataset_size", t.dataset_size),
            ("training.datasets", t.datasets),
            ("training.ratio_realizations", t.ratio_realizations),
            ("training.checkpoint_every", t.checkpoint_every),
        ] {
            if x == 0 {
                return Err(range(field, x, "must be at least 1"));
            }
        }
        if !(t.kt0 > 0.0) {
            return Err(range("training.kT0", t.kt0, "must be positive (inf for uniform)"));
        }
        if !(t.epsilon.is_finite() && t.epsilon > 0.0) {
            return Err(range("training.epsilon", t.epsilon, "must be positive"));
        }
        Ok(())
    }

    /// `(F, W)` grid in row-major order over `F`.
    pub fn grid(&self) -> Vec<ChainParams> {
        let mut out = Vec::new();
        for f in self.chain.drive.values() {
            for w in self.chain.disorder.values() {
                out.push(self.chain_params(f, w));
            }
        }
        out
    }

    pub fn chain_params(&self, drive: f64, disorder: f64) -> ChainParams {
        ChainParams {
            length: self.chain.length,
            coupling: self.chain.coupling,
            field: self.chain.h,
            drive_amplitude: drive,
            drive_frequency: self.chain.omega,
            disorder,
        }
    }

    pub fn propagator_config(&self) -> PropagatorConfig {
        PropagatorConfig {
            n_steps: self.propagator.n_steps,
            exact_static: self.propagator.exact_static,
        }
    }

    pub fn training_config(&self) -> TrainingConfig {
        let t = &self.training;
        TrainingConfig {
            max_layers: t.layers,
            candidates: t.candidates,
            kld_direction: match t.kld_direction {
                Direction::Forward => KlDirection::Forward,
                Direction::Reverse => KlDirection::Reverse,
            },
            epsilon: t.epsilon,
            shot_count: t.shot_count,
            record_candidates: false,
        }
    }
}
