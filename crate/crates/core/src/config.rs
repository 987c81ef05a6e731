//! Experiment configuration.
//!
//! Config files are TOML: top-level `seed`, `replicas` and `output`, plus one
//! table per experiment kind (`[queue-room]`, `[ion-channel]`, `[ou]`,
//! `[reflected-ou]`, `[mmwn]`, `[limit-check]`). Keys missing from a table
//! take the kind's defaults; `key=value` overrides are applied on top.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kmc::StopRule;
use crate::lattice::Labels;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    QueueRoom,
    IonChannel,
    Ou,
    ReflectedOu,
    Mmwn,
    LimitCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::QueueRoom,
        ExperimentKind::IonChannel,
        ExperimentKind::Ou,
        ExperimentKind::ReflectedOu,
        ExperimentKind::Mmwn,
        ExperimentKind::LimitCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::QueueRoom => "queue-room",
            ExperimentKind::IonChannel => "ion-channel",
            ExperimentKind::Ou => "ou",
            ExperimentKind::ReflectedOu => "reflected-ou",
            ExperimentKind::Mmwn => "mmwn",
            ExperimentKind::LimitCheck => "limit-check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    fn default_replicas(self) -> usize {
        match self {
            ExperimentKind::QueueRoom | ExperimentKind::IonChannel | ExperimentKind::Mmwn => 10,
            ExperimentKind::Ou => 100,
            ExperimentKind::ReflectedOu => 20,
            ExperimentKind::LimitCheck => 10_000,
        }
    }

    pub fn default_params(self) -> Params {
        match self {
            ExperimentKind::QueueRoom => Params::Lattice(LatticeExperiment::queue_room()),
            ExperimentKind::IonChannel => Params::Lattice(LatticeExperiment::ion_channel()),
            ExperimentKind::Ou => Params::Ou(OuExperiment::free()),
            ExperimentKind::ReflectedOu => Params::Ou(OuExperiment::reflected()),
            ExperimentKind::Mmwn => Params::Queue(QueueExperiment::default()),
            ExperimentKind::LimitCheck => Params::Limit(LimitExperiment::default()),
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Lattice runs: the cartesian product of `epsilons × door_widths ×
/// populations`, each optionally paired with a passive-free twin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeExperiment {
    pub side: usize,
    pub door_widths: Vec<usize>,
    pub epsilons: Vec<f64>,
    /// `[active, passive]` particle counts.
    pub populations: Vec<[usize; 2]>,
    pub passive_free_twin: bool,
    pub horizon: f64,
    pub stop: StopRule,
    pub rate_unit: f64,
    pub t_min: f64,
    pub per_decade: usize,
    /// Snapshot dump times for replica 0.
    pub snapshots: Vec<f64>,
    /// Write the full event CSV of replica 0.
    pub event_log: bool,
    pub strict_parity: bool,
    pub labels: Labels,
}

impl LatticeExperiment {
    pub fn queue_room() -> Self {
        LatticeExperiment {
            side: 60,
            door_widths: vec![20],
            epsilons: vec![0.1, 0.3, 0.5],
            populations: vec![[1200, 1200]],
            passive_free_twin: true,
            horizon: 1e6,
            stop: StopRule::AllActiveExited,
            rate_unit: 1.0,
            t_min: 0.1,
            per_decade: 32,
            snapshots: Vec::new(),
            event_log: false,
            strict_parity: false,
            labels: Labels::Crowd,
        }
    }

    pub fn ion_channel() -> Self {
        LatticeExperiment {
            door_widths: vec![15, 20, 30, 40, 60],
            epsilons: vec![0.2],
            passive_free_twin: false,
            labels: Labels::Ions,
            ..Self::queue_room()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuExperiment {
    pub mu: f64,
    pub gamma: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<f64>,
    pub v0: f64,
    pub dt: f64,
    pub horizon: f64,
    /// Rows kept in path and summary CSVs: every `stride`-th step.
    pub stride: usize,
    pub write_paths: usize,
    /// Also integrate the unreflected twin of every reflected path.
    pub twin_free: bool,
}

impl OuExperiment {
    pub fn free() -> Self {
        OuExperiment {
            mu: 1.0,
            gamma: 1.0,
            sigma: 1.0,
            boundary: None,
            v0: 0.0,
            dt: 1e-3,
            horizon: 50.0,
            stride: 10,
            write_paths: 5,
            twin_free: false,
        }
    }

    pub fn reflected() -> Self {
        OuExperiment {
            mu: 1.2,
            gamma: 10.0,
            sigma: 0.3,
            boundary: Some(0.5),
            v0: 0.5,
            twin_free: true,
            ..Self::free()
        }
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn ou_params(&self) -> crate::sde::OuParams {
        crate::sde::OuParams {
            mu: self.mu,
            gamma: self.gamma,
            sigma: self.sigma,
            boundary: self.boundary,
            v0: self.v0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueExperiment {
    pub lambda: f64,
    pub mu: f64,
    pub servers: usize,
    pub capacity: usize,
    pub horizon: f64,
    pub initial: usize,
}

impl Default for QueueExperiment {
    fn default() -> Self {
        QueueExperiment {
            lambda: 1.0,
            mu: 1.0,
            servers: 2,
            capacity: 5,
            horizon: 1e5,
            initial: 0,
        }
    }
}

impl QueueExperiment {
    pub fn queue_params(&self) -> crate::queue::QueueParams {
        crate::queue::QueueParams {
            lambda: self.lambda,
            mu: self.mu,
            servers: self.servers,
            capacity: self.capacity,
            horizon: self.horizon,
            initial: self.initial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitExperiment {
    pub alphas: Vec<f64>,
    pub t: f64,
}

impl Default for LimitExperiment {
    fn default() -> Self {
        LimitExperiment {
            alphas: vec![10.0, 100.0, 1000.0],
            t: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Lattice(LatticeExperiment),
    Ou(OuExperiment),
    Queue(QueueExperiment),
    Limit(LimitExperiment),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub replicas: usize,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            seed: 1,
            replicas: kind.default_replicas(),
            output: None,
            params: kind.default_params(),
        }
    }

    /// Parses a config file's text for `kind`, then applies `key=value`
    /// overrides. Override keys name either a top-level key or a key of the
    /// kind's table.
    pub fn from_toml(kind: ExperimentKind, text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        for key in doc.keys() {
            let known = matches!(key.as_str(), "seed" | "replicas" | "output")
                || ExperimentKind::from_name(key).is_some();
            if !known {
                return Err(Error::Parse(format!("unknown top-level key `{key}`")));
            }
        }
        let mut section = match doc.remove(kind.name()) {
            Some(toml::Value::Table(t)) => t,
            Some(_) => return Err(Error::Parse(format!("`{kind}` must be a table"))),
            None => toml::Table::new(),
        };
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("override `{o}` is not key=value")))?;
            let (key, value) = (key.trim(), parse_value(raw.trim()));
            if matches!(key, "seed" | "replicas" | "output") {
                doc.insert(key.to_string(), value);
            } else {
                section.insert(key.to_string(), value);
            }
        }

        let mut config = ExperimentConfig::defaults(kind);
        if let Some(v) = doc.get("seed") {
            config.seed = v
                .as_integer()
                .and_then(|i| u64::try_from(i).ok())
                .ok_or_else(|| Error::Parse("`seed` must be a non-negative integer".into()))?;
        }
        if let Some(v) = doc.get("replicas") {
            config.replicas = v
                .as_integer()
                .and_then(|i| usize::try_from(i).ok())
                .ok_or_else(|| Error::Parse("`replicas` must be a non-negative integer".into()))?;
        }
        if let Some(v) = doc.get("output") {
            config.output =
                Some(PathBuf::from(v.as_str().ok_or_else(|| {
                    Error::Parse("`output` must be a string".into())
                })?));
        }
        config.params = match kind.default_params() {
            Params::Lattice(d) => Params::Lattice(overlay(d, section, kind)?),
            Params::Ou(d) => Params::Ou(overlay(d, section, kind)?),
            Params::Queue(d) => Params::Queue(overlay(d, section, kind)?),
            Params::Limit(d) => Params::Limit(overlay(d, section, kind)?),
        };
        Ok(config)
    }

    /// Canonical JSON of every resolved setting, defaults included.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`ExperimentConfig::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn overlay<T: Serialize + DeserializeOwned>(
    defaults: T,
    section: toml::Table,
    kind: ExperimentKind,
) -> Result<T> {
    let mut base = toml::Table::try_from(&defaults).map_err(|e| Error::Parse(e.to_string()))?;
    base.extend(section);
    toml::Value::Table(base)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(format!("[{kind}] {}", e.message())))
}

/// Field-by-field validation; an empty list means the config is runnable.
/// Pure: never touches the filesystem.
pub fn validate(config: &ExperimentConfig) -> Vec<String> {
    let mut v = Vec::new();
    if config.replicas == 0 {
        v.push("replicas must be at least 1".to_string());
    }
    match &config.params {
        Params::Lattice(p) => validate_lattice(p, &mut v),
        Params::Ou(p) => validate_ou(config.kind, p, &mut v),
        Params::Queue(p) => {
            if let Err(Error::Invalid(errs)) = p.queue_params().validate() {
                v.extend(errs);
            }
        }
        Params::Limit(p) => {
            if p.alphas.len() < 2 {
                v.push("alphas: need at least two scales".into());
            }
            if p.alphas.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
                v.push("alphas: every scale must be positive".into());
            }
            let mut s = p.alphas.clone();
            s.sort_by(f64::total_cmp);
            if s.windows(2).any(|w| w[0] == w[1]) {
                v.push("alphas: duplicate scale values".into());
            }
            if !(p.t > 0.0 && p.t.is_finite()) {
                v.push(format!("t = {} must be positive", p.t));
            }
            if config.replicas < crate::queue::MIN_LIMIT_REPLICAS {
                v.push(format!(
                    "replicas = {} below the minimum of {}",
                    config.replicas,
                    crate::queue::MIN_LIMIT_REPLICAS
                ));
            }
        }
    }
    v
}

fn validate_lattice(p: &LatticeExperiment, v: &mut Vec<String>) {
    if p.side == 0 {
        v.push("side: L must be positive".into());
    } else if p.strict_parity && p.side.is_multiple_of(2) {
        v.push(format!(
            "side: L = {} must be odd under strict_parity",
            p.side
        ));
    }
    if p.door_widths.is_empty() {
        v.push("door_widths: at least one door width".into());
    }
    for &w in &p.door_widths {
        if w == 0 || w > p.side {
            v.push(format!("door_widths: ω = {w} must lie in [1, {}]", p.side));
        }
    }
    if p.epsilons.is_empty() {
        v.push("epsilons: at least one drift value".into());
    }
    for &e in &p.epsilons {
        if !(0.0..=1.0).contains(&e) {
            v.push(format!("epsilons: ε must lie in [0,1] (got {e})"));
        }
    }
    if p.populations.is_empty() {
        v.push("populations: at least one [active, passive] pair".into());
    }
    for &[a, b] in &p.populations {
        if a + b > p.side * p.side {
            v.push(format!(
                "populations: overfull lattice ({a} + {b} > {} sites)",
                p.side * p.side
            ));
        }
    }
    if !(p.horizon > 0.0 && p.horizon.is_finite()) {
        v.push(format!("horizon = {} must be positive", p.horizon));
    }
    if !(p.rate_unit > 0.0 && p.rate_unit.is_finite()) {
        v.push(format!("rate_unit = {} must be positive", p.rate_unit));
    }
    if !(p.t_min > 0.0 && p.t_min < p.horizon) {
        v.push(format!("t_min = {} must lie in (0, horizon)", p.t_min));
    }
    if p.per_decade == 0 {
        v.push("per_decade must be at least 1".into());
    }
    for &t in &p.snapshots {
        if !(0.0..=p.horizon).contains(&t) {
            v.push(format!("snapshots: dump time {t} outside [0, horizon]"));
        }
    }
}

fn validate_ou(kind: ExperimentKind, p: &OuExperiment, v: &mut Vec<String>) {
    if !(p.gamma > 0.0) {
        v.push(format!("gamma = {} must be positive", p.gamma));
    }
    if !(p.sigma >= 0.0 && p.sigma.is_finite()) {
        v.push(format!("sigma = {} must be non-negative", p.sigma));
    }
    if !(p.dt > 0.0 && p.dt.is_finite()) {
        v.push(format!("dt = {} must be positive", p.dt));
    }
    if !(p.horizon > 0.0 && p.horizon.is_finite()) {
        v.push(format!("horizon = {} must be positive", p.horizon));
    } else if p.dt > 0.0 && p.steps() == 0 {
        v.push("horizon shorter than one step".into());
    }
    if p.stride == 0 {
        v.push("stride must be at least 1".into());
    }
    match (kind, p.boundary) {
        (ExperimentKind::ReflectedOu, None) => {
            v.push("boundary: reflected-ou needs a reflecting level r".into())
        }
        (ExperimentKind::Ou, Some(_)) => {
            v.push("boundary: ou is unreflected; use reflected-ou".into())
        }
        (_, Some(r)) if p.v0 < r => v.push(format!("v0 = {} lies below r = {r}", p.v0)),
        _ => {}
    }
}
