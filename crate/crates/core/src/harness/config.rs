use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{BaselineKind, BaselineParams};
use crate::error::{Error, Result};
use crate::frame::Severity;
use crate::gridfusion::{FusionParams, GridSpec};
use crate::reliability::drm::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DrmRgf,
    HeuristicRgf,
    Naive,
    ValidityRange,
    SpatialMedian,
    TemporalReject,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::DrmRgf,
        Method::HeuristicRgf,
        Method::Naive,
        Method::ValidityRange,
        Method::SpatialMedian,
        Method::TemporalReject,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::DrmRgf => "drm_rgf",
            Method::HeuristicRgf => "heuristic_rgf",
            Method::Naive => "naive",
            Method::ValidityRange => "validity_range",
            Method::SpatialMedian => "spatial_median",
            Method::TemporalReject => "temporal_reject",
        }
    }

    pub fn baseline(self) -> Option<BaselineKind> {
        match self {
            Method::DrmRgf | Method::HeuristicRgf => None,
            Method::Naive => Some(BaselineKind::Naive),
            Method::ValidityRange => Some(BaselineKind::ValidityRange),
            Method::SpatialMedian => Some(BaselineKind::SpatialMedian),
            Method::TemporalReject => Some(BaselineKind::TemporalReject),
        }
    }

    /// Whether the method produces a continuous reliability map.
    pub fn has_reliability_map(self) -> bool {
        self.baseline().is_none()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config("method", format!("unknown method `{s}`")))
    }
}

fn default_radius() -> f64 {
    0.55
}

/// Parameters every compared pipeline must share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharedConfig {
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub fusion: FusionParams,
    #[serde(default = "default_radius")]
    pub inflation_radius: f64,
    #[serde(default)]
    pub baselines: BaselineParams,
}

impl Default for SharedConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            fusion: FusionParams::default(),
            inflation_radius: default_radius(),
            baselines: BaselineParams::default(),
        }
    }
}

impl SharedConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.fusion.validate()?;
        if !(self.inflation_radius >= 0.0 && self.inflation_radius.is_finite()) {
            return Err(Error::config("inflation_radius", "must be non-negative"));
        }
        self.baselines.validate()
    }

    /// Hex SHA-256 of the compact JSON form; field order is fixed by the
    /// struct layout, so equal configs hash equal.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn merge(base: &mut serde_json::Value, patch: &serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(serde_json::Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

fn default_severities() -> Vec<Severity> {
    Severity::ALL.to_vec()
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    #[serde(default = "default_severities")]
    pub severities: Vec<Severity>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Resamples the scenario trajectory to this many frames.
    #[serde(default)]
    pub frames: Option<usize>,
    #[serde(default)]
    pub shared: SharedConfig,
    /// Per-method patches over `shared`; any patch that changes a value is
    /// refused.
    #[serde(default)]
    pub method_overrides: BTreeMap<Method, serde_json::Value>,
    #[serde(default)]
    pub drm_model: Option<PathBuf>,
    /// Trains a model in-process when `drm_model` is absent.
    #[serde(default)]
    pub train: Option<TrainingSetup>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

/// In-process training on sequences simulated from a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSetup {
    pub scenario: String,
    #[serde(default = "default_severities")]
    pub severities: Vec<Severity>,
    pub seed: u64,
    /// Frames drawn from each severity's sequence.
    pub frames: usize,
    #[serde(default)]
    pub config: TrainConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::config(e.path().to_string(), e.inner().to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "needs at least one seed"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "needs at least one method"));
        }
        if self.severities.is_empty() {
            return Err(Error::config("severities", "needs at least one severity"));
        }
        if self.frames == Some(0) {
            return Err(Error::config("frames", "must be positive"));
        }
        if self.methods.contains(&Method::DrmRgf) && self.drm_model.is_none() && self.train.is_none() {
            return Err(Error::config("drm_model", "drm_rgf needs a model path or a train section"));
        }
        self.shared.validate()?;
        self.fairness_hash().map(|_| ())
    }

    /// Effective shared config of one method.
    pub fn shared_for(&self, method: Method) -> Result<SharedConfig> {
        let Some(patch) = self.method_overrides.get(&method) else {
            return Ok(self.shared.clone());
        };
        let mut v = serde_json::to_value(&self.shared).expect("config serializes");
        merge(&mut v, patch);
        serde_json::from_value(v).map_err(|e| Error::config(format!("method_overrides.{method}"), e.to_string()))
    }

    /// The one shared-config hash of the experiment, or a fairness error
    /// naming the first method whose effective config differs.
    pub fn fairness_hash(&self) -> Result<String> {
        let base = self.shared.hash();
        for &m in &self.methods {
            let h = self.shared_for(m)?.hash();
            if h != base {
                return Err(Error::Fairness(format!(
                    "method `{m}` overrides shared costmap parameters (hash {} vs {})",
                    &h[..12],
                    &base[..12]
                )));
            }
        }
        Ok(base)
    }
}
