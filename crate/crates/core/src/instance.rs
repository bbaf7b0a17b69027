//! Arm and instance representation plus the line-oriented instance file format.
//!
//! An instance file holds one decimal mean per line. Blank lines and lines
//! starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of an arm inside an [`Instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArmId(pub usize);

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("line {line}: cannot parse {text:?} as a number")]
    Malformed { line: usize, text: String },
    #[error("mean {0} is outside [0, 1]")]
    MeanOutOfRange(f64),
    #[error("an instance needs at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("the maximum mean {0} is shared by several arms")]
    TiedMaximum(f64),
    #[error("discrete group index must be >= 1, got {0}")]
    GroupIndexZero(u32),
    #[error("discrete construction needs at least one sub-optimal arm")]
    EmptyCounts,
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

/// A unit-variance Gaussian arm, identified by its mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    mean: f64,
}

impl ArmSpec {
    pub fn new(mean: f64) -> Result<Self, InstanceError> {
        if !(0.0..=1.0).contains(&mean) {
            return Err(InstanceError::MeanOutOfRange(mean));
        }
        Ok(Self { mean })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }
}

/// A Best-1-Arm instance with a unique optimal arm.
///
/// The arm order is storage order only; algorithms treat the arms as a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    id: String,
    arms: Vec<ArmSpec>,
}

impl Instance {
    pub fn new(id: impl Into<String>, means: &[f64]) -> Result<Self, InstanceError> {
        let arms = means
            .iter()
            .map(|&m| ArmSpec::new(m))
            .collect::<Result<Vec<_>, _>>()?;
        if arms.len() < 2 {
            return Err(InstanceError::TooFewArms(arms.len()));
        }
        let top = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if means.iter().filter(|&&m| m == top).count() > 1 {
            return Err(InstanceError::TiedMaximum(top));
        }
        Ok(Self {
            id: id.into(),
            arms,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arms(&self) -> &[ArmSpec] {
        &self.arms
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmSpec::mean).collect()
    }

    pub fn mean(&self, arm: ArmId) -> f64 {
        self.arms[arm.0].mean
    }

    /// The arm with the strictly largest mean.
    pub fn best_arm(&self) -> ArmId {
        let mut best = 0;
        for (i, a) in self.arms.iter().enumerate() {
            if a.mean > self.arms[best].mean {
                best = i;
            }
        }
        ArmId(best)
    }

    /// Renders the instance in the line-oriented file format.
    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\n", self.id);
        for a in &self.arms {
            out.push_str(&format!("{}\n", a.mean));
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path).map_err(|e| InstanceError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(parse_instance(&text)?.with_id(id))
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_text()).map_err(|e| InstanceError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Parses the line-oriented instance format, preserving file order.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut means = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mean: f64 = line.parse().map_err(|_| InstanceError::Malformed {
            line: i + 1,
            text: line.to_string(),
        })?;
        if !mean.is_finite() {
            return Err(InstanceError::Malformed {
                line: i + 1,
                text: line.to_string(),
            });
        }
        means.push(mean);
    }
    Instance::new("", &means)
}

/// Builds an instance whose sub-optimal gaps are all exact powers of two:
/// one arm at `top_mean` and `counts[k]` arms at `top_mean - 2^-k`.
pub fn make_discrete_instance(
    counts: &BTreeMap<u32, usize>,
    top_mean: f64,
) -> Result<Instance, InstanceError> {
    if counts.values().sum::<usize>() == 0 {
        return Err(InstanceError::EmptyCounts);
    }
    let mut means = vec![top_mean];
    for (&k, &n) in counts {
        if k == 0 {
            return Err(InstanceError::GroupIndexZero(k));
        }
        let m = top_mean - 0.5f64.powi(k as i32);
        means.extend(std::iter::repeat_n(m, n));
    }
    let label = counts
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(k, n)| format!("k{k}x{n}"))
        .collect::<Vec<_>>()
        .join("-");
    Instance::new(format!("discrete-{label}"), &means)
}
