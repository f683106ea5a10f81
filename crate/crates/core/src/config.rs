//! Run configuration file (TOML).
//!
//! ```toml
//! [estimator]
//! variant = "aiez"
//! declination_deg = 0.0
//!
//! [estimator.detector]
//! shoe_threshold = 25.0
//!
//! [metrics]
//! total_distance_m = 500.0
//!
//! [scenario.path]
//! segments = [{ straight = 150.0 }, { turn = 90.0 }]
//! closed = false
//! ```
//!
//! Every table rejects unknown keys. Angular quantities are written in
//! degrees (`_deg`, `_dps` suffixes) and held in radians in memory.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::pipeline::VariantConfig;
use crate::synth::Scenario;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// Route length used for the TTD percentage, m. Falls back to the
    /// scenario path length when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_distance_m: Option<f64>,
    /// Start point the final position is compared with, m.
    #[serde(default)]
    pub origin: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub estimator: VariantConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    /// Required by `simulate` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        if let Some(d) = self.metrics.total_distance_m {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Config(format!("metrics.total_distance_m must be > 0, got {d}")));
            }
        }
        if !self.metrics.origin.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("metrics.origin must be finite".into()));
        }
        if let Some(s) = &self.scenario {
            s.validate()?;
        }
        Ok(())
    }

    pub fn origin(&self) -> Vec3 {
        Vec3::from(self.metrics.origin)
    }

    /// Route length for metrics: the explicit value, else the scenario
    /// path length.
    pub fn total_distance(&self) -> Option<f64> {
        self.metrics
            .total_distance_m
            .or_else(|| self.scenario.as_ref().map(|s| s.path.length()))
    }
}

/// Serde adapter: degrees on disk, radians in memory.
pub(crate) mod degrees {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(v.to_degrees())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d).map(f64::to_radians)
    }
}

/// [`degrees`] for three-vectors.
pub(crate) mod degrees3 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64; 3], s: S) -> Result<S::Ok, S::Error> {
        v.map(f64::to_degrees).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 3], D::Error> {
        <[f64; 3]>::deserialize(d).map(|v| v.map(f64::to_radians))
    }
}
