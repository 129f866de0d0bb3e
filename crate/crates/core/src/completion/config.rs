use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a lidar return combines with warped history at the same pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FuseMode {
    /// The lidar value replaces the warped value.
    #[default]
    SparseOverrides,
    /// Confidence-weighted mean of both, with the lidar weighted 1.
    ConfidenceBlend,
}

/// Pipeline settings, loadable from TOML:
///
/// ```toml
/// fuse_mode = "sparse-overrides"
/// fill_radius = 4
/// iterations = 12
/// bandwidth = 0.1
/// gamma = 0.9
/// min_seed_confidence = 0.5
/// fill_confidence = 0.05
/// ```
///
/// Missing keys take their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub fuse_mode: FuseMode,
    /// Search radius of the inverse-distance fill, pixels.
    pub fill_radius: usize,
    /// Affinity propagation iterations.
    pub iterations: usize,
    /// Affinity bandwidth, in guide intensity units.
    pub bandwidth: f64,
    /// Per-frame decay of carried confidence.
    pub gamma: f64,
    /// Warped pixels below this confidence do not seed the next frame.
    pub min_seed_confidence: f64,
    /// Confidence given to pixels produced by interpolation.
    pub fill_confidence: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            fuse_mode: FuseMode::SparseOverrides,
            fill_radius: 4,
            iterations: 12,
            bandwidth: 0.1,
            gamma: 0.9,
            min_seed_confidence: 0.5,
            fill_confidence: 0.05,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.fill_radius < 1 {
            return bad("fill_radius must be at least 1".into());
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return bad(format!("bandwidth {} must be positive", self.bandwidth));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} must be in (0, 1]", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.min_seed_confidence) {
            return bad(format!("min_seed_confidence {} must be in [0, 1]", self.min_seed_confidence));
        }
        if !(self.fill_confidence > 0.0 && self.fill_confidence <= 1.0) {
            return bad(format!("fill_confidence {} must be in (0, 1]", self.fill_confidence));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("plain fields serialize")
    }
}
