use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cloudseg::{PlaneConfig, SegmentConfig};
use crate::error::{Error, Result};
use crate::evalkit::MetricConfig;
use crate::grounding::{GroundingConfig, NoisyDetector};
use crate::instruct::DescriptionKind;
use crate::posefit::PoseConfig;
use crate::scene::SceneConfig;

/// Environment variable that overrides the run seed.
pub const SEED_ENV: &str = "LANG6D_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    Bbox,
    Mask,
    /// Box or mask, chosen per record with equal odds.
    BboxMask,
}

impl InputMode {
    pub fn name(&self) -> &'static str {
        match self {
            InputMode::Bbox => "bbox",
            InputMode::Mask => "mask",
            InputMode::BboxMask => "bbox+mask",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "bbox" => Some(Self::Bbox),
            "mask" => Some(Self::Mask),
            "bbox+mask" | "bbox_mask" => Some(Self::BboxMask),
            _ => None,
        }
    }
}

/// Input corruption applied after cropping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Corruption {
    /// Upper bound of the per-side box expansion ratio.
    pub bbox_expand: f64,
    /// Disk radius, pixels.
    pub mask_dilation: u32,
    /// Isotropic Gaussian point noise, meters.
    pub noise_sigma: f64,
}

impl Default for Corruption {
    fn default() -> Self {
        Self::NONE
    }
}

impl Corruption {
    pub const NONE: Corruption = Corruption {
        bbox_expand: 0.0,
        mask_dilation: 0,
        noise_sigma: 0.0,
    };
}

/// Corruption corpora of the strategy ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Bbox,
    Mask,
    BboxMask,
    BboxMaskNoise,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Bbox, Strategy::Mask, Strategy::BboxMask, Strategy::BboxMaskNoise];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Bbox => "bbox",
            Strategy::Mask => "mask",
            Strategy::BboxMask => "bbox+mask",
            Strategy::BboxMaskNoise => "bbox+mask+noise",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s || k.name().replace('+', "_") == s)
    }

    /// Input mode and corruption for this corpus, using `levels` for the
    /// magnitudes.
    pub fn apply(&self, levels: &Corruption) -> (InputMode, Corruption) {
        match self {
            Strategy::Bbox => (
                InputMode::Bbox,
                Corruption {
                    noise_sigma: 0.0,
                    ..*levels
                },
            ),
            Strategy::Mask => (
                InputMode::Mask,
                Corruption {
                    noise_sigma: 0.0,
                    ..*levels
                },
            ),
            Strategy::BboxMask => (
                InputMode::BboxMask,
                Corruption {
                    noise_sigma: 0.0,
                    ..*levels
                },
            ),
            Strategy::BboxMaskNoise => (InputMode::BboxMask, *levels),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorConfig {
    Oracle,
    Noisy(NoisyDetector),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneSource {
    /// RANSAC on the full depth frame.
    Estimated,
    GroundTruth,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstructionConfig {
    pub kinds: Vec<DescriptionKind>,
    pub min_margin: f64,
    pub min_relation: f64,
    /// Objects with fewer visible pixels are neither targets nor candidates.
    pub min_pixels: usize,
    /// JSON lexicon; the built-in one when absent.
    pub lexicon: Option<PathBuf>,
}

impl Default for InstructionConfig {
    fn default() -> Self {
        Self {
            kinds: DescriptionKind::ALL.to_vec(),
            min_margin: 0.2,
            min_relation: 0.75,
            min_pixels: 30,
            lexicon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub label: String,
    pub seed: u64,
    pub scene_count: usize,
    pub scene: SceneConfig,
    pub instructions: InstructionConfig,
    pub detector: DetectorConfig,
    pub grounding: GroundingConfig,
    pub input_mode: InputMode,
    pub segmentation: bool,
    pub corruption: Corruption,
    /// Magnitudes used by the strategy ablation.
    pub strategy_levels: Corruption,
    pub plane_source: PlaneSource,
    pub plane: PlaneConfig,
    pub segment: SegmentConfig,
    pub pose: PoseConfig,
    pub metrics: MetricConfig,
    /// Output directory; not part of the config hash.
    pub output: Option<PathBuf>,
    /// Worker threads (all cores when absent); not part of the config hash.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            label: "run".into(),
            seed: 7,
            scene_count: 200,
            scene: SceneConfig::default(),
            instructions: InstructionConfig::default(),
            detector: DetectorConfig::Oracle,
            grounding: GroundingConfig::default(),
            input_mode: InputMode::Mask,
            segmentation: true,
            corruption: Corruption::NONE,
            strategy_levels: Corruption {
                bbox_expand: 0.3,
                mask_dilation: 3,
                noise_sigma: 0.001,
            },
            plane_source: PlaneSource::Estimated,
            plane: PlaneConfig::default(),
            segment: SegmentConfig::default(),
            pose: PoseConfig::default(),
            metrics: MetricConfig::default(),
            output: None,
            threads: None,
        }
    }
}

impl RunConfig {
    /// Reads JSON, or TOML when the extension is `.toml`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        } else {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }

    /// Applies `LANG6D_SEED` if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.metrics.validate()?;
        if self.scene_count == 0 {
            return Err(Error::Config("scene_count must be positive".into()));
        }
        if self.instructions.kinds.is_empty() {
            return Err(Error::Config("at least one description kind is required".into()));
        }
        for c in [&self.corruption, &self.strategy_levels] {
            if !(c.bbox_expand >= 0.0 && c.noise_sigma >= 0.0) {
                return Err(Error::Config("corruption magnitudes must be >= 0".into()));
            }
        }
        if let DetectorConfig::Noisy(d) = &self.detector {
            if !(0.0..=1.0).contains(&d.category_confusion) || d.bbox_jitter < 0.0 {
                return Err(Error::Config("noisy detector rates out of range".into()));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    /// Hash of every field that can change results. Label, output path and
    /// thread count are excluded.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            for k in ["label", "output", "threads"] {
                m.remove(k);
            }
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }
}
