//! Run configuration: one versioned JSON document with a block per stage.
//!
//! Seeds inside blocks are ignored; every stage derives its randomness from
//! the global `seed`.

use std::path::{Path, PathBuf};

use ensemble_forecast::backtest::BacktestConfig;
use ensemble_forecast::collinearity::TARGET_RATIO;
use ensemble_forecast::datagen::SynthConfig;
use ensemble_forecast::dataset::CalendarConfig;
use ensemble_forecast::ensemble::SearchConfig;
use ensemble_forecast::features::FeatureConfig;
use ensemble_forecast::learners::LearnerKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Line of business for single-series stages.
    #[serde(default = "default_lob")]
    pub lob: String,
    #[serde(default)]
    pub calendar: CalendarConfig,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default)]
    pub features: FeaturesBlock,
    #[serde(default)]
    pub collinearity: CollinearityBlock,
    #[serde(default)]
    pub train: TrainBlock,
    #[serde(default)]
    pub backtest: BacktestBlock,
    #[serde(default)]
    pub importance: ImportanceBlock,
}

fn one() -> usize {
    1
}

fn default_lob() -> String {
    "DT".into()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            workers: 1,
            output_dir: None,
            lob: default_lob(),
            calendar: CalendarConfig::default(),
            synth: SynthConfig::default(),
            features: FeaturesBlock::default(),
            collinearity: CollinearityBlock::default(),
            train: TrainBlock::default(),
            backtest: BacktestBlock::default(),
            importance: ImportanceBlock::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturesBlock {
    pub leads: Vec<u32>,
    pub families: FeatureConfig,
}

impl Default for FeaturesBlock {
    fn default() -> Self {
        Self {
            leads: vec![1, 5, 16],
            families: FeatureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollinearityBlock {
    pub target_ratio: f64,
    pub vif: bool,
}

impl Default for CollinearityBlock {
    fn default() -> Self {
        Self {
            target_ratio: TARGET_RATIO,
            vif: true,
        }
    }
}

/// Window used by `decollinear`, `train` and `importance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainBlock {
    pub kind: LearnerKind,
    pub lead_time: u32,
    /// Target week of the forecast; defaults to the last week with a
    /// response in the table.
    pub test_week: Option<u32>,
    pub train_weeks: u32,
    pub val_weeks: u32,
    pub search: SearchConfig,
}

impl Default for TrainBlock {
    fn default() -> Self {
        Self {
            kind: LearnerKind::Mlr,
            lead_time: 1,
            test_week: None,
            train_weeks: 104,
            val_weeks: 52,
            search: SearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestBlock {
    /// Lines of business to backtest; defaults to the global `lob`.
    pub lobs: Option<Vec<String>>,
    pub config: BacktestConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mape,
    Misclassification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImportanceBlock {
    pub iterations: usize,
    pub top_k: usize,
    pub variables: Option<Vec<String>>,
    pub loss: LossKind,
}

impl Default for ImportanceBlock {
    fn default() -> Self {
        Self {
            iterations: 100,
            top_k: 5,
            variables: None,
            loss: LossKind::Mape,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::Usage(format!(
                "config: unsupported version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        if cfg.workers == 0 {
            return Err(CliError::Usage("config: `workers` must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Usage(format!("{}: not UTF-8", path.display())))?;
        Ok((Self::from_json(&text)?, bytes))
    }
}
