use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xcu_core::functionals::ConventionalSpec;
use xcu_core::synth::SynthConfig;
use xcu_core::training::TrainConfig;
use xcu_core::{Result, XcError};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "XCU_OUT_DIR";
pub const DEFAULT_OUT: &str = "xcu-out";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
}

/// Contents of the `--config` file. Every section is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset directory (manifest.toml + grids/). Defaults to the output directory.
    pub data_dir: Option<PathBuf>,
    /// Split file. Defaults to `<out>/split.toml`.
    pub split_file: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub split_seed: u64,
    /// Number of training seeds for mean and standard deviation reporting.
    pub repetitions: usize,
    /// Write `.gridb` instead of `.grid` files.
    pub binary_grids: bool,
    pub synth: SynthConfig,
    /// Kept optional so `eval` can tell whether the config pins a feature set.
    pub train: Option<TrainConfig>,
    pub conventional: ConventionalSpec,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_dir: None,
            split_file: None,
            out_dir: None,
            split_seed: 0,
            repetitions: 1,
            binary_grids: false,
            synth: SynthConfig::default(),
            train: None,
            conventional: ConventionalSpec::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| XcError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| XcError::InvalidConfig(format!("{}: {e}", path.display())))?;
        if cfg.repetitions == 0 {
            return Err(XcError::InvalidConfig("repetitions must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn train_config(&self) -> TrainConfig {
        self.train.clone().unwrap_or_default()
    }
}
