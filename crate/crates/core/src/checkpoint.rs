//! JSON checkpoint container. Floats are written in shortest round-trip form
//! and parsed with exact rounding, so save/load is bit-exact.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Result, XcError};
use crate::functionals::ConventionalSpec;
use crate::model::{FeatureSet, InputTransform, LossMode, ResidualModel};
use crate::rbnet::{Activation, ClampConfig, Dense, Layers, NetworkParams};
use crate::training::{TrainConfig, TrainOutcome};

pub const CHECKPOINT_FORMAT: &str = "xcu-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub name: String,
    /// (fan_out, fan_in); weights are row-major over this shape.
    pub shape: [usize; 2],
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSummary {
    pub best_epoch: usize,
    pub best_val_rmse_kcal: Option<f64>,
    pub config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub activation: Activation,
    pub init_scheme: String,
    pub seed: u64,
    pub feature_set: FeatureSet,
    pub loss_mode: LossMode,
    pub clamp: ClampConfig,
    pub conventional: ConventionalSpec,
    pub transform: InputTransform,
    pub layers: Vec<LayerRecord>,
    pub training: Option<TrainingSummary>,
}

impl Checkpoint {
    pub fn from_model(model: &ResidualModel, training: Option<TrainingSummary>) -> Self {
        let layers = model
            .params
            .layers
            .iter()
            .map(|(name, d)| LayerRecord {
                name,
                shape: [d.fan_out(), d.fan_in()],
                weight: d.weight.iter().copied().collect(),
                bias: d.bias.to_vec(),
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            activation: model.params.activation,
            init_scheme: model.params.init_scheme.clone(),
            seed: model.params.seed,
            feature_set: model.feature_set,
            loss_mode: model.loss_mode,
            clamp: model.clamp,
            conventional: model.conventional,
            transform: model.transform.clone(),
            layers,
            training,
        }
    }

    pub fn from_outcome(outcome: &TrainOutcome, config: &TrainConfig) -> Self {
        let summary = TrainingSummary {
            best_epoch: outcome.best_epoch,
            best_val_rmse_kcal: outcome.best_val_rmse.is_finite().then_some(outcome.best_val_rmse),
            config: config.clone(),
        };
        Self::from_model(&outcome.model, Some(summary))
    }

    pub fn to_model(&self) -> Result<ResidualModel> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(XcError::InvalidData(format!(
                "expected {CHECKPOINT_FORMAT} version {CHECKPOINT_VERSION}, found {} {}",
                self.format, self.version
            )));
        }
        let mut trunk = Vec::new();
        let mut head_mean = Vec::new();
        let mut head_var = Vec::new();
        for rec in &self.layers {
            let [out, inp] = rec.shape;
            let weight = Array2::from_shape_vec((out, inp), rec.weight.clone())
                .map_err(|_| XcError::InvalidData(format!("layer `{}` weight does not match {:?}", rec.name, rec.shape)))?;
            if rec.bias.len() != out {
                return Err(XcError::InvalidData(format!("layer `{}` bias length", rec.name)));
            }
            let dense = Dense {
                weight,
                bias: Array1::from(rec.bias.clone()),
            };
            let (group, index) = rec
                .name
                .split_once('.')
                .ok_or_else(|| XcError::InvalidData(format!("bad layer name `{}`", rec.name)))?;
            let target = match group {
                "trunk" => &mut trunk,
                "head_mean" => &mut head_mean,
                "head_var" => &mut head_var,
                _ => return Err(XcError::InvalidData(format!("bad layer name `{}`", rec.name))),
            };
            if index.parse::<usize>().ok() != Some(target.len()) {
                return Err(XcError::InvalidData(format!("layer `{}` out of order", rec.name)));
            }
            target.push(dense);
        }
        if trunk.is_empty() || head_mean.is_empty() || head_var.is_empty() {
            return Err(XcError::InvalidData("checkpoint is missing layers".into()));
        }
        let chain_ok = trunk.windows(2).all(|w| w[0].fan_out() == w[1].fan_in())
            && [&head_mean, &head_var].iter().all(|h| {
                h[0].fan_in() == trunk.last().unwrap().fan_out()
                    && h.windows(2).all(|w| w[0].fan_out() == w[1].fan_in())
                    && h.last().unwrap().fan_out() == 1
            });
        if !chain_ok {
            return Err(XcError::InvalidData("checkpoint layer shapes do not chain".into()));
        }
        let model = ResidualModel {
            params: NetworkParams {
                layers: Layers { trunk, head_mean, head_var },
                activation: self.activation,
                seed: self.seed,
                init_scheme: self.init_scheme.clone(),
            },
            transform: self.transform.clone(),
            feature_set: self.feature_set,
            loss_mode: self.loss_mode,
            clamp: self.clamp,
            conventional: self.conventional,
        };
        model.check()?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| XcError::InvalidData(e.to_string()))
    }

    pub fn from_json(text: &str, path: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| XcError::format(path, e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::formats::save_text(path, &self.to_json()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| XcError::format(&name, e.to_string()))?;
        Self::from_json(&text, &name)
    }
}
