//! Feature selection, input standardization and the bundled residual model.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Result, XcError};
use crate::functionals::{evaluate_grid, ConventionalSpec};
use crate::grid::{build_extended_features, MolecularGrid, EXTENDED_WIDTH, FEATURE_WIDTH};
use crate::rbnet::{ClampConfig, NetworkParams};

/// Which per-point inputs the network sees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    /// The 11 density features only.
    X11,
    /// Density features plus HF channels, e_lda, e_conv and the weight.
    #[default]
    Y16,
}

impl FeatureSet {
    pub fn width(self) -> usize {
        match self {
            FeatureSet::X11 => FEATURE_WIDTH,
            FeatureSet::Y16 => EXTENDED_WIDTH,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::X11 => "X11",
            FeatureSet::Y16 => "Y16",
        }
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = XcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "X11" => Ok(FeatureSet::X11),
            "Y16" => Ok(FeatureSet::Y16),
            _ => Err(XcError::InvalidConfig(format!("unknown feature set `{s}` (X11 or Y16)"))),
        }
    }
}

/// How the network outputs are read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossMode {
    /// Clamped residual on top of the conventional functional, heteroscedastic loss.
    #[default]
    #[serde(rename = "RBNET")]
    Rbnet,
    /// Heads predict the full energy density and log-variance directly.
    #[serde(rename = "DIRECT_U")]
    DirectU,
    /// Clamped residual trained on squared error, variance head held at zero.
    #[serde(rename = "MSE_RESNET")]
    MseResnet,
}

impl LossMode {
    pub fn name(self) -> &'static str {
        match self {
            LossMode::Rbnet => "RBNET",
            LossMode::DirectU => "DIRECT_U",
            LossMode::MseResnet => "MSE_RESNET",
        }
    }

    pub fn is_residual(self) -> bool {
        !matches!(self, LossMode::DirectU)
    }
}

impl std::str::FromStr for LossMode {
    type Err = XcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "RBNET" => Ok(LossMode::Rbnet),
            "DIRECT_U" => Ok(LossMode::DirectU),
            "MSE_RESNET" => Ok(LossMode::MseResnet),
            _ => Err(XcError::InvalidConfig(format!(
                "unknown loss mode `{s}` (RBNET, DIRECT_U or MSE_RESNET)"
            ))),
        }
    }
}

/// Scale below which the signed log is roughly linear.
pub const LOG_SCALE: f64 = 1e-4;

#[inline]
pub fn signed_log(v: f64) -> f64 {
    v.signum() * (v.abs() / LOG_SCALE).ln_1p()
}

/// Signed log compression followed by a per-column affine standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputTransform {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InputTransform {
    pub fn identity(width: usize) -> Self {
        InputTransform {
            mean: vec![0.0; width],
            scale: vec![1.0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    /// Fits column statistics of the log-compressed raw rows.
    pub fn fit(raw: ArrayView2<f64>) -> Result<Self> {
        if raw.nrows() == 0 {
            return Err(XcError::InvalidData("cannot fit an input transform on zero rows".into()));
        }
        let logged = raw.mapv(signed_log);
        let n = logged.nrows() as f64;
        let mean = logged.sum_axis(Axis(0)) / n;
        let mut scale = Vec::with_capacity(mean.len());
        for (j, col) in logged.columns().into_iter().enumerate() {
            let var = col.iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            scale.push(if sd > 1e-12 { sd } else { 1.0 });
        }
        Ok(InputTransform {
            mean: mean.to_vec(),
            scale,
        })
    }

    pub fn apply(&self, raw: ArrayView2<f64>) -> Result<Array2<f64>> {
        if raw.ncols() != self.width() {
            return Err(XcError::LengthMismatch {
                context: "input transform width",
                expected: self.width(),
                got: raw.ncols(),
            });
        }
        let mut out = raw.mapv(signed_log);
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
        Ok(out)
    }

    pub fn check(&self) -> Result<()> {
        if self.mean.len() != self.scale.len()
            || self.mean.iter().chain(&self.scale).any(|v| !v.is_finite())
            || self.scale.iter().any(|&s| s <= 0.0)
        {
            return Err(XcError::InvalidData("malformed input transform".into()));
        }
        Ok(())
    }
}

/// Everything needed to turn a grid into energies: network, input transform,
/// clamp, conventional functional and output interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualModel {
    pub params: NetworkParams,
    pub transform: InputTransform,
    pub feature_set: FeatureSet,
    pub loss_mode: LossMode,
    pub clamp: ClampConfig,
    pub conventional: ConventionalSpec,
}

impl ResidualModel {
    /// Checks that the pieces fit together.
    pub fn check(&self) -> Result<()> {
        let width = self.feature_set.width();
        if self.params.input_width() != width {
            return Err(XcError::InvalidConfig(format!(
                "network expects {} inputs but feature set {} has {width}",
                self.params.input_width(),
                self.feature_set.name()
            )));
        }
        if self.transform.width() != width {
            return Err(XcError::InvalidConfig(format!(
                "input transform has width {} but feature set {} has {width}",
                self.transform.width(),
                self.feature_set.name()
            )));
        }
        self.transform.check()?;
        self.clamp.check()
    }
}

/// Per-species arrays reused across epochs.
#[derive(Debug, Clone)]
pub struct PreparedSpecies {
    pub id: String,
    /// w * rho per point.
    pub rho_w: Vec<f64>,
    pub e_conv: Vec<f64>,
    /// Standardized network inputs, one row per point.
    pub inputs: Array2<f64>,
}

/// Raw (untransformed) network inputs plus the conventional fields.
pub fn raw_inputs(
    grid: &MolecularGrid,
    feature_set: FeatureSet,
    spec: &ConventionalSpec,
) -> Result<(Array2<f64>, Vec<f64>)> {
    let fields = evaluate_grid(grid, spec)?;
    let width = feature_set.width();
    let mut rows = Array2::zeros((grid.len(), width));
    for (i, p) in grid.points.iter().enumerate() {
        let y = build_extended_features(&p.features, fields.e_lda[i], fields.e_conv[i], p.weight)?;
        let src = match feature_set {
            FeatureSet::X11 => &y.0[..FEATURE_WIDTH],
            FeatureSet::Y16 => &y.0[..],
        };
        rows.row_mut(i).iter_mut().zip(src).for_each(|(d, s)| *d = *s);
    }
    Ok((rows, fields.e_conv))
}

pub fn prepare_species(
    grid: &MolecularGrid,
    feature_set: FeatureSet,
    spec: &ConventionalSpec,
    transform: &InputTransform,
) -> Result<PreparedSpecies> {
    let (raw, e_conv) = raw_inputs(grid, feature_set, spec)?;
    Ok(PreparedSpecies {
        id: grid.species_id.clone(),
        rho_w: grid.density_weights(),
        e_conv,
        inputs: transform.apply(raw.view())?,
    })
}
