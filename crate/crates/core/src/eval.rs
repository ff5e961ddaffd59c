//! Error metrics, Welch's t-test, residual-field export and clamp sweeps.

use serde::{Deserialize, Serialize};
use statrs::function::beta::checked_beta_reg;

use crate::dataset::Dataset;
use crate::energy::{evaluate_prepared, reaction_energy};
use crate::error::{Result, XcError};
use crate::functionals::ConventionalSpec;
use crate::grid::MolecularGrid;
use crate::model::{prepare_species, ResidualModel};
use crate::split::SplitAssignment;
use crate::training::{prepare_all, train, TrainConfig};
use crate::units::hartree_to_kcal;

/// RMSE, MAE and MAD (about the mean) of signed errors in kcal/mol.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rmse: f64,
    pub mae: f64,
    pub mad: f64,
    pub n: usize,
    pub per_reaction_errors: Vec<f64>,
}

pub fn compute_metrics(errors: &[f64]) -> Result<MetricReport> {
    if errors.is_empty() {
        return Err(XcError::InvalidData("metrics need at least one error".into()));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(XcError::NonFinite("error list contains a non-finite value".into()));
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    Ok(MetricReport {
        rmse: (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
        mae: errors.iter().map(|e| e.abs()).sum::<f64>() / n,
        mad: errors.iter().map(|e| (e - mean).abs()).sum::<f64>() / n,
        n: errors.len(),
        per_reaction_errors: errors.to_vec(),
    })
}

/// Relative reduction of a metric, in percent.
pub fn improvement_pct(baseline: f64, new: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(XcError::InvalidData(format!(
            "improvement needs a positive baseline, got {baseline}"
        )));
    }
    Ok(100.0 * (baseline - new) / baseline)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(XcError::InvalidData("Welch's test needs at least two values per sample".into()));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (qa, qb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = qa + qb;
    if !(se2 > 0.0) {
        return Err(XcError::InvalidData("both samples have zero variance".into()));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (qa * qa / (a.len() as f64 - 1.0) + qb * qb / (b.len() as f64 - 1.0));
    let p = checked_beta_reg(0.5 * df, 0.5, df / (df + t * t))
        .map_err(|e| XcError::NonFinite(format!("incomplete beta: {e}")))?;
    Ok(WelchResult { t, df, p })
}

/// Sample mean and standard deviation (n - 1 denominator; zero for one value).
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    match values.len() {
        0 => Err(XcError::InvalidData("mean of an empty list".into())),
        1 => Ok((values[0], 0.0)),
        _ => {
            let (m, v) = mean_var(values);
            Ok((m, v.sqrt()))
        }
    }
}

/// One evaluated reaction; energies in hartree.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionPrediction {
    pub reaction_id: String,
    pub e_conv: f64,
    pub e_ru: f64,
    pub sigma: f64,
    pub e_star: f64,
}

impl ReactionPrediction {
    pub fn predicted(&self) -> f64 {
        self.e_conv + self.e_ru
    }

    /// Predicted minus reference, hartree.
    pub fn error(&self) -> f64 {
        self.e_conv - self.e_star + self.e_ru
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub predictions: Vec<ReactionPrediction>,
    pub metrics: MetricReport,
}

/// Predictions and metrics for the listed reactions.
pub fn evaluate_model(model: &ResidualModel, dataset: &Dataset, reaction_ids: &[String]) -> Result<Evaluation> {
    model.check()?;
    let reactions = dataset.reactions_by_id(reaction_ids)?;
    let prepared = prepare_all(dataset, &reactions, model.feature_set, &model.conventional, &model.transform)?;
    let energies = crate::training::evaluate_species(model, &prepared, &reactions)?;
    let mut predictions = Vec::with_capacity(reactions.len());
    for r in &reactions {
        let b = reaction_energy(r, &energies, model.clamp.epsilon)?;
        predictions.push(ReactionPrediction {
            reaction_id: r.reaction_id.clone(),
            e_conv: b.e_conv_total,
            e_ru: b.e_ru_total,
            sigma: b.sigma,
            e_star: r.e_star,
        });
    }
    let errors: Vec<f64> = predictions.iter().map(|p| hartree_to_kcal(p.error())).collect();
    Ok(Evaluation {
        metrics: compute_metrics(&errors)?,
        predictions,
    })
}

/// Floor added before taking the log of |e_bar|.
pub const RESIDUAL_LOG_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub position: [f64; 3],
    /// log(|e_bar| + floor)
    pub log_abs_residual: f64,
    pub s_bar: f64,
    pub rho: f64,
}

pub fn export_residual_field(grid: &MolecularGrid, model: &ResidualModel) -> Result<Vec<ResidualPoint>> {
    model.check()?;
    let prep = prepare_species(grid, model.feature_set, &model.conventional, &model.transform)?;
    let (_, out) = evaluate_prepared(model, &prep)?;
    Ok(grid
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| ResidualPoint {
            position: p.position,
            log_abs_residual: (out.e_bar[i].abs() + RESIDUAL_LOG_FLOOR).ln(),
            s_bar: out.s_bar[i],
            rho: p.features.rho(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub k1: f64,
    pub k2: f64,
    /// Held-out RMSE, kcal/mol.
    pub rmse: f64,
}

/// Held-out reactions: the test split, or validation when test is empty.
pub fn held_out(split: &SplitAssignment) -> &[String] {
    if split.test.is_empty() {
        &split.validation
    } else {
        &split.test
    }
}

/// Retrains at every (k1, k2) pair, k1 outermost, and reports held-out RMSE.
pub fn sweep_clamp(
    base: &TrainConfig,
    k1s: &[f64],
    k2s: &[f64],
    dataset: &Dataset,
    split: &SplitAssignment,
    spec: &ConventionalSpec,
) -> Result<Vec<SweepRow>> {
    if k1s.is_empty() || k2s.is_empty() {
        return Err(XcError::InvalidConfig("sweep needs at least one k1 and one k2".into()));
    }
    let mut rows = Vec::with_capacity(k1s.len() * k2s.len());
    for &k1 in k1s {
        for &k2 in k2s {
            let mut cfg = base.clone();
            cfg.clamp.k1 = k1;
            cfg.clamp.k2 = k2;
            let outcome = train(&cfg, dataset, split, spec)?;
            let eval = evaluate_model(&outcome.model, dataset, held_out(split))?;
            rows.push(SweepRow {
                k1,
                k2,
                rmse: eval.metrics.rmse,
            });
        }
    }
    Ok(rows)
}
