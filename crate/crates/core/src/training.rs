//! Losses, the SGD loop and the cosine learning-rate schedule.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use ndarray::{concatenate, Array1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ReactionRecord};
use crate::energy::{evaluate_prepared, reaction_energy, EnergyBreakdown, SpeciesEnergies};
use crate::error::{Result, XcError};
use crate::functionals::ConventionalSpec;
use crate::model::{prepare_species, raw_inputs, FeatureSet, InputTransform, LossMode, PreparedSpecies, ResidualModel};
use crate::rbnet::{
    backward_batch, clamp_jacobian, forward_batch_cached, init_params, Activation, Architecture, ClampConfig,
    HeadOutputs, Layers, NetworkParams,
};
use crate::split::SplitAssignment;
use crate::units::hartree_to_kcal;

/// Heteroscedastic term `0.5 exp(-s) r^2 + 0.5 s`.
#[inline]
pub fn nll_term(r: f64, s: f64) -> f64 {
    0.5 * (-s).exp() * r * r + 0.5 * s
}

fn check_lengths(context: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(XcError::LengthMismatch { context, expected: a, got: b });
    }
    if a == 0 {
        return Err(XcError::InvalidData(format!("{context}: no reactions")));
    }
    Ok(())
}

/// Mean heteroscedastic loss over reactions, plus the per-reaction terms.
pub fn rbnet_loss(breakdowns: &[EnergyBreakdown], references: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_lengths("rbnet_loss", breakdowns.len(), references.len())?;
    let terms: Vec<f64> = breakdowns
        .iter()
        .zip(references)
        .map(|(b, &e)| nll_term(b.residual(e), b.s))
        .collect();
    Ok((terms.iter().sum::<f64>() / terms.len() as f64, terms))
}

/// Same functional form for a directly predicted energy and its log-variance.
pub fn direct_loss(e_u: &[f64], log_variances: &[f64], references: &[f64]) -> Result<f64> {
    check_lengths("direct_loss", e_u.len(), references.len())?;
    check_lengths("direct_loss", e_u.len(), log_variances.len())?;
    let total: f64 = e_u
        .iter()
        .zip(log_variances)
        .zip(references)
        .map(|((&p, &s), &e)| nll_term(p - e, s))
        .sum();
    Ok(total / e_u.len() as f64)
}

pub fn mse_loss(predictions: &[f64], references: &[f64]) -> Result<f64> {
    check_lengths("mse_loss", predictions.len(), references.len())?;
    let total: f64 = predictions.iter().zip(references).map(|(p, e)| (p - e).powi(2)).sum();
    Ok(total / predictions.len() as f64)
}

/// Cosine annealing from `lr0` at epoch 0 toward `floor` at `epochs`.
pub fn cosine_lr(lr0: f64, floor: f64, epoch: usize, epochs: usize) -> f64 {
    let frac = epoch as f64 / epochs.max(1) as f64;
    floor + 0.5 * (lr0 - floor) * (1.0 + (std::f64::consts::PI * frac).cos())
}

fn default_lr() -> f64 {
    1e-3
}
fn default_epochs() -> usize {
    500
}
fn default_batch() -> usize {
    16
}
fn default_trunk() -> Vec<usize> {
    Architecture::standard(0).trunk_widths
}
fn default_head() -> usize {
    Architecture::standard(0).head_hidden
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    /// Learning rate the cosine schedule decays toward.
    #[serde(default)]
    pub lr_floor: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Reactions per step.
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub loss_mode: LossMode,
    #[serde(default)]
    pub feature_set: FeatureSet,
    #[serde(default)]
    pub clamp: ClampConfig,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default = "default_trunk")]
    pub trunk_widths: Vec<usize>,
    #[serde(default = "default_head")]
    pub head_hidden: usize,
    /// Keep the trunk and mean head fixed so the predicted mean cannot move;
    /// only the log-variance head learns.
    #[serde(default)]
    pub freeze_mean: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: default_lr(),
            lr_floor: 0.0,
            epochs: default_epochs(),
            batch_size: default_batch(),
            seed: 0,
            loss_mode: LossMode::default(),
            feature_set: FeatureSet::default(),
            clamp: ClampConfig::default(),
            activation: Activation::default(),
            trunk_widths: default_trunk(),
            head_hidden: default_head(),
            freeze_mean: false,
        }
    }
}

impl TrainConfig {
    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_width: self.feature_set.width(),
            trunk_widths: self.trunk_widths.clone(),
            head_hidden: self.head_hidden,
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(XcError::InvalidConfig(format!("{field}: {why}")));
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate", "must be positive");
        }
        if !(0.0..=self.learning_rate).contains(&self.lr_floor) {
            return bad("lr_floor", "must lie in [0, learning_rate]");
        }
        if self.epochs == 0 {
            return bad("epochs", "must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1");
        }
        self.clamp.check()?;
        self.architecture().check()
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    /// kcal/mol
    pub val_rmse: f64,
    /// Wall-clock seconds since training started; the only non-deterministic field.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation RMSE.
    pub model: ResidualModel,
    pub best_epoch: usize,
    pub best_val_rmse: f64,
    pub log: Vec<EpochRecord>,
}

/// Loss of one reaction and its derivatives with respect to the predicted
/// energy and the reaction sigma.
fn reaction_term(mode: LossMode, b: &EnergyBreakdown, e_star: f64, epsilon: f64) -> (f64, f64, f64) {
    let r = b.residual(e_star);
    match mode {
        LossMode::MseResnet => (r * r, 2.0 * r, 0.0),
        LossMode::Rbnet | LossMode::DirectU => {
            let inv = (-b.s).exp();
            let d_s = 0.5 - 0.5 * inv * r * r;
            let ds_dsigma = if (b.sigma * b.sigma).ln() > epsilon.ln() { 2.0 / b.sigma } else { 0.0 };
            (nll_term(r, b.s), inv * r, d_s * ds_dsigma)
        }
    }
}

fn species_from_heads(model: &ResidualModel, prep: &PreparedSpecies, heads: &HeadOutputs) -> Result<SpeciesEnergies> {
    crate::energy::energies_from_heads(model, prep, heads).map(|(e, _)| e)
}

/// Loss and gradient (mean over `reactions`) at the current parameters.
pub fn batch_gradient(
    model: &ResidualModel,
    prepared: &BTreeMap<String, PreparedSpecies>,
    reactions: &[&ReactionRecord],
    freeze_mean: bool,
) -> Result<(f64, Layers)> {
    let ids: BTreeSet<&str> = reactions.iter().flat_map(|r| r.species()).collect();
    let mut passes = BTreeMap::new();
    let mut energies = BTreeMap::new();
    for id in ids {
        let prep = prepared.get(id).ok_or_else(|| XcError::MissingSpecies(id.to_owned()))?;
        let (heads, cache) = forward_batch_cached(&model.params, prep.inputs.view())?;
        energies.insert(id.to_owned(), species_from_heads(model, prep, &heads)?);
        passes.insert(id, (prep, heads, cache));
    }

    let mode = model.loss_mode;
    let eps = model.clamp.epsilon;
    let inv_n = 1.0 / reactions.len() as f64;
    let mut loss = 0.0;
    // Upstream gradients per species: d loss / d (e_conv + e_ru), d loss / d sigma.
    let mut upstream: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for r in reactions {
        let b = reaction_energy(r, &energies, eps)?;
        let (term, d_e, d_sigma) = reaction_term(mode, &b, r.e_star, eps);
        if !term.is_finite() {
            return Err(XcError::TrainingHalted(format!(
                "non-finite loss on reaction `{}` (residual {:e}, s {:e})",
                r.reaction_id,
                b.residual(r.e_star),
                b.s
            )));
        }
        loss += term * inv_n;
        for (id, c) in &r.terms {
            let c = f64::from(*c);
            let u = upstream.entry(id.as_str()).or_default();
            u.0 += inv_n * c * d_e;
            u.1 += inv_n * c.abs() * d_sigma;
        }
    }

    let mut grads = model.params.layers.zeros_like();
    for (id, (prep, heads, cache)) in &passes {
        let (g_e, g_sigma) = upstream[id];
        let n = prep.rho_w.len();
        let mut de0 = Array1::zeros(n);
        let mut ds0 = Array1::zeros(n);
        for i in 0..n {
            let rw = prep.rho_w[i];
            let (e0, s0) = (heads.e0[i], heads.s0[i]);
            if mode.is_residual() {
                let j = clamp_jacobian(e0, s0, prep.e_conv[i], &model.clamp);
                let out = crate::rbnet::clamp_residual(e0, s0, prep.e_conv[i], &model.clamp);
                let d_ebar = g_e * rw;
                let d_sbar = g_sigma * rw * 0.5 * (0.5 * out.s_bar).exp();
                de0[i] = (d_ebar + d_sbar * j.ds_de) * j.de_de0;
                ds0[i] = d_sbar * j.ds_ds0;
            } else {
                de0[i] = g_e * rw;
                ds0[i] = g_sigma * rw * 0.5 * (0.5 * s0).exp();
            }
        }
        let de0 = (!freeze_mean).then(|| de0.view());
        let ds0 = (mode != LossMode::MseResnet).then(|| ds0.view());
        backward_batch(&model.params, cache, de0, ds0, &mut grads)?;
    }
    if freeze_mean {
        for d in grads.trunk.iter_mut().chain(grads.head_mean.iter_mut()) {
            d.weight.fill(0.0);
            d.bias.fill(0.0);
        }
    }
    Ok((loss, grads))
}

/// Species energies for a set of reactions, in id order.
pub fn evaluate_species(
    model: &ResidualModel,
    prepared: &BTreeMap<String, PreparedSpecies>,
    reactions: &[&ReactionRecord],
) -> Result<BTreeMap<String, SpeciesEnergies>> {
    let ids: BTreeSet<&str> = reactions.iter().flat_map(|r| r.species()).collect();
    ids.into_iter()
        .map(|id| {
            let prep = prepared.get(id).ok_or_else(|| XcError::MissingSpecies(id.to_owned()))?;
            Ok((id.to_owned(), evaluate_prepared(model, prep)?.0))
        })
        .collect()
}

/// Mean loss and RMSE (kcal/mol) of the model over a reaction list.
pub fn score(
    model: &ResidualModel,
    prepared: &BTreeMap<String, PreparedSpecies>,
    reactions: &[&ReactionRecord],
) -> Result<(f64, f64)> {
    if reactions.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let energies = evaluate_species(model, prepared, reactions)?;
    let eps = model.clamp.epsilon;
    let (mut loss, mut sq) = (0.0, 0.0);
    for r in reactions {
        let b = reaction_energy(r, &energies, eps)?;
        loss += reaction_term(model.loss_mode, &b, r.e_star, eps).0;
        sq += hartree_to_kcal(b.residual(r.e_star)).powi(2);
    }
    let n = reactions.len() as f64;
    Ok((loss / n, (sq / n).sqrt()))
}

/// Prepares every species used by `reactions`.
pub fn prepare_all(
    dataset: &Dataset,
    reactions: &[&ReactionRecord],
    feature_set: FeatureSet,
    spec: &ConventionalSpec,
    transform: &InputTransform,
) -> Result<BTreeMap<String, PreparedSpecies>> {
    let ids: BTreeSet<&str> = reactions.iter().flat_map(|r| r.species()).collect();
    ids.into_iter()
        .map(|id| Ok((id.to_owned(), prepare_species(dataset.grid(id)?, feature_set, spec, transform)?)))
        .collect()
}

/// Fits the input standardization on every point of the training species.
pub fn fit_transform(
    dataset: &Dataset,
    reactions: &[&ReactionRecord],
    feature_set: FeatureSet,
    spec: &ConventionalSpec,
) -> Result<InputTransform> {
    let ids: BTreeSet<&str> = reactions.iter().flat_map(|r| r.species()).collect();
    let mut blocks = Vec::with_capacity(ids.len());
    for id in ids {
        blocks.push(raw_inputs(dataset.grid(id)?, feature_set, spec)?.0);
    }
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    let all = concatenate(Axis(0), &views).map_err(|e| XcError::InvalidData(e.to_string()))?;
    InputTransform::fit(all.view())
}

/// Model with an untrained network for the given configuration.
///
/// The output layer of each head starts at zero so training begins from the
/// conventional functional; the log-variance head starts at the constant
/// `variance_bias`. In MSE mode the whole log-variance head stays at zero.
pub fn initial_model(
    config: &TrainConfig,
    transform: InputTransform,
    spec: &ConventionalSpec,
    variance_bias: f64,
) -> Result<ResidualModel> {
    let mut params = init_params(config.seed, &config.architecture(), config.activation)?;
    params.init_scheme = format!("{}+zero_output", params.init_scheme);
    let layers = &mut params.layers;
    for head in [&mut layers.head_mean, &mut layers.head_var] {
        let last = head.last_mut().expect("heads are non-empty");
        last.weight.fill(0.0);
        last.bias.fill(0.0);
    }
    if config.loss_mode == LossMode::MseResnet {
        layers.head_var.iter_mut().for_each(|d| {
            d.weight.fill(0.0);
            d.bias.fill(0.0);
        });
    } else {
        layers.head_var.last_mut().expect("heads are non-empty").bias[0] = variance_bias;
    }
    let model = ResidualModel {
        params,
        transform,
        feature_set: config.feature_set,
        loss_mode: config.loss_mode,
        clamp: config.clamp,
        conventional: *spec,
    };
    model.check()?;
    Ok(model)
}

/// Constant per-point log-variance whose integrated reaction sigma matches
/// the RMS residual of the untrained model on `reactions`.
pub fn initial_variance_bias(
    prepared: &BTreeMap<String, PreparedSpecies>,
    reactions: &[&ReactionRecord],
    mode: LossMode,
    epsilon: f64,
) -> Result<f64> {
    let mut sq = 0.0;
    let mut mass = 0.0;
    for r in reactions {
        let mut e_conv = 0.0;
        for (id, c) in &r.terms {
            let prep = prepared.get(id).ok_or_else(|| XcError::MissingSpecies(id.clone()))?;
            let n: f64 = prep.rho_w.iter().sum();
            let e: f64 = prep.rho_w.iter().zip(&prep.e_conv).map(|(w, e)| w * e).sum();
            e_conv += f64::from(*c) * e;
            mass += f64::from(c.abs()) * n;
        }
        let pred = if mode.is_residual() { e_conv } else { 0.0 };
        sq += (pred - r.e_star).powi(2);
    }
    let n = reactions.len().max(1) as f64;
    let (rms, mass) = ((sq / n).sqrt(), mass / n);
    if rms > 0.0 && mass > 0.0 {
        Ok(2.0 * (rms / mass).ln())
    } else {
        Ok(epsilon.ln())
    }
}

/// The zero-network model: the conventional functional alone.
pub fn baseline_model(config: &TrainConfig, spec: &ConventionalSpec) -> Result<ResidualModel> {
    let model = ResidualModel {
        params: NetworkParams::zeroed(&config.architecture(), config.activation)?,
        transform: InputTransform::identity(config.feature_set.width()),
        feature_set: config.feature_set,
        loss_mode: LossMode::Rbnet,
        clamp: config.clamp,
        conventional: *spec,
    };
    model.check()?;
    Ok(model)
}

/// Factor over the first batch loss beyond which training is abandoned.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

pub fn train(
    config: &TrainConfig,
    dataset: &Dataset,
    split: &SplitAssignment,
    spec: &ConventionalSpec,
) -> Result<TrainOutcome> {
    train_with_progress(config, dataset, split, spec, |_| {})
}

pub fn train_with_progress(
    config: &TrainConfig,
    dataset: &Dataset,
    split: &SplitAssignment,
    spec: &ConventionalSpec,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.check()?;
    split.check(&dataset.manifest)?;
    let train_set = dataset.reactions_by_id(&split.train)?;
    let val_set = dataset.reactions_by_id(&split.validation)?;
    if train_set.is_empty() {
        return Err(XcError::InvalidData("training split is empty".into()));
    }
    let transform = fit_transform(dataset, &train_set, config.feature_set, spec)?;
    let used: Vec<&ReactionRecord> = train_set.iter().chain(&val_set).copied().collect();
    let prepared = prepare_all(dataset, &used, config.feature_set, spec, &transform)?;
    let bias = initial_variance_bias(&prepared, &train_set, config.loss_mode, config.clamp.epsilon)?;
    let mut model = initial_model(config, transform, spec, bias)?;
    let select_on = if val_set.is_empty() { &train_set } else { &val_set };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut initial_loss: Option<f64> = None;
    let mut best: Option<(usize, f64, NetworkParams)> = None;
    let mut log = Vec::with_capacity(config.epochs);
    let start = Instant::now();

    for epoch in 0..config.epochs {
        let lr = cosine_lr(config.learning_rate, config.lr_floor, epoch, config.epochs);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&ReactionRecord> = chunk.iter().map(|&i| train_set[i]).collect();
            let (loss, grads) = batch_gradient(&model, &prepared, &batch, config.freeze_mean)?;
            let reference = *initial_loss.get_or_insert(loss);
            if loss > DIVERGENCE_FACTOR * reference.abs().max(f64::MIN_POSITIVE) {
                return Err(XcError::TrainingHalted(format!(
                    "loss {loss:e} at epoch {epoch} exceeds {DIVERGENCE_FACTOR:e} x initial {reference:e}"
                )));
            }
            if !grads.all_finite() {
                return Err(XcError::TrainingHalted(format!("non-finite gradient at epoch {epoch}")));
            }
            model.params.layers.axpy(-lr, &grads);
            epoch_loss += loss * batch.len() as f64;
        }
        let (val_loss, sel_rmse) = score(&model, &prepared, select_on)?;
        let val_loss = if val_set.is_empty() { f64::NAN } else { val_loss };
        let record = EpochRecord {
            epoch,
            learning_rate: lr,
            train_loss: epoch_loss / train_set.len() as f64,
            val_loss,
            val_rmse: sel_rmse,
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        log.push(record);
        if best.as_ref().is_none_or(|b| sel_rmse < b.1) {
            best = Some((epoch, sel_rmse, model.params.clone()));
        }
    }
    let (best_epoch, best_val_rmse, params) = best.expect("at least one epoch");
    model.params = params;
    Ok(TrainOutcome {
        model,
        best_epoch,
        best_val_rmse,
        log,
    })
}
