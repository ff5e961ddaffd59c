//! Species and reaction energies from grid-level densities.

use std::collections::BTreeMap;

use crate::dataset::ReactionRecord;
use crate::error::{Result, XcError};
use crate::grid::MolecularGrid;
use crate::model::{prepare_species, PreparedSpecies, ResidualModel};
use crate::rbnet::{clamp_residual, forward_batch, HeadOutputs};

/// Integrated energies of one species (hartree).
///
/// In direct mode the network predicts the whole density, and `e_ru` holds
/// the difference between that prediction and `e_conv` so that
/// `e_conv + e_ru` is always the model's energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesEnergies {
    pub e_conv: f64,
    pub e_ru: f64,
    pub sigma: f64,
}

/// Per-point network outputs before and after the clamp.
#[derive(Debug, Clone, PartialEq)]
pub struct PointOutputs {
    pub e0: Vec<f64>,
    pub s0: Vec<f64>,
    /// Residual energy density (clamped, or `e0 - e_conv` in direct mode).
    pub e_bar: Vec<f64>,
    /// Log-variance per point.
    pub s_bar: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub e_conv_total: f64,
    pub e_ru_total: f64,
    /// Reaction standard deviation, sum of |c| * sigma over species.
    pub sigma: f64,
    /// log sigma^2, floored at log epsilon.
    pub s: f64,
}

impl EnergyBreakdown {
    pub fn predicted(&self) -> f64 {
        self.e_conv_total + self.e_ru_total
    }

    pub fn residual(&self, e_star: f64) -> f64 {
        self.e_conv_total - e_star + self.e_ru_total
    }
}

pub fn evaluate_prepared(model: &ResidualModel, prep: &PreparedSpecies) -> Result<(SpeciesEnergies, PointOutputs)> {
    let heads = forward_batch(&model.params, prep.inputs.view())?;
    energies_from_heads(model, prep, &heads)
}

/// Clamps and integrates head outputs already computed for `prep`.
pub fn energies_from_heads(
    model: &ResidualModel,
    prep: &PreparedSpecies,
    heads: &HeadOutputs,
) -> Result<(SpeciesEnergies, PointOutputs)> {
    let n = prep.rho_w.len();
    let mut out = PointOutputs {
        e0: heads.e0.to_vec(),
        s0: heads.s0.to_vec(),
        e_bar: Vec::with_capacity(n),
        s_bar: Vec::with_capacity(n),
    };
    let (mut e_conv, mut e_ru, mut sigma) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (e_bar, s_bar) = if model.loss_mode.is_residual() {
            let r = clamp_residual(out.e0[i], out.s0[i], prep.e_conv[i], &model.clamp);
            (r.e_bar, r.s_bar)
        } else {
            (out.e0[i] - prep.e_conv[i], out.s0[i])
        };
        let rw = prep.rho_w[i];
        e_conv += rw * prep.e_conv[i];
        if model.loss_mode.is_residual() {
            e_ru += rw * e_bar;
        } else {
            e_ru += rw * out.e0[i];
        }
        sigma += rw * (0.5 * s_bar).exp();
        out.e_bar.push(e_bar);
        out.s_bar.push(s_bar);
    }
    if !model.loss_mode.is_residual() {
        e_ru -= e_conv;
    }
    let energies = SpeciesEnergies { e_conv, e_ru, sigma };
    if !(e_conv.is_finite() && e_ru.is_finite() && sigma.is_finite()) {
        return Err(XcError::NonFinite(format!("energies of species `{}`: {energies:?}", prep.id)));
    }
    Ok((energies, out))
}

/// E°, E^RU and sigma of one species under a model.
pub fn species_energies(grid: &MolecularGrid, model: &ResidualModel) -> Result<SpeciesEnergies> {
    model.check()?;
    let prep = prepare_species(grid, model.feature_set, &model.conventional, &model.transform)?;
    evaluate_prepared(model, &prep).map(|(e, _)| e)
}

/// Combines species results stoichiometrically.
pub fn reaction_energy(
    record: &ReactionRecord,
    species: &BTreeMap<String, SpeciesEnergies>,
    epsilon: f64,
) -> Result<EnergyBreakdown> {
    let (mut e_conv_total, mut e_ru_total, mut sigma) = (0.0, 0.0, 0.0);
    for (id, c) in &record.terms {
        let e = species
            .get(id)
            .ok_or_else(|| XcError::MissingSpecies(id.clone()))?;
        let c = f64::from(*c);
        e_conv_total += c * e.e_conv;
        e_ru_total += c * e.e_ru;
        sigma += c.abs() * e.sigma;
    }
    Ok(EnergyBreakdown {
        e_conv_total,
        e_ru_total,
        sigma,
        s: reaction_log_variance(sigma, epsilon),
    })
}

#[inline]
pub fn reaction_log_variance(sigma: f64, epsilon: f64) -> f64 {
    (sigma * sigma).ln().max(epsilon.ln())
}
