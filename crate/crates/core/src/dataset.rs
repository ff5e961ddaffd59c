//! Reaction manifests and the in-memory dataset (grids + manifest).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Result, XcError};
use crate::grid::MolecularGrid;

/// One reaction: signed stoichiometric terms (products positive, reactants
/// negative) and the reference energy in hartree.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionRecord {
    pub reaction_id: String,
    pub terms: Vec<(String, i32)>,
    pub e_star: f64,
}

impl ReactionRecord {
    pub fn new(reaction_id: impl Into<String>, terms: Vec<(String, i32)>, e_star: f64) -> Self {
        ReactionRecord {
            reaction_id: reaction_id.into(),
            terms,
            e_star,
        }
    }

    /// Checks the products-minus-reactants shape: at least one term of each sign.
    pub fn check(&self) -> Result<()> {
        let pos = self.terms.iter().any(|(_, c)| *c > 0);
        let neg = self.terms.iter().any(|(_, c)| *c < 0);
        if !pos || !neg {
            return Err(XcError::InvalidData(format!(
                "reaction `{}` needs at least one positive and one negative coefficient",
                self.reaction_id
            )));
        }
        if !self.e_star.is_finite() {
            return Err(XcError::InvalidData(format!(
                "reaction `{}` has a non-finite reference energy",
                self.reaction_id
            )));
        }
        Ok(())
    }

    pub fn species(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|(s, _)| s.as_str())
    }
}

/// Elemental composition of a species, used by the dataset split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeciesInfo {
    pub id: String,
    pub composition: BTreeMap<String, u32>,
}

impl SpeciesInfo {
    pub fn atom_count(&self) -> u32 {
        self.composition.values().sum()
    }

    pub fn is_single_element(&self) -> bool {
        self.composition.len() == 1
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub species: Vec<SpeciesInfo>,
    pub reactions: Vec<ReactionRecord>,
}

impl Manifest {
    pub fn species_info(&self, id: &str) -> Option<&SpeciesInfo> {
        self.species.iter().find(|s| s.id == id)
    }

    pub fn reaction(&self, id: &str) -> Option<&ReactionRecord> {
        self.reactions.iter().find(|r| r.reaction_id == id)
    }

    /// Every species id referenced by some reaction, sorted.
    pub fn referenced_species(&self) -> BTreeSet<String> {
        self.reactions
            .iter()
            .flat_map(|r| r.species().map(str::to_owned))
            .collect()
    }

    pub fn check(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for r in &self.reactions {
            r.check()?;
            if !seen.insert(&r.reaction_id) {
                return Err(XcError::InvalidData(format!(
                    "duplicate reaction id `{}`",
                    r.reaction_id
                )));
            }
        }
        Ok(())
    }
}

/// Grids keyed by species id plus the reaction manifest.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub grids: BTreeMap<String, MolecularGrid>,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn new(grids: Vec<MolecularGrid>, manifest: Manifest) -> Result<Self> {
        let grids = grids
            .into_iter()
            .map(|g| (g.species_id.clone(), g))
            .collect();
        let ds = Dataset { grids, manifest };
        ds.check()?;
        Ok(ds)
    }

    /// Manifest sanity plus resolvability of every referenced species.
    pub fn check(&self) -> Result<()> {
        self.manifest.check()?;
        for r in &self.manifest.reactions {
            for s in r.species() {
                if !self.grids.contains_key(s) {
                    return Err(XcError::MissingSpecies(s.to_owned()));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self, id: &str) -> Result<&MolecularGrid> {
        self.grids
            .get(id)
            .ok_or_else(|| XcError::MissingSpecies(id.to_owned()))
    }

    pub fn reactions_by_id<'a>(&'a self, ids: &[String]) -> Result<Vec<&'a ReactionRecord>> {
        ids.iter()
            .map(|id| {
                self.manifest
                    .reaction(id)
                    .ok_or_else(|| XcError::InvalidData(format!("unknown reaction `{id}`")))
            })
            .collect()
    }
}
