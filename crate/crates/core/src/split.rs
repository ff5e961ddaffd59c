//! Train/validation/test partition with element coverage and size strata.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Manifest, SpeciesInfo};
use crate::error::{Result, XcError};

const SYMBOLS: [&str; 54] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K",
    "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
    "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",
    "Xe",
];

pub fn atomic_number(symbol: &str) -> Option<u32> {
    SYMBOLS.iter().position(|s| *s == symbol).map(|i| i as u32 + 1)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl SplitAssignment {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Disjointness and membership in the manifest.
    pub fn check(&self, manifest: &Manifest) -> Result<()> {
        let mut seen = BTreeSet::new();
        for id in self.train.iter().chain(&self.validation).chain(&self.test) {
            if manifest.reaction(id).is_none() {
                return Err(XcError::InvalidData(format!("split names unknown reaction `{id}`")));
            }
            if !seen.insert(id) {
                return Err(XcError::InvalidData(format!("reaction `{id}` appears twice in the split")));
            }
        }
        Ok(())
    }

    /// Elements present in the dataset but absent from every training species.
    pub fn uncovered_elements(&self, manifest: &Manifest) -> Result<BTreeSet<String>> {
        let elements = |ids: &mut dyn Iterator<Item = &String>| -> Result<BTreeSet<String>> {
            let mut out = BTreeSet::new();
            for id in ids {
                let r = manifest.reaction(id).ok_or_else(|| XcError::InvalidData(format!("unknown reaction `{id}`")))?;
                for s in r.species() {
                    out.extend(species_info(manifest, s)?.composition.keys().cloned());
                }
            }
            Ok(out)
        };
        let all = elements(&mut manifest.reactions.iter().map(|r| &r.reaction_id))?;
        let covered = elements(&mut self.train.iter())?;
        Ok(all.difference(&covered).cloned().collect())
    }
}

fn species_info<'a>(manifest: &'a Manifest, id: &str) -> Result<&'a SpeciesInfo> {
    manifest
        .species_info(id)
        .ok_or_else(|| XcError::MissingSpecies(id.to_owned()))
}

/// Atom-count bucket: 2, 3, 4, 5, 6 or more than 6 (index 0..=5); single atoms have none.
fn size_bucket(atoms: u32) -> Option<usize> {
    match atoms {
        0 | 1 => None,
        2..=6 => Some(atoms as usize - 2),
        _ => Some(5),
    }
}

/// Target (train, validation, test) sizes for a 6:2:2 partition.
pub fn target_sizes(n: usize) -> (usize, usize, usize) {
    let train = (n as f64 * 0.6).round() as usize;
    let val = ((n as f64 * 0.2).round() as usize).min(n - train);
    (train, val, n - train - val)
}

pub fn split_dataset(manifest: &Manifest, seed: u64) -> Result<SplitAssignment> {
    manifest.check()?;
    let n = manifest.reactions.len();
    if n == 0 {
        return Err(XcError::InvalidData("cannot split an empty manifest".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Per-reaction element sets and size buckets.
    let mut elements: Vec<BTreeSet<&str>> = Vec::with_capacity(n);
    let mut buckets: Vec<BTreeSet<usize>> = Vec::with_capacity(n);
    for r in &manifest.reactions {
        let mut el = BTreeSet::new();
        let mut bk = BTreeSet::new();
        for s in r.species() {
            let info = species_info(manifest, s)?;
            el.extend(info.composition.keys().map(String::as_str));
            bk.extend(size_bucket(info.atom_count()));
        }
        elements.push(el);
        buckets.push(bk);
    }

    let mut train: BTreeSet<usize> = (0..n).filter(|&i| elements[i].len() == 1).collect();

    let mut all_elements: Vec<&str> = elements.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    for el in &all_elements {
        if atomic_number(el).is_none() {
            return Err(XcError::InvalidData(format!("unknown element symbol `{el}`")));
        }
    }
    all_elements.sort_by_key(|el| std::cmp::Reverse(atomic_number(el)));
    for el in all_elements {
        if train.iter().any(|&i| elements[i].contains(el)) {
            continue;
        }
        let candidates: Vec<usize> = (0..n).filter(|&i| elements[i].contains(el)).collect();
        let pick = candidates
            .choose(&mut rng)
            .ok_or_else(|| XcError::UncoverableElement(el.to_owned()))?;
        train.insert(*pick);
    }

    for bucket in 0..6 {
        if train.iter().any(|&i| buckets[i].contains(&bucket)) {
            continue;
        }
        let candidates: Vec<usize> = (0..n).filter(|&i| buckets[i].contains(&bucket)).collect();
        if let Some(&pick) = candidates.choose(&mut rng) {
            train.insert(pick);
        }
    }

    let (n_train, n_val, _) = target_sizes(n);
    let mut rest: Vec<usize> = (0..n).filter(|i| !train.contains(i)).collect();
    rest.shuffle(&mut rng);
    let fill = n_train.saturating_sub(train.len()).min(rest.len());
    train.extend(rest.drain(..fill));
    let val_take = n_val.min(rest.len());
    let validation: BTreeSet<usize> = rest.drain(..val_take).collect();
    let test: BTreeSet<usize> = rest.into_iter().collect();

    let ids = |set: &BTreeSet<usize>| set.iter().map(|&i| manifest.reactions[i].reaction_id.clone()).collect();
    Ok(SplitAssignment {
        train: ids(&train),
        validation: ids(&validation),
        test: ids(&test),
    })
}
