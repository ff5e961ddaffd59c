//! Analytic synthetic data.
//!
//! Species are sums of normalized spherical Gaussians, one per "atom". All
//! density features are closed-form:
//!
//! * `rho_s = sum_c n_cs g_c` with `g_c = (a_c/pi)^(3/2) exp(-a_c |r - R_c|^2)`
//! * gradients from `grad g_c = -2 a_c (r - R_c) g_c`
//! * `tau_s = sum_c |grad(n_cs g_c)|^2 / (8 n_cs g_c)`, i.e. every center is
//!   treated as a single orbital (exact von Weizsäcker form for one center)
//! * the local exchange channels are synthetic stand-ins
//!   `e_hf_w1_s = -0.55 rho_s^(4/3)` and `e_hf_w2_s = -0.98 rho_s^(4/3)`;
//!   no orbitals exist here.
//!
//! Reaction references are the conventional energy plus a known bounded
//! residual, see [`ResidualTruth`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Manifest, ReactionRecord, SpeciesInfo};
use crate::error::{Result, XcError};
use crate::functionals::{evaluate_grid, ConventionalSpec};
use crate::grid::{
    validate_grid, GridPoint, MolecularGrid, PointFeatures, DEFAULT_NORMALIZATION_TOLERANCE,
};

/// Stand-in coefficient for the omega = 0.4 local exchange channel.
pub const HF_W1_COEFF: f64 = 0.55;
/// Stand-in coefficient for the full-range local exchange channel.
pub const HF_W2_COEFF: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianCenter {
    pub position: [f64; 3],
    /// Gaussian exponent, bohr^-2.
    pub exponent: f64,
    pub n_up: f64,
    pub n_down: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpecies {
    pub id: String,
    pub centers: Vec<GaussianCenter>,
}

impl GaussianSpecies {
    pub fn single(id: impl Into<String>, exponent: f64, n_up: f64, n_down: f64) -> Self {
        GaussianSpecies {
            id: id.into(),
            centers: vec![GaussianCenter {
                position: [0.0; 3],
                exponent,
                n_up,
                n_down,
            }],
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(XcError::InvalidConfig(format!("species `{}` has no centers", self.id)));
        }
        for c in &self.centers {
            if !(c.exponent > 0.0) || !c.exponent.is_finite() {
                return Err(XcError::InvalidConfig(format!(
                    "species `{}`: exponent must be positive, got {}",
                    self.id, c.exponent
                )));
            }
            if !(c.n_up >= 0.0 && c.n_down >= 0.0) {
                return Err(XcError::InvalidConfig(format!(
                    "species `{}`: occupations must be non-negative",
                    self.id
                )));
            }
            if c.position.iter().any(|v| !v.is_finite()) {
                return Err(XcError::InvalidConfig(format!(
                    "species `{}`: non-finite center position",
                    self.id
                )));
            }
        }
        Ok(())
    }

    pub fn n_up(&self) -> f64 {
        self.centers.iter().map(|c| c.n_up).sum()
    }

    pub fn n_down(&self) -> f64 {
        self.centers.iter().map(|c| c.n_down).sum()
    }

    pub fn centroid(&self) -> [f64; 3] {
        let n = self.centers.len() as f64;
        let mut c = [0.0; 3];
        for center in &self.centers {
            for k in 0..3 {
                c[k] += center.position[k] / n;
            }
        }
        c
    }

    /// Closed-form features at an arbitrary point.
    pub fn features_at(&self, r: [f64; 3]) -> PointFeatures {
        let mut rho = [0.0; 2];
        let mut grad = [[0.0; 3]; 2];
        let mut tau = [0.0; 2];
        for c in &self.centers {
            let d = [r[0] - c.position[0], r[1] - c.position[1], r[2] - c.position[2]];
            let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            let a = c.exponent;
            let g = (a / PI).powf(1.5) * (-a * d2).exp();
            for (s, n) in [c.n_up, c.n_down].into_iter().enumerate() {
                if n == 0.0 {
                    continue;
                }
                rho[s] += n * g;
                for k in 0..3 {
                    grad[s][k] += -2.0 * a * d[k] * n * g;
                }
                tau[s] += 0.5 * n * g * a * a * d2;
            }
        }
        let norm2 = |v: [f64; 3]| v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let total = [grad[0][0] + grad[1][0], grad[0][1] + grad[1][1], grad[0][2] + grad[1][2]];
        let p43 = |x: f64| if x > 0.0 { x.powf(4.0 / 3.0) } else { 0.0 };
        PointFeatures {
            rho_up: rho[0],
            rho_down: rho[1],
            grad_sq_up: norm2(grad[0]),
            grad_sq_down: norm2(grad[1]),
            grad_sq_total: norm2(total),
            tau_up: tau[0],
            tau_down: tau[1],
            e_hf_w1_up: -HF_W1_COEFF * p43(rho[0]),
            e_hf_w1_down: -HF_W1_COEFF * p43(rho[1]),
            e_hf_w2_up: -HF_W2_COEFF * p43(rho[0]),
            e_hf_w2_down: -HF_W2_COEFF * p43(rho[1]),
        }
    }

    /// Analytic density gradient of each spin channel (used by derivative checks).
    pub fn density_gradient(&self, r: [f64; 3]) -> [[f64; 3]; 2] {
        let mut grad = [[0.0; 3]; 2];
        for c in &self.centers {
            let d = [r[0] - c.position[0], r[1] - c.position[1], r[2] - c.position[2]];
            let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            let g = (c.exponent / PI).powf(1.5) * (-c.exponent * d2).exp();
            for (s, n) in [c.n_up, c.n_down].into_iter().enumerate() {
                for k in 0..3 {
                    grad[s][k] += -2.0 * c.exponent * d[k] * n * g;
                }
            }
        }
        grad
    }
}

/// A cubic product grid around a species' centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub species: GaussianSpecies,
    /// Half-width of the box, bohr.
    pub extent: f64,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            species: self.species.clone(),
            extent: self.extent,
            points_per_axis: self.points_per_axis * 2,
        }
    }

    /// Midpoint-rule nodes and the common cell volume.
    fn nodes(&self) -> Result<(Vec<[f64; 3]>, f64)> {
        if self.points_per_axis < 2 {
            return Err(XcError::InvalidConfig(format!(
                "points_per_axis must be at least 2, got {}",
                self.points_per_axis
            )));
        }
        if !(self.extent > 0.0) {
            return Err(XcError::InvalidConfig("grid extent must be positive".into()));
        }
        let n = self.points_per_axis;
        let h = 2.0 * self.extent / n as f64;
        let c = self.species.centroid();
        let axis = |k: usize| -> Vec<f64> {
            (0..n).map(|i| c[k] - self.extent + (i as f64 + 0.5) * h).collect()
        };
        let (xs, ys, zs) = (axis(0), axis(1), axis(2));
        let mut nodes = Vec::with_capacity(n * n * n);
        for &x in &xs {
            for &y in &ys {
                for &z in &zs {
                    nodes.push([x, y, z]);
                }
            }
        }
        Ok((nodes, h * h * h))
    }
}

/// Samples a species on a uniform Cartesian product grid with weight = cell volume.
pub fn make_gaussian_grid(
    species: &GaussianSpecies,
    extent: f64,
    points_per_axis: usize,
) -> Result<MolecularGrid> {
    species.check()?;
    let spec = GridSpec {
        species: species.clone(),
        extent,
        points_per_axis,
    };
    let (nodes, w) = spec.nodes()?;
    let points = nodes
        .into_iter()
        .map(|r| GridPoint {
            position: r,
            weight: w,
            features: species.features_at(r),
        })
        .collect();
    Ok(MolecularGrid::new(
        species.id.clone(),
        points,
        species.n_up(),
        species.n_down(),
    ))
}

/// Plain quadrature `sum_r w_r f(r)` of an integrand on the grid described by `spec`.
pub fn quadrature<F>(spec: &GridSpec, integrand: F) -> Result<f64>
where
    F: Fn(&GridPoint) -> f64,
{
    let grid = make_gaussian_grid(&spec.species, spec.extent, spec.points_per_axis)?;
    Ok(grid.points.iter().fold(0.0, |acc, p| acc + p.weight * integrand(p)))
}

/// The same quadrature on the grid refined 2x per axis; the convergence reference.
pub fn refined_reference<F>(spec: &GridSpec, integrand: F) -> Result<f64>
where
    F: Fn(&GridPoint) -> f64,
{
    quadrature(&spec.refined(), integrand)
}

/// Drops points whose contribution `w * rho` is below `threshold` times the
/// electron count. Integrals change by at most that tail.
pub fn prune_grid(grid: &MolecularGrid, threshold: f64) -> MolecularGrid {
    let cut = threshold * grid.n_electrons();
    let keep: Vec<usize> = (0..grid.points.len())
        .filter(|&i| grid.points[i].weight * grid.points[i].features.rho() >= cut)
        .collect();
    MolecularGrid {
        species_id: grid.species_id.clone(),
        points: keep.iter().map(|&i| grid.points[i].clone()).collect(),
        n_electrons_up: grid.n_electrons_up,
        n_electrons_down: grid.n_electrons_down,
        enhancement: grid
            .enhancement
            .as_ref()
            .map(|e| keep.iter().map(|&i| e[i]).collect()),
    }
}

/// Known residual added to the conventional density to make the synthetic truth:
///
/// `delta = e_conv * (base + gradient_amplitude * (2 t - 1) + ratio_amplitude * tanh(4 (e_conv / e_lda - 1)))`
///
/// with `t = s^2 / (1 + s^2)` and `s` the reduced gradient of the total
/// density. The sum of absolute coefficients bounds `|delta| / |e_conv|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualTruth {
    pub base: f64,
    pub gradient_amplitude: f64,
    pub ratio_amplitude: f64,
}

/// Largest admissible `|delta| / |e_conv|`.
pub const TRUTH_ENVELOPE: f64 = 0.3;

impl ResidualTruth {
    pub fn zero() -> Self {
        ResidualTruth {
            base: 0.0,
            gradient_amplitude: 0.0,
            ratio_amplitude: 0.0,
        }
    }

    pub fn bound(&self) -> f64 {
        self.base.abs() + self.gradient_amplitude.abs() + self.ratio_amplitude.abs()
    }

    pub fn check(&self) -> Result<()> {
        if !(self.bound() <= TRUTH_ENVELOPE) {
            return Err(XcError::InvalidConfig(format!(
                "residual truth bound {} exceeds {TRUTH_ENVELOPE}",
                self.bound()
            )));
        }
        Ok(())
    }

    /// Relative residual `delta / e_conv` at one point.
    pub fn ratio(&self, f: &PointFeatures, e_lda: f64, e_conv: f64) -> f64 {
        let rho = f.rho();
        let t = if rho > 0.0 {
            let kf = 2.0 * (3.0 * PI * PI).cbrt();
            let s2 = f.grad_sq_total / (kf * kf * rho.powf(8.0 / 3.0));
            s2 / (1.0 + s2)
        } else {
            0.0
        };
        let r = if e_lda != 0.0 {
            (4.0 * (e_conv / e_lda - 1.0)).tanh()
        } else {
            0.0
        };
        self.base + self.gradient_amplitude * (2.0 * t - 1.0) + self.ratio_amplitude * r
    }

    pub fn delta(&self, f: &PointFeatures, e_lda: f64, e_conv: f64) -> f64 {
        self.ratio(f, e_lda, e_conv) * e_conv
    }
}

impl Default for ResidualTruth {
    fn default() -> Self {
        ResidualTruth {
            base: 0.12,
            gradient_amplitude: 0.08,
            ratio_amplitude: 0.06,
        }
    }
}

/// Parameters of a synthetic element: valence occupations and Gaussian width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticElement {
    pub symbol: &'static str,
    pub n_up: f64,
    pub n_down: f64,
    pub exponent: f64,
}

pub const SYNTHETIC_ELEMENTS: [SyntheticElement; 4] = [
    SyntheticElement { symbol: "H", n_up: 1.0, n_down: 0.0, exponent: 0.80 },
    SyntheticElement { symbol: "C", n_up: 2.0, n_down: 2.0, exponent: 0.50 },
    SyntheticElement { symbol: "N", n_up: 3.0, n_down: 2.0, exponent: 0.60 },
    SyntheticElement { symbol: "O", n_up: 3.0, n_down: 3.0, exponent: 0.70 },
];

/// Exponent contraction applied to atoms bound in a molecule.
const BOND_CONTRACTION: f64 = 1.12;
const BOND_LENGTH: f64 = 1.6;
const MIN_SEPARATION: f64 = 1.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Number of molecular species; isolated atoms are added on top.
    pub n_species: usize,
    pub n_reactions: usize,
    pub seed: u64,
    #[serde(default)]
    pub truth: ResidualTruth,
    #[serde(default = "default_min_atoms")]
    pub min_atoms: usize,
    #[serde(default = "default_max_atoms")]
    pub max_atoms: usize,
    /// Grid spacing in units of `1 / sqrt(exponent)` of the tightest center.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Box margin beyond the outermost center in units of `1 / sqrt(exponent)`.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Relative `w * rho` pruning threshold; 0 keeps the full product grid.
    #[serde(default = "default_prune")]
    pub prune: f64,
}

fn default_min_atoms() -> usize {
    2
}
fn default_max_atoms() -> usize {
    7
}
fn default_spacing() -> f64 {
    0.95
}
fn default_margin() -> f64 {
    2.6
}
fn default_prune() -> f64 {
    1e-7
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_species: 60,
            n_reactions: 200,
            seed: 7,
            truth: ResidualTruth::default(),
            min_atoms: default_min_atoms(),
            max_atoms: default_max_atoms(),
            spacing: default_spacing(),
            margin: default_margin(),
            prune: default_prune(),
        }
    }
}

impl SynthConfig {
    pub fn check(&self) -> Result<()> {
        if self.n_species == 0 {
            return Err(XcError::InvalidConfig("n_species must be at least 1".into()));
        }
        if self.n_reactions == 0 {
            return Err(XcError::InvalidConfig("n_reactions must be at least 1".into()));
        }
        if self.min_atoms < 2 || self.max_atoms < self.min_atoms {
            return Err(XcError::InvalidConfig(
                "atom counts need 2 <= min_atoms <= max_atoms".into(),
            ));
        }
        if !(self.spacing > 0.0 && self.margin > 0.0 && self.prune >= 0.0) {
            return Err(XcError::InvalidConfig(
                "spacing and margin must be positive and prune non-negative".into(),
            ));
        }
        self.truth.check()
    }
}

/// A generated dataset together with everything needed to audit it.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub species: Vec<GaussianSpecies>,
    pub truth: ResidualTruth,
    pub conventional: ConventionalSpec,
}

fn atom_species(el: &SyntheticElement) -> GaussianSpecies {
    GaussianSpecies::single(el.symbol, el.exponent, el.n_up, el.n_down)
}

fn random_molecule(
    rng: &mut ChaCha8Rng,
    id: String,
    n_atoms: usize,
) -> (GaussianSpecies, BTreeMap<String, u32>) {
    let mut positions: Vec<[f64; 3]> = vec![[0.0; 3]];
    while positions.len() < n_atoms {
        let anchor = positions[rng.random_range(0..positions.len())];
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        let theta = (2.0 * u - 1.0).acos();
        let phi = 2.0 * PI * v;
        let cand = [
            anchor[0] + BOND_LENGTH * theta.sin() * phi.cos(),
            anchor[1] + BOND_LENGTH * theta.sin() * phi.sin(),
            anchor[2] + BOND_LENGTH * theta.cos(),
        ];
        let clear = positions.iter().all(|p| {
            let d2: f64 = (0..3).map(|k| (p[k] - cand[k]).powi(2)).sum();
            d2 >= MIN_SEPARATION * MIN_SEPARATION
        });
        if clear {
            positions.push(cand);
        }
    }
    let elements: Vec<&SyntheticElement> = (0..n_atoms)
        .map(|_| &SYNTHETIC_ELEMENTS[rng.random_range(0..SYNTHETIC_ELEMENTS.len())])
        .collect();
    let total: f64 = elements.iter().map(|e| e.n_up + e.n_down).sum();
    let up_total = (total / 2.0).ceil();
    let down_total = total - up_total;
    let mut composition = BTreeMap::new();
    let centers = elements
        .iter()
        .zip(&positions)
        .map(|(el, &position)| {
            *composition.entry(el.symbol.to_owned()).or_insert(0) += 1;
            let n = el.n_up + el.n_down;
            GaussianCenter {
                position,
                exponent: el.exponent * BOND_CONTRACTION,
                n_up: n * up_total / total,
                n_down: n * down_total / total,
            }
        })
        .collect();
    (GaussianSpecies { id, centers }, composition)
}

/// Grid for a generated species, sized from its tightest and most diffuse centers.
pub fn species_grid(species: &GaussianSpecies, cfg: &SynthConfig) -> Result<MolecularGrid> {
    let a_max = species.centers.iter().map(|c| c.exponent).fold(0.0, f64::max);
    let a_min = species.centers.iter().map(|c| c.exponent).fold(f64::INFINITY, f64::min);
    let centroid = species.centroid();
    let reach = species
        .centers
        .iter()
        .flat_map(|c| (0..3).map(move |k| (c.position[k] - centroid[k]).abs()))
        .fold(0.0, f64::max);
    let extent = reach + cfg.margin / a_min.sqrt();
    let h = cfg.spacing / a_max.sqrt();
    let n = ((2.0 * extent / h).ceil() as usize).max(2);
    let grid = make_gaussian_grid(species, extent, n)?;
    Ok(if cfg.prune > 0.0 {
        prune_grid(&grid, cfg.prune)
    } else {
        grid
    })
}

/// Conventional and reference (conventional + residual truth) energies of one grid.
pub fn species_reference_energies(
    grid: &MolecularGrid,
    conventional: &ConventionalSpec,
    truth: &ResidualTruth,
) -> Result<(f64, f64)> {
    let fields = evaluate_grid(grid, conventional)?;
    let mut e_conv = 0.0;
    let mut e_truth = 0.0;
    for (i, p) in grid.points.iter().enumerate() {
        let wr = p.weight * p.features.rho();
        let delta = truth.delta(&p.features, fields.e_lda[i], fields.e_conv[i]);
        e_conv += wr * fields.e_conv[i];
        e_truth += wr * (fields.e_conv[i] + delta);
    }
    Ok((e_conv, e_truth))
}

/// Generates molecules, their atoms, atomisation and fragmentation
/// reactions, and reference energies from the residual truth.
pub fn make_synthetic_dataset(
    cfg: &SynthConfig,
    conventional: &ConventionalSpec,
) -> Result<SyntheticDataset> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut molecules = Vec::with_capacity(cfg.n_species);
    let mut compositions = Vec::with_capacity(cfg.n_species);
    for i in 0..cfg.n_species {
        let n_atoms = rng.random_range(cfg.min_atoms..=cfg.max_atoms);
        let (sp, comp) = random_molecule(&mut rng, format!("M{i:03}"), n_atoms);
        molecules.push(sp);
        compositions.push(comp);
    }

    let mut used: Vec<&SyntheticElement> = SYNTHETIC_ELEMENTS
        .iter()
        .filter(|el| compositions.iter().any(|c| c.contains_key(el.symbol)))
        .collect();
    used.sort_by_key(|el| el.symbol);

    let mut species: Vec<GaussianSpecies> = used.iter().map(|el| atom_species(el)).collect();
    let mut infos: Vec<SpeciesInfo> = used
        .iter()
        .map(|el| SpeciesInfo {
            id: el.symbol.to_owned(),
            composition: BTreeMap::from([(el.symbol.to_owned(), 1)]),
        })
        .collect();
    for (m, comp) in molecules.iter().zip(&compositions) {
        species.push(m.clone());
        infos.push(SpeciesInfo {
            id: m.id.clone(),
            composition: comp.clone(),
        });
    }

    // Candidate reactions: every atomisation, then every strict-subset fragmentation.
    let atomisation = |mol: usize| -> Vec<(String, i32)> {
        let mut terms = vec![(molecules[mol].id.clone(), -1)];
        for (el, &k) in &compositions[mol] {
            terms.push((el.clone(), k as i32));
        }
        terms
    };
    let mut fragmentations = Vec::new();
    for a in 0..molecules.len() {
        for b in 0..molecules.len() {
            if a == b {
                continue;
            }
            let (ca, cb) = (&compositions[a], &compositions[b]);
            let subset = cb.iter().all(|(el, k)| ca.get(el).is_some_and(|ka| ka >= k));
            if subset && ca != cb {
                let mut terms = vec![(molecules[a].id.clone(), -1), (molecules[b].id.clone(), 1)];
                for (el, &ka) in ca {
                    let rest = ka - cb.get(el).copied().unwrap_or(0);
                    if rest > 0 {
                        terms.push((el.clone(), rest as i32));
                    }
                }
                fragmentations.push(terms);
            }
        }
    }
    fragmentations.shuffle(&mut rng);

    let available = molecules.len() + fragmentations.len();
    if cfg.n_reactions > available {
        return Err(XcError::InvalidConfig(format!(
            "n_reactions = {} exceeds the {available} reactions constructible from {} species",
            cfg.n_reactions, cfg.n_species
        )));
    }
    let mut reaction_terms: Vec<Vec<(String, i32)>> = (0..molecules.len())
        .map(atomisation)
        .take(cfg.n_reactions)
        .collect();
    let extra = cfg.n_reactions - reaction_terms.len();
    reaction_terms.extend(fragmentations.into_iter().take(extra));

    let mut grids = Vec::with_capacity(species.len());
    let mut truth_energy = BTreeMap::new();
    for sp in &species {
        let grid = species_grid(sp, cfg)?;
        validate_grid(&grid, DEFAULT_NORMALIZATION_TOLERANCE).into_result(&sp.id)?;
        let (_, e_truth) = species_reference_energies(&grid, conventional, &cfg.truth)?;
        truth_energy.insert(sp.id.clone(), e_truth);
        grids.push(grid);
    }

    // Only keep species that some reaction uses.
    let mut reactions = Vec::with_capacity(reaction_terms.len());
    for (i, terms) in reaction_terms.into_iter().enumerate() {
        let e_star = terms
            .iter()
            .fold(0.0, |acc, (s, c)| acc + *c as f64 * truth_energy[s]);
        reactions.push(ReactionRecord::new(format!("R{i:04}"), terms, e_star));
    }
    let manifest = Manifest {
        species: infos,
        reactions,
    };
    let referenced = manifest.referenced_species();
    let grids: Vec<MolecularGrid> = grids
        .into_iter()
        .filter(|g| referenced.contains(&g.species_id))
        .collect();
    let species: Vec<GaussianSpecies> = species
        .into_iter()
        .filter(|s| referenced.contains(&s.id))
        .collect();
    let manifest = Manifest {
        species: manifest
            .species
            .into_iter()
            .filter(|s| referenced.contains(&s.id))
            .collect(),
        reactions: manifest.reactions,
    };
    Ok(SyntheticDataset {
        dataset: Dataset::new(grids, manifest)?,
        species,
        truth: cfg.truth,
        conventional: *conventional,
    })
}
