//! Per-point density features, quadrature grids and density-weighted integration.

use serde::{Deserialize, Serialize};

use crate::error::{Result, XcError};

/// Number of per-point density features.
pub const FEATURE_WIDTH: usize = 11;
/// Width of the extended feature vector fed to the residual network.
pub const EXTENDED_WIDTH: usize = 16;

/// Feature names in storage order. Grid files and network inputs use this order.
pub const FEATURE_NAMES: [&str; FEATURE_WIDTH] = [
    "rho_up",
    "rho_down",
    "grad_sq_up",
    "grad_sq_down",
    "grad_sq_total",
    "tau_up",
    "tau_down",
    "e_hf_w1_up",
    "e_hf_w1_down",
    "e_hf_w2_up",
    "e_hf_w2_down",
];

pub const EXTENDED_NAMES: [&str; EXTENDED_WIDTH] = [
    "rho_up",
    "rho_down",
    "grad_sq_up",
    "grad_sq_down",
    "grad_sq_total",
    "tau_up",
    "tau_down",
    "e_hf_w1_up",
    "e_hf_w1_down",
    "e_hf_w2_up",
    "e_hf_w2_down",
    "e_hf_w1",
    "e_hf_w2",
    "e_lda",
    "e_conv",
    "weight",
];

/// Default relative tolerance on the electron-count normalization check.
pub const DEFAULT_NORMALIZATION_TOLERANCE: f64 = 5e-3;

/// Local density descriptors at one grid point, in hartree atomic units.
///
/// `e_hf_w1_*` is the range-separated local exchange channel (omega = 0.4),
/// `e_hf_w2_*` the full-range channel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PointFeatures {
    pub rho_up: f64,
    pub rho_down: f64,
    pub grad_sq_up: f64,
    pub grad_sq_down: f64,
    pub grad_sq_total: f64,
    pub tau_up: f64,
    pub tau_down: f64,
    pub e_hf_w1_up: f64,
    pub e_hf_w1_down: f64,
    pub e_hf_w2_up: f64,
    pub e_hf_w2_down: f64,
}

impl PointFeatures {
    pub fn to_array(&self) -> [f64; FEATURE_WIDTH] {
        [
            self.rho_up,
            self.rho_down,
            self.grad_sq_up,
            self.grad_sq_down,
            self.grad_sq_total,
            self.tau_up,
            self.tau_down,
            self.e_hf_w1_up,
            self.e_hf_w1_down,
            self.e_hf_w2_up,
            self.e_hf_w2_down,
        ]
    }

    pub fn from_array(v: [f64; FEATURE_WIDTH]) -> Self {
        PointFeatures {
            rho_up: v[0],
            rho_down: v[1],
            grad_sq_up: v[2],
            grad_sq_down: v[3],
            grad_sq_total: v[4],
            tau_up: v[5],
            tau_down: v[6],
            e_hf_w1_up: v[7],
            e_hf_w1_down: v[8],
            e_hf_w2_up: v[9],
            e_hf_w2_down: v[10],
        }
    }

    /// Total electron density.
    #[inline]
    pub fn rho(&self) -> f64 {
        self.rho_up + self.rho_down
    }

    /// Exchanges every spin-resolved channel.
    pub fn spin_swapped(&self) -> Self {
        PointFeatures {
            rho_up: self.rho_down,
            rho_down: self.rho_up,
            grad_sq_up: self.grad_sq_down,
            grad_sq_down: self.grad_sq_up,
            grad_sq_total: self.grad_sq_total,
            tau_up: self.tau_down,
            tau_down: self.tau_up,
            e_hf_w1_up: self.e_hf_w1_down,
            e_hf_w1_down: self.e_hf_w1_up,
            e_hf_w2_up: self.e_hf_w2_down,
            e_hf_w2_down: self.e_hf_w2_up,
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.to_array().iter().position(|v| !v.is_finite()) {
            Some(index) => Err(XcError::NonFiniteFeature {
                index,
                name: FEATURE_NAMES[index],
            }),
            None => Ok(()),
        }
    }

    /// Hard invariant violations: negative densities, gradient norms or
    /// kinetic energy densities, and non-finite values.
    pub fn violations(&self) -> Vec<(usize, &'static str)> {
        let v = self.to_array();
        (0..FEATURE_WIDTH)
            .filter(|&i| !v[i].is_finite() || (i < 7 && v[i] < 0.0))
            .map(|i| (i, FEATURE_NAMES[i]))
            .collect()
    }

    /// Local exchange channels are expected to be non-positive on physical data.
    pub fn positive_exchange_channels(&self) -> Vec<(usize, &'static str)> {
        let v = self.to_array();
        (7..FEATURE_WIDTH)
            .filter(|&i| v[i] > 0.0)
            .map(|i| (i, FEATURE_NAMES[i]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Cartesian position in bohr.
    pub position: [f64; 3],
    /// Quadrature weight including the volume element, bohr^3.
    pub weight: f64,
    pub features: PointFeatures,
}

/// Quadrature grid for one chemical species.
///
/// `enhancement` optionally carries per-point (a1, a2, a3) factors for the
/// DM21-form conventional functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolecularGrid {
    pub species_id: String,
    pub points: Vec<GridPoint>,
    pub n_electrons_up: f64,
    pub n_electrons_down: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enhancement: Option<Vec<[f64; 3]>>,
}

impl MolecularGrid {
    pub fn new(
        species_id: impl Into<String>,
        points: Vec<GridPoint>,
        n_electrons_up: f64,
        n_electrons_down: f64,
    ) -> Self {
        MolecularGrid {
            species_id: species_id.into(),
            points,
            n_electrons_up,
            n_electrons_down,
            enhancement: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_electrons(&self) -> f64 {
        self.n_electrons_up + self.n_electrons_down
    }

    /// Per-point `w * rho`, the measure every energy integral is taken against.
    pub fn density_weights(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.weight * p.features.rho())
            .collect()
    }

    /// Integrated electron count, `sum w * rho` in grid order.
    pub fn electron_count(&self) -> f64 {
        self.points
            .iter()
            .fold(0.0, |acc, p| acc + p.weight * p.features.rho())
    }

    /// Puts the points into canonical order: lexicographic on position, then weight.
    ///
    /// Integration sums run in stored order, so two grids holding the same
    /// points only integrate bit-identically after both are canonicalized.
    pub fn canonicalize(&mut self) {
        let mut order: Vec<usize> = (0..self.points.len()).collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (&self.points[a], &self.points[b]);
            pa.position[0]
                .total_cmp(&pb.position[0])
                .then(pa.position[1].total_cmp(&pb.position[1]))
                .then(pa.position[2].total_cmp(&pb.position[2]))
                .then(pa.weight.total_cmp(&pb.weight))
        });
        self.points = order.iter().map(|&i| self.points[i].clone()).collect();
        if let Some(enh) = &self.enhancement {
            self.enhancement = Some(order.iter().map(|&i| enh[i]).collect());
        }
    }
}

/// The 16-component network input: the 11 point features, the spin-summed
/// local exchange channels, the LDA density, the conventional density and
/// the quadrature weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedFeatures(pub [f64; EXTENDED_WIDTH]);

impl ExtendedFeatures {
    pub const E_HF_W1: usize = 11;
    pub const E_HF_W2: usize = 12;
    pub const E_LDA: usize = 13;
    pub const E_CONV: usize = 14;
    pub const WEIGHT: usize = 15;

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn e_conv(&self) -> f64 {
        self.0[Self::E_CONV]
    }
}

/// Assembles the extended feature vector in its fixed order.
pub fn build_extended_features(
    x: &PointFeatures,
    e_lda: f64,
    e_conv: f64,
    weight: f64,
) -> Result<ExtendedFeatures> {
    let base = x.to_array();
    let mut out = [0.0; EXTENDED_WIDTH];
    out[..FEATURE_WIDTH].copy_from_slice(&base);
    out[ExtendedFeatures::E_HF_W1] = x.e_hf_w1_up + x.e_hf_w1_down;
    out[ExtendedFeatures::E_HF_W2] = x.e_hf_w2_up + x.e_hf_w2_down;
    out[ExtendedFeatures::E_LDA] = e_lda;
    out[ExtendedFeatures::E_CONV] = e_conv;
    out[ExtendedFeatures::WEIGHT] = weight;
    if let Some(index) = out.iter().position(|v| !v.is_finite()) {
        return Err(XcError::NonFiniteFeature {
            index,
            name: EXTENDED_NAMES[index],
        });
    }
    Ok(ExtendedFeatures(out))
}

/// Computes `sum_r w_r * rho(r) * values[r]` in grid index order.
pub fn integrate_density_weighted(grid: &MolecularGrid, values: &[f64]) -> Result<f64> {
    if values.len() != grid.points.len() {
        return Err(XcError::LengthMismatch {
            context: "integrate_density_weighted",
            expected: grid.points.len(),
            got: values.len(),
        });
    }
    let total = grid
        .points
        .iter()
        .zip(values)
        .fold(0.0, |acc, (p, v)| acc + p.weight * p.features.rho() * v);
    if !total.is_finite() {
        return Err(XcError::NonFinite(format!(
            "density-weighted integral over `{}`",
            grid.species_id
        )));
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyGrid,
    NonPositiveWeight { point: usize, weight: f64 },
    InvalidFeature { point: usize, feature: &'static str, value: f64 },
    Normalization { integrated: f64, declared: f64, tolerance: f64 },
    EnhancementLength { expected: usize, got: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::EmptyGrid => write!(f, "grid has no points"),
            Violation::NonPositiveWeight { point, weight } => {
                write!(f, "point {point}: non-positive weight {weight}")
            }
            Violation::InvalidFeature {
                point,
                feature,
                value,
            } => write!(f, "point {point}: invalid {feature} = {value}"),
            Violation::Normalization {
                integrated,
                declared,
                tolerance,
            } => write!(
                f,
                "electron count {integrated} deviates from declared {declared} by more than {:.3}%",
                tolerance * 100.0
            ),
            Violation::EnhancementLength { expected, got } => {
                write!(f, "enhancement factor column has {got} rows, expected {expected}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Points with positive local exchange channels: suspicious, not fatal.
    pub warnings: Vec<(usize, &'static str)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self, species: &str) -> Result<()> {
        if self.violations.is_empty() {
            return Ok(());
        }
        let lines: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        Err(XcError::InvalidData(format!(
            "grid `{species}`: {}",
            lines.join("; ")
        )))
    }
}

/// Checks every grid invariant and reports all violations; never fails.
pub fn validate_grid(grid: &MolecularGrid, tolerance: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    if grid.points.is_empty() {
        report.violations.push(Violation::EmptyGrid);
        return report;
    }
    for (i, p) in grid.points.iter().enumerate() {
        if !(p.weight > 0.0) || !p.weight.is_finite() {
            report.violations.push(Violation::NonPositiveWeight {
                point: i,
                weight: p.weight,
            });
        }
        let values = p.features.to_array();
        for (idx, name) in p.features.violations() {
            report.violations.push(Violation::InvalidFeature {
                point: i,
                feature: name,
                value: values[idx],
            });
        }
        for (_, name) in p.features.positive_exchange_channels() {
            report.warnings.push((i, name));
        }
    }
    if let Some(enh) = &grid.enhancement {
        if enh.len() != grid.points.len() {
            report.violations.push(Violation::EnhancementLength {
                expected: grid.points.len(),
                got: enh.len(),
            });
        }
    }
    let declared = grid.n_electrons();
    let integrated = grid.electron_count();
    let scale = declared.abs().max(1e-12);
    if !((integrated - declared).abs() <= tolerance * scale) {
        report.violations.push(Violation::Normalization {
            integrated,
            declared,
            tolerance,
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_grid(n: usize, rho: f64, total_weight: f64) -> MolecularGrid {
        let w = total_weight / n as f64;
        let points = (0..n)
            .map(|i| GridPoint {
                position: [i as f64, 0.0, 0.0],
                weight: w,
                features: PointFeatures {
                    rho_up: rho / 2.0,
                    rho_down: rho / 2.0,
                    ..Default::default()
                },
            })
            .collect();
        MolecularGrid::new("uniform", points, rho * total_weight / 2.0, rho * total_weight / 2.0)
    }

    #[test]
    fn extended_features_zero_case() {
        let y = build_extended_features(&PointFeatures::default(), 0.0, 0.0, 1.0).unwrap();
        assert!(y.0[..15].iter().all(|&v| v == 0.0));
        assert_eq!(y.0[15], 1.0);
    }

    #[test]
    fn extended_features_spin_sums() {
        let x = PointFeatures {
            e_hf_w1_up: -0.3,
            e_hf_w1_down: -0.2,
            ..Default::default()
        };
        let y = build_extended_features(&x, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(y.0[ExtendedFeatures::E_HF_W1], -0.3 + -0.2);
    }

    #[test]
    fn extended_features_reject_non_finite() {
        let x = PointFeatures {
            tau_down: f64::NAN,
            ..Default::default()
        };
        match build_extended_features(&x, 0.0, 0.0, 1.0) {
            Err(XcError::NonFiniteFeature { index, name }) => {
                assert_eq!(index, 6);
                assert_eq!(name, "tau_down");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = build_extended_features(&PointFeatures::default(), 0.0, f64::INFINITY, 1.0);
        assert!(matches!(err, Err(XcError::NonFiniteFeature { index: 14, .. })));
    }

    #[test]
    fn constant_integrand() {
        let g = uniform_grid(10, 1.0, 8.0);
        let v = integrate_density_weighted(&g, &[-0.5; 10]).unwrap();
        assert!((v + 4.0).abs() < 1e-14);
        assert_eq!(integrate_density_weighted(&g, &[0.0; 10]).unwrap(), 0.0);
    }

    #[test]
    fn integration_length_mismatch() {
        let g = uniform_grid(4, 1.0, 1.0);
        assert!(matches!(
            integrate_density_weighted(&g, &[1.0; 3]),
            Err(XcError::LengthMismatch { expected: 4, got: 3, .. })
        ));
    }

    #[test]
    fn integration_rejects_overflow() {
        let g = uniform_grid(2, 1.0, 4.0);
        assert!(matches!(
            integrate_density_weighted(&g, &[f64::MAX, f64::MAX]),
            Err(XcError::NonFinite(_))
        ));
    }

    #[test]
    fn validation_flags_negative_weight_and_normalization() {
        let mut g = uniform_grid(5, 1.0, 2.0);
        assert!(validate_grid(&g, DEFAULT_NORMALIZATION_TOLERANCE).is_valid());

        g.points[3].weight = -0.1;
        let report = validate_grid(&g, DEFAULT_NORMALIZATION_TOLERANCE);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NonPositiveWeight { point: 3, .. })));

        let mut g = uniform_grid(5, 1.0, 2.3);
        g.n_electrons_up = 1.0;
        g.n_electrons_down = 1.0;
        let report = validate_grid(&g, DEFAULT_NORMALIZATION_TOLERANCE);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::Normalization { .. }));
    }

    #[test]
    fn validation_reports_bad_features_and_warnings() {
        let mut g = uniform_grid(3, 1.0, 1.0);
        g.points[1].features.tau_up = -1.0;
        g.points[2].features.e_hf_w2_up = 0.2;
        let report = validate_grid(&g, DEFAULT_NORMALIZATION_TOLERANCE);
        assert_eq!(
            report.violations,
            vec![Violation::InvalidFeature {
                point: 1,
                feature: "tau_up",
                value: -1.0
            }]
        );
        assert_eq!(report.warnings, vec![(2, "e_hf_w2_up")]);
        assert!(validate_grid(
            &MolecularGrid::new("e", vec![], 0.0, 0.0),
            DEFAULT_NORMALIZATION_TOLERANCE
        )
        .violations
        .contains(&Violation::EmptyGrid));
    }

    #[test]
    fn canonical_order_is_stable() {
        let mut a = uniform_grid(6, 1.0, 1.0);
        for (i, p) in a.points.iter_mut().enumerate() {
            p.features.rho_up = 0.1 * (i as f64 + 1.0);
        }
        let mut b = a.clone();
        b.points.reverse();
        a.canonicalize();
        b.canonicalize();
        assert_eq!(a, b);
        let vals: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        assert_eq!(
            integrate_density_weighted(&a, &vals).unwrap().to_bits(),
            integrate_density_weighted(&b, &vals).unwrap().to_bits()
        );
    }
}
