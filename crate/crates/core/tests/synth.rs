use std::collections::BTreeMap;

use xcu_core::eval::evaluate_model;
use xcu_core::functionals::{evaluate_grid, ConventionalSpec};
use xcu_core::grid::{validate_grid, DEFAULT_NORMALIZATION_TOLERANCE};
use xcu_core::synth::*;
use xcu_core::training::{baseline_model, TrainConfig};

fn small(truth: ResidualTruth) -> SynthConfig {
    SynthConfig {
        n_species: 10,
        n_reactions: 14,
        seed: 11,
        truth,
        ..SynthConfig::default()
    }
}

#[test]
fn single_gaussian_counts_one_electron() {
    let s = GaussianSpecies::single("H", 0.8, 1.0, 0.0);
    let grid = make_gaussian_grid(&s, 7.0, 48).unwrap();
    assert!((grid.electron_count() - 1.0).abs() < 1e-3);
    assert!(validate_grid(&grid, DEFAULT_NORMALIZATION_TOLERANCE).is_valid());
}

#[test]
fn tau_is_von_weizsacker_for_one_orbital() {
    let s = GaussianSpecies::single("He", 0.7, 1.0, 1.0);
    let grid = make_gaussian_grid(&s, 5.0, 12).unwrap();
    for p in &grid.points {
        let f = &p.features;
        let w = f.grad_sq_up / (8.0 * f.rho_up);
        assert!((f.tau_up - w).abs() <= 1e-10 * w.max(1e-300), "{} vs {w}", f.tau_up);
    }
}

#[test]
fn electron_count_error_shrinks_over_three_refinements() {
    let s = GaussianSpecies::single("X", 0.9, 1.0, 1.0);
    let errors: Vec<f64> = [6, 12, 24, 48]
        .iter()
        .map(|&n| (make_gaussian_grid(&s, 6.0, n).unwrap().electron_count() - 2.0).abs())
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn refined_reference_ladder() {
    let spec = GridSpec {
        species: GaussianSpecies::single("X", 0.5, 1.0, 0.0),
        extent: 8.0,
        points_per_axis: 5,
    };
    let density = |p: &xcu_core::grid::GridPoint| p.features.rho();
    let mut gaps = Vec::new();
    let mut level = spec.clone();
    for _ in 0..3 {
        let coarse = quadrature(&level, density).unwrap();
        let fine = refined_reference(&level, density).unwrap();
        gaps.push((coarse - fine).abs());
        level = level.refined();
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");

    let volume = (2.0 * spec.extent).powi(3);
    let a = quadrature(&spec, |_| 1.0).unwrap();
    let b = refined_reference(&spec, |_| 1.0).unwrap();
    assert!((a - volume).abs() < 1e-10 * volume && (b - volume).abs() < 1e-10 * volume);
    assert_eq!(refined_reference(&spec, |_| 0.0).unwrap(), 0.0);
}

#[test]
fn analytic_gradients_match_differences() {
    let species = GaussianSpecies {
        id: "XY".into(),
        centers: vec![
            GaussianCenter {
                position: [0.0, 0.0, 0.0],
                exponent: 0.8,
                n_up: 2.0,
                n_down: 1.0,
            },
            GaussianCenter {
                position: [1.1, -0.4, 0.6],
                exponent: 0.5,
                n_up: 1.0,
                n_down: 2.0,
            },
        ],
    };
    let h = 1e-5;
    for r in [[0.3, 0.2, -0.4], [0.9, -0.1, 0.2], [-0.6, 0.5, 0.7], [1.5, -0.8, 0.1]] {
        let g = species.density_gradient(r);
        for k in 0..3 {
            let mut up = r;
            let mut down = r;
            up[k] += h;
            down[k] -= h;
            let (fu, fd) = (species.features_at(up), species.features_at(down));
            let fd_up = (fu.rho_up - fd.rho_up) / (2.0 * h);
            let fd_down = (fu.rho_down - fd.rho_down) / (2.0 * h);
            assert!((fd_up - g[0][k]).abs() <= 1e-6 * g[0][k].abs().max(1e-3));
            assert!((fd_down - g[1][k]).abs() <= 1e-6 * g[1][k].abs().max(1e-3));
        }
        let f = species.features_at(r);
        let n2 = |v: [f64; 3]| v.iter().map(|x| x * x).sum::<f64>();
        assert!((f.grad_sq_up - n2(g[0])).abs() <= 1e-12 * f.grad_sq_up);
        let total = [g[0][0] + g[1][0], g[0][1] + g[1][1], g[0][2] + g[1][2]];
        assert!((f.grad_sq_total - n2(total)).abs() <= 1e-12 * f.grad_sq_total.max(1e-300));
    }
}

#[test]
fn reference_energies_match_an_independent_integration() {
    let spec = ConventionalSpec::b3lyp();
    let truth = ResidualTruth::default();
    let data = make_synthetic_dataset(&small(truth), &spec).unwrap().dataset;
    let mut species = BTreeMap::new();
    for (id, grid) in &data.grids {
        let fields = evaluate_grid(grid, &spec).unwrap();
        // Reverse order, so the sum does not share rounding with the generator.
        let mut total = 0.0;
        for i in (0..grid.len()).rev() {
            let p = &grid.points[i];
            let ratio = truth.ratio(&p.features, fields.e_lda[i], fields.e_conv[i]);
            assert!(ratio.abs() <= TRUTH_ENVELOPE);
            total += p.weight * p.features.rho() * fields.e_conv[i] * (1.0 + ratio);
        }
        species.insert(id.clone(), total);
    }
    for r in &data.manifest.reactions {
        let mut e = 0.0;
        let mut scale = 0.0;
        for (id, c) in &r.terms {
            e += f64::from(*c) * species[id];
            scale += f64::from(c.abs()) * species[id].abs();
        }
        assert!((e - r.e_star).abs() <= 1e-10 * scale, "{}: {e} vs {}", r.reaction_id, r.e_star);
    }
}

#[test]
fn zero_truth_reference_is_the_conventional_energy() {
    let spec = ConventionalSpec::b3lyp();
    let data = make_synthetic_dataset(&small(ResidualTruth::zero()), &spec).unwrap().dataset;
    let ids: Vec<String> = data.manifest.reactions.iter().map(|r| r.reaction_id.clone()).collect();
    let base = baseline_model(&TrainConfig::default(), &spec).unwrap();
    let eval = evaluate_model(&base, &data, &ids).unwrap();
    for p in &eval.predictions {
        assert_eq!(p.e_ru, 0.0);
        assert_eq!(p.e_conv, p.e_star, "{}", p.reaction_id);
    }
}

#[test]
fn generation_is_deterministic_and_seed_sensitive() {
    let spec = ConventionalSpec::b3lyp();
    let a = make_synthetic_dataset(&small(ResidualTruth::default()), &spec).unwrap();
    let b = make_synthetic_dataset(&small(ResidualTruth::default()), &spec).unwrap();
    assert_eq!(a.dataset.manifest, b.dataset.manifest);
    assert_eq!(a.dataset.grids, b.dataset.grids);
    let mut cfg = small(ResidualTruth::default());
    cfg.seed += 1;
    let c = make_synthetic_dataset(&cfg, &spec).unwrap();
    assert_ne!(a.dataset.manifest, c.dataset.manifest);
}

#[test]
fn generated_grids_validate() {
    let data = make_synthetic_dataset(&small(ResidualTruth::default()), &ConventionalSpec::b3lyp())
        .unwrap()
        .dataset;
    for (id, grid) in &data.grids {
        let report = validate_grid(grid, DEFAULT_NORMALIZATION_TOLERANCE);
        assert!(report.is_valid(), "{id}: {report:?}");
    }
}
