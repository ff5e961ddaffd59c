use xcu_core::functionals::{
    b3lyp_density, b88_exchange_density, lda_xc_density, lyp_correlation_density, slater_exchange_density,
    vwn_correlation_density, B3lypCoefficients, VwnVariant,
};
use xcu_core::rbnet::{clamp_residual, ClampConfig};
use xcu_core::synth::{GaussianCenter, GaussianSpecies, ResidualTruth};

const MAX_SAMPLES: usize = 4096;

fn samples(n: usize) -> Result<(), String> {
    if (2..=MAX_SAMPLES).contains(&n) {
        Ok(())
    } else {
        Err(format!("sample count {n} outside [2, {MAX_SAMPLES}]"))
    }
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive, got {v}"))
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

/// `n` rows of `[e0, e_bar, s_bar]` for `e0` in `[-e0_span, e0_span]`.
pub fn clamp_curve(e_conv: f64, s0: f64, k1: f64, k2: f64, e0_span: f64, n: usize) -> Result<Vec<f64>, String> {
    samples(n)?;
    positive("e0 span", e0_span)?;
    let cfg = ClampConfig { k1, k2, ..ClampConfig::default() };
    cfg.check().map_err(|e| e.to_string())?;
    if !(e_conv.is_finite() && s0.is_finite()) {
        return Err("e_conv and s0 must be finite".into());
    }
    Ok(axis(-e0_span, e0_span, n)
        .flat_map(|e0| {
            let r = clamp_residual(e0, s0, e_conv, &cfg);
            [e0, r.e_bar, r.s_bar]
        })
        .collect())
}

/// `n` rows of `[x, rho, x_lda, c_lda, x_b88, c_lyp, b3lyp]` along the x axis
/// through a single Gaussian; energies are per electron, in hartree.
pub fn functional_profile(exponent: f64, n_up: f64, n_down: f64, extent: f64, n: usize) -> Result<Vec<f64>, String> {
    samples(n)?;
    positive("exponent", exponent)?;
    positive("extent", extent)?;
    if !(n_up >= 0.0 && n_down >= 0.0 && n_up + n_down > 0.0) {
        return Err("electron counts must be non-negative with a positive total".into());
    }
    let species = GaussianSpecies::single("demo", exponent, n_up, n_down);
    let mut out = Vec::with_capacity(7 * n);
    for x in axis(-extent, extent, n) {
        let f = species.features_at([x, 0.0, 0.0]);
        let err = |e: xcu_core::XcError| e.to_string();
        out.extend([
            x,
            f.rho(),
            slater_exchange_density(f.rho_up, f.rho_down).map_err(err)?,
            vwn_correlation_density(f.rho_up, f.rho_down, VwnVariant::Vwn5).map_err(err)?,
            b88_exchange_density(f.rho_up, f.grad_sq_up).map_err(err)?
                + b88_exchange_density(f.rho_down, f.grad_sq_down).map_err(err)?,
            lyp_correlation_density(f.rho_up, f.rho_down, f.grad_sq_up, f.grad_sq_down, f.grad_sq_total)
                .map_err(err)?,
            b3lyp_density(&f, &B3lypCoefficients::default(), VwnVariant::Vwn5).map_err(err)?,
        ]);
    }
    Ok(out)
}

/// `n * n` row-major cells of `[log10 rho, delta / e_conv]` on the z = 0 plane
/// of a two-centre closed-shell density, with the default synthetic truth.
pub fn residual_slice(separation: f64, exponent_a: f64, exponent_b: f64, extent: f64, n: usize) -> Result<Vec<f64>, String> {
    samples(n)?;
    positive("exponent a", exponent_a)?;
    positive("exponent b", exponent_b)?;
    positive("extent", extent)?;
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(format!("separation must be non-negative, got {separation}"));
    }
    let center = |x: f64, exponent: f64| GaussianCenter {
        position: [x, 0.0, 0.0],
        exponent,
        n_up: 1.0,
        n_down: 1.0,
    };
    let species = GaussianSpecies {
        id: "demo".into(),
        centers: vec![center(-0.5 * separation, exponent_a), center(0.5 * separation, exponent_b)],
    };
    let truth = ResidualTruth::default();
    let coeffs = B3lypCoefficients::default();
    let ys: Vec<f64> = axis(-extent, extent, n).collect();
    let mut out = Vec::with_capacity(2 * n * n);
    for &y in &ys {
        for x in axis(-extent, extent, n) {
            let f = species.features_at([x, y, 0.0]);
            let rho = f.rho();
            let e_conv = b3lyp_density(&f, &coeffs, VwnVariant::Vwn5).map_err(|e| e.to_string())?;
            let e_lda = lda_xc_density(&f, VwnVariant::Vwn5).map_err(|e| e.to_string())?;
            let ratio = if rho > 0.0 { truth.ratio(&f, e_lda, e_conv) } else { 0.0 };
            out.extend([rho.max(1e-300).log10(), ratio]);
        }
    }
    Ok(out)
}
