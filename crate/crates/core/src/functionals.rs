//! Conventional exchange-correlation energy densities.
//!
//! Every function here returns an energy per unit volume (hartree·bohr⁻³)
//! and is exactly zero where the density vanishes. Component functionals:
//! Slater exchange, VWN correlation (two parameterizations), Becke 88
//! exchange and Lee-Yang-Parr correlation. They are composed into the B3LYP
//! hybrid and the DM21-style linear combination.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, XcError};
use crate::grid::{MolecularGrid, PointFeatures};

/// Densities below this are floored inside fractional powers and logarithms.
pub const DENSITY_FLOOR: f64 = 1e-30;

/// Becke 88 gradient-correction constant.
const B88_BETA: f64 = 0.0042;

const LYP_A: f64 = 0.04918;
const LYP_B: f64 = 0.132;
const LYP_C: f64 = 0.2533;
const LYP_D: f64 = 0.349;

/// Exchange constant of the uniform gas, (3/4)(3/pi)^(1/3).
pub fn slater_cx() -> f64 {
    0.75 * (3.0 / PI).cbrt()
}

fn check_input(functional: &'static str, input: &'static str, value: f64) -> Result<()> {
    if value.is_nan() {
        return Err(XcError::NonFinite(format!("{functional}: `{input}` is NaN")));
    }
    if value < 0.0 {
        return Err(XcError::NegativeInput {
            functional,
            input,
            value,
        });
    }
    Ok(())
}

/// Spin-scaled Slater (Dirac) exchange: -Cx 2^(1/3) (rho_up^(4/3) + rho_down^(4/3)).
pub fn slater_exchange_density(rho_up: f64, rho_down: f64) -> Result<f64> {
    check_input("slater", "rho_up", rho_up)?;
    check_input("slater", "rho_down", rho_down)?;
    let spin = |r: f64| if r > 0.0 { r.powf(4.0 / 3.0) } else { 0.0 };
    Ok(-slater_cx() * 2f64.cbrt() * (spin(rho_up) + spin(rho_down)))
}

/// Which published VWN fit is used for the LDA correlation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum VwnVariant {
    /// Fit to the Ceperley-Alder data ("VWN5").
    #[default]
    #[serde(rename = "VWN5")]
    Vwn5,
    /// Fit to the random-phase approximation data ("VWN3"/"VWN_RPA" in most codes).
    #[serde(rename = "VWN_RPA")]
    VwnRpa,
}

impl VwnVariant {
    pub fn name(self) -> &'static str {
        match self {
            VwnVariant::Vwn5 => "VWN5",
            VwnVariant::VwnRpa => "VWN_RPA",
        }
    }
}

/// (A, x0, b, c) for one VWN interpolation curve.
#[derive(Clone, Copy)]
struct VwnFit {
    a: f64,
    x0: f64,
    b: f64,
    c: f64,
}

struct VwnParams {
    para: VwnFit,
    ferro: VwnFit,
    stiffness: VwnFit,
}

fn vwn_params(variant: VwnVariant) -> VwnParams {
    let a_stiff = -1.0 / (6.0 * PI * PI);
    match variant {
        VwnVariant::Vwn5 => VwnParams {
            para: VwnFit { a: 0.0310907, x0: -0.10498, b: 3.72744, c: 12.9352 },
            ferro: VwnFit { a: 0.01554535, x0: -0.32500, b: 7.06042, c: 18.0578 },
            stiffness: VwnFit { a: a_stiff, x0: -0.0047584, b: 1.13107, c: 13.0045 },
        },
        VwnVariant::VwnRpa => VwnParams {
            para: VwnFit { a: 0.0310907, x0: -0.409286, b: 13.0720, c: 42.7198 },
            ferro: VwnFit { a: 0.01554535, x0: -0.743294, b: 20.1231, c: 101.578 },
            stiffness: VwnFit { a: a_stiff, x0: -0.228344, b: 1.06835, c: 11.4813 },
        },
    }
}

/// Correlation energy per electron on one VWN curve, x = sqrt(rs).
fn vwn_curve(p: VwnFit, x: f64) -> f64 {
    let poly = |t: f64| t * t + p.b * t + p.c;
    let q = (4.0 * p.c - p.b * p.b).sqrt();
    let atan = (q / (2.0 * x + p.b)).atan();
    let x_x = poly(x);
    p.a * ((x * x / x_x).ln() + 2.0 * p.b / q * atan
        - p.b * p.x0 / poly(p.x0)
            * (((x - p.x0) * (x - p.x0) / x_x).ln() + 2.0 * (p.b + 2.0 * p.x0) / q * atan))
}

/// VWN local correlation with the spin-stiffness interpolation between the
/// paramagnetic and ferromagnetic limits.
pub fn vwn_correlation_density(rho_up: f64, rho_down: f64, variant: VwnVariant) -> Result<f64> {
    check_input("vwn", "rho_up", rho_up)?;
    check_input("vwn", "rho_down", rho_down)?;
    let rho = rho_up + rho_down;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let rho_f = rho.max(DENSITY_FLOOR);
    let rs = (3.0 / (4.0 * PI * rho_f)).cbrt();
    let x = rs.sqrt();
    let zeta = ((rho_up - rho_down) / rho_f).clamp(-1.0, 1.0);
    let p = vwn_params(variant);
    let four_thirds = 4.0 / 3.0;
    let f_zeta = ((1.0 + zeta).powf(four_thirds) + (1.0 - zeta).powf(four_thirds) - 2.0)
        / (2f64.powf(four_thirds) - 2.0);
    let f_pp0 = 4.0 / (9.0 * (2f64.cbrt() - 1.0));
    let z4 = zeta.powi(4);
    let e_p = vwn_curve(p.para, x);
    let e_f = vwn_curve(p.ferro, x);
    let alpha = vwn_curve(p.stiffness, x);
    let eps = e_p + alpha * f_zeta / f_pp0 * (1.0 - z4) + (e_f - e_p) * f_zeta * z4;
    Ok(rho * eps)
}

/// Becke 88 exchange for one spin channel, including its LDA part.
pub fn b88_exchange_density(rho_sigma: f64, grad_sq_sigma: f64) -> Result<f64> {
    check_input("b88", "rho_sigma", rho_sigma)?;
    check_input("b88", "grad_sq_sigma", grad_sq_sigma)?;
    if rho_sigma == 0.0 {
        return Ok(0.0);
    }
    let r43 = rho_sigma.max(DENSITY_FLOOR).powf(4.0 / 3.0);
    let lda = -slater_cx() * 2f64.cbrt() * r43;
    if grad_sq_sigma == 0.0 {
        return Ok(lda);
    }
    let x = grad_sq_sigma.sqrt() / r43;
    Ok(lda - B88_BETA * r43 * x * x / (1.0 + 6.0 * B88_BETA * x * x.asinh()))
}

/// Lee-Yang-Parr correlation in its closed spin-polarized form (no Laplacian).
pub fn lyp_correlation_density(
    rho_up: f64,
    rho_down: f64,
    grad_sq_up: f64,
    grad_sq_down: f64,
    grad_sq_total: f64,
) -> Result<f64> {
    check_input("lyp", "rho_up", rho_up)?;
    check_input("lyp", "rho_down", rho_down)?;
    check_input("lyp", "grad_sq_up", grad_sq_up)?;
    check_input("lyp", "grad_sq_down", grad_sq_down)?;
    check_input("lyp", "grad_sq_total", grad_sq_total)?;
    let rho = rho_up + rho_down;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let (ra, rb) = (rho_up, rho_down);
    let rho_f = rho.max(DENSITY_FLOOR);
    let rm = rho_f.powf(-1.0 / 3.0);
    let denom = 1.0 + LYP_D * rm;
    // exp(-c rho^-1/3) rho^-11/3 overflows separately at tiny densities.
    let omega = (-LYP_C * rm - 11.0 / 3.0 * rho_f.ln()).exp() / denom;
    let delta = LYP_C * rm + LYP_D * rm / denom;
    let cf = 0.3 * (3.0 * PI * PI).powf(2.0 / 3.0);
    let p83 = |r: f64| if r > 0.0 { r.powf(8.0 / 3.0) } else { 0.0 };

    let local = -LYP_A * 4.0 / denom * ra * rb / rho_f;
    let inner = 2f64.powf(11.0 / 3.0) * cf * (p83(ra) + p83(rb))
        + (47.0 / 18.0 - 7.0 / 18.0 * delta) * grad_sq_total
        - (2.5 - delta / 18.0) * (grad_sq_up + grad_sq_down)
        - (delta - 11.0) / 9.0 * (ra / rho_f * grad_sq_up + rb / rho_f * grad_sq_down);
    let two_thirds_rho2 = 2.0 / 3.0 * rho * rho;
    let gradient = ra * rb * inner - two_thirds_rho2 * grad_sq_total
        + ((two_thirds_rho2 - ra * ra) * grad_sq_down + (two_thirds_rho2 - rb * rb) * grad_sq_up);
    Ok(local - LYP_A * LYP_B * omega * gradient)
}

/// Local exact-exchange channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HfChannel {
    /// Range-separated, omega = 0.4.
    Omega1,
    /// Full range, omega -> infinity; the exact-exchange term of B3LYP.
    Omega2,
}

/// Spin-summed stored local exchange density for the requested channel.
pub fn hf_exchange_density(features: &PointFeatures, channel: HfChannel) -> f64 {
    match channel {
        HfChannel::Omega1 => features.e_hf_w1_up + features.e_hf_w1_down,
        HfChannel::Omega2 => features.e_hf_w2_up + features.e_hf_w2_down,
    }
}

/// LDA exchange-correlation density: Slater plus VWN.
pub fn lda_xc_density(features: &PointFeatures, vwn: VwnVariant) -> Result<f64> {
    Ok(slater_exchange_density(features.rho_up, features.rho_down)?
        + vwn_correlation_density(features.rho_up, features.rho_down, vwn)?)
}

/// The five component densities entering the B3LYP mix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XcComponents {
    pub x_lda: f64,
    pub c_lda: f64,
    pub x_hf: f64,
    pub x_gga: f64,
    pub c_gga: f64,
}

impl XcComponents {
    pub fn evaluate(f: &PointFeatures, vwn: VwnVariant) -> Result<Self> {
        Ok(XcComponents {
            x_lda: slater_exchange_density(f.rho_up, f.rho_down)?,
            c_lda: vwn_correlation_density(f.rho_up, f.rho_down, vwn)?,
            x_hf: hf_exchange_density(f, HfChannel::Omega2),
            x_gga: b88_exchange_density(f.rho_up, f.grad_sq_up)?
                + b88_exchange_density(f.rho_down, f.grad_sq_down)?,
            c_gga: lyp_correlation_density(
                f.rho_up,
                f.rho_down,
                f.grad_sq_up,
                f.grad_sq_down,
                f.grad_sq_total,
            )?,
        })
    }
}

/// B3LYP mixing coefficients (a, b, c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct B3lypCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for B3lypCoefficients {
    fn default() -> Self {
        B3lypCoefficients {
            a: 0.20,
            b: 0.72,
            c: 0.81,
        }
    }
}

/// Mixes precomputed components with the B3LYP recipe.
pub fn b3lyp_from_components(k: &XcComponents, coeffs: &B3lypCoefficients) -> f64 {
    k.x_lda
        + k.c_lda
        + coeffs.a * (k.x_hf - k.x_lda)
        + coeffs.b * (k.x_gga - k.x_lda)
        + coeffs.c * (k.c_gga - k.c_lda)
}

pub fn b3lyp_density(
    features: &PointFeatures,
    coeffs: &B3lypCoefficients,
    vwn: VwnVariant,
) -> Result<f64> {
    Ok(b3lyp_from_components(&XcComponents::evaluate(features, vwn)?, coeffs))
}

/// `a1 * e_lda + a2 * e_hf(omega2) + a3 * e_hf(omega1)`, where `e_lda` is the
/// full LDA exchange-correlation density.
pub fn dm21_form_density(
    features: &PointFeatures,
    factors: [f64; 3],
    vwn: VwnVariant,
) -> Result<f64> {
    if let Some(i) = factors.iter().position(|v| !v.is_finite()) {
        return Err(XcError::InvalidConfig(format!(
            "DM21 enhancement factor a{} is not finite",
            i + 1
        )));
    }
    let [a1, a2, a3] = factors;
    Ok(a1 * lda_xc_density(features, vwn)?
        + a2 * hf_exchange_density(features, HfChannel::Omega2)
        + a3 * hf_exchange_density(features, HfChannel::Omega1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConventionalKind {
    #[serde(rename = "B3LYP")]
    B3lyp,
    #[serde(rename = "DM21_FORM")]
    Dm21Form,
    #[serde(rename = "LDA_ONLY")]
    LdaOnly,
}

/// Where DM21-form enhancement factors come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dm21Factors {
    Constant([f64; 3]),
    /// Read from the grid's per-point enhancement column.
    PerPoint,
}

/// Choice of conventional functional e_xc° and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConventionalSpec {
    pub kind: ConventionalKind,
    #[serde(default)]
    pub b3lyp_coeffs: B3lypCoefficients,
    #[serde(default = "default_dm21")]
    pub dm21_factors: Dm21Factors,
    #[serde(default)]
    pub vwn: VwnVariant,
}

fn default_dm21() -> Dm21Factors {
    Dm21Factors::Constant([1.0, 0.0, 0.0])
}

impl Default for ConventionalSpec {
    fn default() -> Self {
        ConventionalSpec {
            kind: ConventionalKind::B3lyp,
            b3lyp_coeffs: B3lypCoefficients::default(),
            dm21_factors: default_dm21(),
            vwn: VwnVariant::default(),
        }
    }
}

impl ConventionalSpec {
    pub fn b3lyp() -> Self {
        Self::default()
    }

    /// Conventional density at one point. `point_factors` is consulted only
    /// for per-point DM21 factors.
    pub fn evaluate(&self, features: &PointFeatures, point_factors: Option<[f64; 3]>) -> Result<f64> {
        match self.kind {
            ConventionalKind::B3lyp => b3lyp_density(features, &self.b3lyp_coeffs, self.vwn),
            ConventionalKind::LdaOnly => lda_xc_density(features, self.vwn),
            ConventionalKind::Dm21Form => {
                let factors = match self.dm21_factors {
                    Dm21Factors::Constant(f) => f,
                    Dm21Factors::PerPoint => point_factors.ok_or_else(|| {
                        XcError::InvalidData(
                            "per-point DM21 factors requested but the grid carries none".into(),
                        )
                    })?,
                };
                dm21_form_density(features, factors, self.vwn)
            }
        }
    }
}

/// LDA and conventional densities at every point of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFields {
    pub e_lda: Vec<f64>,
    pub e_conv: Vec<f64>,
}

pub fn evaluate_grid(grid: &MolecularGrid, spec: &ConventionalSpec) -> Result<GridFields> {
    let n = grid.points.len();
    let mut e_lda = Vec::with_capacity(n);
    let mut e_conv = Vec::with_capacity(n);
    for (i, p) in grid.points.iter().enumerate() {
        let factors = grid.enhancement.as_ref().and_then(|f| f.get(i).copied());
        e_lda.push(lda_xc_density(&p.features, spec.vwn)?);
        e_conv.push(spec.evaluate(&p.features, factors)?);
    }
    Ok(GridFields { e_lda, e_conv })
}
