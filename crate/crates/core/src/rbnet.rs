//! The residual Bayesian network: a shared perceptron trunk with a mean head
//! and a log-variance head, plus the clamp that turns the raw head outputs
//! into a bounded residual energy density and log-variance.
//!
//! All passes are batched over grid points: a batch is an `n x input_width`
//! matrix and each head yields one value per row.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, XcError};

pub const INIT_SCHEME: &str = "lecun_normal";

/// Nonlinearity applied after every layer except each head's output layer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// x * sigmoid(x)
    #[default]
    Silu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Silu => x / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative at pre-activation `x`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Silu => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 + x * (1.0 - s))
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }

    /// Value and derivative with a single exponential.
    #[inline]
    pub fn apply_with_derivative(self, x: f64) -> (f64, f64) {
        match self {
            Activation::Silu => {
                let s = 1.0 / (1.0 + (-x).exp());
                (x * s, s * (1.0 + x * (1.0 - s)))
            }
            Activation::Tanh => {
                let t = x.tanh();
                (t, 1.0 - t * t)
            }
        }
    }

    /// Upper bound on |derivative|, used for Lipschitz estimates.
    pub fn lipschitz(self) -> f64 {
        match self {
            Activation::Silu => 1.0999,
            Activation::Tanh => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Silu => "silu",
            Activation::Tanh => "tanh",
        }
    }
}

/// Affine layer `z = W a + b` with `W` stored as (out, in).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weight: Array2::zeros((fan_out, fan_in)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.nrows()
    }

    fn forward(&self, a: ArrayView2<f64>) -> Array2<f64> {
        let mut z = a.dot(&self.weight.t());
        z += &self.bias;
        z
    }
}

/// Layer widths. The default network is 16-128-256-256-256-128 with two
/// 128-50-1 heads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_width: usize,
    pub trunk_widths: Vec<usize>,
    pub head_hidden: usize,
}

impl Architecture {
    pub fn standard(input_width: usize) -> Self {
        Architecture {
            input_width,
            trunk_widths: vec![128, 256, 256, 256, 128],
            head_hidden: 50,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.input_width == 0
            || self.trunk_widths.is_empty()
            || self.trunk_widths.contains(&0)
            || self.head_hidden == 0
        {
            return Err(XcError::InvalidConfig(format!(
                "degenerate network architecture {self:?}"
            )));
        }
        Ok(())
    }

    fn trunk_shapes(&self) -> Vec<(usize, usize)> {
        let mut fan_in = self.input_width;
        self.trunk_widths
            .iter()
            .map(|&w| {
                let s = (fan_in, w);
                fan_in = w;
                s
            })
            .collect()
    }

    fn head_shapes(&self) -> [(usize, usize); 2] {
        let top = *self.trunk_widths.last().expect("checked non-empty");
        [(top, self.head_hidden), (self.head_hidden, 1)]
    }
}

/// Weights of the trunk and both heads. The same type holds gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Layers {
    pub trunk: Vec<Dense>,
    pub head_mean: Vec<Dense>,
    pub head_var: Vec<Dense>,
}

impl Layers {
    pub fn zeros(arch: &Architecture) -> Self {
        let make = |shapes: &[(usize, usize)]| -> Vec<Dense> {
            shapes.iter().map(|&(i, o)| Dense::zeros(i, o)).collect()
        };
        Layers {
            trunk: make(&arch.trunk_shapes()),
            head_mean: make(&arch.head_shapes()),
            head_var: make(&arch.head_shapes()),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |ls: &[Dense]| -> Vec<Dense> {
            ls.iter().map(|d| Dense::zeros(d.fan_in(), d.fan_out())).collect()
        };
        Layers {
            trunk: z(&self.trunk),
            head_mean: z(&self.head_mean),
            head_var: z(&self.head_var),
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_width: self.trunk[0].fan_in(),
            trunk_widths: self.trunk.iter().map(Dense::fan_out).collect(),
            head_hidden: self.head_mean[0].fan_out(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (String, &Dense)> {
        let tag = |name: &'static str, ls: &'static str| move |(i, d)| (format!("{name}.{i}{ls}"), d);
        self.trunk
            .iter()
            .enumerate()
            .map(tag("trunk", ""))
            .chain(self.head_mean.iter().enumerate().map(tag("head_mean", "")))
            .chain(self.head_var.iter().enumerate().map(tag("head_var", "")))
    }

    fn iter_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.trunk
            .iter_mut()
            .chain(self.head_mean.iter_mut())
            .chain(self.head_var.iter_mut())
    }

    pub fn num_params(&self) -> usize {
        self.iter().map(|(_, d)| d.weight.len() + d.bias.len()).sum()
    }

    /// All parameters in a fixed order: per layer, weights row-major, then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (_, d) in self.iter() {
            out.extend(d.weight.iter().copied());
            out.extend(d.bias.iter().copied());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(XcError::LengthMismatch {
                context: "Layers::set_flat",
                expected: self.num_params(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for d in self.iter_mut() {
            d.weight.iter_mut().for_each(|w| *w = it.next().unwrap());
            d.bias.iter_mut().for_each(|b| *b = it.next().unwrap());
        }
        Ok(())
    }

    /// `self += alpha * other`, layer by layer.
    pub fn axpy(&mut self, alpha: f64, other: &Layers) {
        for (d, o) in self.iter_mut().zip(other.iter().map(|(_, d)| d)) {
            d.weight.scaled_add(alpha, &o.weight);
            d.bias.scaled_add(alpha, &o.bias);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for d in self.iter_mut() {
            d.weight *= alpha;
            d.bias *= alpha;
        }
    }

    pub fn fill_zero(&mut self) {
        for d in self.iter_mut() {
            d.weight.fill(0.0);
            d.bias.fill(0.0);
        }
    }

    pub fn norm(&self) -> f64 {
        self.iter()
            .map(|(_, d)| {
                d.weight.iter().map(|w| w * w).sum::<f64>() + d.bias.iter().map(|b| b * b).sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.iter()
            .all(|(_, d)| d.weight.iter().all(|v| v.is_finite()) && d.bias.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Layers,
    pub activation: Activation,
    pub seed: u64,
    pub init_scheme: String,
}

/// Fan-in scaled normal initialization, weights ~ N(0, 1/fan_in), zero biases.
pub fn init_params(seed: u64, arch: &Architecture, activation: Activation) -> Result<NetworkParams> {
    arch.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Layers::zeros(arch);
    for d in layers.iter_mut() {
        let normal = Normal::new(0.0, 1.0 / (d.fan_in() as f64).sqrt())
            .map_err(|e| XcError::InvalidConfig(e.to_string()))?;
        d.weight.iter_mut().for_each(|w| *w = normal.sample(&mut rng));
    }
    Ok(NetworkParams {
        layers,
        activation,
        seed,
        init_scheme: INIT_SCHEME.to_owned(),
    })
}

impl NetworkParams {
    pub fn zeroed(arch: &Architecture, activation: Activation) -> Result<Self> {
        arch.check()?;
        Ok(NetworkParams {
            layers: Layers::zeros(arch),
            activation,
            seed: 0,
            init_scheme: "zeros".to_owned(),
        })
    }

    pub fn input_width(&self) -> usize {
        self.layers.trunk[0].fan_in()
    }

    pub fn architecture(&self) -> Architecture {
        self.layers.architecture()
    }
}

/// Post-activations and activation derivatives of one hidden layer.
#[derive(Debug, Clone)]
struct Hidden {
    a: Array2<f64>,
    d: Array2<f64>,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Array2<f64>,
    trunk: Vec<Hidden>,
    head_mean: Vec<Hidden>,
    head_var: Vec<Hidden>,
}

/// Raw head outputs for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutputs {
    pub e0: Array1<f64>,
    pub s0: Array1<f64>,
}

fn check_finite(z: &Array2<f64>, layer: impl FnOnce() -> String) -> Result<()> {
    if z.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(XcError::NonFiniteActivation { layer: layer() })
    }
}

/// Applies the activation in place; returns the derivatives when asked.
fn activate(act: Activation, z: &mut Array2<f64>, with_derivative: bool) -> Option<Array2<f64>> {
    if !with_derivative {
        z.mapv_inplace(|v| act.apply(v));
        return None;
    }
    let mut d = Array2::zeros(z.raw_dim());
    ndarray::Zip::from(&mut *z).and(&mut d).for_each(|z, d| {
        let (a, g) = act.apply_with_derivative(*z);
        *z = a;
        *d = g;
    });
    Some(d)
}

/// Runs a stack of layers whose last layer is linear when `linear_last`.
fn run_stack(
    layers: &[Dense],
    act: Activation,
    input: ArrayView2<f64>,
    name: &str,
    linear_last: bool,
    mut keep: Option<&mut Vec<Hidden>>,
) -> Result<Array2<f64>> {
    let mut a: Option<Array2<f64>> = None;
    for (i, d) in layers.iter().enumerate() {
        let mut z = d.forward(a.as_ref().map_or(input, |a| a.view()));
        check_finite(&z, || format!("{name}.{i}"))?;
        if linear_last && i + 1 == layers.len() {
            return Ok(z);
        }
        let deriv = activate(act, &mut z, keep.is_some());
        if let (Some(keep), Some(deriv)) = (keep.as_deref_mut(), deriv) {
            keep.push(Hidden { a: z.clone(), d: deriv });
        }
        a = Some(z);
    }
    Ok(a.expect("stacks are non-empty"))
}

fn forward_impl(
    params: &NetworkParams,
    inputs: ArrayView2<f64>,
    cache: Option<&mut ForwardCache>,
) -> Result<HeadOutputs> {
    if inputs.ncols() != params.input_width() {
        return Err(XcError::LengthMismatch {
            context: "network input width",
            expected: params.input_width(),
            got: inputs.ncols(),
        });
    }
    if let Some(row) = inputs.rows().into_iter().position(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(XcError::NonFinite(format!("network input row {row}")));
    }
    let act = params.activation;
    let layers = &params.layers;
    let (mut trunk, mut mean, mut var) = (Vec::new(), Vec::new(), Vec::new());
    let keep = cache.is_some();
    let top = run_stack(&layers.trunk, act, inputs, "trunk", false, keep.then_some(&mut trunk))?;
    let e0 = run_stack(&layers.head_mean, act, top.view(), "head_mean", true, keep.then_some(&mut mean))?;
    let s0 = run_stack(&layers.head_var, act, top.view(), "head_var", true, keep.then_some(&mut var))?;
    if let Some(c) = cache {
        c.inputs = inputs.to_owned();
        c.trunk = trunk;
        c.head_mean = mean;
        c.head_var = var;
    }
    Ok(HeadOutputs {
        e0: e0.column(0).to_owned(),
        s0: s0.column(0).to_owned(),
    })
}

/// Batched forward pass without caching.
pub fn forward_batch(params: &NetworkParams, inputs: ArrayView2<f64>) -> Result<HeadOutputs> {
    forward_impl(params, inputs, None)
}

/// Batched forward pass that keeps what the backward pass needs.
pub fn forward_batch_cached(
    params: &NetworkParams,
    inputs: ArrayView2<f64>,
) -> Result<(HeadOutputs, ForwardCache)> {
    let mut cache = ForwardCache {
        inputs: Array2::zeros((0, 0)),
        trunk: Vec::new(),
        head_mean: Vec::new(),
        head_var: Vec::new(),
    };
    let out = forward_impl(params, inputs, Some(&mut cache))?;
    Ok((out, cache))
}

/// Raw (e0, s0) for a single input vector.
pub fn forward(params: &NetworkParams, y: &[f64]) -> Result<(f64, f64)> {
    let view = ArrayView2::from_shape((1, y.len()), y).map_err(|e| XcError::InvalidData(e.to_string()))?;
    let out = forward_batch(params, view)?;
    Ok((out.e0[0], out.s0[0]))
}

/// Non-residual mode: the same two-head network read directly as
/// (mean energy density, log-variance) with no clamp.
pub fn direct_forward(params: &NetworkParams, x: &[f64]) -> Result<(f64, f64)> {
    forward(params, x)
}

/// Backpropagates `dz` (gradient at the output of the last layer, before any
/// activation) through a stack. Returns the gradient at the stack input.
fn backward_stack(
    layers: &[Dense],
    hidden: &[Hidden],
    input: &Array2<f64>,
    mut dz: Array2<f64>,
    grads: &mut [Dense],
    need_input_grad: bool,
) -> Option<Array2<f64>> {
    for i in (0..layers.len()).rev() {
        let a_prev = if i == 0 { input } else { &hidden[i - 1].a };
        general_mat_mul(1.0, &dz.t(), a_prev, 1.0, &mut grads[i].weight);
        grads[i].bias += &dz.sum_axis(Axis(0));
        if i == 0 && !need_input_grad {
            return None;
        }
        let mut da = dz.dot(&layers[i].weight);
        if i == 0 {
            return Some(da);
        }
        da *= &hidden[i - 1].d;
        dz = da;
    }
    unreachable!("stacks are non-empty")
}

/// Accumulates parameter gradients of `sum_i de0[i] * e0[i] + ds0[i] * s0[i]`
/// into `grads`. Pass `None` to leave a head (and its trunk contribution) out.
pub fn backward_batch(
    params: &NetworkParams,
    cache: &ForwardCache,
    de0: Option<ArrayView1<f64>>,
    ds0: Option<ArrayView1<f64>>,
    grads: &mut Layers,
) -> Result<()> {
    let n = cache.inputs.nrows();
    for (context, g) in [("backward de0", &de0), ("backward ds0", &ds0)] {
        if let Some(g) = g {
            if g.len() != n {
                return Err(XcError::LengthMismatch {
                    context,
                    expected: n,
                    got: g.len(),
                });
            }
        }
    }
    let layers = &params.layers;
    let t = layers.trunk.len();
    let top = &cache.trunk[t - 1];
    let column = |g: ArrayView1<f64>| g.to_owned().into_shape_with_order((n, 1)).expect("column");
    let mut da_top: Option<Array2<f64>> = None;
    for (g, head, hidden, hg) in [
        (de0, &layers.head_mean, &cache.head_mean, &mut grads.head_mean),
        (ds0, &layers.head_var, &cache.head_var, &mut grads.head_var),
    ] {
        if let Some(g) = g {
            let da = backward_stack(head, hidden, &top.a, column(g), hg, true).expect("input grad");
            da_top = Some(match da_top {
                Some(acc) => acc + da,
                None => da,
            });
        }
    }
    let Some(mut dz) = da_top else { return Ok(()) };
    dz *= &top.d;
    backward_stack(&layers.trunk, &cache.trunk, &cache.inputs, dz, &mut grads.trunk, false);
    Ok(())
}

/// Scaling factors and floor of the residual clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClampConfig {
    pub k1: f64,
    pub k2: f64,
    pub epsilon: f64,
}

impl Default for ClampConfig {
    fn default() -> Self {
        ClampConfig {
            k1: 1.0,
            k2: 1.0,
            epsilon: 1e-4,
        }
    }
}

impl ClampConfig {
    /// Accepts `0 <= k1, k2 <= 2` (the endpoints are used by parameter sweeps
    /// and to switch the residual off) and `epsilon > 0`.
    pub fn check(&self) -> Result<()> {
        let in_range = |k: f64| (0.0..=2.0).contains(&k);
        if !in_range(self.k1) || !in_range(self.k2) {
            return Err(XcError::InvalidConfig(format!(
                "clamp factors must lie in [0, 2], got k1 = {}, k2 = {}",
                self.k1, self.k2
            )));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(XcError::InvalidConfig(format!(
                "clamp epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Log-variance ceiling `log(k2^2 e_bar^2 + epsilon)` for a given residual.
    #[inline]
    pub fn ceiling(&self, e_bar: f64) -> f64 {
        (self.k2 * self.k2 * e_bar * e_bar + self.epsilon).ln()
    }
}

/// Clamped residual energy density and log-variance at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualOutput {
    pub e_bar: f64,
    pub s_bar: f64,
}

/// Local derivatives of the clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampJacobian {
    /// d e_bar / d e0
    pub de_de0: f64,
    /// d s_bar / d s0 (1 on the network branch, 0 on the ceiling branch)
    pub ds_ds0: f64,
    /// d s_bar / d e_bar (non-zero only on the ceiling branch)
    pub ds_de: f64,
}

/// `e_bar = k1 tanh(e0) e_conv`, `s_bar = min(s0, log(k2^2 e_bar^2 + epsilon))`,
/// with both `s` quantities in log-variance space.
#[inline]
pub fn clamp_residual(e0: f64, s0: f64, e_conv: f64, cfg: &ClampConfig) -> ResidualOutput {
    let e_bar = cfg.k1 * e0.tanh() * e_conv;
    let ceiling = cfg.ceiling(e_bar);
    let s_bar = if s0.is_nan() || s0 <= ceiling { s0 } else { ceiling };
    ResidualOutput { e_bar, s_bar }
}

pub fn clamp_jacobian(e0: f64, s0: f64, e_conv: f64, cfg: &ClampConfig) -> ClampJacobian {
    let t = e0.tanh();
    let e_bar = cfg.k1 * t * e_conv;
    let de_de0 = cfg.k1 * (1.0 - t * t) * e_conv;
    if s0 <= cfg.ceiling(e_bar) {
        ClampJacobian { de_de0, ds_ds0: 1.0, ds_de: 0.0 }
    } else {
        let k2sq = cfg.k2 * cfg.k2;
        ClampJacobian {
            de_de0,
            ds_ds0: 0.0,
            ds_de: 2.0 * k2sq * e_bar / (k2sq * e_bar * e_bar + cfg.epsilon),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny() -> Architecture {
        Architecture {
            input_width: 16,
            trunk_widths: vec![8, 4],
            head_hidden: 3,
        }
    }

    #[test]
    fn standard_shapes() {
        let p = init_params(1, &Architecture::standard(16), Activation::Silu).unwrap();
        let shapes: Vec<(usize, usize)> = p.layers.iter().map(|(_, d)| (d.fan_in(), d.fan_out())).collect();
        assert_eq!(
            shapes,
            vec![
                (16, 128),
                (128, 256),
                (256, 256),
                (256, 256),
                (256, 128),
                (128, 50),
                (50, 1),
                (128, 50),
                (50, 1)
            ]
        );
        let direct = init_params(1, &Architecture::standard(11), Activation::Silu).unwrap();
        assert_eq!(direct.input_width(), 11);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = NetworkParams::zeroed(&Architecture::standard(16), Activation::Silu).unwrap();
        let (e0, s0) = forward(&p, &[0.3; 16]).unwrap();
        assert_eq!((e0, s0), (0.0, 0.0));
        let p11 = NetworkParams::zeroed(&Architecture::standard(11), Activation::Tanh).unwrap();
        assert_eq!(direct_forward(&p11, &[1.5; 11]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let a = init_params(42, &tiny(), Activation::Silu).unwrap();
        let b = init_params(42, &tiny(), Activation::Silu).unwrap();
        let c = init_params(43, &tiny(), Activation::Silu).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.layers.to_flat(), c.layers.to_flat());
        assert_eq!(a.init_scheme, INIT_SCHEME);
    }

    #[test]
    fn forward_rejects_bad_width_and_values() {
        let p = init_params(1, &tiny(), Activation::Silu).unwrap();
        assert!(forward(&p, &[0.0; 11]).is_err());
        let mut bad = [0.0; 16];
        bad[3] = f64::NAN;
        assert!(forward(&p, &bad).is_err());
    }

    #[test]
    fn overflowing_weights_name_the_layer() {
        let mut p = init_params(1, &tiny(), Activation::Silu).unwrap();
        p.layers.trunk[1].weight.fill(f64::MAX);
        match forward(&p, &[1.0; 16]) {
            Err(XcError::NonFiniteActivation { layer }) => assert_eq!(layer, "trunk.1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flat_round_trip_and_axpy() {
        let mut p = init_params(3, &tiny(), Activation::Tanh).unwrap();
        let flat = p.layers.to_flat();
        assert_eq!(flat.len(), p.layers.num_params());
        let mut q = p.layers.zeros_like();
        q.set_flat(&flat).unwrap();
        assert_eq!(q, p.layers);
        p.layers.axpy(-1.0, &q);
        assert_eq!(p.layers.norm(), 0.0);
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let p = init_params(5, &tiny(), Activation::Silu).unwrap();
        let x = Array2::from_shape_fn((7, 16), |(i, j)| ((i * 16 + j) as f64 * 0.37).sin());
        let (_, cache) = forward_batch_cached(&p, x.view()).unwrap();
        let mut g = p.layers.zeros_like();
        let zero = Array1::zeros(7);
        backward_batch(&p, &cache, Some(zero.view()), Some(zero.view()), &mut g).unwrap();
        assert_eq!(g.norm(), 0.0);
        let short = Array1::zeros(6);
        assert!(backward_batch(&p, &cache, Some(short.view()), None, &mut g).is_err());
    }

    #[test]
    fn clamp_examples() {
        let cfg = ClampConfig::default();
        let out = clamp_residual(0.0, 3.0, -1.7, &cfg);
        assert_eq!(out.e_bar, 0.0);
        assert!((out.s_bar - -9.210340371976182).abs() < 1e-12);
        assert_eq!(clamp_residual(0.0, -20.0, -1.7, &cfg).s_bar, -20.0);

        let sat = clamp_residual(20.0, 0.0, -2.0, &cfg);
        assert!((sat.e_bar - -2.0).abs() < 1e-8);

        let one = clamp_residual(1.0, 0.0, -1.0, &cfg);
        assert!((one.e_bar - -0.7615941559557649).abs() < 1e-12);
    }

    #[test]
    fn clamp_derivative_at_origin() {
        let cfg = ClampConfig { k1: 0.7, ..Default::default() };
        let j = clamp_jacobian(0.0, -50.0, -1.3, &cfg);
        assert_eq!(j.de_de0, 0.7 * -1.3);
        assert_eq!((j.ds_ds0, j.ds_de), (1.0, 0.0));
        let j = clamp_jacobian(0.4, 5.0, -1.3, &cfg);
        assert_eq!(j.ds_ds0, 0.0);
        assert!(j.ds_de != 0.0);
    }

    #[test]
    fn clamp_config_validation() {
        assert!(ClampConfig::default().check().is_ok());
        assert!(ClampConfig { k1: 2.5, ..Default::default() }.check().is_err());
        assert!(ClampConfig { epsilon: 0.0, ..Default::default() }.check().is_err());
        assert!(ClampConfig { k1: 0.0, ..Default::default() }.check().is_ok());
    }

    #[test]
    fn batched_and_single_forward_agree() {
        let p = init_params(9, &tiny(), Activation::Silu).unwrap();
        let x = array![[0.1; 16], [0.5; 16], [-0.3; 16]];
        let out = forward_batch(&p, x.view()).unwrap();
        for i in 0..3 {
            let (e0, s0) = forward(&p, x.row(i).as_slice().unwrap()).unwrap();
            assert!((e0 - out.e0[i]).abs() < 1e-14);
            assert!((s0 - out.s0[i]).abs() < 1e-14);
        }
    }
}
