//! Browser demo: the clamp, the conventional functional along a line through
//! a Gaussian density, and the synthetic residual on a plane.
//!
//! Every export returns a flat `Float64Array`; row layouts are documented on
//! the native functions in [`demo`].

use wasm_bindgen::prelude::*;

pub mod demo;

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = clampCurve)]
pub fn clamp_curve(e_conv: f64, s0: f64, k1: f64, k2: f64, e0_span: f64, n: usize) -> Result<Vec<f64>, JsError> {
    js(demo::clamp_curve(e_conv, s0, k1, k2, e0_span, n))
}

#[wasm_bindgen(js_name = functionalProfile)]
pub fn functional_profile(exponent: f64, n_up: f64, n_down: f64, extent: f64, n: usize) -> Result<Vec<f64>, JsError> {
    js(demo::functional_profile(exponent, n_up, n_down, extent, n))
}

#[wasm_bindgen(js_name = residualSlice)]
pub fn residual_slice(separation: f64, exponent_a: f64, exponent_b: f64, extent: f64, n: usize) -> Result<Vec<f64>, JsError> {
    js(demo::residual_slice(separation, exponent_a, exponent_b, extent, n))
}
