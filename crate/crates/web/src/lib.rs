//! wasm-bindgen exports for the static demo page in `www/`. Every function
//! returns a JSON string; errors become JavaScript exceptions.

use isp_core::forward::{spectral_data, weyl_matrix};
use isp_core::harness::{coefficient_errors, data_discrepancy, invert, PerturbationSpec, Preset, Tolerances};
use isp_core::quasidiff::CoefficientSet;
use isp_core::{Complex64, Error};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn js_err(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

fn model(order: usize, preset: &str, grid_size: usize) -> Result<CoefficientSet, Error> {
    preset.parse::<Preset>()?.build(order, grid_size)
}

fn pair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Eigenvalues and weight numbers: `[{l, k, lambda: [re, im], beta: [re, im]}]`.
pub fn spectrum_json(order: usize, preset: &str, grid_size: usize, count: usize) -> Result<String, Error> {
    let data = spectral_data(&model(order, preset, grid_size)?, count)?;
    let rows: Vec<Value> = data
        .data()
        .iter()
        .map(|d| json!({"l": d.l, "k": d.k, "lambda": pair(d.lambda), "beta": pair(d.beta)}))
        .collect();
    Ok(Value::Array(rows).to_string())
}

/// `M_{row,col}(t + i·offset)` on `samples` points of `[t0, t1]`. Poles come
/// back as nulls.
#[allow(clippy::too_many_arguments)]
pub fn weyl_curve_json(
    order: usize,
    preset: &str,
    grid_size: usize,
    row: usize,
    col: usize,
    t0: f64,
    t1: f64,
    offset: f64,
    samples: usize,
) -> Result<String, Error> {
    if !(col >= 1 && col < row && row <= order) {
        return Err(Error::InvalidInput(format!(
            "entry ({row}, {col}) is not strictly below the diagonal of a {order}x{order} matrix"
        )));
    }
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let c = model(order, preset, grid_size)?;
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = t0 + (t1 - t0) * i as f64 / (samples - 1) as f64;
        let value = match weyl_matrix(&c, Complex64::new(t, offset)) {
            Ok(m) => pair(m.entries[(row - 1, col - 1)]),
            Err(Error::Pole { .. }) => Value::Null,
            Err(e) => return Err(e),
        };
        points.push(json!({"t": t, "m": value}));
    }
    Ok(Value::Array(points).to_string())
}

/// Perturbs the first `levels` eigenvalues of every problem, inverts, and
/// recomputes the spectrum of the result.
pub fn roundtrip_json(
    order: usize,
    preset: &str,
    grid_size: usize,
    count: usize,
    levels: usize,
    magnitude: f64,
    seed: u64,
) -> Result<String, Error> {
    let c = model(order, preset, grid_size)?;
    let model_data = spectral_data(&c, count)?;
    let spec = PerturbationSpec {
        levels: (1..=levels).collect(),
        magnitude,
        ..PerturbationSpec::default()
    };
    let data = spec.apply(&model_data, seed)?;
    let inv = invert(&c, &data, &model_data, &Tolerances::default())?;
    let again = spectral_data(&inv.coefficients, count)?;
    let (rel_lambda, rel_beta) = data_discrepancy(&again, &data)?;
    let m = grid_size;
    let stride = (m / 200).max(1);
    let nodes: Vec<usize> = (0..=m).step_by(stride).collect();
    let sample = |f: &isp_core::funcspace::GridFunction| -> Vec<f64> { nodes.iter().map(|&i| f.values()[i].re).collect() };
    let mut coefficients = vec![json!({
        "name": "sigma",
        "model": sample(c.sigma()),
        "recovered": sample(inv.coefficients.sigma()),
    })];
    for k in 1..order - 1 {
        coefficients.push(json!({
            "name": format!("p{k}"),
            "model": sample(c.p(k)),
            "recovered": sample(inv.coefficients.p(k)),
        }));
    }
    Ok(json!({
        "omega": inv.omega,
        "sv_min": inv.solve.sv_min,
        "max_rel_lambda": rel_lambda,
        "max_rel_beta": rel_beta,
        "errors": coefficient_errors(&inv.coefficients, &c)?,
        "x": nodes.iter().map(|&i| i as f64 / m as f64).collect::<Vec<_>>(),
        "coefficients": coefficients,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn spectrum(order: usize, preset: &str, grid_size: usize, count: usize) -> Result<String, JsError> {
    spectrum_json(order, preset, grid_size, count).map_err(js_err)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn weyl_curve(
    order: usize,
    preset: &str,
    grid_size: usize,
    row: usize,
    col: usize,
    t0: f64,
    t1: f64,
    offset: f64,
    samples: usize,
) -> Result<String, JsError> {
    weyl_curve_json(order, preset, grid_size, row, col, t0, t1, offset, samples).map_err(js_err)
}

#[wasm_bindgen]
pub fn roundtrip(
    order: usize,
    preset: &str,
    grid_size: usize,
    count: usize,
    levels: usize,
    magnitude: f64,
    seed: u32,
) -> Result<String, JsError> {
    roundtrip_json(order, preset, grid_size, count, levels, magnitude, seed as u64).map_err(js_err)
}
