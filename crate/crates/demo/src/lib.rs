//! WebAssembly front end for the browser page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string; the Rust
//! functions behind them are public so they can be tested natively.

use cvqkd::analysis::{
    loss_grid, optimize_chi_d, sweep_curves, CurvePoint, Modulation, NoiseSpec, Scheme, SweepKind, SweepSpec,
};
use cvqkd::error::{Error, Result};
use cvqkd::protocol::{keyrate, ChannelModel, Preset, ProtocolConfig};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Upper bound on grid points per request, to keep the page responsive.
pub const MAX_POINTS: usize = 2001;

const CHI_D_PROFILE_POINTS: usize = 200;

fn schemes(v: f64) -> Result<(Vec<&'static str>, Vec<Scheme>)> {
    let mut names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
    let mut schemes =
        Preset::ALL.iter().map(|p| Ok(Scheme::Config(p.config(v)?))).collect::<Result<Vec<_>>>()?;
    names.push("optimal");
    schemes.push(Scheme::OptimalChiD { v });
    Ok((names, schemes))
}

fn grid(loss_max: f64, step: f64) -> Result<Vec<f64>> {
    let losses = loss_grid(0.0, loss_max, step)?;
    if losses.len() > MAX_POINTS {
        return Err(Error::Domain(format!("{} grid points, at most {MAX_POINTS}", losses.len())));
    }
    Ok(losses)
}

fn curves_json(names: &[&str], pts: &[CurvePoint]) -> Value {
    let series: serde_json::Map<String, Value> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.to_string(), json!(pts.iter().map(|p| p.values[i]).collect::<Vec<_>>())))
        .collect();
    json!({
        "loss_db": pts.iter().map(|p| p.loss_db).collect::<Vec<_>>(),
        "series": series,
        "chi_d_opt": pts.iter().map(|p| p.chi_d_opt).collect::<Vec<_>>(),
        "at_cap": pts.iter().map(|p| p.chi_d_at_cap).collect::<Vec<_>>(),
        "errors": pts.iter().flat_map(|p| p.errors.clone()).collect::<Vec<_>>(),
    })
}

/// Key rate against loss for every preset and for the optimal χ_D.
pub fn key_rate_curves_value(v: f64, epsilon: f64, loss_max: f64, step: f64) -> Result<Value> {
    // Sweeps record per-point failures; reject bad noise once instead.
    ChannelModel::from_excess_noise(1.0, epsilon)?;
    let (names, schemes) = schemes(v)?;
    let pts = sweep_curves(&SweepSpec {
        losses_db: grid(loss_max, step)?,
        kind: SweepKind::KeyRate(NoiseSpec::Epsilon(epsilon)),
        modulation: Modulation::Fixed(v),
        schemes,
    })?;
    Ok(curves_json(&names, &pts))
}

/// Tolerable excess noise against loss. `v = None` takes the V→∞ limit.
pub fn tolerance_curves_value(v: Option<f64>, loss_max: f64, step: f64) -> Result<Value> {
    let (names, schemes) = schemes(v.unwrap_or(40.0))?;
    let pts = sweep_curves(&SweepSpec {
        losses_db: grid(loss_max, step)?,
        kind: SweepKind::Tolerance,
        modulation: v.map_or(Modulation::Large, Modulation::Fixed),
        schemes,
    })?;
    Ok(curves_json(&names, &pts))
}

/// `K(χ_D)` at one channel for squeezed states with homodyne detection,
/// together with its maximum.
pub fn chi_d_profile_value(v: f64, epsilon: f64, loss_db: f64, chi_d_max: f64) -> Result<Value> {
    let channel = ChannelModel::from_loss_db(loss_db, epsilon)?;
    let chi_d: Vec<f64> =
        (0..=CHI_D_PROFILE_POINTS).map(|i| chi_d_max * i as f64 / CHI_D_PROFILE_POINTS as f64).collect();
    let k = chi_d
        .iter()
        .map(|&c| Ok(keyrate(&ProtocolConfig::squeezed_general(v, c)?, &channel)?.k))
        .collect::<Result<Vec<_>>>()?;
    let opt = optimize_chi_d(v, &channel)?;
    Ok(json!({
        "chi_d": chi_d,
        "k": k,
        "optimum": { "chi_d": opt.chi_d, "k": opt.k, "at_cap": opt.at_cap },
        "t": channel.transmittivity(),
        "chi_c": channel.chi_c(),
    }))
}

fn to_js(r: Result<Value>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = keyRateCurves)]
pub fn key_rate_curves(v: f64, epsilon: f64, loss_max: f64, step: f64) -> Result<String, JsError> {
    to_js(key_rate_curves_value(v, epsilon, loss_max, step))
}

/// A non-positive or non-finite `v` selects the V→∞ limit.
#[wasm_bindgen(js_name = toleranceCurves)]
pub fn tolerance_curves(v: f64, loss_max: f64, step: f64) -> Result<String, JsError> {
    let v = (v.is_finite() && v > 0.0).then_some(v);
    to_js(tolerance_curves_value(v, loss_max, step))
}

#[wasm_bindgen(js_name = chiDProfile)]
pub fn chi_d_profile(v: f64, epsilon: f64, loss_db: f64, chi_d_max: f64) -> Result<String, JsError> {
    to_js(chi_d_profile_value(v, epsilon, loss_db, chi_d_max))
}
