//! Browser bindings: a closed-form SINR curve with a Monte Carlo spot
//! check, the Doppler correlation profile, and the CDS efficiency grid.
//!
//! The plain functions return `Result<_, String>` so they can be tested
//! natively; the `wasm_bindgen` wrappers only convert the error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use ncris::analysis::{coherence_symbols, efficiency_factor, sinr_ncds, sinr_ncds_high_power};
use ncris::channel::{doppler_correlation, ArrayGeometry, LinkBudget, MobilityModel, OfdmNumerology, TemporalColoring};
use ncris::engine::{run_sinr_ncds, ChannelModel, ScenarioConfig};
use ncris::exec::Executor;
use ncris::rng::StreamFactory;
use ncris::Complex64;
use wasm_bindgen::prelude::*;

const CARRIER_HZ: f64 = 3.5e9;
/// Upper bounds that keep a Monte Carlo click under a second or so.
const MAX_MC_ANTENNAS: usize = 16;
const MAX_MC_ELEMENTS: usize = 256;

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn factory_budget(px_dbw: f64) -> Result<LinkBudget, String> {
    LinkBudget::from_db(-48.0, -59.0, -94.0, px_dbw).map_err(text)
}

/// Closed-form SINR in dB at `points` powers evenly spaced over
/// [`px_from`, `px_to`] dBW, followed by the high-power limit in dB.
pub fn sinr_curve(
    antennas: usize,
    elements: usize,
    px_from: f64,
    px_to: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    if points < 2 || !(px_to > px_from) {
        return Err("need at least two points over a non-empty range".into());
    }
    let template = ScenarioConfig {
        geom_bs: ArrayGeometry::with_elements(antennas).map_err(text)?,
        geom_rs: ArrayGeometry::with_elements(elements).map_err(text)?,
        ..ScenarioConfig::factory_hall()
    };
    let mut out = Vec::with_capacity(points + 1);
    for i in 0..points {
        let px = px_from + (px_to - px_from) * i as f64 / (points - 1) as f64;
        let cfg = ScenarioConfig { budget: factory_budget(px)?, ..template.clone() };
        out.push(10.0 * sinr_ncds(&cfg.sinr_inputs()).log10());
    }
    out.push(10.0 * sinr_ncds_high_power(antennas, elements).log10());
    Ok(out)
}

/// Monte Carlo SINR in dB at one power over a static IID channel.
pub fn sinr_point(antennas: usize, elements: usize, px_dbw: f64, seed: u64) -> Result<f64, String> {
    if antennas > MAX_MC_ANTENNAS || elements > MAX_MC_ELEMENTS {
        return Err(format!("demo limit is B <= {MAX_MC_ANTENNAS}, M <= {MAX_MC_ELEMENTS}"));
    }
    let cfg = ScenarioConfig {
        geom_bs: ArrayGeometry::with_elements(antennas).map_err(text)?,
        geom_rs: ArrayGeometry::with_elements(elements).map_err(text)?,
        budget: factory_budget(px_dbw)?,
        ofdm: OfdmNumerology::new(512, 36, 30e3, 12).map_err(text)?,
        mob: MobilityModel::static_at(CARRIER_HZ).map_err(text)?,
        channel_model: ChannelModel::IidRayleigh,
        trials: 8,
        master_seed: seed,
        ..ScenarioConfig::factory_hall()
    };
    let rec = run_sinr_ncds(&cfg, &Executor::sequential()).map_err(text)?;
    let v = rec.value().ok_or("no estimate")?;
    Ok(10.0 * v.log10())
}

/// Theoretical |J0| and the measured correlation magnitude for lags
/// 0..=`max_lag`, interleaved as [theory_0, measured_0, theory_1, …].
pub fn doppler_profile(speed_kmh: f64, max_lag: usize, streams: usize, seed: u64) -> Result<Vec<f64>, String> {
    if streams == 0 {
        return Err("streams must be positive".into());
    }
    let ofdm = OfdmNumerology::new(1024, 72, 30e3, max_lag + 1).map_err(text)?;
    let mob = MobilityModel::from_speed_kmh(speed_kmh, CARRIER_HZ).map_err(text)?;
    let coloring = TemporalColoring::new(&mob, &ofdm).map_err(text)?;
    let mut rng = StreamFactory::new(seed).stream(0, 0);
    let mut acc = vec![Complex64::new(0.0, 0.0); max_lag + 1];
    let mut power = 0.0;
    for _ in 0..streams {
        let x = coloring.sample(&mut rng, 1.0);
        power += x[0].norm_sqr();
        for (a, xn) in acc.iter_mut().zip(&x) {
            *a += x[0].conj() * xn;
        }
    }
    Ok(acc
        .iter()
        .enumerate()
        .flat_map(|(lag, a)| [doppler_correlation(lag as i64, &mob, &ofdm).abs(), a.norm() / power])
        .collect())
}

/// Row-major efficiency factors, one row per element count and one column
/// per speed, using the default numerology.
pub fn efficiency_grid(elements: &[u32], speeds_kmh: &[f64], calibration: f64) -> Result<Vec<f64>, String> {
    if !(calibration > 0.0) {
        return Err("calibration must be positive".into());
    }
    let ofdm = OfdmNumerology::nr_30khz();
    let mut out = Vec::with_capacity(elements.len() * speeds_kmh.len());
    for &m in elements {
        for &v in speeds_kmh {
            let mob = MobilityModel::from_speed_kmh(v, CARRIER_HZ).map_err(text)?;
            let nc = coherence_symbols(
                mob.doppler_hz(),
                ofdm.subcarrier_spacing(),
                ofdm.subcarriers(),
                ofdm.cp_length(),
                calibration,
            );
            out.push(efficiency_factor(m as usize, nc.symbols().unwrap_or(f64::INFINITY)));
        }
    }
    Ok(out)
}

#[wasm_bindgen(js_name = sinrCurve)]
pub fn sinr_curve_js(
    antennas: usize,
    elements: usize,
    px_from: f64,
    px_to: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    sinr_curve(antennas, elements, px_from, px_to, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sinrPoint)]
pub fn sinr_point_js(antennas: usize, elements: usize, px_dbw: f64, seed: u32) -> Result<f64, JsError> {
    sinr_point(antennas, elements, px_dbw, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = dopplerProfile)]
pub fn doppler_profile_js(speed_kmh: f64, max_lag: usize, streams: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    doppler_profile(speed_kmh, max_lag, streams, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = efficiencyGrid)]
pub fn efficiency_grid_js(elements: Vec<u32>, speeds_kmh: Vec<f64>, calibration: f64) -> Result<Vec<f64>, JsError> {
    efficiency_grid(&elements, &speeds_kmh, calibration).map_err(|e| JsError::new(&e))
}
