//! Coherent baseline: DFT sounding of the per-element cascaded channel,
//! least-squares estimation, configuration optimization, maximum-ratio
//! combining and coherent PSK decisions.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::analysis::{efficiency_for, training_block_length, CoherenceTime};
use crate::channel::{complex_normal, ChannelTensor};
use crate::error::{invalid, Error, Result};
use crate::exec::map_indexed;
use crate::ncds::{decide, PskOrder};
use crate::rng::{StreamFactory, CDS_DATA_PURPOSE, SOUNDING_PURPOSE};
use crate::surface::{optimize_schedule_cds, training_schedule, PhaseSchedule};

const ORTHOGONALITY_TOL: f64 = 1e-9;

/// Least-squares estimate of the per-element cascaded channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadedEstimate {
    pub per_element: ChannelTensor,
    /// Variance of each estimate entry, σ_v²/(M·|pilot|²).
    pub noise_var_est: f64,
}

fn check_training(training: &PhaseSchedule) -> Result<()> {
    let m = training.elements();
    if training.symbols() != m {
        return Err(Error::DimensionMismatch(format!(
            "training schedule is {}×{m}, expected square",
            training.symbols()
        )));
    }
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in i..m {
            let ip: Complex64 = (0..m).map(|t| training.get(t, i).conj() * training.get(t, j)).sum();
            let want = if i == j { m as f64 } else { 0.0 };
            worst = worst.max((ip - want).norm() / m as f64);
        }
    }
    if worst > ORTHOGONALITY_TOL {
        return Err(Error::NonOrthogonalTraining(worst));
    }
    Ok(())
}

/// Received training symbols of one subcarrier: for each training symbol
/// t, y_t = pilot·Σ_m Φ[t,m]·c_m + v_t. `cascaded` holds M consecutive
/// B-vectors; the result holds M consecutive B-vectors, one per t.
pub fn observe_training<R: Rng + ?Sized>(
    cascaded: &[Complex64],
    antennas: usize,
    training: &PhaseSchedule,
    pilot: Complex64,
    noise_power: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let m = training.elements();
    let mut out = vec![Complex64::new(0.0, 0.0); training.symbols() * antennas];
    for (t, y) in out.chunks_exact_mut(antennas).enumerate() {
        for (e, phi) in training.row(t).iter().enumerate() {
            let w = phi * pilot;
            for (dst, c) in y.iter_mut().zip(&cascaded[e * antennas..(e + 1) * antennas]) {
                *dst += w * c;
            }
        }
        if noise_power > 0.0 {
            for dst in y.iter_mut() {
                *dst += complex_normal(rng, noise_power);
            }
        }
    }
    debug_assert_eq!(out.len(), m * antennas);
    out
}

/// LS estimate ĉ_m = (1/(M·pilot))·Σ_t conj(Φ[t,m])·y_t of one subcarrier.
fn estimate_subcarrier(
    rx: &[Complex64],
    antennas: usize,
    training: &PhaseSchedule,
    pilot: Complex64,
    out: &mut [Complex64],
) {
    let m = training.elements();
    let scale = Complex64::new(1.0, 0.0) / (pilot * m as f64);
    out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    for t in 0..training.symbols() {
        let y = &rx[t * antennas..(t + 1) * antennas];
        for (e, phi) in training.row(t).iter().enumerate() {
            let w = phi.conj() * scale;
            for (dst, yb) in out[e * antennas..(e + 1) * antennas].iter_mut().zip(y) {
                *dst += w * yb;
            }
        }
    }
}

/// Cascaded channel estimate from sounding observations (K × M training
/// symbols × B) taken with an orthogonal `training` schedule.
pub fn sound_cascaded(
    rx_training: &ChannelTensor,
    training: &PhaseSchedule,
    pilot: Complex64,
    noise_power: f64,
) -> Result<CascadedEstimate> {
    check_training(training)?;
    if rx_training.slots() != training.symbols() {
        return Err(Error::DimensionMismatch(format!(
            "{} observed training symbols for a {}-symbol schedule",
            rx_training.slots(),
            training.symbols()
        )));
    }
    if pilot.norm_sqr() == 0.0 {
        return Err(invalid("pilot", "must be non-zero"));
    }
    let b = rx_training.antennas();
    let mut est = ChannelTensor::zeros(rx_training.subcarriers(), training.elements(), b);
    for k in 0..rx_training.subcarriers() {
        estimate_subcarrier(rx_training.subcarrier(k), b, training, pilot, est.subcarrier_mut(k));
    }
    Ok(CascadedEstimate {
        per_element: est,
        noise_var_est: noise_power / (training.elements() as f64 * pilot.norm_sqr()),
    })
}

/// ⟨q̂, y⟩/‖q̂‖².
pub fn mrc_detect(q_hat: &[Complex64], y: &[Complex64]) -> Result<Complex64> {
    if q_hat.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("combiner {} vs received {}", q_hat.len(), y.len())));
    }
    let energy: f64 = q_hat.iter().map(|v| v.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::ZeroCombiner);
    }
    Ok(q_hat.iter().zip(y).map(|(q, v)| q.conj() * v).sum::<Complex64>() / energy)
}

/// Parameters of one CDS coherence block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdsParams {
    pub order: PskOrder,
    pub tx_power: f64,
    /// Receiver noise power; zero gives noise-free sounding and detection.
    pub noise_power: f64,
    pub optimizer_sweeps: usize,
    pub coherence: CoherenceTime,
    /// Data symbols per block when the channel is static.
    pub frame_symbols: usize,
}

/// Training overhead of a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceAccounting {
    /// round(N_c), or `None` for a static channel.
    pub block_symbols: Option<usize>,
    pub training_symbols: usize,
    pub data_symbols: usize,
    /// M/round(N_c); zero for a static channel.
    pub pilot_fraction: f64,
    pub efficiency: f64,
}

/// Detection outcome of a coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct CdsBlockResult {
    /// K × data_symbols transmitted indices.
    pub transmitted: DMatrix<usize>,
    pub decided: DMatrix<usize>,
    pub errors: u64,
    pub decisions: u64,
    /// Decisions taken with a zero combiner or zero combiner output.
    pub degenerate: u64,
    pub accounting: ResourceAccounting,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CdsBlock {
    /// The coherence block cannot hold the M training symbols.
    Infeasible {
        coherence_symbols: f64,
        training_symbols: usize,
    },
    Completed(CdsBlockResult),
}

/// Training feasibility and overhead for `elements` sounding symbols.
pub fn cds_accounting(elements: usize, params: &CdsParams) -> std::result::Result<ResourceAccounting, f64> {
    match training_block_length(params.coherence) {
        Some(block) if elements >= block => Err(params.coherence.symbols().unwrap_or(f64::INFINITY)),
        Some(block) => Ok(ResourceAccounting {
            block_symbols: Some(block),
            training_symbols: elements,
            data_symbols: block - elements,
            pilot_fraction: elements as f64 / block as f64,
            efficiency: efficiency_for(elements, params.coherence),
        }),
        None => Ok(ResourceAccounting {
            block_symbols: None,
            training_symbols: elements,
            data_symbols: params.frame_symbols,
            pilot_fraction: 0.0,
            efficiency: 1.0,
        }),
    }
}

/// One CDS coherence block over a true per-element cascaded channel held
/// fixed for the block: sounding with the DFT schedule, LS estimation,
/// configuration optimization, then MRC detection of the data symbols.
pub fn cds_frame_pipeline(
    params: &CdsParams,
    cascaded: &ChannelTensor,
    streams: &StreamFactory,
    trial: u64,
) -> Result<CdsBlock> {
    let (kk, m, b) = (cascaded.subcarriers(), cascaded.slots(), cascaded.antennas());
    let accounting = match cds_accounting(m, params) {
        Ok(a) => a,
        Err(coherence_symbols) => return Ok(CdsBlock::Infeasible { coherence_symbols, training_symbols: m }),
    };
    let training = training_schedule(m);
    let pilot = Complex64::new(params.tx_power.sqrt(), 0.0);

    let estimates: Vec<Vec<Complex64>> = map_indexed(kk, |k| {
        let mut rng = streams.subcarrier_lane(trial, k, SOUNDING_PURPOSE);
        let rx = observe_training(cascaded.subcarrier(k), b, &training, pilot, params.noise_power, &mut rng);
        let mut est = vec![Complex64::new(0.0, 0.0); m * b];
        estimate_subcarrier(&rx, b, &training, pilot, &mut est);
        est
    });
    let estimate = ChannelTensor::from_vec(kk, m, b, estimates.concat())?;
    let config = match optimize_schedule_cds(&estimate, params.optimizer_sweeps) {
        Ok(c) => c.configuration,
        Err(Error::DegenerateChannel) => vec![Complex64::new(1.0, 0.0); m],
        Err(e) => return Err(e),
    };

    let combine = |t: &ChannelTensor, k: usize| -> Vec<Complex64> {
        let mut q = vec![Complex64::new(0.0, 0.0); b];
        for (e, p) in config.iter().enumerate() {
            for (acc, c) in q.iter_mut().zip(t.vector(k, e)) {
                *acc += p * c;
            }
        }
        q
    };

    let d = accounting.data_symbols;
    let amp = params.tx_power.sqrt();
    let per_k: Vec<(Vec<usize>, Vec<usize>, u64)> = map_indexed(kk, |k| {
        let mut rng = streams.subcarrier_lane(trial, k, CDS_DATA_PURPOSE);
        let q = combine(cascaded, k);
        let q_hat = combine(&estimate, k);
        let mut tx = Vec::with_capacity(d);
        let mut dec = Vec::with_capacity(d);
        let mut degenerate = 0;
        let mut y = vec![Complex64::new(0.0, 0.0); b];
        for _ in 0..d {
            let idx = rng.random_range(0..params.order.size());
            let x = params.order.point(idx).expect("index in range") * amp;
            for (dst, qb) in y.iter_mut().zip(&q) {
                *dst = qb * x;
                if params.noise_power > 0.0 {
                    *dst += complex_normal(&mut rng, params.noise_power);
                }
            }
            let decision = match mrc_detect(&q_hat, &y) {
                Ok(x_hat) => decide(x_hat, params.order),
                Err(_) => decide(Complex64::new(0.0, 0.0), params.order),
            };
            degenerate += u64::from(decision.degenerate);
            tx.push(idx);
            dec.push(decision.index);
        }
        (tx, dec, degenerate)
    });

    let mut transmitted = DMatrix::zeros(kk, d);
    let mut decided = DMatrix::zeros(kk, d);
    let (mut errors, mut degenerate) = (0u64, 0u64);
    for (k, (tx, dec, deg)) in per_k.into_iter().enumerate() {
        for j in 0..d {
            transmitted[(k, j)] = tx[j];
            decided[(k, j)] = dec[j];
            errors += u64::from(tx[j] != dec[j]);
        }
        degenerate += deg;
    }
    Ok(CdsBlock::Completed(CdsBlockResult {
        transmitted,
        decided,
        errors,
        decisions: (kk * d) as u64,
        degenerate,
        accounting,
    }))
}
