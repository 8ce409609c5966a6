//! Reflecting-surface phase configurations.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channel::ChannelTensor;
use crate::error::{invalid, Error, Result};

const UNIT_MODULUS_TOL: f64 = 1e-12;

/// Per-symbol unit-modulus element coefficients, N×M row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    symbols: usize,
    elements: usize,
    coefficients: Vec<Complex64>,
}

/// How the random NCDS configuration evolves over a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    /// One random configuration held for the whole frame.
    #[default]
    PerFrame,
    /// A fresh random configuration every OFDM symbol.
    PerSymbol,
}

impl PhaseSchedule {
    pub fn from_coefficients(symbols: usize, elements: usize, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != symbols * elements {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a {symbols}×{elements} schedule",
                coefficients.len()
            )));
        }
        if let Some(bad) = coefficients.iter().find(|c| (c.norm() - 1.0).abs() > UNIT_MODULUS_TOL) {
            return Err(invalid("phase coefficient", format!("modulus {} is not 1", bad.norm())));
        }
        Ok(Self { symbols, elements, coefficients })
    }

    /// Schedule from phase angles in radians.
    pub fn from_phases(symbols: usize, elements: usize, phases: &[f64]) -> Result<Self> {
        Self::from_coefficients(symbols, elements, phases.iter().map(|p| Complex64::from_polar(1.0, *p)).collect())
    }

    /// `configuration` held for `symbols` symbols.
    pub fn repeated(configuration: &[Complex64], symbols: usize) -> Result<Self> {
        let coefficients = (0..symbols).flat_map(|_| configuration.iter().copied()).collect();
        Self::from_coefficients(symbols, configuration.len(), coefficients)
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    /// ψ_n, the configuration applied at symbol `n`.
    pub fn row(&self, n: usize) -> &[Complex64] {
        &self.coefficients[n * self.elements..(n + 1) * self.elements]
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.coefficients[n * self.elements + m]
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// True when every symbol uses the same configuration.
    pub fn is_static(&self) -> bool {
        self.coefficients.chunks_exact(self.elements.max(1)).all(|r| r == self.row(0))
    }
}

/// IID uniform phases, independent across symbols and elements.
pub fn random_schedule<R: Rng + ?Sized>(m_elements: usize, n_symbols: usize, rng: &mut R) -> PhaseSchedule {
    let coefficients =
        (0..m_elements * n_symbols).map(|_| Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>())).collect();
    PhaseSchedule { symbols: n_symbols, elements: m_elements, coefficients }
}

/// One uniform random configuration held for all `n_symbols`.
pub fn static_random_schedule<R: Rng + ?Sized>(m_elements: usize, n_symbols: usize, rng: &mut R) -> PhaseSchedule {
    let row = random_schedule(m_elements, 1, rng);
    PhaseSchedule::repeated(row.row(0), n_symbols).expect("unit modulus")
}

/// Random schedule in the requested mode.
pub fn random_schedule_in_mode<R: Rng + ?Sized>(
    mode: PhaseMode,
    m_elements: usize,
    n_symbols: usize,
    rng: &mut R,
) -> PhaseSchedule {
    match mode {
        PhaseMode::PerFrame => static_random_schedule(m_elements, n_symbols, rng),
        PhaseMode::PerSymbol => random_schedule(m_elements, n_symbols, rng),
    }
}

/// M×M DFT sounding schedule: entry (n, m) = exp(−j2π·n·m/M).
pub fn training_schedule(m_elements: usize) -> PhaseSchedule {
    let m = m_elements;
    let coefficients = (0..m * m)
        .map(|i| {
            let (n, e) = (i / m, i % m);
            // Reduce the exponent first so large M keeps full precision.
            let r = (n * e) % m;
            Complex64::from_polar(1.0, -2.0 * PI * r as f64 / m as f64)
        })
        .collect();
    PhaseSchedule { symbols: m, elements: m, coefficients }
}

/// Outcome of [`optimize_schedule_cds`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedConfiguration {
    pub configuration: Vec<Complex64>,
    /// Objective before the first sweep and after each sweep.
    pub objective_history: Vec<f64>,
}

impl OptimizedConfiguration {
    pub fn objective(&self) -> f64 {
        *self.objective_history.last().expect("history is never empty")
    }

    pub fn schedule(&self, symbols: usize) -> PhaseSchedule {
        PhaseSchedule::repeated(&self.configuration, symbols).expect("unit modulus")
    }
}

/// Σ_k ‖Σ_m ψ_m c_{k,:,m}‖² for a per-element cascaded tensor.
pub fn cds_objective(cascaded: &ChannelTensor, psi: &[Complex64]) -> f64 {
    let b = cascaded.antennas();
    let mut total = 0.0;
    let mut q = vec![Complex64::new(0.0, 0.0); b];
    for k in 0..cascaded.subcarriers() {
        q.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (m, p) in psi.iter().enumerate() {
            for (acc, c) in q.iter_mut().zip(cascaded.vector(k, m)) {
                *acc += p * c;
            }
        }
        total += q.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    total
}

/// Single wideband configuration maximizing the summed received power by
/// cyclic coordinate ascent.
///
/// Starting from ψ = 1, each element in turn takes the phase that aligns
/// its contribution with the sum of all other elements over every
/// subcarrier: ψ_m ← conj(S)/|S| with S = Σ_k ⟨r_{k,−m}, c_{k,:,m}⟩. An
/// element with S = 0 keeps its value. `iterations` full sweeps are run.
#[allow(clippy::needless_range_loop)]
pub fn optimize_schedule_cds(cascaded: &ChannelTensor, iterations: usize) -> Result<OptimizedConfiguration> {
    if iterations == 0 {
        return Err(invalid("iterations", "at least one sweep is required"));
    }
    if cascaded.as_slice().iter().all(|c| c.norm_sqr() == 0.0) {
        return Err(Error::DegenerateChannel);
    }
    let (kk, mm, b) = (cascaded.subcarriers(), cascaded.slots(), cascaded.antennas());
    let mut psi = vec![Complex64::new(1.0, 0.0); mm];
    // Running combined vector per subcarrier.
    let mut combined = vec![Complex64::new(0.0, 0.0); kk * b];
    for k in 0..kk {
        for m in 0..mm {
            for (acc, c) in combined[k * b..(k + 1) * b].iter_mut().zip(cascaded.vector(k, m)) {
                *acc += c;
            }
        }
    }
    let objective = |combined: &[Complex64]| combined.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let mut history = vec![objective(&combined)];
    for _ in 0..iterations {
        for m in 0..mm {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..kk {
                let c = cascaded.vector(k, m);
                let q = &combined[k * b..(k + 1) * b];
                for (qb, cb) in q.iter().zip(c) {
                    // r = q − ψ_m c, so ⟨r, c⟩ = ⟨q, c⟩ − conj(ψ_m)‖c‖².
                    s += (qb - psi[m] * cb).conj() * cb;
                }
            }
            if s.norm() == 0.0 {
                continue;
            }
            let new = s.conj() / s.norm();
            let delta = new - psi[m];
            psi[m] = new;
            for k in 0..kk {
                let c = cascaded.vector(k, m);
                for (qb, cb) in combined[k * b..(k + 1) * b].iter_mut().zip(c) {
                    *qb += delta * cb;
                }
            }
        }
        history.push(objective(&combined));
    }
    // Re-normalize against accumulated rounding.
    for p in psi.iter_mut() {
        *p /= p.norm();
    }
    Ok(OptimizedConfiguration { configuration: psi, objective_history: history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_tensor(k: usize, m: usize, b: usize, seed: u64) -> ChannelTensor {
        let mut rng = StreamFactory::new(seed).stream(0, 0);
        let data = (0..k * m * b).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        ChannelTensor::from_vec(k, m, b, data).unwrap()
    }

    #[test]
    fn random_schedule_is_unit_modulus_and_reproducible() {
        let f = StreamFactory::new(1);
        let a = random_schedule(16, 8, &mut f.stream(0, 0));
        let b = random_schedule(16, 8, &mut f.stream(0, 0));
        assert_eq!(a, b);
        assert!(a.coefficients().iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        assert!(!a.is_static());
        let s = static_random_schedule(16, 8, &mut f.stream(0, 1));
        assert!(s.is_static());
    }

    #[test]
    fn random_phasor_has_zero_mean() {
        let a = random_schedule(1000, 1000, &mut StreamFactory::new(2).stream(0, 0));
        let mean: Complex64 = a.coefficients().iter().sum::<Complex64>() / 1e6;
        assert!(mean.norm() < 0.005);
    }

    #[test]
    fn training_single_element() {
        let t = training_schedule(1);
        assert_eq!(t.coefficients(), &[c(1.0, 0.0)]);
    }

    #[test]
    fn training_rows_orthogonal() {
        let t = training_schedule(4);
        let ip: Complex64 = t.row(0).iter().zip(t.row(1)).map(|(a, b)| a.conj() * b).sum();
        assert!(ip.norm() < 1e-12);
        let m = 8;
        let t = training_schedule(m);
        for i in 0..m {
            for j in 0..m {
                let ip: Complex64 = t.row(i).iter().zip(t.row(j)).map(|(a, b)| a.conj() * b).sum();
                let want = if i == j { m as f64 } else { 0.0 };
                assert!((ip - c(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_non_unit_modulus() {
        assert!(PhaseSchedule::from_coefficients(1, 2, vec![c(1.0, 0.0), c(0.5, 0.0)]).is_err());
        assert!(PhaseSchedule::from_coefficients(1, 2, vec![c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn optimizer_single_element() {
        let t = ChannelTensor::from_vec(
            3,
            1,
            2,
            vec![c(1.0, 2.0), c(0.5, -1.0), c(0.0, 1.0), c(2.0, 0.0), c(1.0, 1.0), c(-1.0, 0.0)],
        )
        .unwrap();
        let opt = optimize_schedule_cds(&t, 3).unwrap();
        assert_eq!(opt.configuration, vec![c(1.0, 0.0)]);
        let want: f64 = t.as_slice().iter().map(|v| v.norm_sqr()).sum();
        assert!((opt.objective() - want).abs() < 1e-12);
    }

    #[test]
    fn optimizer_aligns_two_elements() {
        let t = ChannelTensor::from_vec(1, 2, 1, vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        // Exhaustive 0.1° grid over the second phase (the first is a free
        // global rotation) gives the optimum |ψ1 + jψ2| = 2.
        let best = (0..3600)
            .map(|i| {
                let p = (i as f64 * 0.1).to_radians();
                (c(1.0, 0.0) + c(0.0, 1.0) * Complex64::from_polar(1.0, p)).norm()
            })
            .fold(0.0, f64::max);
        assert!((best - 2.0).abs() < 1e-6);
        let opt = optimize_schedule_cds(&t, 2).unwrap();
        let combined = opt.configuration[0] + c(0.0, 1.0) * opt.configuration[1];
        assert!((combined.norm() - best).abs() < 1e-9);
        assert!((opt.objective() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn objective_non_decreasing_per_sweep() {
        for seed in 0..20 {
            let t = random_tensor(4, 3, 2, seed);
            let opt = optimize_schedule_cds(&t, 6).unwrap();
            for w in opt.objective_history.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "{:?}", opt.objective_history);
            }
            assert!((cds_objective(&t, &opt.configuration) - opt.objective()).abs() < 1e-9);
        }
    }

    #[test]
    fn optimized_beats_random_on_average() {
        let mut wins = 0;
        for seed in 0..100 {
            let t = random_tensor(8, 16, 2, 1000 + seed);
            let opt = optimize_schedule_cds(&t, 5).unwrap();
            let rnd = random_schedule(16, 1, &mut StreamFactory::new(seed).stream(1, 1));
            if opt.objective() >= cds_objective(&t, rnd.row(0)) {
                wins += 1;
            }
        }
        assert_eq!(wins, 100);
    }

    #[test]
    fn optimizer_errors() {
        let zero = ChannelTensor::zeros(2, 3, 2);
        assert_eq!(optimize_schedule_cds(&zero, 1), Err(Error::DegenerateChannel));
        assert!(optimize_schedule_cds(&random_tensor(2, 2, 2, 0), 0).is_err());
    }
}
