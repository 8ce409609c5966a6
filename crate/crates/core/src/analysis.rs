//! Closed-form results: interference moments, NCDS SINR, coherence time,
//! training efficiency and complexity counts.

use serde::Serialize;

/// Expected values of the decision-variable terms under IID Rayleigh fading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    /// E{Re(s*·I1)}.
    pub m_s_i1: f64,
    /// E|I1|².
    pub m_i1: f64,
    pub m_i2: f64,
    pub m_i3: f64,
    pub m_i4: f64,
}

/// Link parameters entering the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinrInputs {
    pub antennas: usize,
    pub elements: usize,
    pub sigma_h2: f64,
    pub sigma_g2: f64,
    pub sigma_v2: f64,
    pub tx_power: f64,
}

/// Interference moments for y = q·x + v with |x|² = P_x.
///
/// The useful-term correlation is E{s*·I1} = P_x·B·σ_h²·M·σ_g², carrying
/// one power of P_x because I1 = ⟨q_prev, q_curr⟩·x_prev*·x_curr = P_x·‖q‖²·s.
pub fn moments_closed_form(p: &SinrInputs) -> MomentSet {
    let (b, m) = (p.antennas as f64, p.elements as f64);
    let gain = p.sigma_h2 * p.sigma_g2;
    let cross = p.sigma_v2 * p.tx_power * b * m * gain;
    MomentSet {
        m_s_i1: p.tx_power * b * m * gain,
        m_i1: p.tx_power * p.tx_power * (1.0 + b) * b * (1.0 + m) * m * gain * gain,
        m_i2: cross,
        m_i3: cross,
        m_i4: b * p.sigma_v2 * p.sigma_v2,
    }
}

/// ρ_nc = MB / (B + M + 1 + 2σ_v²/(σ_h²σ_g²P_x) + σ_v⁴/(σ_h⁴σ_g⁴P_x²M)).
pub fn sinr_ncds(p: &SinrInputs) -> f64 {
    let (b, m) = (p.antennas as f64, p.elements as f64);
    let snr = p.sigma_h2 * p.sigma_g2 * p.tx_power / p.sigma_v2;
    m * b / (b + m + 1.0 + 2.0 / snr + 1.0 / (snr * snr * m))
}

/// Limit of [`sinr_ncds`] as P_x → ∞: MB/(B+M+1).
pub fn sinr_ncds_high_power(antennas: usize, elements: usize) -> f64 {
    let (b, m) = (antennas as f64, elements as f64);
    m * b / (b + m + 1.0)
}

/// SINR rebuilt from a moment set via the mean-squared error against the
/// reference amplitude a = σ_h²σ_g²P_x:
/// a²/ρ = a² + E|z|² − 2a·E{Re(s*z)}, with E|z|² = ΣE|I_i|²/(MB)² and
/// E{s*z} = E{s*I1}/(MB).
pub fn sinr_from_moments(p: &SinrInputs, moments: &MomentSet) -> f64 {
    let mb = (p.antennas * p.elements) as f64;
    let a = p.sigma_h2 * p.sigma_g2 * p.tx_power;
    let ez2 = (moments.m_i1 + moments.m_i2 + moments.m_i3 + moments.m_i4) / (mb * mb);
    let mse = a * a + ez2 - 2.0 * a * moments.m_s_i1 / mb;
    a * a / mse
}

/// Coherence time in OFDM symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CoherenceTime {
    Finite(f64),
    /// Zero Doppler: the channel never decorrelates.
    Unbounded,
}

impl CoherenceTime {
    pub fn symbols(&self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(*v),
            Self::Unbounded => None,
        }
    }
}

/// N_c = calibration · (Δf/f_d) · 0.423·K/(K+L_CP).
///
/// `calibration` is 1.0 for the textbook T_c = 0.423/f_d. The published
/// efficiency table corresponds to 0.5.
pub fn coherence_symbols(
    doppler_hz: f64,
    subcarrier_spacing: f64,
    subcarriers: usize,
    cp_length: usize,
    calibration: f64,
) -> CoherenceTime {
    if doppler_hz <= 0.0 {
        return CoherenceTime::Unbounded;
    }
    let k = subcarriers as f64;
    CoherenceTime::Finite(calibration * subcarrier_spacing / doppler_hz * 0.423 * k / (k + cp_length as f64))
}

/// Training blocks of M symbols inside a coherence block.
pub fn training_block_length(coherence: CoherenceTime) -> Option<usize> {
    coherence.symbols().map(|nc| nc.round() as usize)
}

/// η_c = max(0, 1 − M/round(N_c)).
pub fn efficiency_factor(elements: usize, coherence_symbols: f64) -> f64 {
    let block = coherence_symbols.round();
    if elements as f64 >= block {
        0.0
    } else {
        1.0 - elements as f64 / block
    }
}

/// [`efficiency_factor`] lifted to [`CoherenceTime`]; a static channel
/// has no training penalty.
pub fn efficiency_for(elements: usize, coherence: CoherenceTime) -> f64 {
    match coherence {
        CoherenceTime::Finite(nc) => efficiency_factor(elements, nc),
        CoherenceTime::Unbounded => 1.0,
    }
}

/// Operation counts of both receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComplexityCounts {
    /// R_t·(B³+M)·K, order of the CDS configuration optimization.
    pub cds_opt_order: u128,
    /// B·K complex products for coherent combining.
    pub cds_products: u128,
    /// (B+1)(K−1) complex products for differential encoding and decoding.
    pub ncds_products: u128,
}

pub fn complexity_counts(antennas: u64, elements: u64, subcarriers: u64, iterations: u64) -> ComplexityCounts {
    let (b, m, k, r) = (u128::from(antennas), u128::from(elements), u128::from(subcarriers), u128::from(iterations));
    ComplexityCounts {
        cds_opt_order: r * (b * b * b + m) * k,
        cds_products: b * k,
        ncds_products: (b + 1) * k.saturating_sub(1),
    }
}
