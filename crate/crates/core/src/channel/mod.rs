//! BS-RS and RS-UE channel generation and the cascaded channel.
//!
//! Two channel models are provided: IID Rayleigh fading with Jakes temporal
//! correlation on the RS-UE link ([`iid`], [`doppler`]) and a cluster-based
//! geometric wideband model ([`geometric`]). Both produce per-subcarrier
//! [`SubcarrierChannel`]s that the modems consume through [`cascade`].

pub mod doppler;
pub mod geometric;
pub mod iid;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::surface::PhaseSchedule;

pub use doppler::{bessel_j0, doppler_autocorr, doppler_correlation, TemporalColoring};
pub use geometric::{gen_geometric_pair, ura_response, ClusterProfile, GeometricChannel, NodeLayout};
pub use iid::{draw_bs_rs, draw_rs_ue, draw_subcarrier, gen_bs_rs_iid, gen_iid_pair, gen_rs_ue_correlated};

/// Speed of light used for Doppler conversions, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Uniform rectangular array: `count_h × count_v` elements with spacings in
/// wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    count_h: usize,
    count_v: usize,
    spacing_h: f64,
    spacing_v: f64,
}

impl ArrayGeometry {
    pub fn new(count_h: usize, count_v: usize, spacing_h: f64, spacing_v: f64) -> Result<Self> {
        if count_h == 0 || count_v == 0 {
            return Err(invalid("array", "element counts must be positive"));
        }
        if !(spacing_h > 0.0 && spacing_v > 0.0) || !spacing_h.is_finite() || !spacing_v.is_finite() {
            return Err(invalid("array", "spacings must be positive and finite"));
        }
        Ok(Self { count_h, count_v, spacing_h, spacing_v })
    }

    /// Half-wavelength array with `count_h × count_v` elements.
    pub fn half_wavelength(count_h: usize, count_v: usize) -> Result<Self> {
        Self::new(count_h, count_v, 0.5, 0.5)
    }

    /// Near-square half-wavelength array holding `total` elements. The
    /// horizontal axis gets the larger factor, e.g. 32 → 8×4.
    pub fn with_elements(total: usize) -> Result<Self> {
        if total == 0 {
            return Err(invalid("array", "element count must be positive"));
        }
        let mut v = (total as f64).sqrt().floor() as usize;
        while !total.is_multiple_of(v) {
            v -= 1;
        }
        Self::half_wavelength(total / v, v)
    }

    pub fn count_h(&self) -> usize {
        self.count_h
    }

    pub fn count_v(&self) -> usize {
        self.count_v
    }

    pub fn spacing_h(&self) -> f64 {
        self.spacing_h
    }

    pub fn spacing_v(&self) -> f64 {
        self.spacing_v
    }

    pub fn elements(&self) -> usize {
        self.count_h * self.count_v
    }
}

/// Large-scale gains and powers of the link, all linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    gain_bs_rs: f64,
    gain_rs_ue: f64,
    noise_power: f64,
    tx_power: f64,
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(name, format!("must be strictly positive and finite, got {v}")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(name, format!("must be non-negative and finite, got {v}")))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

impl LinkBudget {
    pub fn new(gain_bs_rs: f64, gain_rs_ue: f64, noise_power: f64, tx_power: f64) -> Result<Self> {
        Ok(Self {
            gain_bs_rs: positive("gain_bs_rs", gain_bs_rs)?,
            gain_rs_ue: positive("gain_rs_ue", gain_rs_ue)?,
            noise_power: non_negative("noise_power", noise_power)?,
            tx_power: positive("tx_power", tx_power)?,
        })
    }

    pub fn from_db(gain_bs_rs_db: f64, gain_rs_ue_db: f64, noise_dbw: f64, tx_dbw: f64) -> Result<Self> {
        Self::new(
            db_to_linear(gain_bs_rs_db),
            db_to_linear(gain_rs_ue_db),
            db_to_linear(noise_dbw),
            db_to_linear(tx_dbw),
        )
    }

    /// σ_h², the average BS-RS entry power.
    pub fn gain_bs_rs(&self) -> f64 {
        self.gain_bs_rs
    }

    /// σ_g², the average RS-UE entry power.
    pub fn gain_rs_ue(&self) -> f64 {
        self.gain_rs_ue
    }

    /// σ_v²; zero makes the link noise-free.
    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn tx_power(&self) -> f64 {
        self.tx_power
    }

    pub fn tx_power_dbw(&self) -> f64 {
        linear_to_db(self.tx_power)
    }

    pub fn with_tx_power(&self, tx_power: f64) -> Result<Self> {
        Self::new(self.gain_bs_rs, self.gain_rs_ue, self.noise_power, tx_power)
    }

    pub fn with_noise_power(&self, noise_power: f64) -> Result<Self> {
        Self::new(self.gain_bs_rs, self.gain_rs_ue, noise_power, self.tx_power)
    }
}

/// OFDM grid: `K` subcarriers, cyclic prefix, spacing and frame length `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmNumerology {
    subcarriers: usize,
    cp_length: usize,
    subcarrier_spacing: f64,
    frame_symbols: usize,
}

impl OfdmNumerology {
    pub fn new(subcarriers: usize, cp_length: usize, subcarrier_spacing: f64, frame_symbols: usize) -> Result<Self> {
        if subcarriers == 0 {
            return Err(invalid("subcarriers", "must be positive"));
        }
        if cp_length >= subcarriers {
            return Err(invalid(
                "cp_length",
                format!("cyclic prefix {cp_length} must be shorter than {subcarriers} subcarriers"),
            ));
        }
        positive("subcarrier_spacing", subcarrier_spacing)?;
        if frame_symbols < 2 {
            return Err(invalid("frame_symbols", "differential decoding needs at least 2 symbols"));
        }
        Ok(Self { subcarriers, cp_length, subcarrier_spacing, frame_symbols })
    }

    /// 5G-style grid used throughout: 1024 subcarriers at 30 kHz, 72-sample
    /// cyclic prefix, 140-symbol frames.
    pub fn nr_30khz() -> Self {
        Self::new(1024, 72, 30e3, 140).expect("valid numerology")
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn cp_length(&self) -> usize {
        self.cp_length
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.subcarrier_spacing
    }

    pub fn frame_symbols(&self) -> usize {
        self.frame_symbols
    }

    /// OFDM symbol duration including the cyclic prefix, seconds.
    pub fn symbol_duration(&self) -> f64 {
        (1.0 + self.cp_length as f64 / self.subcarriers as f64) / self.subcarrier_spacing
    }

    pub fn with_subcarriers(&self, subcarriers: usize) -> Result<Self> {
        Self::new(subcarriers, self.cp_length, self.subcarrier_spacing, self.frame_symbols)
    }

    pub fn with_frame_symbols(&self, frame_symbols: usize) -> Result<Self> {
        Self::new(self.subcarriers, self.cp_length, self.subcarrier_spacing, frame_symbols)
    }
}

/// UE mobility expressed as a maximum Doppler shift at a carrier frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityModel {
    doppler_hz: f64,
    carrier_hz: f64,
}

impl MobilityModel {
    pub fn new(doppler_hz: f64, carrier_hz: f64) -> Result<Self> {
        if !(doppler_hz >= 0.0) || !doppler_hz.is_finite() {
            return Err(invalid("doppler_hz", "must be non-negative"));
        }
        positive("carrier_hz", carrier_hz)?;
        Ok(Self { doppler_hz, carrier_hz })
    }

    pub fn from_speed_kmh(speed_kmh: f64, carrier_hz: f64) -> Result<Self> {
        if !(speed_kmh >= 0.0) {
            return Err(invalid("speed_kmh", "must be non-negative"));
        }
        Self::new(speed_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT, carrier_hz)
    }

    pub fn static_at(carrier_hz: f64) -> Result<Self> {
        Self::new(0.0, carrier_hz)
    }

    pub fn doppler_hz(&self) -> f64 {
        self.doppler_hz
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn speed_kmh(&self) -> f64 {
        self.doppler_hz * SPEED_OF_LIGHT / self.carrier_hz * 3.6
    }

    pub fn is_static(&self) -> bool {
        self.doppler_hz == 0.0
    }
}

/// Channel of one subcarrier over one frame.
///
/// `bs_rs` is the B×M matrix H_k, fixed over the frame. `rs_ue` holds the
/// RS-UE vector g_{k,n} for every symbol, row-major N×M.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierChannel {
    bs_rs: DMatrix<Complex64>,
    rs_ue: Vec<Complex64>,
    symbols: usize,
    static_over_symbols: bool,
}

impl SubcarrierChannel {
    pub fn new(bs_rs: DMatrix<Complex64>, rs_ue: Vec<Complex64>, symbols: usize) -> Result<Self> {
        let elements = bs_rs.ncols();
        if symbols == 0 || rs_ue.len() != symbols * elements {
            return Err(Error::DimensionMismatch(format!(
                "rs_ue has {} entries, expected {symbols}×{elements}",
                rs_ue.len()
            )));
        }
        let static_over_symbols = rs_ue.chunks_exact(elements).all(|row| row == &rs_ue[..elements]);
        Ok(Self { bs_rs, rs_ue, symbols, static_over_symbols })
    }

    pub fn antennas(&self) -> usize {
        self.bs_rs.nrows()
    }

    pub fn elements(&self) -> usize {
        self.bs_rs.ncols()
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn bs_rs(&self) -> &DMatrix<Complex64> {
        &self.bs_rs
    }

    /// g_{k,n} for symbol `n`.
    pub fn rs_ue(&self, n: usize) -> &[Complex64] {
        let m = self.elements();
        &self.rs_ue[n * m..(n + 1) * m]
    }

    /// True when g_{k,n} is identical for every symbol of the frame.
    pub fn is_static(&self) -> bool {
        self.static_over_symbols
    }

    /// q_{k,n} = Σ_m ψ_m H[:,m] g_n[m].
    pub fn cascade(&self, psi: &[Complex64], n: usize) -> Result<DVector<Complex64>> {
        let m = self.elements();
        if psi.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "phase configuration has {} entries for {m} elements",
                psi.len()
            )));
        }
        if n >= self.symbols {
            return Err(Error::OutOfRange { what: "symbol", index: n, len: self.symbols });
        }
        let weights = DVector::from_iterator(m, psi.iter().zip(self.rs_ue(n)).map(|(p, g)| p * g));
        Ok(&self.bs_rs * weights)
    }

    /// Per-element cascaded channel H[:,m]·g_n[m], written into `out` as M
    /// consecutive B-vectors.
    pub fn per_element(&self, n: usize, out: &mut [Complex64]) {
        let b = self.antennas();
        let g = self.rs_ue(n);
        for (m, gm) in g.iter().enumerate() {
            let col = self.bs_rs.column(m);
            for (dst, h) in out[m * b..(m + 1) * b].iter_mut().zip(col.iter()) {
                *dst = h * gm;
            }
        }
    }
}

/// Channel of a whole frame: one [`SubcarrierChannel`] per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    subcarriers: Vec<SubcarrierChannel>,
}

impl ChannelRealization {
    pub fn new(subcarriers: Vec<SubcarrierChannel>) -> Result<Self> {
        if let Some(first) = subcarriers.first() {
            let dims = (first.antennas(), first.elements(), first.symbols());
            if subcarriers.iter().any(|s| (s.antennas(), s.elements(), s.symbols()) != dims) {
                return Err(Error::DimensionMismatch("subcarrier channels differ in shape".into()));
            }
        }
        Ok(Self { subcarriers })
    }

    pub fn subcarriers(&self) -> &[SubcarrierChannel] {
        &self.subcarriers
    }

    pub fn subcarrier(&self, k: usize) -> Option<&SubcarrierChannel> {
        self.subcarriers.get(k)
    }

    pub fn len(&self) -> usize {
        self.subcarriers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subcarriers.is_empty()
    }
}

/// Effective cascaded channel q_{k,n} of subcarrier `k` and symbol `n`
/// under `phases`.
pub fn cascade(real: &ChannelRealization, phases: &PhaseSchedule, k: usize, n: usize) -> Result<DVector<Complex64>> {
    let sc = real.subcarrier(k).ok_or(Error::OutOfRange { what: "subcarrier", index: k, len: real.len() })?;
    if n >= phases.symbols() {
        return Err(Error::OutOfRange { what: "phase schedule symbol", index: n, len: phases.symbols() });
    }
    sc.cascade(phases.row(n), n)
}

/// Complex tensor of shape K × slots × B, stored as K·slots consecutive
/// B-vectors.
///
/// For a cascaded channel a slot is an RS element (entry (k,m,b) is
/// H_k[b,m]·g_k[m]); for sounding observations a slot is a training symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    subcarriers: usize,
    slots: usize,
    antennas: usize,
    data: Vec<Complex64>,
}

impl ChannelTensor {
    pub fn zeros(subcarriers: usize, slots: usize, antennas: usize) -> Self {
        Self { subcarriers, slots, antennas, data: vec![Complex64::new(0.0, 0.0); subcarriers * slots * antennas] }
    }

    pub fn from_vec(subcarriers: usize, slots: usize, antennas: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != subcarriers * slots * antennas {
            return Err(Error::DimensionMismatch(format!(
                "tensor data has {} entries, expected {subcarriers}×{slots}×{antennas}",
                data.len()
            )));
        }
        Ok(Self { subcarriers, slots, antennas, data })
    }

    /// Per-element cascaded channel of every subcarrier at symbol `n`.
    pub fn cascaded_from(real: &ChannelRealization, n: usize) -> Self {
        let (b, m) = real.subcarriers().first().map(|s| (s.antennas(), s.elements())).unwrap_or((0, 0));
        let mut t = Self::zeros(real.len(), m, b);
        for (k, sc) in real.subcarriers().iter().enumerate() {
            sc.per_element(n, t.subcarrier_mut(k));
        }
        t
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn get(&self, k: usize, slot: usize, b: usize) -> Complex64 {
        self.data[(k * self.slots + slot) * self.antennas + b]
    }

    pub fn set(&mut self, k: usize, slot: usize, b: usize, v: Complex64) {
        self.data[(k * self.slots + slot) * self.antennas + b] = v;
    }

    /// The B-vector at `(k, slot)`.
    pub fn vector(&self, k: usize, slot: usize) -> &[Complex64] {
        let start = (k * self.slots + slot) * self.antennas;
        &self.data[start..start + self.antennas]
    }

    /// All slots of subcarrier `k`, slot-major.
    pub fn subcarrier(&self, k: usize) -> &[Complex64] {
        let len = self.slots * self.antennas;
        &self.data[k * len..(k + 1) * len]
    }

    pub fn subcarrier_mut(&mut self, k: usize) -> &mut [Complex64] {
        let len = self.slots * self.antennas;
        &mut self.data[k * len..(k + 1) * len]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn iter_subcarriers_mut(&mut self) -> std::slice::ChunksExactMut<'_, Complex64> {
        let len = (self.slots * self.antennas).max(1);
        self.data.chunks_exact_mut(len)
    }
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn geometry_invariants() {
        assert!(ArrayGeometry::new(0, 2, 0.5, 0.5).is_err());
        assert!(ArrayGeometry::new(2, 2, 0.0, 0.5).is_err());
        let g = ArrayGeometry::with_elements(32).unwrap();
        assert_eq!((g.count_h(), g.count_v()), (8, 4));
        let g = ArrayGeometry::with_elements(256).unwrap();
        assert_eq!((g.count_h(), g.count_v()), (16, 16));
        assert_eq!(ArrayGeometry::with_elements(7).unwrap().elements(), 7);
    }

    #[test]
    fn budget_rejects_zero_gain() {
        assert!(LinkBudget::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(LinkBudget::new(1.0, 1.0, -1.0, 1.0).is_err());
        let b = LinkBudget::from_db(-48.0, -59.0, -94.0, 0.0).unwrap();
        assert!((b.gain_bs_rs() - 1.584_893e-5).abs() < 1e-10);
        assert!((b.noise_power() - 3.981_072e-10).abs() < 1e-15);
    }

    #[test]
    fn numerology_invariants() {
        assert!(OfdmNumerology::new(64, 64, 30e3, 10).is_err());
        assert!(OfdmNumerology::new(64, 8, 30e3, 1).is_err());
        let o = OfdmNumerology::nr_30khz();
        assert!((o.symbol_duration() - 1096.0 / 1024.0 / 30e3).abs() < 1e-15);
    }

    #[test]
    fn speed_conversion_round_trips() {
        let m = MobilityModel::from_speed_kmh(3.0, 3.5e9).unwrap();
        assert!((m.doppler_hz() - 9.722_222_222).abs() < 1e-6);
        assert!((m.speed_kmh() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cascade_single_element() {
        let sc = SubcarrierChannel::new(DMatrix::from_element(1, 1, c(1.0, 0.0)), vec![c(1.0, 0.0)], 1).unwrap();
        let q = sc.cascade(&[c(1.0, 0.0)], 0).unwrap();
        assert_eq!(q[0], c(1.0, 0.0));
    }

    #[test]
    fn cascade_coherent_sum() {
        let m = 64;
        let sc = SubcarrierChannel::new(DMatrix::from_element(3, m, c(1.0, 0.0)), vec![c(1.0, 0.0); m], 1).unwrap();
        let q = sc.cascade(&vec![c(1.0, 0.0); m], 0).unwrap();
        assert!(q.iter().all(|v| *v == c(64.0, 0.0)));
    }

    #[test]
    fn cascade_matches_triple_loop() {
        let mut rng = StreamFactory::new(11).stream(0, 0);
        let (b, m, n) = (2, 3, 4);
        for _ in 0..50 {
            let h = DMatrix::from_fn(b, m, |_, _| complex_normal(&mut rng, 1.0));
            let g: Vec<_> = (0..n * m).map(|_| complex_normal(&mut rng, 1.0)).collect();
            let psi: Vec<_> = (0..m).map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * 6.0)).collect();
            let sc = SubcarrierChannel::new(h.clone(), g.clone(), n).unwrap();
            for sym in 0..n {
                let q = sc.cascade(&psi, sym).unwrap();
                for bb in 0..b {
                    let mut acc = c(0.0, 0.0);
                    for mm in 0..m {
                        acc += psi[mm] * h[(bb, mm)] * g[sym * m + mm];
                    }
                    assert!((q[bb] - acc).norm() <= 1e-12 * acc.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn cascade_dimension_errors() {
        let sc = SubcarrierChannel::new(DMatrix::from_element(2, 3, c(1.0, 0.0)), vec![c(1.0, 0.0); 3], 1).unwrap();
        assert!(matches!(sc.cascade(&[c(1.0, 0.0); 2], 0), Err(Error::DimensionMismatch(_))));
        assert!(matches!(sc.cascade(&[c(1.0, 0.0); 3], 1), Err(Error::OutOfRange { .. })));
        assert!(SubcarrierChannel::new(DMatrix::from_element(2, 3, c(1.0, 0.0)), vec![c(1.0, 0.0); 4], 1).is_err());
    }

    #[test]
    fn realization_level_cascade_checks_indices() {
        let sc = SubcarrierChannel::new(DMatrix::from_element(1, 2, c(1.0, 0.0)), vec![c(1.0, 0.0); 4], 2).unwrap();
        let real = ChannelRealization::new(vec![sc]).unwrap();
        let phases = PhaseSchedule::from_phases(2, 2, &[0.0; 4]).unwrap();
        assert_eq!(cascade(&real, &phases, 0, 1).unwrap()[0], c(2.0, 0.0));
        assert!(cascade(&real, &phases, 1, 0).is_err());
    }
}
