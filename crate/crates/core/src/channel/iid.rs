//! IID Rayleigh fading on both links.
//!
//! The BS-RS matrix is quasi-static over a frame. The RS-UE vector evolves
//! over the frame with Jakes correlation, independently per element and per
//! subcarrier.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::{
    complex_normal, ArrayGeometry, ChannelRealization, LinkBudget, MobilityModel, OfdmNumerology, SubcarrierChannel,
    TemporalColoring,
};
use crate::error::Result;

/// One B×M BS-RS matrix with CN(0, `variance`) entries.
pub fn draw_bs_rs<R: Rng + ?Sized>(antennas: usize, elements: usize, variance: f64, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(antennas, elements, |_, _| complex_normal(rng, variance))
}

/// One RS-UE frame (row-major N×M) of correlated CN(0, `variance`) sequences.
pub fn draw_rs_ue<R: Rng + ?Sized>(
    elements: usize,
    coloring: &TemporalColoring,
    variance: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); coloring.symbols() * elements];
    for m in 0..elements {
        coloring.sample_strided(rng, variance, &mut out[m..], elements);
    }
    out
}

/// Draws the IID channel of a single subcarrier: H first, then g.
pub fn draw_subcarrier<R: Rng + ?Sized>(
    antennas: usize,
    elements: usize,
    budget: &LinkBudget,
    coloring: &TemporalColoring,
    rng: &mut R,
) -> SubcarrierChannel {
    let h = draw_bs_rs(antennas, elements, budget.gain_bs_rs(), rng);
    let g = draw_rs_ue(elements, coloring, budget.gain_rs_ue(), rng);
    SubcarrierChannel::new(h, g, coloring.symbols()).expect("shapes agree by construction")
}

/// BS-RS matrices for every subcarrier of a frame.
pub fn gen_bs_rs_iid<R: Rng + ?Sized>(
    geom_bs: &ArrayGeometry,
    geom_rs: &ArrayGeometry,
    budget: &LinkBudget,
    ofdm: &OfdmNumerology,
    rng: &mut R,
) -> Vec<DMatrix<Complex64>> {
    (0..ofdm.subcarriers())
        .map(|_| draw_bs_rs(geom_bs.elements(), geom_rs.elements(), budget.gain_bs_rs(), rng))
        .collect()
}

/// RS-UE sequences (row-major N×M) for every subcarrier of a frame.
pub fn gen_rs_ue_correlated<R: Rng + ?Sized>(
    geom_rs: &ArrayGeometry,
    budget: &LinkBudget,
    ofdm: &OfdmNumerology,
    mob: &MobilityModel,
    rng: &mut R,
) -> Result<Vec<Vec<Complex64>>> {
    let coloring = TemporalColoring::new(mob, ofdm)?;
    Ok((0..ofdm.subcarriers()).map(|_| draw_rs_ue(geom_rs.elements(), &coloring, budget.gain_rs_ue(), rng)).collect())
}

/// Full IID frame realization.
pub fn gen_iid_pair<R: Rng + ?Sized>(
    geom_bs: &ArrayGeometry,
    geom_rs: &ArrayGeometry,
    budget: &LinkBudget,
    ofdm: &OfdmNumerology,
    mob: &MobilityModel,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let coloring = TemporalColoring::new(mob, ofdm)?;
    let subcarriers = (0..ofdm.subcarriers())
        .map(|_| draw_subcarrier(geom_bs.elements(), geom_rs.elements(), budget, &coloring, rng))
        .collect();
    ChannelRealization::new(subcarriers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::doppler_autocorr;
    use crate::rng::StreamFactory;

    #[test]
    fn bs_rs_second_moment() {
        let mut rng = StreamFactory::new(3).stream(0, 0);
        let h = draw_bs_rs(1000, 1000, 1.0, &mut rng);
        let mean: f64 = h.iter().map(|v| v.norm_sqr()).sum::<f64>() / 1e6;
        assert!((mean - 1.0).abs() < 0.005, "{mean}");
        let mean_c: Complex64 = h.iter().sum::<Complex64>() / 1e6;
        assert!(mean_c.norm() < 0.005);
    }

    #[test]
    fn same_seed_same_realization() {
        let bs = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let rs = ArrayGeometry::half_wavelength(4, 2).unwrap();
        let budget = LinkBudget::new(1.0, 2.0, 1.0, 1.0).unwrap();
        let ofdm = OfdmNumerology::new(16, 2, 30e3, 10).unwrap();
        let mob = MobilityModel::new(50.0, 3.5e9).unwrap();
        let f = StreamFactory::new(99);
        let a = gen_iid_pair(&bs, &rs, &budget, &ofdm, &mob, &mut f.stream(0, 0)).unwrap();
        let b = gen_iid_pair(&bs, &rs, &budget, &ofdm, &mob, &mut f.stream(0, 0)).unwrap();
        assert_eq!(a, b);
        let h1 = gen_bs_rs_iid(&bs, &rs, &budget, &ofdm, &mut f.stream(1, 0));
        let h2 = gen_bs_rs_iid(&bs, &rs, &budget, &ofdm, &mut f.stream(1, 0));
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 16);
    }

    #[test]
    fn static_rs_ue_is_constant() {
        let rs = ArrayGeometry::half_wavelength(4, 4).unwrap();
        let budget = LinkBudget::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let ofdm = OfdmNumerology::new(32, 4, 30e3, 20).unwrap();
        let mob = MobilityModel::static_at(3.5e9).unwrap();
        let g = gen_rs_ue_correlated(&rs, &budget, &ofdm, &mob, &mut StreamFactory::new(1).stream(0, 0)).unwrap();
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for frame in &g {
            for n in 1..20 {
                for m in 0..16 {
                    num += frame[(n - 1) * 16 + m].conj() * frame[n * 16 + m];
                    den += frame[(n - 1) * 16 + m].norm_sqr();
                }
            }
        }
        assert!((num.norm() / den - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rs_ue_variance_and_lag_one() {
        // 10^5 streams of a 140-symbol frame at 100 Hz Doppler.
        let ofdm = OfdmNumerology::new(1024, 72, 30e3, 140).unwrap();
        let mob = MobilityModel::new(100.0, 3.5e9).unwrap();
        let coloring = TemporalColoring::new(&mob, &ofdm).unwrap();
        let mut rng = StreamFactory::new(17).stream(0, 0);
        let variance = 0.7;
        let streams = 100_000;
        let mut lag1 = Complex64::new(0.0, 0.0);
        let mut power = 0.0;
        let mut first = 0.0;
        let mut count = 0usize;
        for _ in 0..streams {
            let s = coloring.sample(&mut rng, variance);
            for n in 1..s.len() {
                lag1 += s[n - 1].conj() * s[n];
            }
            power += s.iter().map(|v| v.norm_sqr()).sum::<f64>();
            first += s[0].norm_sqr();
            count += s.len();
        }
        let rho = lag1.norm() / (139.0 * streams as f64) / (power / count as f64);
        assert!((rho - doppler_autocorr(1, &mob, &ofdm)).abs() < 0.01);
        assert!((power / count as f64 / variance - 1.0).abs() < 0.01);
        assert!((first / streams as f64 / variance - 1.0).abs() < 0.02);
    }
}
