//! Jakes temporal correlation of the RS-UE link.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

use super::{complex_normal, MobilityModel, OfdmNumerology};
use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the largest one are treated as zero.
const RANK_TOLERANCE: f64 = 1e-12;

/// Zero-order Bessel function of the first kind.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Argument 2π f_d (Δn/Δf)(1 + L_CP/K) of the Jakes correlation.
fn jakes_argument(delta_n: i64, mob: &MobilityModel, ofdm: &OfdmNumerology) -> f64 {
    2.0 * PI * mob.doppler_hz() * delta_n.unsigned_abs() as f64 * ofdm.symbol_duration()
}

/// Signed Jakes correlation J0(·) between symbols `delta_n` apart.
pub fn doppler_correlation(delta_n: i64, mob: &MobilityModel, ofdm: &OfdmNumerology) -> f64 {
    if delta_n == 0 || mob.is_static() {
        return 1.0;
    }
    bessel_j0(jakes_argument(delta_n, mob, ofdm))
}

/// Magnitude of the RS-UE correlation between symbols `delta_n` apart.
pub fn doppler_autocorr(delta_n: i64, mob: &MobilityModel, ofdm: &OfdmNumerology) -> f64 {
    doppler_correlation(delta_n, mob, ofdm).abs()
}

/// Coloring transform for length-N sequences with Jakes correlation.
///
/// Holds a PSD square root `F` (N×r) of the Toeplitz correlation matrix, so
/// `F·w` with `w ~ CN(0, I_r)` has covariance R. Eigen-directions with
/// non-positive (or numerically negligible) eigenvalues are dropped.
#[derive(Debug, Clone)]
pub struct TemporalColoring {
    symbols: usize,
    factor: DMatrix<f64>,
}

impl TemporalColoring {
    pub fn new(mob: &MobilityModel, ofdm: &OfdmNumerology) -> Result<Self> {
        let n = ofdm.frame_symbols();
        if mob.is_static() {
            return Ok(Self { symbols: n, factor: DMatrix::from_element(n, 1, 1.0) });
        }
        let lags: Vec<f64> = (0..n as i64).map(|d| doppler_correlation(d, mob, ofdm)).collect();
        let r = DMatrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)]);
        let eig = SymmetricEigen::new(r);
        let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() || max <= 0.0 {
            return Err(Error::Factorization(format!("largest eigenvalue is {max}")));
        }
        let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > RANK_TOLERANCE * max).collect();
        let mut factor = DMatrix::zeros(n, keep.len());
        for (col, &i) in keep.iter().enumerate() {
            let scale = eig.eigenvalues[i].sqrt();
            for row in 0..n {
                factor[(row, col)] = eig.eigenvectors[(row, i)] * scale;
            }
        }
        // Every sequence sample must keep unit variance after clipping.
        for row in 0..n {
            let var: f64 = factor.row(row).iter().map(|v| v * v).sum();
            if !var.is_finite() || (var - 1.0).abs() > 1e-6 {
                return Err(Error::Factorization(format!(
                    "variance of symbol {row} is {var} after eigenvalue clipping"
                )));
            }
        }
        Ok(Self { symbols: n, factor })
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    /// Number of retained eigen-directions.
    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    /// Draws one correlated sequence with per-sample `variance`, writing
    /// sample `n` to `out[n * stride]`.
    pub fn sample_strided<R: Rng + ?Sized>(&self, rng: &mut R, variance: f64, out: &mut [Complex64], stride: usize) {
        debug_assert!(out.len() > (self.symbols - 1) * stride);
        for n in 0..self.symbols {
            out[n * stride] = Complex64::new(0.0, 0.0);
        }
        for col in self.factor.column_iter() {
            let w = complex_normal(rng, variance);
            for (n, f) in col.iter().enumerate() {
                out[n * stride] += w * *f;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, variance: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.symbols];
        self.sample_strided(rng, variance, &mut out, 1);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;

    /// Power series Σ (-1)^k (x/2)^{2k} / (k!)², 40 terms.
    fn j0_series(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let q = x * x / 4.0;
        for k in 1..40 {
            term *= -q / (k as f64 * k as f64);
            sum += term;
        }
        sum
    }

    fn numerology() -> OfdmNumerology {
        OfdmNumerology::new(1024, 72, 30e3, 140).unwrap()
    }

    #[test]
    fn bessel_matches_power_series() {
        for i in 0..=80 {
            let x = i as f64 * 0.1;
            assert!((bessel_j0(x) - j0_series(x)).abs() < 1e-12, "x={x}");
        }
        let root = 2.404_825_557_695_773;
        assert!(j0_series(root).abs() < 1e-12);
    }

    #[test]
    fn zero_lag_and_static_limits() {
        let ofdm = numerology();
        let mob = MobilityModel::new(250.0, 3.5e9).unwrap();
        assert_eq!(doppler_autocorr(0, &mob, &ofdm), 1.0);
        let stat = MobilityModel::static_at(3.5e9).unwrap();
        assert_eq!(doppler_autocorr(100, &stat, &ofdm), 1.0);
        for d in 1..20 {
            assert_eq!(doppler_autocorr(d, &mob, &ofdm), doppler_autocorr(-d, &mob, &ofdm));
        }
    }

    #[test]
    fn first_bessel_root_gives_zero_correlation() {
        let ofdm = numerology();
        // Doppler chosen so the lag-1 argument lands on the first J0 root.
        let root = 2.404_825_557_695_773;
        let fd = root / (2.0 * PI * ofdm.symbol_duration());
        let mob = MobilityModel::new(fd, 3.5e9).unwrap();
        assert!(doppler_autocorr(1, &mob, &ofdm) < 1e-6);
    }

    #[test]
    fn static_coloring_repeats_one_draw() {
        let ofdm = numerology();
        let c = TemporalColoring::new(&MobilityModel::static_at(3.5e9).unwrap(), &ofdm).unwrap();
        assert_eq!(c.rank(), 1);
        let mut rng = StreamFactory::new(1).stream(0, 0);
        let s = c.sample(&mut rng, 2.0);
        assert!(s.iter().all(|v| *v == s[0]));
    }

    #[test]
    fn coloring_preserves_unit_diagonal() {
        let ofdm = numerology();
        for fd in [10.0, 100.0, 500.0, 5000.0] {
            let c = TemporalColoring::new(&MobilityModel::new(fd, 3.5e9).unwrap(), &ofdm).unwrap();
            assert!(c.rank() >= 1 && c.rank() <= 140);
            let cov = &c.factor * c.factor.transpose();
            for d in 0..10 {
                let want = doppler_correlation(d as i64, &MobilityModel::new(fd, 3.5e9).unwrap(), &ofdm);
                assert!((cov[(0, d)] - want).abs() < 1e-8, "fd={fd} lag={d}");
            }
        }
    }

    #[test]
    fn lag_correlation_matches_jakes() {
        let ofdm = numerology();
        let mob = MobilityModel::new(2000.0, 3.5e9).unwrap();
        let c = TemporalColoring::new(&mob, &ofdm).unwrap();
        let mut rng = StreamFactory::new(5).stream(0, 0);
        let streams = 20_000;
        let mut num = [Complex64::new(0.0, 0.0); 4];
        let mut den = 0.0;
        for _ in 0..streams {
            let s = c.sample(&mut rng, 1.0);
            den += s.iter().map(|v| v.norm_sqr()).sum::<f64>() / s.len() as f64;
            for (lag, acc) in num.iter_mut().enumerate() {
                let lag = lag + 1;
                let mut a = Complex64::new(0.0, 0.0);
                for n in 0..s.len() - lag {
                    a += s[n].conj() * s[n + lag];
                }
                *acc += a / (s.len() - lag) as f64;
            }
        }
        for (lag, acc) in num.iter().enumerate() {
            let est = acc.norm() / den;
            let want = doppler_autocorr(lag as i64 + 1, &mob, &ofdm);
            assert!((est - want).abs() < 0.01, "lag {} est {est} want {want}", lag + 1);
        }
    }
}
