//! Differential PSK over time and its non-coherent detector.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Phase-distance slack within which two constellation points count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// PSK constellation order, one of 2, 4, 8 or 16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct PskOrder(u32);

impl PskOrder {
    pub fn new(order: u32) -> Result<Self> {
        match order {
            2 | 4 | 8 | 16 => Ok(Self(order)),
            _ => Err(invalid("constellation_order", format!("{order} is not one of 2, 4, 8, 16"))),
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn size(self) -> usize {
        self.0 as usize
    }

    /// Rotation π/order applied to every point.
    pub fn offset(self) -> f64 {
        PI / self.0 as f64
    }

    pub fn phase(self, index: usize) -> f64 {
        2.0 * PI * index as f64 / self.0 as f64 + self.offset()
    }

    /// Unit-modulus point for `index`.
    pub fn point(self, index: usize) -> Result<Complex64> {
        if index >= self.size() {
            return Err(Error::OutOfRange { what: "constellation", index, len: self.size() });
        }
        Ok(Complex64::from_polar(1.0, self.phase(index)))
    }
}

impl TryFrom<u32> for PskOrder {
    type Error = Error;

    fn try_from(v: u32) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PskOrder> for u32 {
    fn from(o: PskOrder) -> u32 {
        o.0
    }
}

/// K×N grid of symbols of one constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    pub values: DMatrix<Complex64>,
    pub order: PskOrder,
}

/// K×(N−1) decision variables; column `j` holds the pair (j, j+1).
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionGrid {
    pub values: DMatrix<Complex64>,
}

/// Maps a K×N index grid to PSK points.
pub fn psk_map(indices: &DMatrix<usize>, order: PskOrder) -> Result<SymbolGrid> {
    let mut values = DMatrix::zeros(indices.nrows(), indices.ncols());
    for (dst, &i) in values.iter_mut().zip(indices.iter()) {
        *dst = order.point(i)?;
    }
    Ok(SymbolGrid { values, order })
}

/// Nearest-phase indices of every grid entry.
pub fn psk_demap(grid: &SymbolGrid) -> DMatrix<usize> {
    grid.values.map(|z| decide(z, grid.order).index)
}

/// Differential encoding along each row (time), then √P_x scaling.
pub fn diff_encode(s: &SymbolGrid, tx_power: f64) -> SymbolGrid {
    let mut values = s.values.clone();
    for mut row in values.row_iter_mut() {
        diff_encode_row(&mut row.iter_mut(), tx_power);
    }
    SymbolGrid { values, order: s.order }
}

fn diff_encode_row(symbols: &mut dyn Iterator<Item = &mut Complex64>, tx_power: f64) {
    let amp = tx_power.sqrt();
    let mut state = Complex64::new(1.0, 0.0);
    for v in symbols {
        state *= *v;
        *v = state * amp;
    }
}

/// In-place differential encoding of one subcarrier's symbol stream.
pub fn diff_encode_slice(symbols: &mut [Complex64], tx_power: f64) {
    diff_encode_row(&mut symbols.iter_mut(), tx_power);
}

fn check_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// z = ⟨y_prev, y_curr⟩ / (M·B).
pub fn diff_decode(
    y_prev: &[Complex64],
    y_curr: &[Complex64],
    m_elements: usize,
    b_antennas: usize,
) -> Result<Complex64> {
    check_len(y_prev.len(), y_curr.len(), "received vectors")?;
    check_len(y_prev.len(), b_antennas, "received vector vs antennas")?;
    Ok(inner(y_prev, y_curr) / (m_elements * b_antennas) as f64)
}

/// Differential decoding of a whole received frame for one subcarrier.
/// `received` holds N consecutive B-vectors; returns N−1 decision variables.
pub fn diff_decode_stream(received: &[Complex64], b_antennas: usize, m_elements: usize) -> Vec<Complex64> {
    let scale = 1.0 / (m_elements * b_antennas) as f64;
    received.chunks_exact(b_antennas).collect::<Vec<_>>().windows(2).map(|w| inner(w[0], w[1]) * scale).collect()
}

/// Signal and interference terms of a differential decision variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceTerms {
    /// ⟨q_prev, q_curr⟩·x_prev*·x_curr, the useful term.
    pub i1: Complex64,
    /// ⟨q_prev·x_prev, v_curr⟩.
    pub i2: Complex64,
    /// ⟨v_prev, q_curr·x_curr⟩.
    pub i3: Complex64,
    /// ⟨v_prev, v_curr⟩.
    pub i4: Complex64,
}

impl InterferenceTerms {
    pub fn decision_variable(&self, m_elements: usize, b_antennas: usize) -> Complex64 {
        (self.i1 + self.i2 + self.i3 + self.i4) / (m_elements * b_antennas) as f64
    }
}

/// Splits z into its four terms for y = q·x + v.
pub fn decompose_terms(
    q_prev: &[Complex64],
    q_curr: &[Complex64],
    x_prev: Complex64,
    x_curr: Complex64,
    v_prev: &[Complex64],
    v_curr: &[Complex64],
) -> Result<InterferenceTerms> {
    let b = q_prev.len();
    check_len(b, q_curr.len(), "q_curr")?;
    check_len(b, v_prev.len(), "v_prev")?;
    check_len(b, v_curr.len(), "v_curr")?;
    let prod = inner(q_prev, q_curr);
    let i2: Complex64 = q_prev.iter().zip(v_curr).map(|(q, v)| (q * x_prev).conj() * v).sum();
    let i3: Complex64 = v_prev.iter().zip(q_curr).map(|(v, q)| v.conj() * q * x_curr).sum();
    Ok(InterferenceTerms { i1: prod * x_prev.conj() * x_curr, i2, i3, i4: inner(v_prev, v_curr) })
}

/// A symbol decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub index: usize,
    /// The decision variable was exactly zero and carried no phase.
    pub degenerate: bool,
}

fn wrapped_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Nearest constellation phase to `z`; ties go to the smaller index.
pub fn decide(z: Complex64, order: PskOrder) -> Decision {
    if z.re == 0.0 && z.im == 0.0 {
        return Decision { index: 0, degenerate: true };
    }
    let angle = z.arg();
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for i in 0..order.size() {
        let d = wrapped_distance(angle, order.phase(i));
        if d < best_dist - TIE_TOLERANCE {
            best = i;
            best_dist = d;
        }
    }
    Decision { index: best, degenerate: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn four() -> PskOrder {
        PskOrder::new(4).unwrap()
    }

    #[test]
    fn orders_validated() {
        assert!(PskOrder::new(3).is_err());
        assert!(PskOrder::new(32).is_err());
        assert!(four().point(4).is_err());
    }

    #[test]
    fn qpsk_index_zero() {
        assert!((four().point(0).unwrap() - Complex64::from_polar(1.0, PI / 4.0)).norm() < 1e-15);
        let bpsk = PskOrder::new(2).unwrap();
        for i in 0..2 {
            assert!((bpsk.point(i).unwrap().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn map_demap_round_trip_order_16() {
        let order = PskOrder::new(16).unwrap();
        let idx = DMatrix::from_fn(4, 16, |r, col| (r * 16 + col) % 16);
        let grid = psk_map(&idx, order).unwrap();
        assert_eq!(psk_demap(&grid), idx);
        assert!(psk_map(&DMatrix::from_element(1, 1, 16), order).is_err());
    }

    #[test]
    fn encode_ones_stays_constant() {
        let grid = SymbolGrid { values: DMatrix::from_element(3, 5, c(1.0, 0.0)), order: four() };
        let x = diff_encode(&grid, 2.0);
        assert!(x.values.iter().all(|v| (v - c(2f64.sqrt(), 0.0)).norm() < 1e-15));
    }

    #[test]
    fn encode_cumulative_phase() {
        let s = Complex64::from_polar(1.0, PI / 2.0);
        let grid = SymbolGrid { values: DMatrix::from_element(1, 4, s), order: four() };
        let x = diff_encode(&grid, 1.0);
        for (n, want) in [PI / 2.0, PI, 1.5 * PI, 2.0 * PI].iter().enumerate() {
            assert!((x.values[(0, n)] - Complex64::from_polar(1.0, *want)).norm() < 1e-12);
        }
    }

    #[test]
    fn noise_free_scalar_decode() {
        let px: f64 = 3.0;
        let s = four().point(2).unwrap();
        let z = diff_decode(&[c(px.sqrt(), 0.0)], &[s * px.sqrt()], 1, 1).unwrap();
        assert!((z - s * px).norm() < 1e-12);
        assert_eq!(diff_decode(&[c(1.0, 1.0)], &[c(0.0, 0.0)], 1, 1).unwrap(), c(0.0, 0.0));
        assert!(diff_decode(&[c(1.0, 1.0)], &[c(0.0, 0.0), c(1.0, 0.0)], 1, 2).is_err());
    }

    #[test]
    fn decode_matches_loop() {
        let a = [c(0.3, -1.0), c(2.0, 0.5), c(-0.7, 0.1), c(0.0, 1.2)];
        let b = [c(1.1, 0.4), c(-0.2, -0.9), c(0.6, 0.6), c(1.5, -0.3)];
        let mut acc = c(0.0, 0.0);
        for i in 0..4 {
            acc += a[i].conj() * b[i];
        }
        let z = diff_decode(&a, &b, 7, 4).unwrap();
        assert!((z - acc / 28.0).norm() < 1e-12);
        let stream: Vec<_> = a.iter().chain(b.iter()).copied().collect();
        assert!((diff_decode_stream(&stream, 4, 7)[0] - z).norm() < 1e-15);
    }

    #[test]
    fn decomposition_noise_free_and_blocked() {
        let q = [c(1.0, 2.0), c(-0.5, 0.3)];
        let zero = [c(0.0, 0.0); 2];
        let (xp, xc) = (c(1.0, 0.0), Complex64::from_polar(1.0, 1.0));
        let t = decompose_terms(&q, &q, xp, xc, &zero, &zero).unwrap();
        assert_eq!((t.i2, t.i3, t.i4), (zero[0], zero[0], zero[0]));
        let v = [c(0.1, 0.2), c(0.3, -0.1)];
        let t = decompose_terms(&zero, &zero, xp, xc, &v, &v).unwrap();
        assert_eq!((t.i1, t.i2, t.i3), (zero[0], zero[0], zero[0]));
        assert!((t.decision_variable(3, 2) - t.i4 / 6.0).norm() < 1e-15);
        assert!(decompose_terms(&q, &q[..1], xp, xc, &v, &v).is_err());
    }

    #[test]
    fn decision_scale_invariant_and_tie() {
        assert_eq!(decide(Complex64::from_polar(5.0, PI / 4.0), four()).index, 0);
        assert_eq!(decide(c(0.0, 1.0), four()).index, 0);
        assert_eq!(decide(c(-1.0, 0.0), four()).index, 1);
        let d = decide(c(0.0, 0.0), four());
        assert!(d.degenerate && d.index == 0);
    }

    proptest! {
        #[test]
        fn decomposition_reconstructs_decision_variable(
            vals in proptest::collection::vec(-3.0f64..3.0, 16),
            ph in 0.0f64..std::f64::consts::TAU, idx in 0usize..8, px in 0.1f64..10.0,
        ) {
            let order = PskOrder::new(8).unwrap();
            let cv = |i: usize| c(vals[i], vals[i + 1]);
            let (qp, qc) = ([cv(0), cv(2)], [cv(4), cv(6)]);
            let (vp, vc) = ([cv(8), cv(10)], [cv(12), cv(14)]);
            let xp = Complex64::from_polar(px.sqrt(), ph);
            let xc = xp * order.point(idx).unwrap();
            let yp: Vec<_> = qp.iter().zip(&vp).map(|(q, v)| q * xp + v).collect();
            let yc: Vec<_> = qc.iter().zip(&vc).map(|(q, v)| q * xc + v).collect();
            let z = diff_decode(&yp, &yc, 5, 2).unwrap();
            let t = decompose_terms(&qp, &qc, xp, xc, &vp, &vc).unwrap();
            let zt = t.decision_variable(5, 2);
            prop_assert!((z - zt).norm() <= 1e-10 * z.norm().max(1e-12));
        }

        #[test]
        fn positive_scaling_keeps_decision(re in -5.0f64..5.0, im in -5.0f64..5.0, a in 1e-6f64..1e6) {
            let z = c(re, im);
            prop_assume!(z.norm() > 1e-9);
            for o in [2, 4, 8, 16] {
                let order = PskOrder::new(o).unwrap();
                prop_assert_eq!(decide(z, order).index, decide(z * a, order).index);
            }
        }

        #[test]
        fn loopback_recovers_indices(seq in proptest::collection::vec(0usize..16, 2..40), o in 0usize..4) {
            let order = PskOrder::new([2, 4, 8, 16][o]).unwrap();
            let mut s: Vec<Complex64> = seq.iter().map(|i| order.point(i % order.size()).unwrap()).collect();
            s[0] = order.point(0).unwrap();
            let mut x = s.clone();
            diff_encode_slice(&mut x, 2.5);
            prop_assert!(x.iter().all(|v| (v.norm() - 2.5f64.sqrt()).abs() < 1e-12));
            for n in 1..x.len() {
                let z = diff_decode(&[x[n - 1]], &[x[n]], 1, 1).unwrap();
                prop_assert_eq!(decide(z, order).index, seq[n] % order.size());
            }
        }
    }
}
