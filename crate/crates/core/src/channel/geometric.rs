//! Cluster-based geometric wideband channel.
//!
//! Each link is a superposition of clusters with exponential delays,
//! exponentially decaying powers, wrapped-Gaussian azimuth offsets and
//! Laplacian zenith offsets around the line-of-sight directions implied by
//! the node positions. One ray per cluster.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use super::{ArrayGeometry, ChannelRealization, LinkBudget, MobilityModel, OfdmNumerology, SubcarrierChannel};
use crate::error::{invalid, Result};

/// Statistics of the clusters on one link. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    cluster_count: usize,
    delay_spread_s: f64,
    asd_deg: f64,
    asa_deg: f64,
    zsd_deg: f64,
    zsa_deg: f64,
}

impl ClusterProfile {
    pub fn new(
        cluster_count: usize,
        delay_spread_s: f64,
        asd_deg: f64,
        asa_deg: f64,
        zsd_deg: f64,
        zsa_deg: f64,
    ) -> Result<Self> {
        if cluster_count == 0 {
            return Err(invalid("cluster_count", "at least one cluster is required"));
        }
        if !(delay_spread_s > 0.0) || !delay_spread_s.is_finite() {
            return Err(invalid("delay_spread_s", "must be positive"));
        }
        for (name, v) in [("asd_deg", asd_deg), ("asa_deg", asa_deg), ("zsd_deg", zsd_deg), ("zsa_deg", zsa_deg)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, "angular spreads must be positive"));
            }
        }
        Ok(Self { cluster_count, delay_spread_s, asd_deg, asa_deg, zsd_deg, zsa_deg })
    }

    /// Indoor-factory low angular spread: ASD 7°, ASA 12°, ZSD 25°, ZSA 30°.
    pub fn low_as() -> Self {
        Self::new(20, 0.15e-3, 7.0, 12.0, 25.0, 30.0).expect("valid profile")
    }

    /// Indoor-factory high angular spread: ASD 30°, ASA 50°, ZSD 130°, ZSA 150°.
    pub fn high_as() -> Self {
        Self::new(20, 0.15e-3, 30.0, 50.0, 130.0, 150.0).expect("valid profile")
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn delay_spread_s(&self) -> f64 {
        self.delay_spread_s
    }

    pub fn asd_deg(&self) -> f64 {
        self.asd_deg
    }

    pub fn asa_deg(&self) -> f64 {
        self.asa_deg
    }

    pub fn zsd_deg(&self) -> f64 {
        self.zsd_deg
    }

    pub fn zsa_deg(&self) -> f64 {
        self.zsa_deg
    }
}

/// Node positions in metres and the UE direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeLayout {
    pub bs: [f64; 3],
    pub rs: [f64; 3],
    pub ue: [f64; 3],
    pub motion_azimuth_deg: f64,
}

impl Default for NodeLayout {
    fn default() -> Self {
        Self { bs: [0.0, 0.0, 3.0], rs: [3.0, 0.0, 3.0], ue: [6.0, 1.0, 1.0], motion_azimuth_deg: 0.0 }
    }
}

/// Azimuth/zenith pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub azimuth_deg: f64,
    pub zenith_deg: f64,
}

impl Direction {
    /// Direction of `to` as seen from `from`.
    pub fn between(from: [f64; 3], to: [f64; 3]) -> Self {
        let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let zenith = if r > 0.0 { (d[2] / r).clamp(-1.0, 1.0).acos() } else { PI / 2.0 };
        Self { azimuth_deg: d[1].atan2(d[0]).to_degrees(), zenith_deg: zenith.to_degrees() }
    }
}

/// Steering vector of a URA lying in the y-z plane.
///
/// Element (p, q), p along the horizontal axis and q along the vertical
/// axis, sits at index `q * count_h + p` and carries
/// exp(j2π[d_h·p·sinθ·sinφ + d_v·q·cosθ]) for azimuth φ and zenith θ.
pub fn ura_response(azimuth_deg: f64, zenith_deg: f64, geom: &ArrayGeometry) -> DVector<Complex64> {
    let (az, zen) = (azimuth_deg.to_radians(), zenith_deg.to_radians());
    let u = geom.spacing_h() * zen.sin() * az.sin();
    let v = geom.spacing_v() * zen.cos();
    DVector::from_iterator(
        geom.elements(),
        (0..geom.count_v()).flat_map(|q| {
            (0..geom.count_h()).map(move |p| Complex64::from_polar(1.0, 2.0 * PI * (u * p as f64 + v * q as f64)))
        }),
    )
}

fn wrap_degrees(deg: f64) -> f64 {
    (deg + 180.0).rem_euclid(360.0) - 180.0
}

fn wrapped_gaussian<R: Rng + ?Sized>(rng: &mut R, mean_deg: f64, spread_deg: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    wrap_degrees(mean_deg + spread_deg * z)
}

/// Laplacian with standard deviation `spread_deg` (scale spread/√2).
fn laplacian<R: Rng + ?Sized>(rng: &mut R, mean_deg: f64, spread_deg: f64) -> f64 {
    let scale = spread_deg / SQRT_2;
    let u: f64 = rng.random::<f64>() - 0.5;
    mean_deg - scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

/// Delays τ ~ Exp(mean DS) and powers ∝ exp(−τ/DS), normalized to sum 1.
fn draw_delay_profile<R: Rng + ?Sized>(rng: &mut R, profile: &ClusterProfile) -> (Vec<f64>, Vec<f64>) {
    let ds = profile.delay_spread_s;
    let delays: Vec<f64> = (0..profile.cluster_count).map(|_| -ds * (1.0 - rng.random::<f64>()).ln()).collect();
    let raw: Vec<f64> = delays.iter().map(|t| (-t / ds).exp()).collect();
    let total: f64 = raw.iter().sum();
    (delays, raw.into_iter().map(|p| p / total).collect())
}

/// One cluster of the BS-RS link.
#[derive(Debug, Clone, PartialEq)]
pub struct BsRsCluster {
    pub delay_s: f64,
    pub power: f64,
    /// √power · random phase.
    pub gain: Complex64,
    pub bs_arrival: Direction,
    pub rs_departure: Direction,
    bs_steering: DVector<Complex64>,
    rs_steering_conj: DVector<Complex64>,
}

/// One cluster of the RS-UE link.
#[derive(Debug, Clone, PartialEq)]
pub struct RsUeCluster {
    pub delay_s: f64,
    pub power: f64,
    pub gain: Complex64,
    pub rs_arrival: Direction,
    pub ue_departure: Direction,
    /// f_d·cos(α_c − α_motion).
    pub doppler_hz: f64,
    rs_steering: DVector<Complex64>,
}

/// Cluster geometry of one frame; expands to per-subcarrier responses.
#[derive(Debug, Clone)]
pub struct GeometricChannel {
    bs_rs: Vec<BsRsCluster>,
    rs_ue: Vec<RsUeCluster>,
    gain_bs_rs: f64,
    gain_rs_ue: f64,
    ofdm: OfdmNumerology,
    antennas: usize,
    elements: usize,
}

impl GeometricChannel {
    #[allow(clippy::too_many_arguments)]
    pub fn draw<R: Rng + ?Sized>(
        geom_bs: &ArrayGeometry,
        geom_rs: &ArrayGeometry,
        budget: &LinkBudget,
        ofdm: &OfdmNumerology,
        mob: &MobilityModel,
        layout: &NodeLayout,
        profile_bs_rs: &ClusterProfile,
        profile_rs_ue: &ClusterProfile,
        rng: &mut R,
    ) -> Result<Self> {
        let los_bs_from_rs = Direction::between(layout.bs, layout.rs);
        let los_rs_to_bs = Direction::between(layout.rs, layout.bs);
        let los_rs_to_ue = Direction::between(layout.rs, layout.ue);
        let los_ue_to_rs = Direction::between(layout.ue, layout.rs);

        let (delays, powers) = draw_delay_profile(rng, profile_bs_rs);
        let mut bs_rs = Vec::with_capacity(delays.len());
        for (delay_s, power) in delays.into_iter().zip(powers) {
            let gain = Complex64::from_polar(power.sqrt(), 2.0 * PI * rng.random::<f64>());
            let bs_arrival = Direction {
                azimuth_deg: wrapped_gaussian(rng, los_bs_from_rs.azimuth_deg, profile_bs_rs.asa_deg),
                zenith_deg: laplacian(rng, los_bs_from_rs.zenith_deg, profile_bs_rs.zsa_deg),
            };
            let rs_departure = Direction {
                azimuth_deg: wrapped_gaussian(rng, los_rs_to_bs.azimuth_deg, profile_bs_rs.asd_deg),
                zenith_deg: laplacian(rng, los_rs_to_bs.zenith_deg, profile_bs_rs.zsd_deg),
            };
            bs_rs.push(BsRsCluster {
                delay_s,
                power,
                gain,
                bs_arrival,
                rs_departure,
                bs_steering: ura_response(bs_arrival.azimuth_deg, bs_arrival.zenith_deg, geom_bs),
                rs_steering_conj: ura_response(rs_departure.azimuth_deg, rs_departure.zenith_deg, geom_rs)
                    .map(|v| v.conj()),
            });
        }

        let (delays, powers) = draw_delay_profile(rng, profile_rs_ue);
        let mut rs_ue = Vec::with_capacity(delays.len());
        for (delay_s, power) in delays.into_iter().zip(powers) {
            let gain = Complex64::from_polar(power.sqrt(), 2.0 * PI * rng.random::<f64>());
            let rs_arrival = Direction {
                azimuth_deg: wrapped_gaussian(rng, los_rs_to_ue.azimuth_deg, profile_rs_ue.asa_deg),
                zenith_deg: laplacian(rng, los_rs_to_ue.zenith_deg, profile_rs_ue.zsa_deg),
            };
            let ue_departure = Direction {
                azimuth_deg: wrapped_gaussian(rng, los_ue_to_rs.azimuth_deg, profile_rs_ue.asd_deg),
                zenith_deg: laplacian(rng, los_ue_to_rs.zenith_deg, profile_rs_ue.zsd_deg),
            };
            let doppler_hz =
                mob.doppler_hz() * (ue_departure.azimuth_deg - layout.motion_azimuth_deg).to_radians().cos();
            rs_ue.push(RsUeCluster {
                delay_s,
                power,
                gain,
                rs_arrival,
                ue_departure,
                doppler_hz,
                rs_steering: ura_response(rs_arrival.azimuth_deg, rs_arrival.zenith_deg, geom_rs),
            });
        }

        Ok(Self {
            bs_rs,
            rs_ue,
            gain_bs_rs: budget.gain_bs_rs(),
            gain_rs_ue: budget.gain_rs_ue(),
            ofdm: *ofdm,
            antennas: geom_bs.elements(),
            elements: geom_rs.elements(),
        })
    }

    pub fn bs_rs_clusters(&self) -> &[BsRsCluster] {
        &self.bs_rs
    }

    pub fn rs_ue_clusters(&self) -> &[RsUeCluster] {
        &self.rs_ue
    }

    fn delay_phase(&self, k: usize, delay_s: f64) -> Complex64 {
        Complex64::from_polar(1.0, -2.0 * PI * k as f64 * self.ofdm.subcarrier_spacing() * delay_s)
    }

    /// Frequency response H_k of the BS-RS link.
    pub fn bs_rs_response(&self, k: usize) -> DMatrix<Complex64> {
        let mut h = DMatrix::zeros(self.antennas, self.elements);
        let amp = self.gain_bs_rs.sqrt();
        for c in &self.bs_rs {
            let beta = c.gain * self.delay_phase(k, c.delay_s) * amp;
            // a_BS · a_RS^H
            h.ger(beta, &c.bs_steering, &c.rs_steering_conj, Complex64::new(1.0, 0.0));
        }
        h
    }

    /// RS-UE response g_{k,n} for every symbol of the frame, row-major N×M.
    pub fn rs_ue_response(&self, k: usize) -> Vec<Complex64> {
        let n_sym = self.ofdm.frame_symbols();
        let m = self.elements;
        let mut g = vec![Complex64::new(0.0, 0.0); n_sym * m];
        let amp = self.gain_rs_ue.sqrt();
        let t_sym = self.ofdm.symbol_duration();
        for c in &self.rs_ue {
            let base = c.gain * self.delay_phase(k, c.delay_s) * amp;
            for (n, row) in g.chunks_exact_mut(m).enumerate() {
                let coeff = if c.doppler_hz == 0.0 {
                    base
                } else {
                    base * Complex64::from_polar(1.0, 2.0 * PI * c.doppler_hz * n as f64 * t_sym)
                };
                for (dst, a) in row.iter_mut().zip(c.rs_steering.iter()) {
                    *dst += coeff * a;
                }
            }
        }
        g
    }

    pub fn subcarrier(&self, k: usize) -> SubcarrierChannel {
        SubcarrierChannel::new(self.bs_rs_response(k), self.rs_ue_response(k), self.ofdm.frame_symbols())
            .expect("shapes agree by construction")
    }

    pub fn realize(&self) -> ChannelRealization {
        ChannelRealization::new((0..self.ofdm.subcarriers()).map(|k| self.subcarrier(k)).collect())
            .expect("uniform shapes")
    }
}

/// Full geometric frame realization of both links.
#[allow(clippy::too_many_arguments)]
pub fn gen_geometric_pair<R: Rng + ?Sized>(
    geom_bs: &ArrayGeometry,
    geom_rs: &ArrayGeometry,
    budget: &LinkBudget,
    ofdm: &OfdmNumerology,
    mob: &MobilityModel,
    layout: &NodeLayout,
    profile_bs_rs: &ClusterProfile,
    profile_rs_ue: &ClusterProfile,
    rng: &mut R,
) -> Result<ChannelRealization> {
    Ok(GeometricChannel::draw(geom_bs, geom_rs, budget, ofdm, mob, layout, profile_bs_rs, profile_rs_ue, rng)?
        .realize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;

    fn bs_rs_geoms() -> (ArrayGeometry, ArrayGeometry) {
        (ArrayGeometry::half_wavelength(2, 2).unwrap(), ArrayGeometry::half_wavelength(4, 4).unwrap())
    }

    #[test]
    fn broadside_has_zero_horizontal_phase() {
        let g = ArrayGeometry::half_wavelength(8, 1).unwrap();
        let a = ura_response(0.0, 90.0, &g);
        assert!(a.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn single_element_is_one() {
        let g = ArrayGeometry::half_wavelength(1, 1).unwrap();
        for (az, zen) in [(13.0, 40.0), (-170.0, 120.0)] {
            assert_eq!(ura_response(az, zen, &g)[0], Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn thirty_degree_azimuth_phase() {
        let g = ArrayGeometry::half_wavelength(2, 1).unwrap();
        let a = ura_response(30.0, 90.0, &g);
        assert!((a[1].arg() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn steering_is_unit_modulus() {
        let g = ArrayGeometry::new(5, 3, 0.37, 0.81).unwrap();
        for i in 0..50 {
            let a = ura_response(i as f64 * 7.3 - 180.0, i as f64 * 3.1, &g);
            assert!(a.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(ClusterProfile::new(0, 1e-6, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ClusterProfile::new(4, 0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ClusterProfile::new(4, 1e-6, 1.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn cluster_powers_normalized() {
        let mut rng = StreamFactory::new(2).stream(0, 0);
        for _ in 0..20 {
            let (d, p) = draw_delay_profile(&mut rng, &ClusterProfile::low_as());
            assert!(d.iter().all(|t| *t >= 0.0));
            assert!(p.iter().all(|v| *v >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_spread_matches_configured_std() {
        let mut rng = StreamFactory::new(4).stream(0, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| laplacian(&mut rng, 0.0, 25.0)).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var.sqrt() / 25.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn flat_fading_limit() {
        let (bs, rs) = bs_rs_geoms();
        let budget = LinkBudget::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let ofdm = OfdmNumerology::new(64, 4, 30e3, 4).unwrap();
        let mob = MobilityModel::static_at(3.5e9).unwrap();
        let tiny = ClusterProfile::new(8, 1e-30, 7.0, 12.0, 25.0, 30.0).unwrap();
        let ch = GeometricChannel::draw(
            &bs,
            &rs,
            &budget,
            &ofdm,
            &mob,
            &NodeLayout::default(),
            &tiny,
            &tiny,
            &mut StreamFactory::new(9).frame(0),
        )
        .unwrap();
        let h0 = ch.bs_rs_response(0);
        let g0 = ch.rs_ue_response(0);
        for k in [1, 17, 63] {
            assert!((ch.bs_rs_response(k) - &h0).norm() < 1e-12);
            let gk = ch.rs_ue_response(k);
            assert!(gk.iter().zip(&g0).all(|(a, b)| (a - b).norm() < 1e-12));
        }
    }

    #[test]
    fn single_cluster_phase_ramp() {
        let (bs, rs) = bs_rs_geoms();
        let budget = LinkBudget::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let ofdm = OfdmNumerology::new(64, 4, 30e3, 2).unwrap();
        let mob = MobilityModel::static_at(3.5e9).unwrap();
        let one = ClusterProfile::new(1, 1e-7, 7.0, 12.0, 25.0, 30.0).unwrap();
        let ch = GeometricChannel::draw(
            &bs,
            &rs,
            &budget,
            &ofdm,
            &mob,
            &NodeLayout::default(),
            &one,
            &one,
            &mut StreamFactory::new(10).frame(0),
        )
        .unwrap();
        let tau = ch.rs_ue_clusters()[0].delay_s;
        let want = Complex64::from_polar(1.0, -2.0 * PI * 30e3 * tau);
        for k in 0..63 {
            let a = ch.rs_ue_response(k)[0];
            let b = ch.rs_ue_response(k + 1)[0];
            let step = b / a;
            assert!((step / step.norm() - want).norm() < 1e-9);
        }
        let tau = ch.bs_rs_clusters()[0].delay_s;
        let want = Complex64::from_polar(1.0, -2.0 * PI * 30e3 * tau);
        let step = ch.bs_rs_response(5)[(1, 3)] / ch.bs_rs_response(4)[(1, 3)];
        assert!((step / step.norm() - want).norm() < 1e-9);
    }

    #[test]
    fn doppler_rotates_rs_ue_over_symbols() {
        let (bs, rs) = bs_rs_geoms();
        let budget = LinkBudget::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let ofdm = OfdmNumerology::new(64, 4, 30e3, 8).unwrap();
        let mob = MobilityModel::from_speed_kmh(30.0, 3.5e9).unwrap();
        let one = ClusterProfile::new(1, 1e-7, 7.0, 12.0, 25.0, 30.0).unwrap();
        let ch = GeometricChannel::draw(
            &bs,
            &rs,
            &budget,
            &ofdm,
            &mob,
            &NodeLayout::default(),
            &one,
            &one,
            &mut StreamFactory::new(12).frame(0),
        )
        .unwrap();
        let nu = ch.rs_ue_clusters()[0].doppler_hz;
        assert!(nu.abs() <= mob.doppler_hz());
        let g = ch.rs_ue_response(3);
        let m = rs.elements();
        let want = Complex64::from_polar(1.0, 2.0 * PI * nu * ofdm.symbol_duration());
        assert!((g[m] / g[0] - want).norm() < 1e-9);
    }

    #[test]
    fn power_calibration() {
        let (bs, rs) = bs_rs_geoms();
        let budget = LinkBudget::from_db(-48.0, -59.0, -94.0, 0.0).unwrap();
        let ofdm = OfdmNumerology::new(8, 1, 30e3, 2).unwrap();
        let mob = MobilityModel::static_at(3.5e9).unwrap();
        let f = StreamFactory::new(21);
        let (mut pg, mut ph, mut count) = (0.0, 0.0, 0usize);
        let realizations = 100_000 / rs.elements();
        for t in 0..realizations as u64 {
            let ch = GeometricChannel::draw(
                &bs,
                &rs,
                &budget,
                &ofdm,
                &mob,
                &NodeLayout::default(),
                &ClusterProfile::low_as(),
                &ClusterProfile::low_as(),
                &mut f.frame(t),
            )
            .unwrap();
            pg += ch.rs_ue_response(3)[..rs.elements()].iter().map(|v| v.norm_sqr()).sum::<f64>();
            ph += ch.bs_rs_response(3).iter().map(|v| v.norm_sqr()).sum::<f64>() / bs.elements() as f64;
            count += rs.elements();
        }
        assert!((pg / count as f64 / budget.gain_rs_ue() - 1.0).abs() < 0.02);
        assert!((ph / count as f64 / budget.gain_bs_rs() - 1.0).abs() < 0.02);
    }
}
