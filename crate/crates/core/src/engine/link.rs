//! Per-subcarrier link simulation shared by the experiments.

use num_complex::Complex64;
use rand::Rng;

use super::config::{ChannelModel, ScenarioConfig};
use crate::channel::{
    complex_normal, draw_subcarrier, ChannelTensor, GeometricChannel, SubcarrierChannel, TemporalColoring,
};
use crate::error::Result;
use crate::exec::map_indexed;
use crate::ncds::{decide, PskOrder};
use crate::rng::{SimRng, StreamFactory};
use crate::surface::{random_schedule_in_mode, PhaseSchedule};

/// Channel source of one frame. IID subcarriers are drawn from their own
/// streams; geometric subcarriers expand the frame's shared clusters.
pub(crate) enum FrameChannel<'a> {
    Iid(&'a TemporalColoring),
    Geometric(GeometricChannel),
}

impl<'a> FrameChannel<'a> {
    pub(crate) fn draw(cfg: &ScenarioConfig, coloring: &'a TemporalColoring, rng: &mut SimRng) -> Result<Self> {
        Ok(match cfg.channel_model {
            ChannelModel::IidRayleigh => Self::Iid(coloring),
            ChannelModel::Geometric { layout, bs_rs, rs_ue } => Self::Geometric(GeometricChannel::draw(
                &cfg.geom_bs,
                &cfg.geom_rs,
                &cfg.budget,
                &cfg.ofdm,
                &cfg.mob,
                &layout,
                &bs_rs,
                &rs_ue,
                rng,
            )?),
        })
    }

    pub(crate) fn subcarrier(&self, cfg: &ScenarioConfig, k: usize, rng: &mut SimRng) -> SubcarrierChannel {
        match self {
            Self::Iid(coloring) => draw_subcarrier(cfg.antennas(), cfg.elements(), &cfg.budget, coloring, rng),
            Self::Geometric(g) => g.subcarrier(k),
        }
    }
}

/// Accumulated outcome of differential detection.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinkTally {
    /// Σ|z − a·s|² over the symbol pairs.
    pub squared_error: f64,
    pub pairs: u64,
    pub errors: u64,
    pub degenerate: u64,
}

impl LinkTally {
    pub fn add(&mut self, other: &Self) {
        self.squared_error += other.squared_error;
        self.pairs += other.pairs;
        self.errors += other.errors;
        self.degenerate += other.degenerate;
    }
}

/// Link constants of a differential detection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcdsLink {
    pub order: PskOrder,
    pub tx_power: f64,
    /// Zero gives a noise-free link.
    pub noise_power: f64,
    /// Genie amplitude a in |z − a·s|².
    pub reference_amplitude: f64,
}

/// Sends one DPSK frame over `channel` with surface schedule `phases` and
/// differentially detects the N−1 symbol transitions.
pub fn ncds_subcarrier<R: Rng + ?Sized>(
    channel: &SubcarrierChannel,
    phases: &PhaseSchedule,
    link: &NcdsLink,
    rng: &mut R,
) -> Result<LinkTally> {
    let b = channel.antennas();
    let m = channel.elements();
    let n_sym = channel.symbols().min(phases.symbols());
    let fixed = channel.is_static() && phases.is_static();
    let mut q = channel.cascade(phases.row(0), 0)?;
    let scale = 1.0 / (m * b) as f64;
    let amp = link.tx_power.sqrt();

    let mut tally = LinkTally::default();
    let mut x = Complex64::new(amp, 0.0);
    let mut y_prev = vec![Complex64::new(0.0, 0.0); b];
    let mut y = vec![Complex64::new(0.0, 0.0); b];
    for n in 0..n_sym {
        if n > 0 && !fixed {
            q = channel.cascade(phases.row(n), n)?;
        }
        let idx = rng.random_range(0..link.order.size());
        let s = link.order.point(idx)?;
        x *= s;
        for (dst, qb) in y.iter_mut().zip(q.iter()) {
            *dst = qb * x;
            if link.noise_power > 0.0 {
                *dst += complex_normal(rng, link.noise_power);
            }
        }
        if n > 0 {
            let z: Complex64 = y_prev.iter().zip(&y).map(|(a, c)| a.conj() * c).sum::<Complex64>() * scale;
            tally.squared_error += (z - s * link.reference_amplitude).norm_sqr();
            let d = decide(z, link.order);
            tally.pairs += 1;
            tally.errors += u64::from(d.index != idx);
            tally.degenerate += u64::from(d.degenerate);
        }
        std::mem::swap(&mut y_prev, &mut y);
    }
    Ok(tally)
}

/// One NCDS frame of `trial`: per-subcarrier tallies in subcarrier order.
pub(crate) fn ncds_frame(
    cfg: &ScenarioConfig,
    coloring: &TemporalColoring,
    streams: &StreamFactory,
    trial: u64,
    link: &NcdsLink,
) -> Result<Vec<LinkTally>> {
    let mut frame_rng = streams.frame(trial);
    let source = FrameChannel::draw(cfg, coloring, &mut frame_rng)?;
    let phases = random_schedule_in_mode(cfg.phase_mode, cfg.elements(), cfg.ofdm.frame_symbols(), &mut frame_rng);
    map_indexed(cfg.ofdm.subcarriers(), |k| {
        let mut rng = streams.subcarrier(trial, k);
        let ch = source.subcarrier(cfg, k, &mut rng);
        ncds_subcarrier(&ch, &phases, link, &mut rng)
    })
    .into_iter()
    .collect()
}

/// True per-element cascaded channel at the first symbol of `trial`.
pub(crate) fn cds_cascaded(
    cfg: &ScenarioConfig,
    coloring: &TemporalColoring,
    streams: &StreamFactory,
    trial: u64,
) -> Result<ChannelTensor> {
    let mut frame_rng = streams.frame(trial);
    let source = FrameChannel::draw(cfg, coloring, &mut frame_rng)?;
    let (b, m) = (cfg.antennas(), cfg.elements());
    let per_k = map_indexed(cfg.ofdm.subcarriers(), |k| {
        let mut rng = streams.subcarrier(trial, k);
        let ch = source.subcarrier(cfg, k, &mut rng);
        let mut out = vec![Complex64::new(0.0, 0.0); m * b];
        ch.per_element(0, &mut out);
        out
    });
    ChannelTensor::from_vec(cfg.ofdm.subcarriers(), m, b, per_k.concat())
}
