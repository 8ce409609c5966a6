//! Monte Carlo experiments: empirical SINR, interference moments, SEP,
//! and parameter sweeps.
//!
//! Trials run one after another; within a trial subcarriers are spread over
//! the worker pool and reduced in subcarrier order, so results do not depend
//! on the number of workers.

mod config;
mod link;
mod record;
pub mod stats;

use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

pub use config::{ChannelModel, ScenarioConfig, Scheme, StoppingRule};
pub use link::{ncds_subcarrier, LinkTally, NcdsLink};
pub use record::{to_csv, Estimate, MetricRecord, CSV_HEADER};

use crate::analysis::{coherence_symbols, moments_closed_form, sinr_ncds, CoherenceTime, MomentSet, SinrInputs};
use crate::cds::{cds_accounting, cds_frame_pipeline, CdsBlock, CdsParams};
use crate::channel::{complex_normal, draw_subcarrier, linear_to_db, ArrayGeometry, MobilityModel, TemporalColoring};
use crate::error::{invalid, Error, Result};
use crate::exec::{map_indexed, Executor};
use crate::ncds::{decompose_terms, PskOrder};
use crate::rng::{StreamFactory, BOOTSTRAP_LANE};
use crate::surface::random_schedule;
use stats::{bootstrap_interval, wilson_interval, RunningMoments};

/// Bootstrap resamples for SINR intervals.
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

impl ScenarioConfig {
    /// σ_h²σ_g²P_x, the noise-free mean of the decision variable.
    pub fn reference_amplitude(&self) -> f64 {
        self.budget.gain_bs_rs() * self.budget.gain_rs_ue() * self.budget.tx_power()
    }

    pub fn sinr_inputs(&self) -> SinrInputs {
        SinrInputs {
            antennas: self.antennas(),
            elements: self.elements(),
            sigma_h2: self.budget.gain_bs_rs(),
            sigma_g2: self.budget.gain_rs_ue(),
            sigma_v2: self.budget.noise_power(),
            tx_power: self.budget.tx_power(),
        }
    }

    pub fn coherence(&self) -> CoherenceTime {
        coherence_symbols(
            self.mob.doppler_hz(),
            self.ofdm.subcarrier_spacing(),
            self.ofdm.subcarriers(),
            self.ofdm.cp_length(),
            self.calibration,
        )
    }

    fn ncds_link(&self) -> NcdsLink {
        NcdsLink {
            order: self.order,
            tx_power: self.budget.tx_power(),
            noise_power: self.budget.noise_power(),
            reference_amplitude: self.reference_amplitude(),
        }
    }
}

fn require_scheme(cfg: &ScenarioConfig, scheme: Scheme) -> Result<()> {
    if cfg.scheme != scheme {
        return Err(Error::Precondition(format!(
            "experiment needs scheme {}, configuration has {}",
            scheme.name(),
            cfg.scheme.name()
        )));
    }
    Ok(())
}

fn frame_reduce(tallies: &[LinkTally]) -> LinkTally {
    let mut total = LinkTally::default();
    tallies.iter().for_each(|t| total.add(t));
    total
}

/// Empirical NCDS SINR ρ̂ = a²/mean|z − a·s|² with a bootstrap interval
/// over frames.
pub fn run_sinr_ncds(cfg: &ScenarioConfig, exec: &Executor) -> Result<MetricRecord> {
    sinr_with_digest(cfg, exec, &cfg.digest())
}

fn sinr_with_digest(cfg: &ScenarioConfig, exec: &Executor, digest: &str) -> Result<MetricRecord> {
    cfg.validate()?;
    require_scheme(cfg, Scheme::Ncds)?;
    let coloring = TemporalColoring::new(&cfg.mob, &cfg.ofdm)?;
    let streams = StreamFactory::new(cfg.master_seed);
    let link = cfg.ncds_link();
    let frames: Vec<LinkTally> = exec.install(|| {
        (0..cfg.trials)
            .map(|t| link::ncds_frame(cfg, &coloring, &streams, t, &link).map(|v| frame_reduce(&v)))
            .collect::<Result<_>>()
    })?;
    let a2 = link.reference_amplitude * link.reference_amplitude;
    let rho = |it: &mut dyn Iterator<Item = &LinkTally>| {
        let (sse, n) = it.fold((0.0, 0u64), |(s, n), f| (s + f.squared_error, n + f.pairs));
        a2 * n as f64 / sse
    };
    let value = rho(&mut frames.iter());
    let mut rng = streams.stream(0, BOOTSTRAP_LANE);
    let (lo, hi) = bootstrap_interval(&frames, BOOTSTRAP_RESAMPLES, &mut rng, rho);
    let pairs = frames.iter().map(|f| f.pairs).sum();
    Ok(MetricRecord::new("sinr", Estimate::new(value, lo, hi), pairs, cfg, digest))
}

/// Monte Carlo estimates of the five interference moments over
/// trials × K independent two-symbol draws. Records are named
/// `moment_s_i1`, `moment_i1` … `moment_i4`.
pub fn run_moment_check(cfg: &ScenarioConfig, exec: &Executor) -> Result<Vec<MetricRecord>> {
    moments_with_digest(cfg, exec, &cfg.digest())
}

pub const MOMENT_NAMES: [&str; 5] = ["moment_s_i1", "moment_i1", "moment_i2", "moment_i3", "moment_i4"];

fn moments_with_digest(cfg: &ScenarioConfig, exec: &Executor, digest: &str) -> Result<Vec<MetricRecord>> {
    cfg.validate()?;
    if cfg.channel_model != ChannelModel::IidRayleigh {
        return Err(Error::Precondition("moment check needs the IID Rayleigh model".into()));
    }
    let ofdm = cfg.ofdm.with_frame_symbols(2)?;
    let coloring = TemporalColoring::new(&cfg.mob, &ofdm)?;
    let streams = StreamFactory::new(cfg.master_seed);
    let (b, m) = (cfg.antennas(), cfg.elements());
    let amp = cfg.budget.tx_power().sqrt();
    let noise = cfg.budget.noise_power();
    let draw = |t: u64, k: usize| -> Result<[f64; 5]> {
        let mut rng = streams.subcarrier(t, k);
        let ch = draw_subcarrier(b, m, &cfg.budget, &coloring, &mut rng);
        let psi = random_schedule(m, 1, &mut rng);
        let q0 = ch.cascade(psi.row(0), 0)?;
        let q1 = ch.cascade(psi.row(0), 1)?;
        let s0 = cfg.order.point(rng.random_range(0..cfg.order.size()))?;
        let s1 = cfg.order.point(rng.random_range(0..cfg.order.size()))?;
        let (x0, x1) = (s0 * amp, s0 * s1 * amp);
        let mut noise_vec = || -> Vec<Complex64> { (0..b).map(|_| complex_normal(&mut rng, noise)).collect() };
        let (v0, v1) = if noise > 0.0 {
            (noise_vec(), noise_vec())
        } else {
            (vec![Complex64::new(0.0, 0.0); b], vec![Complex64::new(0.0, 0.0); b])
        };
        let terms = decompose_terms(q0.as_slice(), q1.as_slice(), x0, x1, &v0, &v1)?;
        Ok([
            (s1.conj() * terms.i1).re,
            terms.i1.norm_sqr(),
            terms.i2.norm_sqr(),
            terms.i3.norm_sqr(),
            terms.i4.norm_sqr(),
        ])
    };
    let acc = exec.install(|| -> Result<[RunningMoments; 5]> {
        let mut acc = [RunningMoments::default(); 5];
        for t in 0..cfg.trials {
            let per_k = map_indexed(cfg.ofdm.subcarriers(), |k| draw(t, k));
            for v in per_k {
                let v = v?;
                acc.iter_mut().zip(v).for_each(|(a, x)| a.push(x));
            }
        }
        Ok(acc)
    })?;
    Ok(MOMENT_NAMES
        .iter()
        .zip(&acc)
        .map(|(name, a)| {
            let (lo, hi) = a.mean_interval();
            MetricRecord::new(name, Estimate::new(a.mean(), lo, hi), a.count(), cfg, digest)
        })
        .collect())
}

/// Closed-form moments in [`MOMENT_NAMES`] order.
pub fn moment_values(m: &MomentSet) -> [f64; 5] {
    [m.m_s_i1, m.m_i1, m.m_i2, m.m_i3, m.m_i4]
}

/// Symbol error probability with a Wilson interval. NCDS yields one
/// `sep` record. CDS also yields `efficiency` (η) and `px_eff_dbw`, the
/// effective power P_x/η the CDS point is plotted at; an M that does not fit in
/// the coherence block makes `sep` infeasible.
pub fn run_sep(cfg: &ScenarioConfig, exec: &Executor) -> Result<Vec<MetricRecord>> {
    sep_with_digest(cfg, exec, &cfg.digest())
}

fn sep_with_digest(cfg: &ScenarioConfig, exec: &Executor, digest: &str) -> Result<Vec<MetricRecord>> {
    cfg.validate()?;
    let coloring = TemporalColoring::new(&cfg.mob, &cfg.ofdm)?;
    let streams = StreamFactory::new(cfg.master_seed);
    match cfg.scheme {
        Scheme::Ncds => {
            let link = cfg.ncds_link();
            let (errors, decisions) = exec.install(|| -> Result<(u64, u64)> {
                let (mut errors, mut decisions) = (0, 0);
                for t in 0..cfg.trials {
                    let f = frame_reduce(&link::ncds_frame(cfg, &coloring, &streams, t, &link)?);
                    errors += f.errors;
                    decisions += f.pairs;
                    if cfg.stopping.satisfied(errors, decisions) {
                        break;
                    }
                }
                Ok((errors, decisions))
            })?;
            Ok(vec![sep_record(errors, decisions, cfg, digest)])
        }
        Scheme::Cds => {
            let params = CdsParams {
                order: cfg.order,
                tx_power: cfg.budget.tx_power(),
                noise_power: cfg.budget.noise_power(),
                optimizer_sweeps: cfg.optimizer_sweeps,
                coherence: cfg.coherence(),
                frame_symbols: cfg.ofdm.frame_symbols(),
            };
            let feasible = cds_accounting(cfg.elements(), &params).is_ok();
            let outcome = exec.install(|| -> Result<Option<(u64, u64, f64)>> {
                if !feasible {
                    return Ok(None);
                }
                let (mut errors, mut decisions, mut eta) = (0, 0, 1.0);
                for t in 0..cfg.trials {
                    let truth = link::cds_cascaded(cfg, &coloring, &streams, t)?;
                    match cds_frame_pipeline(&params, &truth, &streams, t)? {
                        CdsBlock::Infeasible { .. } => return Ok(None),
                        CdsBlock::Completed(r) => {
                            errors += r.errors;
                            decisions += r.decisions;
                            eta = r.accounting.efficiency;
                        }
                    }
                    if cfg.stopping.satisfied(errors, decisions) {
                        break;
                    }
                }
                Ok(Some((errors, decisions, eta)))
            })?;
            Ok(match outcome {
                None => vec![
                    MetricRecord::new("sep", Estimate::Infeasible, 0, cfg, digest),
                    MetricRecord::new("efficiency", Estimate::exact(0.0), 0, cfg, digest),
                    MetricRecord::new("px_eff_dbw", Estimate::Infeasible, 0, cfg, digest),
                ],
                Some((errors, decisions, eta)) => vec![
                    sep_record(errors, decisions, cfg, digest),
                    MetricRecord::new("efficiency", Estimate::exact(eta), decisions, cfg, digest),
                    MetricRecord::new(
                        "px_eff_dbw",
                        Estimate::exact(cfg.budget.tx_power_dbw() - linear_to_db(eta)),
                        decisions,
                        cfg,
                        digest,
                    ),
                ],
            })
        }
    }
}

fn sep_record(errors: u64, decisions: u64, cfg: &ScenarioConfig, digest: &str) -> MetricRecord {
    let sep = if decisions == 0 { 0.0 } else { errors as f64 / decisions as f64 };
    let (lo, hi) = wilson_interval(errors, decisions);
    MetricRecord::new("sep", Estimate::new(sep, lo, hi), decisions, cfg, digest)
}

/// Experiments that [`sweep`] can repeat.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// [`run_sinr_ncds`], plus `sinr_db` and, for the IID model,
    /// `sinr_closed_form`.
    Sinr,
    Sep,
    Moments,
}

/// Runs one experiment on `cfg`, tagging records with `digest`.
pub fn run_experiment(
    cfg: &ScenarioConfig,
    experiment: Experiment,
    exec: &Executor,
    digest: &str,
) -> Result<Vec<MetricRecord>> {
    match experiment {
        Experiment::Sinr => {
            let r = sinr_with_digest(cfg, exec, digest)?;
            let db = |v: f64| linear_to_db(v);
            let mut out = vec![r.clone()];
            if let Estimate::Value { value, ci_low, ci_high } = r.estimate {
                out.push(MetricRecord::new(
                    "sinr_db",
                    Estimate::new(db(value), db(ci_low), db(ci_high)),
                    r.samples,
                    cfg,
                    digest,
                ));
            }
            if cfg.channel_model == ChannelModel::IidRayleigh {
                let theory = sinr_ncds(&cfg.sinr_inputs());
                out.push(MetricRecord::new("sinr_closed_form", Estimate::exact(theory), 0, cfg, digest));
            }
            Ok(out)
        }
        Experiment::Sep => sep_with_digest(cfg, exec, digest),
        Experiment::Moments => {
            let mut out = moments_with_digest(cfg, exec, digest)?;
            let theory = moment_values(&moments_closed_form(&cfg.sinr_inputs()));
            for (name, v) in MOMENT_NAMES.iter().zip(theory) {
                out.push(MetricRecord::new(&format!("{name}_closed_form"), Estimate::exact(v), 0, cfg, digest));
            }
            Ok(out)
        }
    }
}

/// Sweepable scalar parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    TxPowerDbw,
    Elements,
    BsAntennas,
    SpeedKmh,
    Order,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "tx_power_dbw" | "px" | "P_x" => Self::TxPowerDbw,
            "elements" | "M" => Self::Elements,
            "bs_antennas" | "B" => Self::BsAntennas,
            "speed_kmh" | "speed" => Self::SpeedKmh,
            "order" => Self::Order,
            other => return Err(Error::UnknownAxis(other.to_string())),
        })
    }
}

fn as_count(name: &'static str, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(invalid(name, format!("must be a positive integer, got {v}")))
    }
}

impl SweepAxis {
    /// `template` with this parameter set to `value`.
    pub fn apply(&self, template: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = template.clone();
        match self {
            Self::TxPowerDbw => cfg.budget = cfg.budget.with_tx_power(crate::channel::db_to_linear(value))?,
            Self::Elements => cfg.geom_rs = ArrayGeometry::with_elements(as_count("elements", value)?)?,
            Self::BsAntennas => cfg.geom_bs = ArrayGeometry::with_elements(as_count("bs_antennas", value)?)?,
            Self::SpeedKmh => cfg.mob = MobilityModel::from_speed_kmh(value, cfg.mob.carrier_hz())?,
            Self::Order => cfg.order = PskOrder::new(as_count("order", value)? as u32)?,
        }
        Ok(cfg)
    }
}

/// Runs `experiment` once per value of `axis`, in input order. All records
/// carry the template's digest.
pub fn sweep(
    template: &ScenarioConfig,
    experiment: Experiment,
    axis: &str,
    values: &[f64],
    exec: &Executor,
) -> Result<Vec<MetricRecord>> {
    let axis: SweepAxis = axis.parse()?;
    template.validate()?;
    let digest = template.digest();
    let mut out = Vec::new();
    for &v in values {
        out.extend(run_experiment(&axis.apply(template, v)?, experiment, exec, &digest)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{LinkBudget, OfdmNumerology};

    fn small_iid() -> ScenarioConfig {
        ScenarioConfig {
            geom_bs: ArrayGeometry::with_elements(2).unwrap(),
            geom_rs: ArrayGeometry::with_elements(8).unwrap(),
            budget: LinkBudget::new(1.0, 1.0, 0.5, 1.0).unwrap(),
            ofdm: OfdmNumerology::new(32, 4, 30e3, 10).unwrap(),
            mob: MobilityModel::static_at(3.5e9).unwrap(),
            channel_model: ChannelModel::IidRayleigh,
            trials: 4,
            ..ScenarioConfig::factory_hall()
        }
    }

    #[test]
    fn cds_effective_power_is_boosted_by_efficiency() {
        let cfg = ScenarioConfig {
            scheme: Scheme::Cds,
            mob: MobilityModel::from_speed_kmh(10.0, 3.5e9).unwrap(),
            calibration: 0.5,
            trials: 1,
            ..small_iid()
        };
        let recs = run_sep(&cfg, &Executor::sequential()).unwrap();
        let eta = recs[1].value().unwrap();
        assert!(eta > 0.0 && eta < 1.0, "{eta}");
        let px_eff = recs[2].value().unwrap();
        assert!((px_eff - (-10.0 * eta.log10())).abs() < 1e-12);
        assert!(px_eff > cfg.budget.tx_power_dbw());
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = ScenarioConfig { trials: 0, ..small_iid() };
        assert!(run_sinr_ncds(&cfg, &Executor::sequential()).is_err());
    }

    #[test]
    fn wrong_scheme_rejected() {
        let cfg = ScenarioConfig { scheme: Scheme::Cds, ..small_iid() };
        assert!(matches!(run_sinr_ncds(&cfg, &Executor::sequential()), Err(Error::Precondition(_))));
    }

    #[test]
    fn sinr_record_contains_estimate() {
        let r = run_sinr_ncds(&small_iid(), &Executor::sequential()).unwrap();
        let (lo, hi) = r.estimate.interval().unwrap();
        let v = r.value().unwrap();
        assert!(lo <= v && v <= hi);
        assert_eq!(r.samples, 4 * 32 * 9);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = small_iid();
        let a = sweep(&cfg, Experiment::Sinr, "tx_power_dbw", &[-3.0, 0.0, 3.0], &Executor::sequential()).unwrap();
        let b =
            sweep(&cfg, Experiment::Sinr, "tx_power_dbw", &[-3.0, 0.0, 3.0], &Executor::new(Some(3)).unwrap()).unwrap();
        assert_eq!(to_csv(&a), to_csv(&b));
        let cds = ScenarioConfig { scheme: Scheme::Cds, ..cfg };
        let a = run_sep(&cds, &Executor::sequential()).unwrap();
        let b = run_sep(&cds, &Executor::new(Some(2)).unwrap()).unwrap();
        assert_eq!(to_csv(&a), to_csv(&b));
    }

    #[test]
    fn sweep_keeps_order_and_digest() {
        let cfg = small_iid();
        let values = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
        let recs = sweep(&cfg, Experiment::Sep, "tx_power_dbw", &values, &Executor::sequential()).unwrap();
        assert_eq!(recs.len(), 7);
        for (r, v) in recs.iter().zip(values) {
            assert!((r.tx_power_dbw - v).abs() < 1e-9);
            assert_eq!(r.config_digest, cfg.digest());
        }
    }

    #[test]
    fn unknown_axis_rejected() {
        let err = sweep(&small_iid(), Experiment::Sep, "bandwidth", &[1.0], &Executor::sequential()).unwrap_err();
        assert!(matches!(err, Error::UnknownAxis(_)));
        assert!(SweepAxis::Elements.apply(&small_iid(), 2.5).is_err());
    }

    #[test]
    fn noise_free_moments_have_zero_noise_terms() {
        let cfg = ScenarioConfig { budget: LinkBudget::new(1.0, 1.0, 0.0, 1.0).unwrap(), ..small_iid() };
        let recs = run_moment_check(&cfg, &Executor::sequential()).unwrap();
        for r in &recs[2..] {
            assert_eq!(r.value(), Some(0.0));
        }
        assert!(recs[0].value().unwrap() > 0.0);
    }

    #[test]
    fn cds_infeasible_rows() {
        let cfg = ScenarioConfig {
            scheme: Scheme::Cds,
            geom_rs: ArrayGeometry::with_elements(64).unwrap(),
            mob: MobilityModel::from_speed_kmh(40.0, 3.5e9).unwrap(),
            calibration: 0.5,
            ..small_iid()
        };
        // N_c at 40 km/h with K = 32, L = 4 is about 41 symbols.
        let recs = run_sep(&cfg, &Executor::sequential()).unwrap();
        assert!(recs[0].estimate.is_infeasible());
        assert_eq!(recs[1].value(), Some(0.0));
    }
}
