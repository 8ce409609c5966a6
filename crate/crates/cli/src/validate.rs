//! Quick invariant checks run by `ncris validate`.

use std::fmt::Write as _;

use ncris::analysis::{coherence_symbols, complexity_counts, efficiency_factor, sinr_ncds_high_power, CoherenceTime};
use ncris::cds::{cds_frame_pipeline, CdsBlock, CdsParams};
use ncris::channel::{
    complex_normal, doppler_correlation, ArrayGeometry, ChannelTensor, LinkBudget, MobilityModel, OfdmNumerology,
    TemporalColoring,
};
use ncris::engine::{run_sep, sweep, to_csv, ChannelModel, Experiment, ScenarioConfig, StoppingRule};
use ncris::exec::Executor;
use ncris::ncds::PskOrder;
use ncris::rng::StreamFactory;

/// Published efficiency factors; rows M = 32…512, columns 3…40 km/h.
pub const EFFICIENCY_TABLE: [[f64; 5]; 5] = [
    [0.9475, 0.8251, 0.6484, 0.4754, 0.3043],
    [0.8951, 0.6503, 0.2967, 0.0, 0.0],
    [0.7902, 0.3005, 0.0, 0.0, 0.0],
    [0.5803, 0.0, 0.0, 0.0, 0.0],
    [0.1607, 0.0, 0.0, 0.0, 0.0],
];

pub struct Report {
    lines: Vec<(String, Result<(), String>)>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|(_, r)| r.is_ok())
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for (name, r) in &self.lines {
            match r {
                Ok(()) => writeln!(s, "PASS {name}").unwrap(),
                Err(e) => writeln!(s, "FAIL {name}: {e}").unwrap(),
            }
        }
        s
    }
}

type Check = fn(&Executor) -> Result<(), String>;

const CHECKS: [(&str, Check); 6] = [
    ("sinr_high_power_limit", high_power),
    ("efficiency_table", efficiency),
    ("complexity_counts", complexity),
    ("doppler_correlation", doppler),
    ("noise_free_loopback", loopback),
    ("thread_independence", determinism),
];

pub fn run_all(exec: &Executor) -> Report {
    Report { lines: CHECKS.iter().map(|(n, f)| (n.to_string(), f(exec))).collect() }
}

fn high_power(_: &Executor) -> Result<(), String> {
    let v = sinr_ncds_high_power(4, 64);
    if (v - 3.7101).abs() < 1e-4 {
        Ok(())
    } else {
        Err(format!("B=4 M=64 gives {v}"))
    }
}

fn efficiency(_: &Executor) -> Result<(), String> {
    let ofdm = OfdmNumerology::nr_30khz();
    for (i, m) in [32, 64, 128, 256, 512].into_iter().enumerate() {
        for (j, v) in [3.0, 10.0, 20.0, 30.0, 40.0].into_iter().enumerate() {
            let mob = MobilityModel::from_speed_kmh(v, 3.5e9).map_err(|e| e.to_string())?;
            let nc = coherence_symbols(
                mob.doppler_hz(),
                ofdm.subcarrier_spacing(),
                ofdm.subcarriers(),
                ofdm.cp_length(),
                0.5,
            );
            let eta = efficiency_factor(m, nc.symbols().unwrap_or(f64::INFINITY));
            let want = EFFICIENCY_TABLE[i][j];
            if (eta - want).abs() > 0.002 || (want == 0.0 && eta != 0.0) {
                return Err(format!("M={m} at {v} km/h: {eta:.4} vs {want}"));
            }
        }
    }
    Ok(())
}

fn complexity(_: &Executor) -> Result<(), String> {
    let c = complexity_counts(4, 64, 1024, 5);
    if (c.cds_products, c.ncds_products, c.cds_opt_order) == (4096, 5115, 5 * 128 * 1024) {
        Ok(())
    } else {
        Err(format!("{c:?}"))
    }
}

fn doppler(_: &Executor) -> Result<(), String> {
    let ofdm = OfdmNumerology::new(64, 4, 30e3, 8).map_err(|e| e.to_string())?;
    let mob = MobilityModel::new(500.0, 3.5e9).map_err(|e| e.to_string())?;
    let coloring = TemporalColoring::new(&mob, &ofdm).map_err(|e| e.to_string())?;
    let mut rng = StreamFactory::new(5).stream(0, 0);
    let streams = 20_000;
    let mut acc = [ncris::Complex64::new(0.0, 0.0); 3];
    for _ in 0..streams {
        let x = coloring.sample(&mut rng, 1.0);
        for (lag, a) in acc.iter_mut().enumerate() {
            *a += x[0].conj() * x[lag + 1];
        }
    }
    for (lag, a) in acc.iter().enumerate() {
        let got = a.norm() / streams as f64;
        let want = doppler_correlation(lag as i64 + 1, &mob, &ofdm).abs();
        if (got - want).abs() > 0.03 {
            return Err(format!("lag {}: {got:.4} vs {want:.4}", lag + 1));
        }
    }
    Ok(())
}

fn small_iid(noise: f64) -> Result<ScenarioConfig, String> {
    let e = |e: ncris::Error| e.to_string();
    Ok(ScenarioConfig {
        geom_bs: ArrayGeometry::with_elements(2).map_err(e)?,
        geom_rs: ArrayGeometry::with_elements(8).map_err(e)?,
        budget: LinkBudget::new(1.0, 1.0, noise, 1.0).map_err(e)?,
        ofdm: OfdmNumerology::new(64, 4, 30e3, 20).map_err(e)?,
        mob: MobilityModel::static_at(3.5e9).map_err(e)?,
        channel_model: ChannelModel::IidRayleigh,
        trials: 8,
        stopping: StoppingRule::exhaustive(),
        ..ScenarioConfig::factory_hall()
    })
}

fn loopback(exec: &Executor) -> Result<(), String> {
    for order in [2, 4, 8, 16] {
        let cfg = ScenarioConfig { order: PskOrder::new(order).map_err(|e| e.to_string())?, ..small_iid(0.0)? };
        let r = run_sep(&cfg, exec).map_err(|e| e.to_string())?;
        if r[0].value() != Some(0.0) {
            return Err(format!("NCDS order {order}: {}", r[0].csv_row()));
        }
    }
    let params = CdsParams {
        order: PskOrder::new(4).map_err(|e| e.to_string())?,
        tx_power: 1.0,
        noise_power: 0.0,
        optimizer_sweeps: 3,
        coherence: CoherenceTime::Unbounded,
        frame_symbols: 20,
    };
    let mut rng = StreamFactory::new(11).stream(0, 0);
    let data = (0..32 * 8 * 4).map(|_| complex_normal(&mut rng, 1.0)).collect();
    let truth = ChannelTensor::from_vec(32, 8, 4, data).map_err(|e| e.to_string())?;
    match cds_frame_pipeline(&params, &truth, &StreamFactory::new(12), 0).map_err(|e| e.to_string())? {
        CdsBlock::Completed(r) if r.errors == 0 => Ok(()),
        other => Err(format!("CDS: {other:?}")),
    }
}

fn determinism(exec: &Executor) -> Result<(), String> {
    let cfg = small_iid(0.3)?;
    let a = sweep(&cfg, Experiment::Sinr, "tx_power_dbw", &[-3.0, 3.0], exec).map_err(|e| e.to_string())?;
    let b = sweep(&cfg, Experiment::Sinr, "tx_power_dbw", &[-3.0, 3.0], &Executor::sequential())
        .map_err(|e| e.to_string())?;
    if to_csv(&a) == to_csv(&b) {
        Ok(())
    } else {
        Err("CSV differs between worker counts".into())
    }
}
