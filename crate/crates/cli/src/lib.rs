//! `ncris` command-line driver.

pub mod config;
pub mod validate;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ncris::analysis::{
    coherence_symbols, complexity_counts, efficiency_for, moments_closed_form, sinr_ncds, sinr_ncds_high_power,
};
use ncris::channel::{db_to_linear, ArrayGeometry, MobilityModel};
use ncris::engine::{
    moment_values, run_experiment, to_csv, Experiment, MetricRecord, ScenarioConfig, Scheme, SweepAxis, MOMENT_NAMES,
};
use ncris::exec::Executor;
use serde::Serialize;

use config::{parse_config, ConfigFile, LoadedConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "ncris",
    version,
    about = "Non-coherent DPSK over reflecting-surface links: simulation and closed forms"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file, or a preset name (factory, low_as, high_as, iid).
    #[arg(long, global = true)]
    pub config: Option<String>,
    /// Output CSV; a JSON manifest is written next to it. Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Scale on the textbook coherence time 0.423/f_d.
    #[arg(long, global = true)]
    pub calibration: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Empirical NCDS SINR over a parameter grid.
    Sinr(GridArgs),
    /// Symbol error probability of NCDS and/or CDS over a parameter grid.
    Sep {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum)]
        scheme: Option<SchemeChoice>,
    },
    /// Monte Carlo interference moments next to their closed forms.
    Moments(GridArgs),
    /// CDS efficiency factor over speeds and element counts.
    Efficiency {
        #[arg(long, value_delimiter = ',', default_value = "3,10,20,30,40")]
        speeds: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "32,64,128,256,512")]
        elements: Vec<usize>,
    },
    /// Closed-form expressions over a grid.
    Analysis(AnalysisArgs),
    /// Runs the built-in invariant suite, after checking `--config` if given.
    Validate,
}

/// Grid axes; every combination is run, antennas outermost and power
/// innermost. Omitted axes keep the configured value.
#[derive(Debug, Args, Default)]
pub struct GridArgs {
    /// BS antenna counts (near-square arrays).
    #[arg(long, value_delimiter = ',')]
    pub antennas: Vec<usize>,
    /// Surface element counts (near-square arrays).
    #[arg(long, value_delimiter = ',')]
    pub elements: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub speeds: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub orders: Vec<u32>,
    /// Transmit powers in dBW.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub px: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeChoice {
    Ncds,
    Cds,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Equation {
    Sinr,
    Moments,
    Coherence,
    Complexity,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[arg(long, value_enum, default_value = "sinr")]
    pub eq: Equation,
    /// BS antenna counts.
    #[arg(long = "B", value_delimiter = ',', default_value = "4")]
    pub b: Vec<usize>,
    /// Surface element counts.
    #[arg(long = "M", value_delimiter = ',', default_value = "64")]
    pub m: Vec<usize>,
    /// Transmit powers in dBW; defaults to the configured power.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub px: Vec<f64>,
    /// Evaluate the SINR in the limit of infinite transmit power.
    #[arg(long)]
    pub highpower: bool,
    #[arg(long, value_delimiter = ',', default_value = "3,10,20,30,40")]
    pub speeds: Vec<f64>,
    /// Optimizer iterations R_t for the complexity count.
    #[arg(long, default_value_t = 5)]
    pub iterations: u64,
}

/// Written next to every output CSV.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub config_path: Option<&'a str>,
    pub config: &'a LoadedConfig,
    pub config_digest: String,
    pub output_path: String,
    pub subcommand: &'static str,
    pub timestamp_unix: u64,
    pub tool_version: &'static str,
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn load(common: &Common) -> Result<LoadedConfig> {
    let mut loaded = match &common.config {
        Some(p) => parse_config(p)?,
        None => ConfigFile::default().resolve()?,
    };
    let s = &mut loaded.scenario;
    if let Some(seed) = common.seed {
        s.master_seed = seed;
    }
    if let Some(c) = common.calibration {
        s.calibration = c;
    }
    if let Some(t) = common.trials {
        s.trials = t;
    }
    s.validate()?;
    Ok(loaded)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let common = &cli.common;
    if let Command::Validate = cli.command {
        if common.config.is_some() {
            let loaded = load(common)?;
            println!("PASS config {}", loaded.scenario.digest());
        }
        let exec = Executor::new(common.threads)?;
        let report = validate::run_all(&exec);
        print!("{}", report.text());
        return Ok(if report.passed() { EXIT_OK } else { EXIT_FAILURE });
    }
    let loaded = load(common)?;
    let exec = Executor::new(common.threads)?;
    let (name, csv, code) = match &cli.command {
        Command::Sinr(grid) => {
            let recs = run_grid(&loaded.scenario, grid, Experiment::Sinr, &exec)?;
            ("sinr", to_csv(&recs), EXIT_OK)
        }
        Command::Sep { grid, scheme } => {
            let schemes = match scheme {
                None => vec![loaded.scenario.scheme],
                Some(SchemeChoice::Ncds) => vec![Scheme::Ncds],
                Some(SchemeChoice::Cds) => vec![Scheme::Cds],
                Some(SchemeChoice::Both) => vec![Scheme::Ncds, Scheme::Cds],
            };
            let mut recs = Vec::new();
            for s in schemes {
                let cfg = ScenarioConfig { scheme: s, ..loaded.scenario.clone() };
                recs.extend(run_grid_with_digest(&cfg, grid, Experiment::Sep, &exec, &loaded.scenario.digest())?);
            }
            let code = if infeasible_only(&recs) { EXIT_INFEASIBLE } else { EXIT_OK };
            ("sep", to_csv(&recs), code)
        }
        Command::Moments(grid) => {
            let recs = run_grid(&loaded.scenario, grid, Experiment::Moments, &exec)?;
            ("moments", to_csv(&recs), EXIT_OK)
        }
        Command::Efficiency { speeds, elements } => {
            ("efficiency", efficiency_csv(&loaded.scenario, speeds, elements)?, EXIT_OK)
        }
        Command::Analysis(args) => ("analysis", analysis_csv(&loaded.scenario, args)?, EXIT_OK),
        Command::Validate => unreachable!(),
    };
    emit(common, &loaded, name, &csv)?;
    Ok(code)
}

fn infeasible_only(recs: &[MetricRecord]) -> bool {
    let mut sep = recs.iter().filter(|r| r.metric_name == "sep").peekable();
    sep.peek().is_some() && sep.all(|r| r.estimate.is_infeasible())
}

fn emit(common: &Common, loaded: &LoadedConfig, subcommand: &'static str, csv: &str) -> Result<()> {
    let Some(out) = &common.out else {
        print!("{csv}");
        return Ok(());
    };
    std::fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
    let manifest = RunManifest {
        config_path: common.config.as_deref(),
        config: loaded,
        config_digest: loaded.scenario.digest(),
        output_path: out.display().to_string(),
        subcommand,
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        tool_version: env!("CARGO_PKG_VERSION"),
    };
    let path = manifest_path(out);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `results.csv` → `results.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

fn run_grid(
    template: &ScenarioConfig,
    grid: &GridArgs,
    experiment: Experiment,
    exec: &Executor,
) -> Result<Vec<MetricRecord>> {
    run_grid_with_digest(template, grid, experiment, exec, &template.digest())
}

fn run_grid_with_digest(
    template: &ScenarioConfig,
    grid: &GridArgs,
    experiment: Experiment,
    exec: &Executor,
    digest: &str,
) -> Result<Vec<MetricRecord>> {
    let axes: Vec<(SweepAxis, Vec<f64>)> = [
        (SweepAxis::BsAntennas, grid.antennas.iter().map(|&v| v as f64).collect::<Vec<_>>()),
        (SweepAxis::Elements, grid.elements.iter().map(|&v| v as f64).collect()),
        (SweepAxis::SpeedKmh, grid.speeds.clone()),
        (SweepAxis::Order, grid.orders.iter().map(|&v| f64::from(v)).collect()),
        (SweepAxis::TxPowerDbw, grid.px.clone()),
    ]
    .into_iter()
    .filter(|(_, v)| !v.is_empty())
    .collect();
    let mut points = vec![template.clone()];
    for (axis, values) in &axes {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for p in &points {
            for &v in values {
                next.push(axis.apply(p, v)?);
            }
        }
        points = next;
    }
    let mut out = Vec::new();
    for p in &points {
        out.extend(run_experiment(p, experiment, exec, digest)?);
    }
    Ok(out)
}

fn fmt_speed(v: f64) -> String {
    format!("{v}")
}

/// Rows are element counts, columns speeds; values to four decimals.
pub fn efficiency_csv(cfg: &ScenarioConfig, speeds: &[f64], elements: &[usize]) -> Result<String> {
    if speeds.is_empty() || elements.is_empty() {
        bail!("efficiency needs at least one speed and one element count");
    }
    let mut s = String::from("elements");
    for v in speeds {
        write!(s, ",{}_kmh", fmt_speed(*v))?;
    }
    s.push('\n');
    let coherence: Vec<_> = speeds
        .iter()
        .map(|&v| {
            let mob = MobilityModel::from_speed_kmh(v, cfg.mob.carrier_hz())?;
            Ok(coherence_symbols(
                mob.doppler_hz(),
                cfg.ofdm.subcarrier_spacing(),
                cfg.ofdm.subcarriers(),
                cfg.ofdm.cp_length(),
                cfg.calibration,
            ))
        })
        .collect::<Result<_>>()?;
    for &m in elements {
        write!(s, "{m}")?;
        for nc in &coherence {
            write!(s, ",{:.4}", efficiency_for(m, *nc))?;
        }
        s.push('\n');
    }
    Ok(s)
}

fn analysis_csv(cfg: &ScenarioConfig, args: &AnalysisArgs) -> Result<String> {
    let mut s = String::new();
    let powers = if args.px.is_empty() { vec![cfg.budget.tx_power_dbw()] } else { args.px.clone() };
    match args.eq {
        Equation::Sinr => {
            s.push_str("B,M,P_x_dBW,sinr,sinr_db\n");
            for &b in &args.b {
                for &m in &args.m {
                    if args.highpower {
                        let v = sinr_ncds_high_power(b, m);
                        writeln!(s, "{b},{m},inf,{v:.4},{:.4}", 10.0 * v.log10())?;
                        continue;
                    }
                    for &p in &powers {
                        let inputs = inputs_for(cfg, b, m, p)?;
                        let v = sinr_ncds(&inputs);
                        writeln!(s, "{b},{m},{p},{v:.4},{:.4}", 10.0 * v.log10())?;
                    }
                }
            }
        }
        Equation::Moments => {
            writeln!(s, "B,M,P_x_dBW,{}", MOMENT_NAMES.join(","))?;
            for &b in &args.b {
                for &m in &args.m {
                    for &p in &powers {
                        let vals = moment_values(&moments_closed_form(&inputs_for(cfg, b, m, p)?));
                        let cols: Vec<String> = vals.iter().map(|v| format!("{v:e}")).collect();
                        writeln!(s, "{b},{m},{p},{}", cols.join(","))?;
                    }
                }
            }
        }
        Equation::Coherence => {
            s.push_str("speed_kmh,doppler_hz,coherence_symbols\n");
            for &v in &args.speeds {
                let mob = MobilityModel::from_speed_kmh(v, cfg.mob.carrier_hz())?;
                let nc = coherence_symbols(
                    mob.doppler_hz(),
                    cfg.ofdm.subcarrier_spacing(),
                    cfg.ofdm.subcarriers(),
                    cfg.ofdm.cp_length(),
                    cfg.calibration,
                );
                let nc = nc.symbols().map(|n| format!("{n:.2}")).unwrap_or_else(|| "inf".into());
                writeln!(s, "{},{:.4},{nc}", fmt_speed(v), mob.doppler_hz())?;
            }
        }
        Equation::Complexity => {
            s.push_str("B,M,K,R_t,cds_opt_order,cds_products,ncds_products\n");
            let k = cfg.ofdm.subcarriers() as u64;
            for &b in &args.b {
                for &m in &args.m {
                    let c = complexity_counts(b as u64, m as u64, k, args.iterations);
                    writeln!(
                        s,
                        "{b},{m},{k},{},{},{},{}",
                        args.iterations, c.cds_opt_order, c.cds_products, c.ncds_products
                    )?;
                }
            }
        }
    }
    Ok(s)
}

fn inputs_for(cfg: &ScenarioConfig, b: usize, m: usize, px_dbw: f64) -> Result<ncris::analysis::SinrInputs> {
    let cfg = ScenarioConfig {
        geom_bs: ArrayGeometry::with_elements(b)?,
        geom_rs: ArrayGeometry::with_elements(m)?,
        budget: cfg.budget.with_tx_power(db_to_linear(px_dbw))?,
        ..cfg.clone()
    };
    Ok(cfg.sinr_inputs())
}
