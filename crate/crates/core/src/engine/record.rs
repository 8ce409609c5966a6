use std::fmt::Write as _;

use serde::Serialize;

use super::config::ScenarioConfig;

/// Point estimate of a metric, or the marker for a configuration that
/// cannot run (CDS training longer than the coherence block).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    Value { value: f64, ci_low: f64, ci_high: f64 },
    Infeasible,
}

impl Estimate {
    /// Builds an estimate, widening the interval to contain `value`.
    pub fn new(value: f64, ci_low: f64, ci_high: f64) -> Self {
        Self::Value { value, ci_low: ci_low.min(value), ci_high: ci_high.max(value) }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, value, value)
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Value { value, .. } => Some(*value),
            Self::Infeasible => None,
        }
    }

    pub fn interval(&self) -> Option<(f64, f64)> {
        match self {
            Self::Value { ci_low, ci_high, .. } => Some((*ci_low, *ci_high)),
            Self::Infeasible => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Self::Infeasible)
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRecord {
    pub metric_name: String,
    pub estimate: Estimate,
    pub samples: u64,
    pub antennas: usize,
    pub elements: usize,
    pub tx_power_dbw: f64,
    pub speed_kmh: f64,
    pub scheme: String,
    pub channel_model: String,
    pub seed: u64,
    pub config_digest: String,
}

pub const CSV_HEADER: &str =
    "metric_name,value,ci_low,ci_high,samples,B,M,P_x_dBW,speed_kmh,scheme,channel_model,seed,config_digest";

impl MetricRecord {
    /// Record for `cfg`, tagged with an explicit digest (the sweep template's).
    pub fn new(name: &str, estimate: Estimate, samples: u64, cfg: &ScenarioConfig, digest: &str) -> Self {
        Self {
            metric_name: name.to_string(),
            estimate,
            samples,
            antennas: cfg.antennas(),
            elements: cfg.elements(),
            tx_power_dbw: cfg.budget.tx_power_dbw(),
            speed_kmh: cfg.mob.speed_kmh(),
            scheme: cfg.scheme.name().to_string(),
            channel_model: cfg.channel_model.name().to_string(),
            seed: cfg.master_seed,
            config_digest: digest.to_string(),
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.estimate.value()
    }

    /// CSV line without the trailing newline. Floats use the shortest
    /// round-trip representation, which does not depend on locale.
    pub fn csv_row(&self) -> String {
        let (value, lo, hi) = match self.estimate {
            Estimate::Value { value, ci_low, ci_high } => (fmt_f64(value), fmt_f64(ci_low), fmt_f64(ci_high)),
            Estimate::Infeasible => ("infeasible".to_string(), String::new(), String::new()),
        };
        let mut s = String::new();
        write!(
            s,
            "{},{value},{lo},{hi},{},{},{},{},{},{},{},{},{}",
            self.metric_name,
            self.samples,
            self.antennas,
            self.elements,
            fmt_f64(self.tx_power_dbw),
            fmt_f64(self.speed_kmh),
            self.scheme,
            self.channel_model,
            self.seed,
            self.config_digest
        )
        .expect("write to String");
        s
    }
}

fn fmt_f64(v: f64) -> String {
    // Round away last-bit noise from dB round trips such as 10·log10(10^-1).
    let r = (v * 1e9).round() / 1e9;
    if v.is_finite() && (r - v).abs() <= 1e-12 * v.abs().max(1.0) {
        format!("{r}")
    } else {
        format!("{v}")
    }
}

/// Header plus one line per record, newline-terminated.
pub fn to_csv(records: &[MetricRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_contains_estimate() {
        let e = Estimate::new(2.0, 2.5, 3.0);
        assert_eq!(e.interval(), Some((2.0, 3.0)));
    }

    #[test]
    fn csv_layout() {
        let cfg = ScenarioConfig::factory_hall();
        let r = MetricRecord::new("sep", Estimate::new(0.25, 0.2, 0.3), 1000, &cfg, "abcd");
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("sep,0.25,0.2,0.3,1000,4,64,0,3,ncds,geometric,0,abcd"), "{row}");
        let inf = MetricRecord::new("sep", Estimate::Infeasible, 0, &cfg, "abcd");
        assert!(inf.csv_row().starts_with("sep,infeasible,,,0,"));
        let csv = to_csv(&[r, inf]);
        assert!(csv.ends_with('\n'));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn db_noise_is_trimmed() {
        assert_eq!(fmt_f64(10.0 * (0.1f64).log10()), "-10");
        assert_eq!(fmt_f64(1.0 / 3.0), format!("{}", 1.0 / 3.0));
    }
}
