//! Scenario files. Powers are given in dB/dBW and converted to linear
//! values when the [`ScenarioConfig`] is built.

use std::path::Path;

use anyhow::{Context, Result};
use ncris::channel::{
    db_to_linear, ArrayGeometry, ClusterProfile, LinkBudget, MobilityModel, NodeLayout, OfdmNumerology,
};
use ncris::engine::{ChannelModel, ScenarioConfig, Scheme, StoppingRule};
use ncris::ncds::PskOrder;
use ncris::surface::PhaseMode;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TRIALS: u64 = 100;
pub const DEFAULT_CALIBRATION: f64 = 1.0;

/// Built-in presets, selectable by name in place of a path.
pub const PRESETS: [(&str, &str); 4] = [
    ("factory", include_str!("../presets/factory.toml")),
    ("low_as", include_str!("../presets/low_as.toml")),
    ("high_as", include_str!("../presets/high_as.toml")),
    ("iid", include_str!("../presets/iid.toml")),
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub scheme: Option<Scheme>,
    pub order: Option<u32>,
    pub phase_mode: Option<PhaseMode>,
    pub calibration: Option<f64>,
    pub optimizer_sweeps: Option<usize>,
    #[serde(default)]
    pub arrays: ArraysSection,
    #[serde(default)]
    pub link: LinkSection,
    #[serde(default)]
    pub ofdm: OfdmSection,
    #[serde(default)]
    pub mobility: MobilitySection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub stopping: StoppingSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraysSection {
    pub bs_h: usize,
    pub bs_v: usize,
    pub rs_h: usize,
    pub rs_v: usize,
    /// Element spacing in wavelengths.
    pub bs_spacing: f64,
    pub rs_spacing: f64,
}

impl Default for ArraysSection {
    fn default() -> Self {
        Self { bs_h: 2, bs_v: 2, rs_h: 8, rs_v: 8, bs_spacing: 0.5, rs_spacing: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub gain_bs_rs_db: f64,
    pub gain_rs_ue_db: f64,
    /// `-inf` gives a noise-free link.
    pub noise_dbw: f64,
    pub tx_dbw: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self { gain_bs_rs_db: -48.0, gain_rs_ue_db: -59.0, noise_dbw: -94.0, tx_dbw: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfdmSection {
    pub carrier_hz: f64,
    pub subcarriers: usize,
    pub cp_length: usize,
    pub subcarrier_spacing_hz: f64,
    pub frame_symbols: usize,
}

impl Default for OfdmSection {
    fn default() -> Self {
        Self { carrier_hz: 3.5e9, subcarriers: 1024, cp_length: 72, subcarrier_spacing_hz: 30e3, frame_symbols: 140 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilitySection {
    pub speed_kmh: f64,
}

impl Default for MobilitySection {
    fn default() -> Self {
        Self { speed_kmh: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    IidRayleigh,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    LowAs,
    HighAs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub model: ModelKind,
    pub profile: ProfileKind,
    /// Overrides applied to the named profile on both links.
    pub clusters: Option<usize>,
    pub delay_spread_s: Option<f64>,
    pub asd_deg: Option<f64>,
    pub asa_deg: Option<f64>,
    pub zsd_deg: Option<f64>,
    pub zsa_deg: Option<f64>,
    pub bs: [f64; 3],
    pub rs: [f64; 3],
    pub ue: [f64; 3],
    pub motion_azimuth_deg: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let layout = NodeLayout::default();
        Self {
            model: ModelKind::Geometric,
            profile: ProfileKind::LowAs,
            clusters: None,
            delay_spread_s: None,
            asd_deg: None,
            asa_deg: None,
            zsd_deg: None,
            zsa_deg: None,
            bs: layout.bs,
            rs: layout.rs,
            ue: layout.ue,
            motion_azimuth_deg: layout.motion_azimuth_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingSection {
    pub min_errors: u64,
    pub min_decisions: u64,
}

impl Default for StoppingSection {
    fn default() -> Self {
        let s = StoppingRule::default();
        Self { min_errors: s.min_errors, min_decisions: s.min_decisions }
    }
}

/// A parsed file together with the top-level keys that fell back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadedConfig {
    pub file: ConfigFile,
    pub defaults_applied: Vec<&'static str>,
    pub scenario: ScenarioConfig,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    fn profile(&self) -> Result<ClusterProfile> {
        let c = &self.channel;
        let base = match c.profile {
            ProfileKind::LowAs => ClusterProfile::low_as(),
            ProfileKind::HighAs => ClusterProfile::high_as(),
        };
        Ok(ClusterProfile::new(
            c.clusters.unwrap_or(base.cluster_count()),
            c.delay_spread_s.unwrap_or(base.delay_spread_s()),
            c.asd_deg.unwrap_or(base.asd_deg()),
            c.asa_deg.unwrap_or(base.asa_deg()),
            c.zsd_deg.unwrap_or(base.zsd_deg()),
            c.zsa_deg.unwrap_or(base.zsa_deg()),
        )?)
    }

    /// Builds and validates the scenario; returns it with the list of
    /// defaulted keys.
    pub fn resolve(self) -> Result<LoadedConfig> {
        let mut defaults_applied = Vec::new();
        let mut pick = |name: &'static str, present: bool| {
            if !present {
                defaults_applied.push(name);
            }
        };
        pick("trials", self.trials.is_some());
        pick("seed", self.seed.is_some());
        pick("scheme", self.scheme.is_some());
        pick("order", self.order.is_some());
        pick("phase_mode", self.phase_mode.is_some());
        pick("calibration", self.calibration.is_some());
        pick("optimizer_sweeps", self.optimizer_sweeps.is_some());

        let a = &self.arrays;
        let l = &self.link;
        let o = &self.ofdm;
        let c = &self.channel;
        let channel_model = match c.model {
            ModelKind::IidRayleigh => ChannelModel::IidRayleigh,
            ModelKind::Geometric => {
                let p = self.profile()?;
                ChannelModel::Geometric {
                    layout: NodeLayout { bs: c.bs, rs: c.rs, ue: c.ue, motion_azimuth_deg: c.motion_azimuth_deg },
                    bs_rs: p,
                    rs_ue: p,
                }
            }
        };
        let scenario = ScenarioConfig {
            geom_bs: ArrayGeometry::new(a.bs_h, a.bs_v, a.bs_spacing, a.bs_spacing).context("arrays.bs")?,
            geom_rs: ArrayGeometry::new(a.rs_h, a.rs_v, a.rs_spacing, a.rs_spacing).context("arrays.rs")?,
            budget: LinkBudget::new(
                db_to_linear(l.gain_bs_rs_db),
                db_to_linear(l.gain_rs_ue_db),
                db_to_linear(l.noise_dbw),
                db_to_linear(l.tx_dbw),
            )
            .context("link")?,
            ofdm: OfdmNumerology::new(o.subcarriers, o.cp_length, o.subcarrier_spacing_hz, o.frame_symbols)
                .context("ofdm")?,
            mob: MobilityModel::from_speed_kmh(self.mobility.speed_kmh, o.carrier_hz).context("mobility")?,
            channel_model,
            order: PskOrder::new(self.order.unwrap_or(4))?,
            scheme: self.scheme.unwrap_or(Scheme::Ncds),
            trials: self.trials.unwrap_or(DEFAULT_TRIALS),
            master_seed: self.seed.unwrap_or(0),
            phase_mode: self.phase_mode.unwrap_or_default(),
            calibration: self.calibration.unwrap_or(DEFAULT_CALIBRATION),
            optimizer_sweeps: self.optimizer_sweeps.unwrap_or(5),
            stopping: StoppingRule { min_errors: self.stopping.min_errors, min_decisions: self.stopping.min_decisions },
        };
        scenario.validate()?;
        Ok(LoadedConfig { file: self, defaults_applied, scenario })
    }
}

/// Loads a preset by name or a file by path.
pub fn parse_config(path_or_preset: &str) -> Result<LoadedConfig> {
    let text = match PRESETS.iter().find(|(name, _)| *name == path_or_preset) {
        Some((_, text)) => text.to_string(),
        None => std::fs::read_to_string(Path::new(path_or_preset))
            .with_context(|| format!("reading config {path_or_preset}"))?,
    };
    ConfigFile::parse(&text)
        .with_context(|| format!("parsing config {path_or_preset}"))?
        .resolve()
        .with_context(|| format!("validating config {path_or_preset}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factory_preset_converts_db() {
        let cfg = parse_config("factory").unwrap().scenario;
        assert!((cfg.budget.gain_bs_rs() - 1.585e-5).abs() < 1e-8);
        assert!((cfg.budget.noise_power() - 3.981e-10).abs() < 1e-13);
        assert_eq!(cfg.elements(), 64);
        assert_eq!(cfg.antennas(), 4);
    }

    #[test]
    fn all_presets_resolve() {
        for (name, _) in PRESETS {
            parse_config(name).unwrap();
        }
    }

    #[test]
    fn trials_default_is_recorded() {
        let loaded = ConfigFile::parse("seed = 3").unwrap().resolve().unwrap();
        assert_eq!(loaded.scenario.trials, DEFAULT_TRIALS);
        assert!(loaded.defaults_applied.contains(&"trials"));
        assert!(!loaded.defaults_applied.contains(&"seed"));
    }

    #[test]
    fn rejects_bad_values_and_keys() {
        assert!(ConfigFile::parse("[ofdm]\nsubcarriers = 64\ncp_length = 64").unwrap().resolve().is_err());
        assert!(ConfigFile::parse("bogus = 1").is_err());
        assert!(ConfigFile::parse("[link]\ntx_power = 1").is_err());
        assert!(ConfigFile::parse("trials = 0").unwrap().resolve().is_err());
        assert!(parse_config("/nonexistent/file.toml").is_err());
    }

    #[test]
    fn negative_infinity_noise_is_noise_free() {
        let loaded = ConfigFile::parse("[link]\nnoise_dbw = -inf").unwrap().resolve().unwrap();
        assert_eq!(loaded.scenario.budget.noise_power(), 0.0);
    }
}
