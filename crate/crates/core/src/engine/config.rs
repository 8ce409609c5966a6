use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ArrayGeometry, ClusterProfile, LinkBudget, MobilityModel, NodeLayout, OfdmNumerology};
use crate::error::{invalid, Result};
use crate::ncds::PskOrder;
use crate::surface::PhaseMode;

/// Fading model of both links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelModel {
    IidRayleigh,
    Geometric { layout: NodeLayout, bs_rs: ClusterProfile, rs_ue: ClusterProfile },
}

impl ChannelModel {
    pub fn name(&self) -> &'static str {
        match self {
            Self::IidRayleigh => "iid_rayleigh",
            Self::Geometric { .. } => "geometric",
        }
    }

    /// Geometric model with the same cluster profile on both links.
    pub fn geometric(profile: ClusterProfile) -> Self {
        Self::Geometric { layout: NodeLayout::default(), bs_rs: profile, rs_ue: profile }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Ncds,
    Cds,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ncds => "ncds",
            Self::Cds => "cds",
        }
    }
}

/// SEP runs stop after the first frame at which both thresholds are met.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub min_errors: u64,
    pub min_decisions: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self { min_errors: 100, min_decisions: 10_000 }
    }
}

impl StoppingRule {
    /// Never stops early.
    pub fn exhaustive() -> Self {
        Self { min_errors: u64::MAX, min_decisions: u64::MAX }
    }

    pub fn satisfied(&self, errors: u64, decisions: u64) -> bool {
        errors >= self.min_errors && decisions >= self.min_decisions
    }
}

/// Everything that determines the outcome of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub geom_bs: ArrayGeometry,
    pub geom_rs: ArrayGeometry,
    pub budget: LinkBudget,
    pub ofdm: OfdmNumerology,
    pub mob: MobilityModel,
    pub channel_model: ChannelModel,
    pub order: PskOrder,
    pub scheme: Scheme,
    /// Number of frames (NCDS) or coherence blocks (CDS).
    pub trials: u64,
    pub master_seed: u64,
    pub phase_mode: PhaseMode,
    /// Scale on the 0.423/f_d coherence time used for CDS training.
    pub calibration: f64,
    pub optimizer_sweeps: usize,
    pub stopping: StoppingRule,
}

impl ScenarioConfig {
    /// Factory-hall parameters: B = 2×2, M = 64, 3.5 GHz at 3 km/h, K = 1024,
    /// N = 140, −48/−59 dB link gains, −94 dBW noise, 0 dBW transmit power,
    /// low angular spread, 4-DPSK.
    pub fn factory_hall() -> Self {
        let carrier = 3.5e9;
        Self {
            geom_bs: ArrayGeometry::half_wavelength(2, 2).expect("valid"),
            geom_rs: ArrayGeometry::with_elements(64).expect("valid"),
            budget: LinkBudget::from_db(-48.0, -59.0, -94.0, 0.0).expect("valid"),
            ofdm: OfdmNumerology::nr_30khz(),
            mob: MobilityModel::from_speed_kmh(3.0, carrier).expect("valid"),
            channel_model: ChannelModel::geometric(ClusterProfile::low_as()),
            order: PskOrder::new(4).expect("valid"),
            scheme: Scheme::Ncds,
            trials: 100,
            master_seed: 0,
            phase_mode: PhaseMode::PerFrame,
            calibration: 1.0,
            optimizer_sweeps: 5,
            stopping: StoppingRule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if !(self.calibration > 0.0 && self.calibration.is_finite()) {
            return Err(invalid("calibration", "must be positive and finite"));
        }
        if self.optimizer_sweeps == 0 {
            return Err(invalid("optimizer_sweeps", "must be at least 1"));
        }
        Ok(())
    }

    pub fn antennas(&self) -> usize {
        self.geom_bs.elements()
    }

    pub fn elements(&self) -> usize {
        self.geom_rs.elements()
    }

    /// Leading 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = ScenarioConfig::factory_hall();
        assert_eq!(a.digest(), a.clone().digest());
        assert_eq!(a.digest().len(), 16);
        let b = ScenarioConfig { master_seed: 1, ..a.clone() };
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn json_round_trip() {
        let a = ScenarioConfig::factory_hall();
        let back: ScenarioConfig = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn rejects_zero_trials() {
        let c = ScenarioConfig { trials: 0, ..ScenarioConfig::factory_hall() };
        assert!(c.validate().is_err());
        assert!(ScenarioConfig::factory_hall().validate().is_ok());
    }
}
