//! Deterministic random streams.
//!
//! Every random draw in an experiment comes from a ChaCha stream keyed by
//! `(master_seed, trial, lane)`. Lanes separate the frame-level draws (phase
//! schedules, cluster geometry) from the per-subcarrier draws so subcarriers
//! can be processed in any order or on any number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type SimRng = ChaCha12Rng;

/// Lane reserved for frame-level draws within a trial.
pub const FRAME_LANE: u64 = u64::MAX;
/// Lane reserved for bootstrap resampling.
pub const BOOTSTRAP_LANE: u64 = u64::MAX - 1;

/// Per-subcarrier purposes for [`StreamFactory::subcarrier_lane`].
pub const SOUNDING_PURPOSE: u32 = 1;
pub const CDS_DATA_PURPOSE: u32 = 2;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Factory for the independent streams of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    master_seed: u64,
}

impl StreamFactory {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Stream for `lane` of `trial`.
    pub fn stream(&self, trial: u64, lane: u64) -> SimRng {
        let key = splitmix64(self.master_seed ^ splitmix64(trial.wrapping_add(1)));
        let mut rng = SimRng::seed_from_u64(key);
        rng.set_stream(lane);
        rng
    }

    pub fn frame(&self, trial: u64) -> SimRng {
        self.stream(trial, FRAME_LANE)
    }

    pub fn subcarrier(&self, trial: u64, k: usize) -> SimRng {
        self.stream(trial, k as u64)
    }

    /// Secondary per-subcarrier stream; `purpose` 0 is [`Self::subcarrier`].
    pub fn subcarrier_lane(&self, trial: u64, k: usize, purpose: u32) -> SimRng {
        self.stream(trial, (u64::from(purpose) << 32) | k as u64)
    }
}
