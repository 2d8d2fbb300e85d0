use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::format::parse_bitstring;
use crate::hubo::SpinConfiguration;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Sa,
    Bfdcqo,
    Mts,
    SaFinal,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Sa => "sa",
            Stage::Bfdcqo => "bfdcqo",
            Stage::Mts => "mts",
            Stage::SaFinal => "sa_final",
        }
    }
}

/// Work performed by a stage; only the counters relevant to the stage are nonzero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub sweeps: u64,
    pub runs: u64,
    pub shots: u64,
    pub loc_sweeps: u64,
    pub iterations: u64,
    pub generations: u64,
    pub bitflips: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    pub best: SpinConfiguration,
    pub best_energy: f64,
    pub model_time_s: f64,
    pub counters: Counters,
    pub seed: u64,
    /// Best-so-far energy after each run (SA), iteration (BF-DCQO) or
    /// generation (MTS, index 0 is the refined initial population).
    pub history: Vec<f64>,
    /// Measured wall time; kept out of serialized output.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Equality ignores the measured wall time.
impl PartialEq for StageReport {
    fn eq(&self, other: &Self) -> bool {
        self.stage == other.stage
            && self.best == other.best
            && self.best_energy == other.best_energy
            && self.model_time_s == other.model_time_s
            && self.counters == other.counters
            && self.seed == other.seed
            && self.history == other.history
    }
}

impl Serialize for SpinConfiguration {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpinConfiguration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_bitstring(&text).map_err(serde::de::Error::custom)
    }
}
