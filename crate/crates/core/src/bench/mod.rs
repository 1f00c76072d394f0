//! Benchmark model generators: RockSample, robot navigation, friend-or-foe
//! identification, the two-environment fork example and random micro
//! instances.

mod fork;
mod iff;
mod micro;
mod robotnav;
mod rocksample;

pub use fork::{fork_document, fork_example};
pub use iff::{gen_iff, hit_probability, visibility_step, IffParams};
pub use micro::{gen_micro, gen_micro_suite, MicroInstance, MicroParams};
pub use robotnav::{
    builtin_map, gen_robotnav, gen_robotnav_detailed, js_divergence, NavMap, RobotNav, RobotNavParams, MAPS,
};
pub use rocksample::{
    check_accuracy, combinations, default_positions, gen_rocksample, RockSampleParams,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::MultiEnvPomdp;

/// A generator invocation, as stored in suite files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Rocksample(RockSampleParams),
    Robotnav(RobotNavParams),
    Iff(IffParams),
    Fork,
    Micro {
        #[serde(default)]
        params: MicroParams,
        seed: u64,
    },
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<MultiEnvPomdp> {
        match self {
            Self::Rocksample(p) => gen_rocksample(p),
            Self::Robotnav(p) => gen_robotnav(p),
            Self::Iff(p) => gen_iff(p),
            Self::Fork => Ok(fork_example()),
            Self::Micro { params, seed } => gen_micro(params, *seed),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Rocksample(p) => p.name(),
            Self::Robotnav(p) => p.name(),
            Self::Iff(p) => p.name(),
            Self::Fork => "fork".into(),
            Self::Micro { seed, .. } => format!("micro_{seed}"),
        }
    }
}
