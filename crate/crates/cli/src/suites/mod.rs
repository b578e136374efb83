//! Invariant suites. Each returns one [`Check`] per property, with the worst
//! residual over its random instances.

pub mod base;
pub mod chart;
pub mod crosscut;
pub mod geom;
pub mod orbit;
pub mod transport;
pub mod tubular;

use serde::Serialize;

use crate::report::Check;
use crate::scene::Scene;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Geom,
    Tubular,
    Chart,
    Orbit,
    Exchange,
    Base,
    Transport,
    Crosscut,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Geom,
        Suite::Tubular,
        Suite::Chart,
        Suite::Orbit,
        Suite::Exchange,
        Suite::Base,
        Suite::Transport,
        Suite::Crosscut,
    ];

    pub fn run(self, scene: &Scene) -> Vec<Check> {
        match self {
            Suite::Geom => geom::run(scene),
            Suite::Tubular => tubular::run(scene),
            Suite::Chart => chart::run(scene),
            Suite::Orbit => orbit::run(scene),
            Suite::Exchange => orbit::run_exchange(scene),
            Suite::Base => base::run(scene),
            Suite::Transport => transport::run(scene),
            Suite::Crosscut => crosscut::run(scene),
        }
    }
}

pub fn run_all(scene: &Scene, suites: &[Suite]) -> Vec<Check> {
    suites.iter().flat_map(|s| s.run(scene)).collect()
}
