//! Fixtures shared by the benchmarks.

use h2grid::network::NetworkModel;
use h2grid::plant::ElectrolyzerMode;
use h2grid::sim::{default_network, Scenario};

pub fn feeder() -> NetworkModel {
    NetworkModel::build(&default_network()).expect("default network is valid")
}

/// The 5 s load-step scenario for one electrolyzer mode.
pub fn load_step(mode: ElectrolyzerMode, secondary: bool) -> Scenario {
    Scenario::load_step().with_case(mode, secondary)
}
