//! Device models advanced once per simulation step: the grid-forming DER
//! and the electrolyzer converter with its stack proxy.

mod der;
mod electrolyzer;

pub use der::{DerState, FREQUENCY_GUARD_BAND};
pub use electrolyzer::{
    hydrogen_summary, ElectrolyzerMode, ElectrolyzerState, InnerLoop, H2_PROXY_KG_PER_J,
};
