//! Phasor-domain simulator of a droop-controlled microgrid with a
//! grid-supporting hydrogen electrolyzer.

pub mod config;
pub mod control;
mod error;
pub mod network;
pub mod plant;
pub mod sim;

pub use control::{DqPhasor, PowerPair};
pub use error::{Error, Result};
pub use network::{NetworkDescription, NetworkModel};
pub use sim::{run, run_study, Scenario, Study};
