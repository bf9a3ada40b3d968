//! Quasi-static positive-sequence phasor model of the microgrid feeder.
//!
//! Everything inside is per-unit on a single power base with one voltage
//! base per zone. The grid-forming source sets one bus voltage; the
//! electrolyzer converter is a current sink at its terminal.

mod model;
mod solve;

pub use model::{
    BranchKind, BranchSpec, BreakerStates, BusId, BusSpec, ElectrolyzerAttachment, LoadImpedance,
    LoadSpec, NetworkDescription, NetworkModel, PerUnitBase, TransformerSpec,
};
pub use solve::{Measurement, NetworkSolution};

/// Complex phasor in per-unit.
pub type ComplexPhasor = num_complex::Complex64;
