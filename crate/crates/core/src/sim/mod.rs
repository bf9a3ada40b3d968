//! Fixed-step simulation of the microgrid: scenario description, the
//! stepping engine, recorded traces and metrics, and multi-case studies.

mod engine;
mod scenario;
mod study;
mod trace;

pub use engine::{run, EnergyLedger, RunError, RunOutput, MAX_DT};
pub use scenario::{
    default_network, BreakerAction, DerConfig, ElectrolyzerConfig, Event, Scenario,
    SecondaryConfig, SimulationSettings, Study, StudyCase,
};
pub use study::{run_study, CaseResult, PairedComparison, StudyReport};
pub use trace::{
    compute_metrics, EventWindow, Sample, ScenarioMetrics, SimulationTrace, SETTLE_BAND,
    TRACE_COLUMNS,
};
