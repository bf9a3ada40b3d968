use thiserror::Error;

/// Failures raised by the control, network and plant layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("voltage collapse: |v| = {magnitude:.6} pu is at or below the {floor} pu floor")]
    VoltageCollapse { magnitude: f64, floor: f64 },

    #[error("nodal admittance matrix is numerically singular")]
    SingularNetwork,

    #[error("DER frequency {frequency:.6} Hz left the [{min}, {max}] Hz guard band")]
    FrequencyTrip { frequency: f64, min: f64, max: f64 },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("per-unit zone error: {0}")]
    Unit(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

impl Error {
    /// Short machine-readable name of the failure kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::VoltageCollapse { .. } => "VoltageCollapse",
            Error::SingularNetwork => "SingularNetwork",
            Error::FrequencyTrip { .. } => "FrequencyTrip",
            Error::Topology(_) => "TopologyError",
            Error::Unit(_) => "UnitError",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::NonFinite(_) => "NonFinite",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
