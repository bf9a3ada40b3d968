//! Control laws of the electrolyzer stack: dq power/current conversion,
//! droop and opposite-droop reference generation, discrete PI regulators,
//! the centralized secondary restoration loop and reserve bookkeeping.

mod dq;
mod droop;
mod pi;
mod secondary;

pub use dq::{dq_current_refs, dq_power, DqPhasor, PowerPair, VOLTAGE_FLOOR};
pub use droop::{
    droop_refs, opposite_droop_refs, power_margins, DroopParams, OppositeDroopParams, PowerMargins,
    SetpointAllocation, SignConvention,
};
pub use pi::PiController;
pub use secondary::SecondaryState;
