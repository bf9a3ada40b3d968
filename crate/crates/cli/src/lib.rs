//! Output writers shared by the `h2grid` binary and its tests.

pub mod output;
pub mod plots;
