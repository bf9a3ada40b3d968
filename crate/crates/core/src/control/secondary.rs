use serde::{Deserialize, Serialize};

use super::pi::PiController;
use crate::error::{ensure, Result};

/// Centralized secondary controller: two PI loops producing the frequency
/// and average-voltage corrections, executed on a fixed period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondaryState {
    /// Hz
    pub delta_f: f64,
    /// pu
    pub delta_e: f64,
    pub f_regulator: PiController,
    pub v_regulator: PiController,
    /// s
    pub execution_period: f64,
    last_boundary: Option<u64>,
}

impl SecondaryState {
    pub fn new(
        f_regulator: PiController,
        v_regulator: PiController,
        execution_period: f64,
    ) -> Result<Self> {
        ensure(
            execution_period > 0.0 && execution_period.is_finite(),
            || format!("secondary execution period must be > 0 (got {execution_period})"),
        )?;
        Ok(Self {
            delta_f: 0.0,
            delta_e: 0.0,
            f_regulator,
            v_regulator,
            execution_period,
            last_boundary: None,
        })
    }

    /// Index of the most recent execution boundary at or before `now`.
    fn boundary_index(&self, now: f64) -> u64 {
        // Relative slack absorbs accumulated rounding in `now = k * dt`.
        (now / self.execution_period + 1e-9).floor().max(0.0) as u64
    }

    /// Runs both regulators if `now` has reached an execution boundary not yet
    /// served; otherwise returns the state unchanged.
    pub fn step(&self, f_meas: f64, e_bar: f64, f_nom: f64, e_nom: f64, now: f64) -> Self {
        let k = self.boundary_index(now);
        if self.last_boundary.is_some_and(|last| k <= last) {
            return *self;
        }
        let mut next = *self;
        let dt = self.execution_period;
        next.delta_f = next.f_regulator.step(f_nom - f_meas, dt);
        next.delta_e = next.v_regulator.step(e_nom - e_bar, dt);
        next.last_boundary = Some(k);
        next
    }

    /// Sets both corrections to hold the given values at zero error, as in a
    /// system that has been under secondary control long enough to settle.
    pub fn preload(&mut self, delta_f: f64, delta_e: f64) {
        self.f_regulator.preload(delta_f);
        self.v_regulator.preload(delta_e);
        self.delta_f = self.f_regulator.output_for(0.0);
        self.delta_e = self.v_regulator.output_for(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh() -> SecondaryState {
        let pi = PiController::new(10.0, 0.1, -5.0, 5.0).unwrap();
        SecondaryState::new(pi, pi, 0.01).unwrap()
    }

    #[test]
    fn zero_error_leaves_terms() {
        let s = fresh().step(60.0, 1.0, 60.0, 1.0, 0.0);
        assert_eq!((s.delta_f, s.delta_e), (0.0, 0.0));
        assert_eq!(s.f_regulator.integral(), 0.0);
    }

    #[test]
    fn first_boundary() {
        let s = fresh().step(59.9, 1.0, 60.0, 1.0, 0.0);
        let expected = 10.0 * 0.1 + 0.1 * (0.1 * 0.01);
        assert!((s.delta_f - expected).abs() < 1e-12, "{}", s.delta_f);
    }

    #[test]
    fn holds_between_boundaries() {
        let s = fresh().step(59.9, 0.97, 60.0, 1.0, 0.0);
        for t in [0.001, 0.005, 0.0099] {
            assert_eq!(s.step(59.0, 0.5, 60.0, 1.0, t), s);
        }
        let next = s.step(59.9, 0.97, 60.0, 1.0, 0.01);
        assert_ne!(next, s);
    }

    #[test]
    fn boundary_tolerates_rounding() {
        let s = fresh().step(59.9, 1.0, 60.0, 1.0, 0.0);
        // 100 * 1e-4 rounds slightly off 0.01.
        let now = 100.0 * 1e-4;
        assert_ne!(s.step(59.9, 1.0, 60.0, 1.0, now), s);
    }

    #[test]
    fn preload_holds_correction() {
        let mut s = fresh();
        s.preload(-0.15, 0.03);
        assert!((s.delta_f + 0.15).abs() < 1e-12);
        let next = s.step(60.0, 1.0, 60.0, 1.0, 0.0);
        assert!((next.delta_f + 0.15).abs() < 1e-12);
        assert!((next.delta_e - 0.03).abs() < 1e-12);
    }
}
