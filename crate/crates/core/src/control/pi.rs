use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Discrete PI regulator: forward-Euler integral with conditional-integration
/// anti-windup and a saturated output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiController {
    pub kp: f64,
    pub ki: f64,
    integral: f64,
    out_min: f64,
    out_max: f64,
}

impl PiController {
    pub fn new(kp: f64, ki: f64, out_min: f64, out_max: f64) -> Result<Self> {
        ensure(kp.is_finite() && kp >= 0.0, || {
            format!("PI kp must be >= 0 (got {kp})")
        })?;
        ensure(ki.is_finite() && ki >= 0.0, || {
            format!("PI ki must be >= 0 (got {ki})")
        })?;
        ensure(out_min < out_max, || {
            format!("PI limits must satisfy out_min < out_max (got [{out_min}, {out_max}])")
        })?;
        Ok(Self {
            kp,
            ki,
            integral: 0.0,
            out_min,
            out_max,
        })
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn limits(&self) -> (f64, f64) {
        (self.out_min, self.out_max)
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
    }

    /// Sets the integral so that a zero error yields `output`.
    pub fn preload(&mut self, output: f64) {
        self.integral = if self.ki > 0.0 { output / self.ki } else { 0.0 };
    }

    /// Advances the regulator by `dt` with the given error and returns the
    /// saturated output.
    pub fn step(&mut self, error: f64, dt: f64) -> f64 {
        debug_assert!(dt > 0.0, "PI step needs dt > 0");
        let candidate = self.integral + error * dt;
        let unsaturated = self.kp * error + self.ki * candidate;
        let winding_up = (unsaturated > self.out_max && self.ki * error > 0.0)
            || (unsaturated < self.out_min && self.ki * error < 0.0);
        if !winding_up {
            self.integral = candidate;
        }

        // Keep the integral contribution within reach of the output band.
        if self.ki > 0.0 {
            let slack = self.kp * error.abs();
            let lo = (self.out_min - slack) / self.ki;
            let hi = (self.out_max + slack) / self.ki;
            self.integral = self.integral.clamp(lo, hi);
        }

        self.output_for(error)
    }

    /// Output for `error` with the current integral, without advancing state.
    pub fn output_for(&self, error: f64) -> f64 {
        (self.kp * error + self.ki * self.integral).clamp(self.out_min, self.out_max)
    }
}
