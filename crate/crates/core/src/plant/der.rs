use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::control::{droop_refs, DroopParams, PowerPair, SecondaryState, SignConvention};
use crate::error::{ensure, Error, Result};

/// DER trips if its frequency leaves this band [Hz].
pub const FREQUENCY_GUARD_BAND: (f64, f64) = (55.0, 65.0);

/// Droop-controlled grid-forming source with low-pass filtered power
/// measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerState {
    pub params: DroopParams,
    /// W
    pub p_filt: f64,
    /// var
    pub q_filt: f64,
    /// Filter time constant [s], shared by P and Q.
    pub t_f: f64,
    pub frequency: f64,
    /// pu
    pub voltage_mag: f64,
    /// rad, wrapped to [0, 2π).
    pub phase: f64,
}

impl DerState {
    /// A DER whose filters already hold `measured`, as after a long steady run.
    pub fn settled(
        params: DroopParams,
        t_f: f64,
        measured: PowerPair,
        secondary: Option<&SecondaryState>,
    ) -> Result<Self> {
        params.validate()?;
        ensure(
            params.sign_convention == SignConvention::GeneratorSide,
            || "DER droop must use the generator-side sign convention".into(),
        )?;
        ensure(t_f > 0.0 && t_f.is_finite(), || {
            format!("DER t_f must be > 0 (got {t_f})")
        })?;
        measured.check("DER measurement")?;
        let (frequency, voltage_mag) = droop_refs(measured, &params, secondary);
        let state = Self {
            params,
            p_filt: measured.p,
            q_filt: measured.q,
            t_f,
            frequency,
            voltage_mag,
            phase: 0.0,
        };
        state.check_band()?;
        Ok(state)
    }

    fn check_band(&self) -> Result<()> {
        let (min, max) = FREQUENCY_GUARD_BAND;
        if (min..=max).contains(&self.frequency) {
            Ok(())
        } else {
            Err(Error::FrequencyTrip {
                frequency: self.frequency,
                min,
                max,
            })
        }
    }

    /// Terminal voltage phasor [pu].
    pub fn source_voltage(&self) -> Complex64 {
        Complex64::from_polar(self.voltage_mag, self.phase)
    }

    /// Advances filters, droop references and phase by `dt`.
    pub fn step(
        &self,
        measured: PowerPair,
        secondary: Option<&SecondaryState>,
        dt: f64,
    ) -> Result<Self> {
        ensure(dt > 0.0, || format!("dt must be > 0 (got {dt})"))?;
        measured.check("DER measurement")?;
        // Exact zero-order-hold discretization of the first-order lag.
        let alpha = -(-dt / self.t_f).exp_m1();
        let p_filt = self.p_filt + alpha * (measured.p - self.p_filt);
        let q_filt = self.q_filt + alpha * (measured.q - self.q_filt);
        let (frequency, voltage_mag) = droop_refs(
            PowerPair {
                p: p_filt,
                q: q_filt,
            },
            &self.params,
            secondary,
        );
        let next = Self {
            p_filt,
            q_filt,
            frequency,
            voltage_mag,
            phase: (self.phase + TAU * frequency * dt).rem_euclid(TAU),
            ..*self
        };
        next.check_band()?;
        Ok(next)
    }
}
