use serde::{Deserialize, Serialize};

use crate::control::{
    dq_current_refs, dq_power, droop_refs, opposite_droop_refs, DqPhasor, DroopParams,
    OppositeDroopParams, PiController, PowerPair, SecondaryState,
};
use crate::error::{ensure, Result};

/// Hydrogen proxy: kilograms per joule of DC energy at a nominal
/// 55 kWh/kg specific consumption.
pub const H2_PROXY_KG_PER_J: f64 = 1.0 / (55.0 * 3.6e6);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElectrolyzerMode {
    /// Fixed P and Q regardless of grid conditions.
    ConstantPower,
    /// Grid-forming reference generator (droop on measured power).
    VoltageControl,
    /// Grid-following: opposite droop outer loop, PI current inner loop.
    CurrentControl,
}

/// Converter current loop: per-axis PI driving an integrating plant,
/// `di/dt = plant_gain * u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerLoop {
    pub d: PiController,
    pub q: PiController,
    /// 1/s
    pub plant_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElectrolyzerState {
    pub mode: ElectrolyzerMode,
    pub od_params: OppositeDroopParams,
    /// Used by the voltage-control reference generator.
    pub droop_params: Option<DroopParams>,
    /// Held in constant-power mode [W, var].
    pub constant_power: PowerPair,
    pub inner: InnerLoop,
    /// Converter current in the synchronous frame [pu].
    pub i_actual: DqPhasor,
    /// Power base used to convert between W and pu.
    pub s_base: f64,
    /// AC power drawn at the last step [W, var].
    pub p_ac: PowerPair,
    /// W
    pub p_dc: f64,
    pub efficiency: f64,
    /// J
    pub h2_energy: f64,
    /// `(f*, E*)` from the last voltage-control step.
    pub voltage_refs: Option<(f64, f64)>,
}

impl ElectrolyzerState {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mode: ElectrolyzerMode,
        od_params: OppositeDroopParams,
        droop_params: Option<DroopParams>,
        constant_power: PowerPair,
        inner: InnerLoop,
        efficiency: f64,
        s_base: f64,
    ) -> Result<Self> {
        od_params.validate()?;
        if let Some(d) = &droop_params {
            d.validate()?;
        }
        ensure(
            mode != ElectrolyzerMode::VoltageControl || droop_params.is_some(),
            || "voltage-control mode needs droop parameters".into(),
        )?;
        constant_power.check("constant power")?;
        ensure(
            (od_params.p_min..=od_params.p_max).contains(&constant_power.p)
                && (od_params.q_min..=od_params.q_max).contains(&constant_power.q),
            || "constant power must lie within the converter limits".into(),
        )?;
        ensure(efficiency > 0.0 && efficiency <= 1.0, || {
            format!("efficiency must be in (0, 1] (got {efficiency})")
        })?;
        ensure(
            inner.plant_gain > 0.0 && inner.plant_gain.is_finite(),
            || format!("inner plant gain must be > 0 (got {})", inner.plant_gain),
        )?;
        ensure(s_base > 0.0, || {
            format!("s_base must be > 0 (got {s_base})")
        })?;
        Ok(Self {
            mode,
            od_params,
            droop_params,
            constant_power,
            inner,
            i_actual: DqPhasor::ZERO,
            s_base,
            p_ac: PowerPair::ZERO,
            p_dc: 0.0,
            efficiency,
            h2_energy: 0.0,
            voltage_refs: None,
        })
    }

    /// Power references the converter is currently asked to draw [W, var].
    pub fn power_reference(
        &self,
        f_meas: f64,
        e_meas: f64,
        secondary: Option<&SecondaryState>,
    ) -> PowerPair {
        match self.mode {
            ElectrolyzerMode::ConstantPower => self.constant_power,
            ElectrolyzerMode::CurrentControl => {
                opposite_droop_refs(f_meas, e_meas, &self.od_params, secondary)
            }
            ElectrolyzerMode::VoltageControl => self.p_ac,
        }
    }

    /// Current that draws `reference` at `grid_v` [pu].
    pub fn current_for(&self, reference: PowerPair, grid_v: DqPhasor) -> Result<DqPhasor> {
        dq_current_refs(reference.p / self.s_base, reference.q / self.s_base, grid_v)
    }

    /// Advances the converter by `dt` against grid voltage `grid_v` [pu, dq].
    ///
    /// The power drawn during the step is evaluated with the current held
    /// from the previous step; the inner loop then moves the current toward
    /// the new reference.
    pub fn step(
        &self,
        grid_v: DqPhasor,
        f_meas: f64,
        e_meas: f64,
        secondary: Option<&SecondaryState>,
        dt: f64,
    ) -> Result<Self> {
        ensure(dt > 0.0, || format!("dt must be > 0 (got {dt})"))?;
        let mut next = *self;
        next.p_ac = dq_power(grid_v, self.i_actual).scale(self.s_base);
        next.p_ac.check("electrolyzer power")?;
        next.p_dc = (next.p_ac.p * self.efficiency).max(0.0);
        next.h2_energy += next.p_dc * dt;

        match self.mode {
            ElectrolyzerMode::ConstantPower => {
                next.i_actual = self.current_for(self.constant_power, grid_v)?;
            }
            ElectrolyzerMode::CurrentControl => {
                let reference = opposite_droop_refs(f_meas, e_meas, &self.od_params, secondary);
                let i_ref = self.current_for(reference, grid_v)?;
                let u_d = next.inner.d.step(i_ref.d - self.i_actual.d, dt);
                let u_q = next.inner.q.step(i_ref.q - self.i_actual.q, dt);
                next.i_actual = DqPhasor {
                    d: self.i_actual.d + self.inner.plant_gain * u_d * dt,
                    q: self.i_actual.q + self.inner.plant_gain * u_q * dt,
                };
            }
            ElectrolyzerMode::VoltageControl => {
                let params = self
                    .droop_params
                    .as_ref()
                    .expect("validated at construction");
                next.voltage_refs = Some(droop_refs(next.p_ac, params, secondary));
            }
        }
        Ok(next)
    }
}

/// `(DC energy [J], hydrogen proxy [kg])` accumulated so far.
pub fn hydrogen_summary(state: &ElectrolyzerState) -> (f64, f64) {
    (state.h2_energy, state.h2_energy * H2_PROXY_KG_PER_J)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::SignConvention;

    const S_BASE: f64 = 5e6;

    fn od() -> OppositeDroopParams {
        OppositeDroopParams {
            k_f: 52_500.0,
            k_v: 1.0e4,
            f_nom: 60.0,
            e_nom: 1.0,
            p_set: 400e3,
            q_set: 0.0,
            p_min: 0.0,
            p_max: 750e3,
            q_min: -500e3,
            q_max: 500e3,
        }
    }

    fn inner() -> InnerLoop {
        let pi = PiController::new(10.0, 0.1, -10.0, 10.0).unwrap();
        InnerLoop {
            d: pi,
            q: pi,
            plant_gain: 50.0,
        }
    }

    fn state(mode: ElectrolyzerMode) -> ElectrolyzerState {
        let droop = DroopParams {
            k_p: 1e-6,
            k_q: 1e-6,
            f_nom: 60.0,
            e_nom: 1.0,
            p_set: 400e3,
            q_set: 0.0,
            sign_convention: SignConvention::LoadSide,
        };
        ElectrolyzerState::new(
            mode,
            od(),
            Some(droop),
            PowerPair {
                p: 400e3,
                q: -100e3,
            },
            inner(),
            0.95,
            S_BASE,
        )
        .unwrap()
    }

    fn run(
        mut s: ElectrolyzerState,
        v: DqPhasor,
        f: f64,
        e: f64,
        steps: usize,
    ) -> ElectrolyzerState {
        for _ in 0..steps {
            s = s.step(v, f, e, None, 1e-4).unwrap();
        }
        s
    }

    #[test]
    fn nominal_grid_converges_to_setpoint() {
        let v = DqPhasor::new(0.98, -0.05);
        let s = run(state(ElectrolyzerMode::CurrentControl), v, 60.0, 1.0, 2000);
        let p = dq_power(v, s.i_actual).scale(S_BASE);
        // The PI zero leaves a slow tail of small amplitude behind the fast pole.
        assert!((p.p - 400e3).abs() < 1e-4 * 400e3, "{p:?}");
        assert!(p.q.abs() < 1.0, "{p:?}");
    }

    #[test]
    fn off_nominal_frequency_follows_opposite_droop() {
        let v = DqPhasor::new(1.0, 0.0);
        let s = run(state(ElectrolyzerMode::CurrentControl), v, 59.95, 1.0, 2000);
        let p = dq_power(v, s.i_actual).scale(S_BASE);
        let expected = 400_000.0 + 52_500.0 * -0.05;
        assert!((p.p - expected).abs() < 1e-3 * expected);
    }

    #[test]
    fn constant_mode_ignores_grid() {
        let mut s = state(ElectrolyzerMode::ConstantPower);
        for (k, v) in [(0.9, 0.1), (1.05, -0.02), (0.7, 0.3)]
            .into_iter()
            .enumerate()
        {
            let v = DqPhasor::new(v.0, v.1);
            // Two steps at the same voltage: the second draws exactly the held power.
            s = s.step(v, 58.0 + k as f64, 0.9, None, 1e-4).unwrap();
            s = s.step(v, 58.0 + k as f64, 0.9, None, 1e-4).unwrap();
            assert!((s.p_ac.p - 400e3).abs() < 1e-6);
            assert!((s.p_ac.q + 100e3).abs() < 1e-6);
        }
    }

    #[test]
    fn energy_accumulates_dc_power() {
        let s = state(ElectrolyzerMode::ConstantPower);
        assert_eq!(hydrogen_summary(&s), (0.0, 0.0));
        let v = DqPhasor::new(1.0, 0.0);
        let mut s = s.step(v, 60.0, 1.0, None, 1e-4).unwrap();
        let start = s.h2_energy;
        let mut prev = start;
        for _ in 0..10_000 {
            s = s.step(v, 60.0, 1.0, None, 1e-4).unwrap();
            assert!(s.h2_energy >= prev);
            prev = s.h2_energy;
        }
        // 400 kW AC at 95 % for 1 s.
        let (energy, h2) = hydrogen_summary(&s);
        assert!(((energy - start) - 0.95 * 400e3).abs() < 1e-6 * 4e5);
        assert!((h2 - energy * H2_PROXY_KG_PER_J).abs() < 1e-18);
    }

    #[test]
    fn voltage_control_generates_droop_references() {
        let mut s = state(ElectrolyzerMode::VoltageControl);
        s.i_actual = DqPhasor::new(0.1, 0.0); // 500 kW at 1 pu
        let s = s
            .step(DqPhasor::new(1.0, 0.0), 60.0, 1.0, None, 1e-4)
            .unwrap();
        let (f, e) = s.voltage_refs.unwrap();
        assert!((f - 60.1).abs() < 1e-9);
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collapse_propagates() {
        let s = state(ElectrolyzerMode::CurrentControl);
        let err = s
            .step(DqPhasor::new(0.05, 0.0), 60.0, 0.05, None, 1e-4)
            .unwrap_err();
        assert!(matches!(err, crate::Error::VoltageCollapse { .. }));
    }
}
