use num_complex::Complex64;
use serde::Serialize;

use super::scenario::{BreakerAction, Scenario};
use super::trace::{compute_metrics, EventWindow, Sample, ScenarioMetrics, SimulationTrace};
use crate::control::{
    DqPhasor, DroopParams, OppositeDroopParams, PiController, PowerPair, SecondaryState,
    SignConvention,
};
use crate::error::{ensure, Error, Result};
use crate::network::{BreakerStates, BusId, NetworkModel};
use crate::plant::{hydrogen_summary, DerState, ElectrolyzerMode, ElectrolyzerState, InnerLoop};

/// Largest admissible integration step [s].
pub const MAX_DT: f64 = 1e-3;
const INIT_ITERATIONS: usize = 500;
const PQ_ITERATIONS: usize = 100;

/// A failure during a run, stamped with the simulation time it occurred at.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error} at t = {time} s")]
pub struct RunError {
    pub time: f64,
    #[source]
    pub error: Error,
}

impl RunError {
    fn at(time: f64) -> impl FnOnce(Error) -> RunError {
        move |error| RunError { time, error }
    }
}

/// Energy delivered and absorbed over the run [J].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyLedger {
    pub der: f64,
    pub loads: f64,
    pub losses: f64,
    pub electrolyzer: f64,
}

impl EnergyLedger {
    /// |der - (loads + losses + electrolyzer)| / der
    pub fn relative_residual(&self) -> f64 {
        (self.der - self.loads - self.losses - self.electrolyzer).abs() / self.der.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub trace: SimulationTrace,
    pub metrics: ScenarioMetrics,
    pub window: EventWindow,
    pub energy: EnergyLedger,
    /// DC energy [J] and hydrogen proxy [kg] over the whole run.
    pub hydrogen: (f64, f64),
}

/// Scenario turned into device models and a schedule.
struct Setup {
    network: NetworkModel,
    der_params: DroopParams,
    t_f: f64,
    electrolyzer: ElectrolyzerState,
    secondary: Option<SecondaryState>,
    monitored: Vec<BusId>,
    /// (step, breaker index, closed)
    events: Vec<(usize, usize, bool)>,
    steps: usize,
    record_every: usize,
    window: EventWindow,
}

fn steps_for(interval: f64, dt: f64) -> usize {
    // Tolerates `interval` being k*dt up to rounding.
    (interval / dt - 1e-9).ceil().max(0.0) as usize
}

impl Setup {
    fn new(sc: &Scenario) -> Result<Self> {
        let sim = &sc.simulation;
        ensure(sim.dt > 0.0 && sim.dt <= MAX_DT, || {
            format!("dt must be in (0, {MAX_DT}] s (got {})", sim.dt)
        })?;
        ensure(sim.duration > 0.0 && sim.duration.is_finite(), || {
            format!("duration must be > 0 (got {})", sim.duration)
        })?;
        let record_every = (sim.record_interval / sim.dt).round();
        ensure(
            record_every >= 1.0
                && (record_every * sim.dt - sim.record_interval).abs()
                    <= 1e-9 * sim.record_interval,
            || {
                format!(
                    "record_interval {} must be a whole multiple of dt {}",
                    sim.record_interval, sim.dt
                )
            },
        )?;
        ensure(
            sim.electrolyzer_mode != ElectrolyzerMode::VoltageControl,
            || {
                "voltage_control mode is a reference generator only and cannot drive a scenario"
                    .into()
            },
        )?;

        let network = NetworkModel::build(&sc.network)?;
        ensure(network.converter_terminal().is_some(), || {
            "network has no electrolyzer attachment".into()
        })?;
        let der = &sc.der;
        ensure((der.f_nom - sc.network.f_nom).abs() < 1e-12, || {
            format!(
                "DER f_nom {} differs from network f_nom {}",
                der.f_nom, sc.network.f_nom
            )
        })?;
        ensure(der.p_rated > 0.0 && der.s_rated > 0.0, || {
            "DER ratings must be > 0".into()
        })?;
        let der_params = DroopParams {
            k_p: der.frequency_droop * der.f_nom / der.p_rated,
            k_q: der.voltage_droop * der.e_nom / der.s_rated,
            f_nom: der.f_nom,
            e_nom: der.e_nom,
            p_set: der.p_set * der.p_rated,
            q_set: der.q_set * der.s_rated,
            sign_convention: SignConvention::GeneratorSide,
        };
        der_params.validate()?;

        let el = &sc.electrolyzer;
        let od = OppositeDroopParams {
            k_f: el.k_f,
            k_v: el.k_v,
            f_nom: der.f_nom,
            e_nom: der.e_nom,
            p_set: el.p_set,
            q_set: el.q_set,
            p_min: 0.0,
            p_max: el.p_rated,
            q_min: -el.q_rated,
            q_max: el.q_rated,
        };
        let inner_pi =
            PiController::new(el.inner_kp, el.inner_ki, -el.inner_limit, el.inner_limit)?;
        let electrolyzer = ElectrolyzerState::new(
            sim.electrolyzer_mode,
            od,
            None,
            PowerPair::new(el.constant_p, el.constant_q)?,
            InnerLoop {
                d: inner_pi,
                q: inner_pi,
                plant_gain: el.inner_plant_gain,
            },
            el.efficiency,
            sc.network.s_base,
        )?;

        let s2 = &sc.secondary;
        let secondary = if sim.secondary {
            ensure(s2.measurement_tau > 0.0, || {
                format!(
                    "secondary measurement_tau must be > 0 (got {})",
                    s2.measurement_tau
                )
            })?;
            Some(SecondaryState::new(
                PiController::new(s2.kp_f, s2.ki_f, -s2.delta_f_limit, s2.delta_f_limit)?,
                PiController::new(s2.kp_v, s2.ki_v, -s2.delta_e_limit, s2.delta_e_limit)?,
                s2.period,
            )?)
        } else {
            None
        };
        let monitored = s2
            .monitored_buses
            .iter()
            .map(|name| {
                network
                    .bus_id(name)
                    .ok_or_else(|| Error::Topology(format!("monitored bus {name} is not declared")))
            })
            .collect::<Result<Vec<_>>>()?;
        ensure(!monitored.is_empty(), || {
            "monitored_buses must not be empty".into()
        })?;

        let mut events = Vec::with_capacity(sc.events.len());
        let mut last_time = f64::NEG_INFINITY;
        for ev in &sc.events {
            ensure(ev.time >= last_time, || {
                "events must be sorted by time".into()
            })?;
            ensure((0.0..=sim.duration).contains(&ev.time), || {
                format!("event at {} s lies outside [0, {}]", ev.time, sim.duration)
            })?;
            let idx = network
                .breaker_index(&ev.breaker)
                .ok_or_else(|| Error::Topology(format!("unknown breaker {}", ev.breaker)))?;
            events.push((
                steps_for(ev.time, sim.dt),
                idx,
                ev.action == BreakerAction::Close,
            ));
            last_time = ev.time;
        }
        let window = match (sc.events.first(), sc.events.last()) {
            (Some(first), Some(last)) => EventWindow {
                t0: (first.time - 0.5).max(0.0),
                t1: (last.time + 1.0).min(sim.duration),
                settle_from: last.time,
            },
            _ => EventWindow {
                t0: 0.0,
                t1: sim.duration,
                settle_from: 0.0,
            },
        };

        Ok(Self {
            network,
            der_params,
            t_f: der.t_f,
            electrolyzer,
            secondary,
            monitored,
            events,
            steps: steps_for(sim.duration, sim.dt),
            record_every: record_every as usize,
            window,
        })
    }

    /// Terminal Thevenin equivalent for the given breaker states:
    /// `V_term = h * V_source + z * I`.
    fn thevenin(&self, breakers: &BreakerStates) -> Result<(Complex64, Complex64)> {
        let one = Complex64::new(1.0, 0.0);
        let terminal = |i| -> Result<Complex64> {
            Ok(self
                .network
                .solve(one, i, breakers)?
                .terminal_voltage()
                .expect("checked at setup"))
        };
        let h = terminal(Complex64::new(0.0, 0.0))?;
        Ok((h, terminal(one)? - h))
    }

    /// Current drawing exactly `s` [pu] at the converter terminal, by
    /// fixed-point iteration on the terminal's Thevenin equivalent.
    fn constant_pq_current(
        v_open: Complex64,
        z: Complex64,
        s: Complex64,
        guess: Complex64,
    ) -> Result<Complex64> {
        let floor = crate::control::VOLTAGE_FLOOR;
        let mut i = guess;
        for _ in 0..PQ_ITERATIONS {
            let v = v_open + z * i;
            if v.norm() <= floor {
                return Err(Error::VoltageCollapse {
                    magnitude: v.norm(),
                    floor,
                });
            }
            let next = (s / v).conj();
            let done = (next - i).norm() <= 1e-15 * (1.0 + next.norm());
            i = next;
            if done {
                return Ok(i);
            }
        }
        Err(Error::InvalidParameter(
            "constant-power injection did not converge".into(),
        ))
    }

    /// Steady operating point: DER filters, converter current and, with
    /// secondary control, the corrections that hold f and the average
    /// voltage at nominal.
    fn initial_state(
        &self,
        breakers: &BreakerStates,
    ) -> Result<(DerState, ElectrolyzerState, Option<SecondaryState>)> {
        let s_base = self.network.base().s_base;
        let p = &self.der_params;
        let mut measured = PowerPair {
            p: p.p_set,
            q: p.q_set,
        };
        let mut sec = self.secondary;
        let mut el = self.electrolyzer;
        for _ in 0..INIT_ITERATIONS {
            let der = DerState::settled(*p, self.t_f, measured, sec.as_ref())?;
            let sol = self
                .network
                .solve(der.source_voltage(), el.i_actual.into(), breakers)?;
            let meas = self.network.measure(&sol, der.frequency, &self.monitored)?;
            let grid_v: DqPhasor = sol.terminal_voltage().expect("checked at setup").into();
            let reference = el.power_reference(meas.f, meas.e_pcc, sec.as_ref());
            let i_next = el.current_for(reference, grid_v)?;
            let s = sol.source_power() * s_base;
            let next = PowerPair { p: s.re, q: s.im };

            let mut settled = (next.p - measured.p).abs() < 1e-6
                && (next.q - measured.q).abs() < 1e-6
                && (i_next.d - el.i_actual.d).abs() < 1e-15
                && (i_next.q - el.i_actual.q).abs() < 1e-15;
            if let Some(sc) = sec.as_mut() {
                let f_err = p.f_nom - der.frequency;
                let e_err = p.e_nom - meas.e_bar;
                settled &= f_err.abs() < 1e-12 && e_err.abs() < 1e-13;
                sc.preload(sc.delta_f + f_err, sc.delta_e + e_err);
            }
            measured = next;
            el.i_actual = i_next;
            if settled {
                el.p_ac = reference;
                let der = DerState::settled(*p, self.t_f, measured, sec.as_ref())?;
                return Ok((der, el, sec));
            }
        }
        Err(Error::InvalidParameter(
            "initial operating point did not converge".into(),
        ))
    }
}

/// Runs a scenario to completion.
///
/// Each step applies due breaker events, solves the network, measures,
/// executes the secondary controller on its own period, then advances the
/// electrolyzer and the DER.
pub fn run(scenario: &Scenario) -> std::result::Result<RunOutput, RunError> {
    let setup = Setup::new(scenario).map_err(RunError::at(0.0))?;
    let dt = scenario.simulation.dt;
    let s_base = setup.network.base().s_base;
    let (f_nom, e_nom) = (setup.der_params.f_nom, setup.der_params.e_nom);
    let constant = setup.electrolyzer.mode == ElectrolyzerMode::ConstantPower;
    let s_const = Complex64::new(
        setup.electrolyzer.constant_power.p,
        setup.electrolyzer.constant_power.q,
    ) / s_base;

    let mut breakers = setup.network.initial_breakers();
    let (mut der, mut el, mut sec) = setup.initial_state(&breakers).map_err(RunError::at(0.0))?;
    let alpha = -(-dt / scenario.secondary.measurement_tau).exp_m1();
    let mut f_filt = der.frequency;
    let mut e_filt = f64::NAN;

    let mut trace = SimulationTrace::with_capacity(setup.steps / setup.record_every + 1);
    let mut energy = EnergyLedger::default();
    let mut next_event = 0;
    let mut thevenin = vec![None; 1 << breakers.len()];
    let mut hydrogen = hydrogen_summary(&el);

    for k in 0..=setup.steps {
        let t = k as f64 * dt;
        let fail = RunError::at(t);
        // Energy up to t; the final step's consumption lies past the end.
        hydrogen = hydrogen_summary(&el);
        while let Some(&(step, idx, closed)) = setup.events.get(next_event) {
            if step > k {
                break;
            }
            breakers.set(idx, closed);
            next_event += 1;
        }

        let rot = Complex64::from_polar(1.0, der.phase);
        let source = der.source_voltage();
        let i_net = if constant {
            let (h, z) = match thevenin[breakers.mask()] {
                Some(hz) => hz,
                None => {
                    let hz = setup.thevenin(&breakers).map_err(RunError::at(t))?;
                    thevenin[breakers.mask()] = Some(hz);
                    hz
                }
            };
            let guess = Complex64::from(el.i_actual) * rot;
            Setup::constant_pq_current(h * source, z, s_const, guess).map_err(fail)?
        } else {
            Complex64::from(el.i_actual) * rot
        };
        let sol = setup
            .network
            .solve(source, i_net, &breakers)
            .map_err(RunError::at(t))?;
        let meas = setup
            .network
            .measure(&sol, der.frequency, &setup.monitored)
            .map_err(RunError::at(t))?;
        let grid_v: DqPhasor =
            (sol.terminal_voltage().expect("checked at setup") * rot.conj()).into();
        if constant {
            el.i_actual = (i_net * rot.conj()).into();
        }

        if let Some(s) = sec.as_ref() {
            if e_filt.is_nan() {
                e_filt = meas.e_bar;
            }
            f_filt += alpha * (meas.f - f_filt);
            e_filt += alpha * (meas.e_bar - e_filt);
            sec = Some(s.step(f_filt, e_filt, f_nom, e_nom, t));
        }

        el = el
            .step(grid_v, meas.f, meas.e_pcc, sec.as_ref(), dt)
            .map_err(RunError::at(t))?;

        let s_g = sol.source_power() * s_base;
        let s_e = sol.electrolyzer_power() * s_base;
        if k % setup.record_every == 0 {
            trace
                .push(Sample {
                    time: t,
                    p_g: s_g.re,
                    q_g: s_g.im,
                    f: meas.f,
                    v_pcc: meas.e_pcc,
                    v_bar: meas.e_bar,
                    p_e: s_e.re,
                    q_e: s_e.im,
                    delta_f: sec.map_or(0.0, |s| s.delta_f),
                    delta_e: sec.map_or(0.0, |s| s.delta_e),
                    p_dc: el.p_dc,
                })
                .map_err(RunError::at(t))?;
        }
        if k == setup.steps {
            break;
        }
        energy.der += s_g.re * dt;
        energy.loads += setup.network.load_power(&sol).re * s_base * dt;
        energy.losses += setup.network.branch_losses(&sol).re * s_base * dt;
        energy.electrolyzer += s_e.re * dt;

        der = der
            .step(
                PowerPair {
                    p: s_g.re,
                    q: s_g.im,
                },
                sec.as_ref(),
                dt,
            )
            .map_err(RunError::at(t))?;
    }

    let window = EventWindow {
        t1: setup
            .window
            .t1
            .min(trace.samples().last().map_or(0.0, |s| s.time)),
        ..setup.window
    };
    let metrics = compute_metrics(&trace, window, f_nom)
        .map_err(RunError::at(scenario.simulation.duration))?;
    Ok(RunOutput {
        trace,
        metrics,
        window,
        energy,
        hydrogen,
    })
}
