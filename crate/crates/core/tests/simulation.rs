use h2grid::plant::ElectrolyzerMode;
use h2grid::sim::{
    run, run_study, BreakerAction, Event, Scenario, SimulationTrace, Study, TRACE_COLUMNS,
};
use h2grid::Error;

fn supporting(secondary: bool) -> Scenario {
    Scenario::load_step().with_case(ElectrolyzerMode::CurrentControl, secondary)
}

fn rms(x: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = x.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (s / n as f64).sqrt()
}

#[test]
fn equilibrium_run_is_flat() {
    for mode in [
        ElectrolyzerMode::CurrentControl,
        ElectrolyzerMode::ConstantPower,
    ] {
        let mut sc = Scenario::default().with_case(mode, true);
        sc.simulation.duration = 1.0;
        let out = run(&sc).unwrap();
        let first = out.trace.samples()[0];
        for s in out.trace.samples() {
            assert!((s.f - 60.0).abs() < 1e-6, "{mode:?} t={} f={}", s.time, s.f);
            assert!((s.v_bar - 1.0).abs() < 1e-9);
            assert!((s.p_g - first.p_g).abs() < 1e-3);
            assert!((s.p_e - first.p_e).abs() < 1e-3);
        }
        assert_eq!(out.metrics.f_settle, Some(0.0));
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    for sc in [
        supporting(true),
        Scenario::load_step().with_case(ElectrolyzerMode::ConstantPower, false),
    ] {
        let a = run(&sc).unwrap();
        let b = run(&sc).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.metrics, b.metrics);
    }
}

fn max_relative_rms_change(a: &SimulationTrace, b: &SimulationTrace) -> (String, f64) {
    assert_eq!(a.len(), b.len());
    let mut worst = (String::new(), 0.0);
    for name in TRACE_COLUMNS {
        let (x, y) = (a.column(name).unwrap(), b.column(name).unwrap());
        let scale = rms(x.iter().copied());
        let diff = rms(x.iter().zip(&y).map(|(p, q)| p - q));
        let rel = if scale == 0.0 { diff } else { diff / scale };
        if rel > worst.1 {
            worst = (name.to_string(), rel);
        }
    }
    worst
}

#[test]
fn halving_dt_changes_little() {
    for sc in [supporting(true), supporting(false)] {
        let coarse = run(&sc).unwrap();
        let mut fine = sc.clone();
        fine.simulation.dt /= 2.0;
        let fine = run(&fine).unwrap();
        let (col, rel) = max_relative_rms_change(&coarse.trace, &fine.trace);
        assert!(rel < 0.005, "{col}: {rel}");
    }
}

#[test]
fn breaker_acts_at_first_step_not_before_event() {
    let mut sc = Scenario::default().with_case(ElectrolyzerMode::ConstantPower, false);
    sc.simulation.duration = 0.1;
    sc.simulation.record_interval = sc.simulation.dt;
    sc.events = vec![Event {
        time: 0.05005,
        breaker: "S".into(),
        action: BreakerAction::Close,
    }];
    let out = run(&sc).unwrap();
    let p = |t: f64| out.trace.at(t + 1e-9).unwrap();
    let before = p(0.0).p_g;
    assert!((p(0.05).p_g - before).abs() < 1e-3);
    assert!(p(0.0501).p_g > before + 100e3);
    assert!((p(0.0501).time - 0.0501).abs() < 1e-12);
}

#[test]
fn energy_balances() {
    for sc in [
        supporting(true),
        Scenario::load_step().with_case(ElectrolyzerMode::ConstantPower, false),
    ] {
        let out = run(&sc).unwrap();
        assert!(out.energy.relative_residual() < 1e-4, "{:?}", out.energy);
        assert!(out.energy.loads > 0.0 && out.energy.losses > 0.0);
    }
}

#[test]
fn hydrogen_energy_tracks_dc_power() {
    let sc = Scenario::load_step().with_case(ElectrolyzerMode::ConstantPower, false);
    let out = run(&sc).unwrap();
    // 400 kW at 95 % for 5 s.
    assert!((out.hydrogen.0 - 0.95 * 400e3 * 5.0).abs() < 1e-3);
    let p_dc = out.trace.column("p_dc").unwrap();
    assert!(p_dc.iter().all(|p| (p - 380e3).abs() < 1e-3));
}

#[test]
fn load_step_moves_der_power_and_frequency() {
    let out =
        run(&Scenario::load_step().with_case(ElectrolyzerMode::ConstantPower, false)).unwrap();
    let pre = out.trace.at(2.1).unwrap();
    let on = out.trace.at(3.1).unwrap();
    let post = out.trace.at(4.9).unwrap();
    assert!(on.p_g > pre.p_g + 300e3);
    assert!(on.f < pre.f - 0.1);
    assert!((post.p_g - pre.p_g).abs() < 1e3);
    assert!(on.f < 60.0);
}

#[test]
fn supporting_electrolyzer_backs_off_under_load() {
    let out = run(&supporting(false)).unwrap();
    let pre = out.trace.at(2.1).unwrap().p_e;
    let on = out.trace.at(3.1).unwrap().p_e;
    let post = out.trace.at(4.9).unwrap().p_e;
    assert!(on < pre - 10e3);
    assert!((post - pre).abs() < 0.01 * pre);
}

#[test]
fn study_without_events_gives_equilibrium_rows() {
    let mut base = Scenario::default();
    base.simulation.duration = 0.5;
    let report = run_study(&Study::four_cases(base));
    assert_eq!(report.cases.len(), 4);
    for c in &report.cases {
        let m = c.outcome.as_ref().unwrap().metrics;
        assert!(m.p_g_swing < 1.0, "{}: {m:?}", c.case.name);
        assert!(m.v_max_dev < 1e-9);
    }
    assert_eq!(report.comparisons.len(), 2);
}

#[test]
fn failing_case_does_not_stop_study() {
    let mut base = Scenario::load_step();
    // A huge switched load drags the DER out of its frequency band.
    base.network.loads[1].impedance = h2grid::network::LoadImpedance::Power { p: 40e6, q: 0.0 };
    let report = run_study(&Study::four_cases(base));
    assert_eq!(report.cases.len(), 4);
    let failures: Vec<_> = report.failures().collect();
    assert!(!failures.is_empty());
    for (_, e) in failures {
        assert!(
            matches!(
                e.error,
                Error::FrequencyTrip { .. } | Error::VoltageCollapse { .. }
            ),
            "{e}"
        );
        assert!(e.time >= 2.2 && e.time < 5.0);
    }
}

#[test]
fn invalid_scenarios_fail_at_time_zero() {
    let mut sc = Scenario::default();
    sc.simulation.electrolyzer_mode = ElectrolyzerMode::VoltageControl;
    assert_eq!(run(&sc).unwrap_err().time, 0.0);
    let mut sc = Scenario::default();
    sc.simulation.dt = 2e-3;
    assert!(run(&sc).is_err());
}
