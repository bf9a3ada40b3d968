use h2grid::network::{
    BranchKind, BranchSpec, BusSpec, LoadImpedance, LoadSpec, NetworkDescription, NetworkModel,
};
use h2grid::sim::default_network;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn model() -> NetworkModel {
    NetworkModel::build(&default_network()).unwrap()
}

/// Backward/forward sweep on the radial feeder
/// source - line - bus2 (Z1, Z2) - tx - bus3 - tx - terminal (sink I).
fn sweep(v1: Complex64, i: Complex64, z2_closed: bool) -> [Complex64; 4] {
    let z_line = c(0.01, 0.05);
    let z_tx = c(0.005, 0.03);
    let s_base = 5e6;
    let z1 = 1.0 / c(3.7e6 / s_base, 1.2e6 / s_base).conj();
    let z2 = 1.0 / c(0.5e6 / s_base, 0.15e6 / s_base).conj();
    let mut v = [v1; 4];
    for _ in 0..200 {
        let mut i_load = v[1] / z1;
        if z2_closed {
            i_load += v[1] / z2;
        }
        let i_line = i + i_load;
        v[1] = v1 - z_line * i_line;
        v[2] = v[1] - z_tx * i;
        v[3] = v[2] - z_tx * i;
    }
    v
}

#[test]
fn solver_matches_sweep_oracle() {
    let net = model();
    let s = net.breaker_index("S").unwrap();
    for closed in [false, true] {
        let mut br = net.initial_breakers();
        br.set(s, closed);
        for (v1, i) in [
            (c(1.0, 0.0), c(0.0, 0.0)),
            (c(1.02, 0.1), c(0.08, -0.01)),
            (c(0.95, -0.3), c(-0.05, 0.04)),
        ] {
            let sol = net.solve(v1, i, &br).unwrap();
            let oracle = sweep(v1, i, closed);
            let nodes = [
                net.bus_id("bus1").unwrap(),
                net.bus_id("bus2").unwrap(),
                net.bus_id("bus3").unwrap(),
                net.converter_terminal().unwrap(),
            ];
            for (node, expected) in nodes.iter().zip(oracle) {
                assert!(
                    (sol.voltage(*node) - expected).norm() < 1e-12,
                    "{closed} {node:?}"
                );
            }
        }
    }
}

#[test]
fn fig7_network_shape() {
    let net = model();
    assert_eq!(net.bus_count(), 3);
    let lines = net.branches().iter().filter(|b| b.tap_ratio == 1.0).count();
    assert_eq!(net.branches().len(), 3);
    assert!(lines >= 1);
    assert_eq!(net.loads().len(), 2);
    assert_eq!(net.breaker_names(), ["S".to_string()]);
}

#[test]
fn two_bus_divider_matches_closed_form() {
    let desc = NetworkDescription {
        s_base: 1e6,
        f_nom: 50.0,
        source_bus: "a".into(),
        buses: vec![
            BusSpec {
                name: "a".into(),
                v_base: 400.0,
            },
            BusSpec {
                name: "b".into(),
                v_base: 400.0,
            },
        ],
        branches: vec![BranchSpec {
            name: "ab".into(),
            from: "a".into(),
            to: "b".into(),
            r: 0.02,
            x: 0.07,
            tap: 1.0,
            kind: BranchKind::Line,
        }],
        loads: vec![LoadSpec {
            name: "z".into(),
            bus: "b".into(),
            impedance: LoadImpedance::Impedance { r: 0.9, x: 0.3 },
            breaker: None,
            closed: true,
        }],
        electrolyzer: None,
    };
    let net = NetworkModel::build(&desc).unwrap();
    let v = c(1.0, 0.2);
    let sol = net.solve(v, c(0.0, 0.0), &net.initial_breakers()).unwrap();
    let (z, zl) = (c(0.9, 0.3), c(0.02, 0.07));
    let expected = v * z / (z + zl);
    let got = sol.voltage(net.bus_id("b").unwrap());
    assert!((got - expected).norm() < 1e-12, "{got} vs {expected}");
}

#[test]
fn closing_breaker_never_raises_a_voltage() {
    let net = model();
    let s = net.breaker_index("S").unwrap();
    let mut closed = net.initial_breakers();
    closed.set(s, true);
    for i in [c(0.0, 0.0), c(0.08, 0.0), c(0.08, 0.02)] {
        let a = net.solve(c(1.0, 0.0), i, &net.initial_breakers()).unwrap();
        let b = net.solve(c(1.0, 0.0), i, &closed).unwrap();
        for (va, vb) in a.voltages().iter().zip(b.voltages()) {
            assert!(vb.norm() <= va.norm() + 1e-15);
        }
        let pcc = net.pcc_bus().unwrap();
        assert!(b.voltage(pcc).norm() < a.voltage(pcc).norm());
    }
}

proptest! {
    #[test]
    fn every_solve_satisfies_kcl_and_power_balance(
        m in 0.5f64..1.5, a in -3.2f64..3.2, id in -0.2f64..0.2, iq in -0.2f64..0.2, closed: bool
    ) {
        let net = model();
        let mut br = net.initial_breakers();
        br.set(net.breaker_index("S").unwrap(), closed);
        let sol = net.solve(Complex64::from_polar(m, a), c(id, iq), &br).unwrap();
        prop_assert!(net.kcl_residual(&sol) < 1e-10);
        prop_assert!(net.power_balance_residual(&sol) < 1e-8);
    }

    #[test]
    fn solution_is_linear(m in 0.5f64..1.5, a in -3.2f64..3.2, id in -0.2f64..0.2, iq in -0.2f64..0.2,
                          km in 0.1f64..3.0, ka in -3.2f64..3.2) {
        let net = model();
        let br = net.initial_breakers();
        let v = Complex64::from_polar(m, a);
        let i = c(id, iq);
        let k = Complex64::from_polar(km, ka);
        let base = net.solve(v, i, &br).unwrap();
        let scaled = net.solve(k * v, k * i, &br).unwrap();
        for (x, y) in base.voltages().iter().zip(scaled.voltages()) {
            prop_assert!((k * x - y).norm() < 1e-12 * km.max(1.0));
        }
    }
}
