use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use h2grid::control::{dq_current_refs, dq_power, DqPhasor, PiController};
use h2grid::plant::ElectrolyzerMode;
use h2grid::sim::run;
use h2grid_bench::{feeder, load_step};
use num_complex::Complex64;

fn control(c: &mut Criterion) {
    let v = DqPhasor::new(0.98, -0.07);
    c.bench_function("dq_current_refs+dq_power", |b| {
        b.iter(|| {
            dq_power(
                v,
                dq_current_refs(black_box(0.08), black_box(-0.02), v).unwrap(),
            )
        })
    });
    let mut pi = PiController::new(10.0, 0.1, -10.0, 10.0).unwrap();
    c.bench_function("pi_step", |b| b.iter(|| pi.step(black_box(0.01), 1e-4)));
}

fn network(c: &mut Criterion) {
    let net = feeder();
    let breakers = net.initial_breakers();
    c.bench_function("network_solve", |b| {
        b.iter(|| {
            net.solve(
                black_box(Complex64::new(1.02, 0.05)),
                black_box(Complex64::new(0.08, -0.01)),
                &breakers,
            )
            .unwrap()
        })
    });
}

fn full_run(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_5s");
    g.sample_size(10);
    for (name, mode) in [
        ("constant", ElectrolyzerMode::ConstantPower),
        ("supporting", ElectrolyzerMode::CurrentControl),
    ] {
        let sc = load_step(mode, true);
        g.bench_function(name, |b| b.iter(|| run(black_box(&sc)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, control, network, full_run);
criterion_main!(benches);
