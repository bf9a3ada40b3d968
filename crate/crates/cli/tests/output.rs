use h2grid::plant::ElectrolyzerMode;
use h2grid::sim::{run, Sample, Scenario, SimulationTrace};
use h2grid_cli::output::{probe_output_dir, read_trace_csv, write_trace_csv, TRACE_FILE};

fn rounded(v: f64) -> f64 {
    format!("{v:.8e}").parse().unwrap()
}

#[test]
fn csv_round_trip_is_exact_at_emitted_precision() {
    let mut sc = Scenario::load_step().with_case(ElectrolyzerMode::CurrentControl, true);
    sc.simulation.duration = 2.5;
    sc.events.truncate(1);
    let trace = run(&sc).unwrap().trace;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(TRACE_FILE);
    write_trace_csv(&trace, &path).unwrap();

    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "time,P_G,Q_G,f,V_pcc,V_bar,P_E,Q_E,delta_f,delta_e,p_dc"
    );
    let back = read_trace_csv(&path).unwrap();
    assert_eq!(back.len(), trace.len());
    for (a, b) in trace.samples().iter().zip(back.samples()) {
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_eq!(rounded(*x), y);
            assert!((x - y).abs() <= 5e-9 * x.abs());
        }
    }
    // Writing the parsed trace again reproduces the file byte for byte.
    let again = dir.path().join("again.csv");
    write_trace_csv(&back, &again).unwrap();
    assert_eq!(std::fs::read_to_string(again).unwrap(), text);
}

#[test]
fn reader_rejects_wrong_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "t,P\n0,1\n").unwrap();
    assert!(read_trace_csv(&path).is_err());
}

#[test]
fn equilibrium_csv_has_constant_columns() {
    let trace = SimulationTrace::from_samples(
        (0..5)
            .map(|k| Sample {
                time: k as f64 * 1e-3,
                p_g: 4.1e6,
                f: 60.0,
                ..Sample::default()
            })
            .collect(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(TRACE_FILE);
    write_trace_csv(&trace, &path).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    let rows: Vec<_> = text
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1)
        .collect();
    assert!(rows.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn probe_fails_for_unwritable_target() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    std::fs::write(&file, "").unwrap();
    assert!(probe_output_dir(&file.join("out")).is_err());
    assert!(probe_output_dir(&dir.path().join("fresh/nested")).is_ok());
}
