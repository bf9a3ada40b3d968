use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use h2grid::config::{to_toml, Config};
use h2grid::sim::{
    EnergyLedger, EventWindow, PairedComparison, RunOutput, Sample, ScenarioMetrics,
    SimulationTrace, StudyReport, TRACE_COLUMNS,
};
use serde::Serialize;

pub const TRACE_FILE: &str = "trace.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const RESOLVED_CONFIG_FILE: &str = "resolved.toml";

/// Creates `dir` if needed and checks a file can be written there.
pub fn probe_output_dir(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".h2grid-write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(&probe)
}

/// Writes the trace with the fixed header, 9 significant digits per value.
pub fn write_trace_csv(trace: &SimulationTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(TRACE_COLUMNS)?;
    for s in trace.samples() {
        w.write_record(s.values().iter().map(|v| format!("{v:.8e}")))?;
    }
    w.flush()
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<SimulationTrace> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != TRACE_COLUMNS {
        bail!("{}: unexpected header {header:?}", path.display());
    }
    let mut samples = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: bad record {}", path.display(), i + 1))?;
        let mut v = [0.0; 11];
        if rec.len() != v.len() {
            bail!(
                "{}: record {} has {} fields",
                path.display(),
                i + 1,
                rec.len()
            );
        }
        for (slot, field) in v.iter_mut().zip(rec.iter()) {
            *slot = field.parse().with_context(|| {
                format!("{}: record {}: bad number {field}", path.display(), i + 1)
            })?;
        }
        samples.push(Sample::from_values(v));
    }
    Ok(SimulationTrace::from_samples(samples)?)
}

#[derive(Serialize)]
struct Hydrogen {
    energy_dc_j: f64,
    h2_proxy_kg: f64,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    kind: &'static str,
    metrics: &'a ScenarioMetrics,
    window: &'a EventWindow,
    energy: &'a EnergyLedger,
    hydrogen: Hydrogen,
    trace: &'static str,
    config: serde_json::Value,
}

#[derive(Serialize)]
struct CaseError {
    kind: &'static str,
    time: f64,
    message: String,
}

#[derive(Serialize)]
struct CaseSummary<'a> {
    name: &'a str,
    electrolyzer_mode: h2grid::plant::ElectrolyzerMode,
    secondary: bool,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<&'a ScenarioMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hydrogen: Option<Hydrogen>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<CaseError>,
}

#[derive(Serialize)]
struct StudySummary<'a> {
    kind: &'static str,
    cases: Vec<CaseSummary<'a>>,
    comparisons: &'a [PairedComparison],
    config: serde_json::Value,
}

/// Same layout as the input document, so it can be fed back as TOML.
fn config_value(config: &Config) -> Result<serde_json::Value> {
    Ok(match config {
        Config::Scenario(sc) => serde_json::to_value(sc)?,
        Config::Study(st) => {
            let mut v = serde_json::to_value(&st.base)?;
            v["cases"] = serde_json::to_value(&st.cases)?;
            v
        }
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn write_resolved(dir: &Path, config: &Config) -> Result<PathBuf> {
    let path = dir.join(RESOLVED_CONFIG_FILE);
    fs::write(&path, to_toml(config))
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

/// trace.csv, metrics.json, resolved.toml and plot.gp for a single run.
pub fn emit_run(out: &RunOutput, config: &Config, dir: &Path) -> Result<()> {
    write_trace_csv(&out.trace, &dir.join(TRACE_FILE))?;
    write_resolved(dir, config)?;
    let summary = RunSummary {
        kind: "run",
        metrics: &out.metrics,
        window: &out.window,
        energy: &out.energy,
        hydrogen: Hydrogen {
            energy_dc_j: out.hydrogen.0,
            h2_proxy_kg: out.hydrogen.1,
        },
        trace: TRACE_FILE,
        config: config_value(config)?,
    };
    write_json(&dir.join(METRICS_FILE), &summary)?;
    crate::plots::write_run_script(dir)?;
    Ok(())
}

/// One CSV per successful case, metrics.json with paired comparisons,
/// resolved.toml and the comparison plot scripts.
pub fn emit_study(report: &StudyReport, config: &Config, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut cases = Vec::with_capacity(report.cases.len());
    for c in &report.cases {
        let mut summary = CaseSummary {
            name: &c.case.name,
            electrolyzer_mode: c.case.electrolyzer_mode,
            secondary: c.case.secondary,
            status: "ok",
            trace: None,
            metrics: None,
            hydrogen: None,
            error: None,
        };
        match &c.outcome {
            Ok(out) => {
                let file = format!("{}.csv", c.case.name);
                write_trace_csv(&out.trace, &dir.join(&file))?;
                summary.trace = Some(file);
                summary.metrics = Some(&out.metrics);
                summary.hydrogen = Some(Hydrogen {
                    energy_dc_j: out.hydrogen.0,
                    h2_proxy_kg: out.hydrogen.1,
                });
            }
            Err(e) => {
                summary.status = "error";
                summary.error = Some(CaseError {
                    kind: e.error.kind(),
                    time: e.time,
                    message: e.error.to_string(),
                });
            }
        }
        cases.push(summary);
    }
    write_resolved(dir, config)?;
    write_json(
        &dir.join(METRICS_FILE),
        &StudySummary {
            kind: "study",
            cases,
            comparisons: &report.comparisons,
            config: config_value(config)?,
        },
    )?;
    crate::plots::write_study_scripts(report, dir)
}
