use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use h2grid::config::{parse_config, validate_scenario, validate_study, Config, ConfigError};
use h2grid::plant::ElectrolyzerMode;
use h2grid::sim::{run, run_study, RunError};
use h2grid_cli::output::{emit_run, emit_study, probe_output_dir};

#[derive(Parser)]
#[command(
    name = "h2grid",
    version,
    about = "Microgrid simulator with a grid-supporting electrolyzer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run every case of a study concurrently
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Parse and validate a scenario or study file without running it
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Args)]
struct Overrides {
    /// Integration step [s]
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated time [s]
    #[arg(long)]
    duration: Option<f64>,
    /// Enable or disable secondary control
    #[arg(long)]
    secondary: Option<bool>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    ConstantPower,
    CurrentControl,
}

impl From<Mode> for ElectrolyzerMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::ConstantPower => ElectrolyzerMode::ConstantPower,
            Mode::CurrentControl => ElectrolyzerMode::CurrentControl,
        }
    }
}

enum Failure {
    Config(anyhow::Error),
    Simulation(Vec<(String, RunError)>),
    Io(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.into())
    }
}

fn load(path: &Path) -> Result<Config, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Config)?;
    parse_config(&text)
        .with_context(|| path.display().to_string())
        .map_err(Failure::Config)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    probe_output_dir(dir)
        .with_context(|| format!("output directory {} is not writable", dir.display()))
        .map_err(Failure::Config)
}

fn cmd_run(scenario: &Path, out: &Path, ov: &Overrides) -> Result<(), Failure> {
    let mut sc = match load(scenario)? {
        Config::Scenario(sc) => sc,
        Config::Study(_) => {
            return Err(Failure::Config(anyhow::anyhow!(
                "{} is a study; use `h2grid study`",
                scenario.display()
            )))
        }
    };
    if let Some(dt) = ov.dt {
        sc.simulation.dt = dt;
    }
    if let Some(d) = ov.duration {
        sc.simulation.duration = d;
    }
    if let Some(s) = ov.secondary {
        sc.simulation.secondary = s;
    }
    if let Some(m) = ov.mode {
        sc.simulation.electrolyzer_mode = m.into();
    }
    validate_scenario(&sc)?;
    prepare_out(out)?;

    let output = run(&sc).map_err(|e| Failure::Simulation(vec![("run".into(), e)]))?;
    emit_run(&output, &Config::Scenario(sc), out).map_err(Failure::Io)?;
    let m = &output.metrics;
    println!(
        "P_G swing {:.1} kW, max |f - f_nom| {:.4} Hz, settle {}, max V_pcc deviation {:.5} pu, DC energy {:.1} kJ",
        m.p_g_swing / 1e3,
        m.f_nadir_dev,
        m.f_settle.map_or("never".into(), |t| format!("{t:.3} s")),
        m.v_max_dev,
        m.e_h2 / 1e3,
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_study(
    config: &Path,
    out: &Path,
    dt: Option<f64>,
    duration: Option<f64>,
) -> Result<(), Failure> {
    let mut study = match load(config)? {
        Config::Study(st) => st,
        Config::Scenario(_) => {
            return Err(Failure::Config(anyhow::anyhow!(
                "{} has no [[cases]]; use `h2grid run`",
                config.display()
            )))
        }
    };
    if let Some(dt) = dt {
        study.base.simulation.dt = dt;
    }
    if let Some(d) = duration {
        study.base.simulation.duration = d;
    }
    validate_study(&study)?;
    prepare_out(out)?;

    let report = run_study(&study);
    emit_study(&report, &Config::Study(study), out).map_err(Failure::Io)?;
    for c in &report.cases {
        match &c.outcome {
            Ok(o) => println!(
                "{:<24} P_G swing {:>8.1} kW  max |df| {:.4} Hz  settle {}",
                c.case.name,
                o.metrics.p_g_swing / 1e3,
                o.metrics.f_nadir_dev,
                o.metrics
                    .f_settle
                    .map_or("never".into(), |t| format!("{t:.3} s")),
            ),
            Err(e) => println!("{:<24} failed: {e}", c.case.name),
        }
    }
    for p in &report.comparisons {
        println!(
            "secondary={}: supporting/constant swing ratio {:.3}",
            p.secondary, p.swing_ratio
        );
    }
    println!("wrote {}", out.display());
    let failed: Vec<_> = report
        .failures()
        .map(|(case, e)| (case.name.clone(), e.clone()))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Simulation(failed))
    }
}

fn cmd_validate(path: &Path) -> Result<(), Failure> {
    match load(path)? {
        Config::Scenario(sc) => println!(
            "{}: valid scenario, {} s at dt = {} s, {} events",
            path.display(),
            sc.simulation.duration,
            sc.simulation.dt,
            sc.events.len()
        ),
        Config::Study(st) => println!(
            "{}: valid study, {} cases, {} events",
            path.display(),
            st.cases.len(),
            st.base.events.len()
        ),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            scenario,
            out,
            overrides,
        } => cmd_run(scenario, out, overrides),
        Command::Study {
            config,
            out,
            dt,
            duration,
        } => cmd_study(config, out, *dt, *duration),
        Command::Validate { scenario } => cmd_validate(scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Simulation(failed)) => {
            for (name, e) in failed {
                eprintln!(
                    "simulation error in {name}: {} at t = {} s: {}",
                    e.error.kind(),
                    e.time,
                    e.error
                );
            }
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
