//! gnuplot scripts over the emitted CSV files. Each script renders a PNG
//! next to itself: `gnuplot <script>.gp` from the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use h2grid::plant::ElectrolyzerMode;
use h2grid::sim::StudyReport;

use crate::output::TRACE_FILE;

pub const RUN_SCRIPT: &str = "plot.gp";

/// A trace column with the scale applied for display.
struct Series {
    column: usize,
    scale: f64,
    label: &'static str,
}

const P_G: Series = Series {
    column: 2,
    scale: 1e-3,
    label: "P_G [kW]",
};
const Q_G: Series = Series {
    column: 3,
    scale: 1e-3,
    label: "Q_G [kvar]",
};
const F: Series = Series {
    column: 4,
    scale: 1.0,
    label: "f [Hz]",
};
const V_PCC: Series = Series {
    column: 5,
    scale: 1.0,
    label: "V_pcc [pu]",
};
const V_BAR: Series = Series {
    column: 6,
    scale: 1.0,
    label: "V_bar [pu]",
};
const P_E: Series = Series {
    column: 7,
    scale: 1e-3,
    label: "P_E [kW]",
};
const Q_E: Series = Series {
    column: 8,
    scale: 1e-3,
    label: "Q_E [kvar]",
};

/// (csv file, legend title)
type Curve = (String, String);
/// File stem, title and the (series, curves) panels stacked in one figure.
type Figure<'a> = (&'static str, &'static str, Vec<(&'a Series, &'a [Curve])>);

fn script(png: &str, title: &str, panels: &[(&Series, &[Curve])]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 900,{}", 320 * panels.len());
    let _ = writeln!(s, "set output '{png}'");
    let _ = writeln!(s, "set grid");
    let _ = writeln!(s, "set key outside right");
    let _ = writeln!(s, "set multiplot layout {},1 title '{title}'", panels.len());
    for (i, (series, curves)) in panels.iter().enumerate() {
        if i + 1 == panels.len() {
            let _ = writeln!(s, "set xlabel 'time [s]'");
        }
        let _ = writeln!(s, "set ylabel '{}'", series.label);
        let plots: Vec<String> = curves
            .iter()
            .map(|(file, name)| {
                format!(
                    "'{file}' skip 1 using 1:(${}*{}) with lines title '{name}'",
                    series.column, series.scale
                )
            })
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }
    let _ = writeln!(s, "unset multiplot");
    s
}

fn write(dir: &Path, name: &str, text: String) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

pub fn write_run_script(dir: &Path) -> Result<PathBuf> {
    let c = |_: &Series| vec![(TRACE_FILE.to_string(), "run".to_string())];
    let (pg, f, pe, qe, vp, vb) = (c(&P_G), c(&F), c(&P_E), c(&Q_E), c(&V_PCC), c(&V_BAR));
    let text = script(
        "plot.png",
        "single run",
        &[
            (&P_G, &pg),
            (&F, &f),
            (&P_E, &pe),
            (&Q_E, &qe),
            (&V_PCC, &vp),
            (&V_BAR, &vb),
        ],
    );
    write(dir, RUN_SCRIPT, text)
}

/// Writes the six comparison scripts for whichever case pairs succeeded and
/// returns their paths.
pub fn write_study_scripts(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let find = |mode, secondary| -> Option<Curve> {
        report
            .cases
            .iter()
            .find(|c| {
                c.case.electrolyzer_mode == mode
                    && c.case.secondary == secondary
                    && c.outcome.is_ok()
            })
            .map(|c| (format!("{}.csv", c.case.name), c.case.name.clone()))
    };
    let pair = |secondary| -> Vec<Curve> {
        [
            ElectrolyzerMode::ConstantPower,
            ElectrolyzerMode::CurrentControl,
        ]
        .into_iter()
        .filter_map(|m| find(m, secondary))
        .collect()
    };
    let without = pair(false);
    let with = pair(true);
    let electrolyzer_p: Vec<Curve> = [
        find(ElectrolyzerMode::ConstantPower, false),
        find(ElectrolyzerMode::CurrentControl, false),
        find(ElectrolyzerMode::CurrentControl, true),
    ]
    .into_iter()
    .flatten()
    .collect();
    let supporting: Vec<Curve> = [
        find(ElectrolyzerMode::CurrentControl, false),
        find(ElectrolyzerMode::CurrentControl, true),
    ]
    .into_iter()
    .flatten()
    .collect();

    let figures: [Figure; 6] = [
        (
            "der_power_frequency",
            "DER active power and frequency, no secondary control",
            vec![(&P_G, &without), (&F, &without)],
        ),
        (
            "der_power_frequency_secondary",
            "DER active power and frequency, secondary control",
            vec![(&P_G, &with), (&F, &with)],
        ),
        (
            "electrolyzer_power",
            "Electrolyzer active power",
            vec![(&P_E, &electrolyzer_p)],
        ),
        (
            "der_reactive_voltage",
            "DER reactive power and PCC voltage, no secondary control",
            vec![(&Q_G, &without), (&V_PCC, &without)],
        ),
        (
            "der_reactive_voltage_secondary",
            "DER reactive power and PCC voltage, secondary control",
            vec![(&Q_G, &with), (&V_PCC, &with)],
        ),
        (
            "electrolyzer_reactive_voltage",
            "Electrolyzer reactive power and PCC voltage",
            vec![(&Q_E, &supporting), (&V_PCC, &supporting)],
        ),
    ];

    let mut written = Vec::new();
    for (name, title, panels) in figures {
        if panels.iter().all(|(_, curves)| curves.is_empty()) {
            continue;
        }
        let text = script(&format!("{name}.png"), title, &panels);
        written.push(write(dir, &format!("{name}.gp"), text)?);
    }
    Ok(written)
}
