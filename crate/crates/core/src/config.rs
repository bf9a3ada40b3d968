//! TOML configuration documents for single scenarios and multi-case studies.
//!
//! A document holds the `[simulation]`, `[[events]]`, `[der]`,
//! `[electrolyzer]`, `[secondary]` and `[network]` tables. Any table may be
//! omitted and takes its defaults. A document with `[[cases]]` is a study.

use std::collections::HashSet;

use serde::Deserialize;

use crate::network::NetworkModel;
use crate::plant::ElectrolyzerMode;
use crate::sim::{
    default_network, DerConfig, ElectrolyzerConfig, Event, Scenario, SecondaryConfig,
    SimulationSettings, Study, StudyCase, MAX_DT,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

type Check = std::result::Result<(), ConfigError>;

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Scenario(Scenario),
    Study(Study),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default)]
    simulation: SimulationSettings,
    #[serde(default)]
    events: Vec<Event>,
    #[serde(default)]
    der: DerConfig,
    #[serde(default)]
    electrolyzer: ElectrolyzerConfig,
    #[serde(default)]
    secondary: SecondaryConfig,
    #[serde(default = "default_network")]
    network: crate::network::NetworkDescription,
    #[serde(default)]
    cases: Vec<StudyCase>,
}

/// 1-based line and column of byte `offset` in `text`.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, column)
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> std::result::Result<Config, ConfigError> {
    let doc: Document = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let scenario = Scenario {
        simulation: doc.simulation,
        events: doc.events,
        der: doc.der,
        electrolyzer: doc.electrolyzer,
        secondary: doc.secondary,
        network: doc.network,
    };
    if doc.cases.is_empty() {
        validate_scenario(&scenario)?;
        Ok(Config::Scenario(scenario))
    } else {
        let study = Study {
            base: scenario,
            cases: doc.cases,
        };
        validate_study(&study)?;
        Ok(Config::Study(study))
    }
}

/// The fully resolved configuration as a TOML document that
/// [`parse_config`] reads back to the same value.
pub fn to_toml(config: &Config) -> String {
    #[derive(serde::Serialize)]
    struct StudyDocument<'a> {
        #[serde(flatten)]
        base: &'a Scenario,
        cases: &'a [StudyCase],
    }
    let text = match config {
        Config::Scenario(sc) => toml::to_string(sc),
        Config::Study(st) => toml::to_string(&StudyDocument {
            base: &st.base,
            cases: &st.cases,
        }),
    };
    text.expect("configuration types always serialize")
}

fn positive(field: &str, v: f64) -> Check {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(
            field,
            format!("must be > 0 (got {v})"),
        ))
    }
}

fn non_negative(field: &str, v: f64) -> Check {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(
            field,
            format!("must be >= 0 (got {v})"),
        ))
    }
}

fn within(field: &str, v: f64, lo: f64, hi: f64) -> Check {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::invalid(
            field,
            format!("must lie in [{lo}, {hi}] (got {v})"),
        ))
    }
}

fn check_mode(field: &str, mode: ElectrolyzerMode) -> Check {
    if mode == ElectrolyzerMode::VoltageControl {
        Err(ConfigError::invalid(
            field,
            "voltage_control is a reference generator only; use constant_power or current_control",
        ))
    } else {
        Ok(())
    }
}

pub fn validate_scenario(sc: &Scenario) -> Check {
    let sim = &sc.simulation;
    positive("simulation.dt", sim.dt)?;
    if sim.dt > MAX_DT {
        return Err(ConfigError::invalid(
            "simulation.dt",
            format!("must be <= {MAX_DT} s (got {})", sim.dt),
        ));
    }
    positive("simulation.duration", sim.duration)?;
    positive("simulation.record_interval", sim.record_interval)?;
    let ratio = sim.record_interval / sim.dt;
    if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
        return Err(ConfigError::invalid(
            "simulation.record_interval",
            format!("must be a whole multiple of dt = {}", sim.dt),
        ));
    }
    check_mode("simulation.electrolyzer_mode", sim.electrolyzer_mode)?;

    let d = &sc.der;
    positive("der.s_rated", d.s_rated)?;
    positive("der.p_rated", d.p_rated)?;
    non_negative("der.p_set", d.p_set)?;
    within("der.q_set", d.q_set, -1.0, 1.0)?;
    positive("der.frequency_droop", d.frequency_droop)?;
    positive("der.voltage_droop", d.voltage_droop)?;
    positive("der.t_f", d.t_f)?;
    positive("der.f_nom", d.f_nom)?;
    positive("der.e_nom", d.e_nom)?;

    let e = &sc.electrolyzer;
    positive("electrolyzer.p_rated", e.p_rated)?;
    positive("electrolyzer.q_rated", e.q_rated)?;
    positive("electrolyzer.k_f", e.k_f)?;
    positive("electrolyzer.k_v", e.k_v)?;
    within("electrolyzer.p_set", e.p_set, 0.0, e.p_rated)?;
    within("electrolyzer.q_set", e.q_set, -e.q_rated, e.q_rated)?;
    within("electrolyzer.constant_p", e.constant_p, 0.0, e.p_rated)?;
    within(
        "electrolyzer.constant_q",
        e.constant_q,
        -e.q_rated,
        e.q_rated,
    )?;
    non_negative("electrolyzer.inner_kp", e.inner_kp)?;
    non_negative("electrolyzer.inner_ki", e.inner_ki)?;
    positive("electrolyzer.inner_plant_gain", e.inner_plant_gain)?;
    positive("electrolyzer.inner_limit", e.inner_limit)?;
    if !(e.efficiency > 0.0 && e.efficiency <= 1.0) {
        return Err(ConfigError::invalid(
            "electrolyzer.efficiency",
            format!("must lie in (0, 1] (got {})", e.efficiency),
        ));
    }

    let s = &sc.secondary;
    non_negative("secondary.kp_f", s.kp_f)?;
    non_negative("secondary.ki_f", s.ki_f)?;
    non_negative("secondary.kp_v", s.kp_v)?;
    non_negative("secondary.ki_v", s.ki_v)?;
    positive("secondary.period", s.period)?;
    positive("secondary.measurement_tau", s.measurement_tau)?;
    positive("secondary.delta_f_limit", s.delta_f_limit)?;
    positive("secondary.delta_e_limit", s.delta_e_limit)?;

    let network = NetworkModel::build(&sc.network)
        .map_err(|e| ConfigError::invalid("network", e.to_string()))?;
    if network.converter_terminal().is_none() {
        return Err(ConfigError::invalid(
            "network.electrolyzer",
            "the electrolyzer attachment is required",
        ));
    }
    if (sc.network.f_nom - d.f_nom).abs() > 1e-12 {
        return Err(ConfigError::invalid(
            "network.f_nom",
            format!("must equal der.f_nom = {}", d.f_nom),
        ));
    }
    if s.monitored_buses.is_empty() {
        return Err(ConfigError::invalid(
            "secondary.monitored_buses",
            "must not be empty",
        ));
    }
    for bus in &s.monitored_buses {
        if network.bus_id(bus).is_none() {
            return Err(ConfigError::invalid(
                "secondary.monitored_buses",
                format!("unknown bus {bus}"),
            ));
        }
    }

    let mut last = f64::NEG_INFINITY;
    for (i, ev) in sc.events.iter().enumerate() {
        let field = format!("events[{i}]");
        if !(0.0..=sim.duration).contains(&ev.time) {
            return Err(ConfigError::invalid(
                &format!("{field}.time"),
                format!("must lie in [0, {}] (got {})", sim.duration, ev.time),
            ));
        }
        if ev.time < last {
            return Err(ConfigError::invalid(
                &format!("{field}.time"),
                "events must be sorted by time",
            ));
        }
        last = ev.time;
        if network.breaker_index(&ev.breaker).is_none() {
            return Err(ConfigError::invalid(
                &format!("{field}.breaker"),
                format!("unknown breaker {}", ev.breaker),
            ));
        }
    }
    Ok(())
}

pub fn validate_study(study: &Study) -> Check {
    validate_scenario(&study.base)?;
    let mut names = HashSet::new();
    for (i, case) in study.cases.iter().enumerate() {
        let field = format!("cases[{i}]");
        if case.name.is_empty()
            || !case
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(ConfigError::invalid(
                &format!("{field}.name"),
                "must be a non-empty file-name-safe identifier",
            ));
        }
        if !names.insert(case.name.as_str()) {
            return Err(ConfigError::invalid(
                &format!("{field}.name"),
                format!("duplicate case {}", case.name),
            ));
        }
        check_mode(
            &format!("{field}.electrolyzer_mode"),
            case.electrolyzer_mode,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_takes_defaults() {
        let Config::Scenario(sc) = parse_config("").unwrap() else {
            panic!("expected a scenario")
        };
        assert_eq!(sc, Scenario::default());
        assert_eq!(sc.simulation.dt, 1e-4);
    }

    #[test]
    fn unknown_key_reports_position() {
        let err = parse_config("[simulation]\nduration = 5.0\nbogus = 1\n").unwrap_err();
        match err {
            ConfigError::Parse {
                line,
                column,
                message,
            } => {
                assert_eq!((line, column), (3, 1));
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_config("[der]\nt_f = = 0.1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn negative_gain_names_k_f() {
        let err = parse_config("[electrolyzer]\nk_f = -52500.0\n").unwrap_err();
        assert!(
            matches!(&err, ConfigError::Validation { field, .. } if field == "electrolyzer.k_f")
        );
        assert!(err.to_string().contains("k_f"));
    }

    #[test]
    fn cases_make_a_study() {
        let text = r#"
[[events]]
time = 2.2
breaker = "S"
action = "close"

[[cases]]
name = "a"
electrolyzer_mode = "constant_power"
secondary = false

[[cases]]
name = "b"
electrolyzer_mode = "current_control"
secondary = true
"#;
        let Config::Study(study) = parse_config(text).unwrap() else {
            panic!("expected a study")
        };
        assert_eq!(study.cases.len(), 2);
        assert!(study.scenario(&study.cases[1]).simulation.secondary);
    }

    #[test]
    fn rejects_bad_events_and_modes() {
        let late = "[[events]]\ntime = 9.0\nbreaker = \"S\"\naction = \"open\"\n";
        assert!(
            matches!(parse_config(late), Err(ConfigError::Validation { field, .. }) if field == "events[0].time")
        );
        let unknown = "[[events]]\ntime = 1.0\nbreaker = \"X\"\naction = \"open\"\n";
        assert!(parse_config(unknown).is_err());
        let vc = "[simulation]\nelectrolyzer_mode = \"voltage_control\"\n";
        assert!(parse_config(vc).is_err());
        let coarse = "[simulation]\ndt = 0.01\n";
        assert!(
            matches!(parse_config(coarse), Err(ConfigError::Validation { field, .. }) if field == "simulation.dt")
        );
    }

    #[test]
    fn resolved_scenario_round_trips() {
        let sc = Scenario::load_step();
        let text = toml::to_string(&sc).unwrap();
        let Config::Scenario(back) = parse_config(&text).unwrap() else {
            panic!("expected a scenario")
        };
        assert_eq!(back, sc);
    }

    #[test]
    fn study_round_trips_through_toml() {
        let study = Config::Study(Study::four_cases(Scenario::load_step()));
        assert_eq!(parse_config(&to_toml(&study)).unwrap(), study);
        let single = Config::Scenario(Scenario::default());
        assert_eq!(parse_config(&to_toml(&single)).unwrap(), single);
    }
}
