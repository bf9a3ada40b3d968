use serde::{Deserialize, Serialize};

use crate::network::{
    BranchKind, BranchSpec, BusSpec, ElectrolyzerAttachment, LoadImpedance, LoadSpec,
    NetworkDescription, TransformerSpec,
};
use crate::plant::ElectrolyzerMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakerAction {
    Open,
    Close,
}

/// Breaker operation scheduled at `time` [s].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub time: f64,
    pub breaker: String,
    pub action: BreakerAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    /// s
    pub duration: f64,
    /// Integration step [s].
    pub dt: f64,
    /// Trace sampling interval [s]; a multiple of `dt`.
    pub record_interval: f64,
    pub secondary: bool,
    pub electrolyzer_mode: ElectrolyzerMode,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            duration: 5.0,
            dt: 1e-4,
            record_interval: 1e-3,
            secondary: false,
            electrolyzer_mode: ElectrolyzerMode::CurrentControl,
        }
    }
}

/// Grid-forming DER. Setpoints and droops are in pu of `s_rated`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DerConfig {
    /// VA
    pub s_rated: f64,
    /// W
    pub p_rated: f64,
    /// pu
    pub p_set: f64,
    /// pu
    pub q_set: f64,
    /// Frequency drop per pu of active power, in pu of `f_nom`.
    pub frequency_droop: f64,
    /// Voltage drop per pu of reactive power [pu].
    pub voltage_droop: f64,
    /// Power measurement filter [s].
    pub t_f: f64,
    /// Hz
    pub f_nom: f64,
    /// pu
    pub e_nom: f64,
}

impl Default for DerConfig {
    fn default() -> Self {
        Self {
            s_rated: 5e6,
            p_rated: 5e6,
            p_set: 0.85,
            q_set: 0.85,
            frequency_droop: 0.1,
            voltage_droop: 0.1,
            t_f: 0.02,
            f_nom: 60.0,
            e_nom: 1.0,
        }
    }
}

/// Electrolyzer converter and stack proxy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElectrolyzerConfig {
    /// W
    pub p_rated: f64,
    /// var; reactive limits are +/- this value.
    pub q_rated: f64,
    /// W
    pub p_set: f64,
    /// var
    pub q_set: f64,
    /// W/Hz
    pub k_f: f64,
    /// var/pu
    pub k_v: f64,
    /// Held in constant-power mode [W].
    pub constant_p: f64,
    /// var
    pub constant_q: f64,
    pub inner_kp: f64,
    /// 1/s
    pub inner_ki: f64,
    /// Current plant integrator gain [1/s].
    pub inner_plant_gain: f64,
    /// Symmetric limit on the inner PI output.
    pub inner_limit: f64,
    /// AC to DC.
    pub efficiency: f64,
}

impl Default for ElectrolyzerConfig {
    fn default() -> Self {
        Self {
            p_rated: 0.75e6,
            q_rated: 0.5e6,
            p_set: 0.4e6,
            q_set: 0.0,
            k_f: 52_500.0,
            k_v: 1e4,
            constant_p: 400e3,
            constant_q: -100e3,
            inner_kp: 10.0,
            inner_ki: 0.1,
            inner_plant_gain: 50.0,
            inner_limit: 10.0,
            efficiency: 0.95,
        }
    }
}

/// Centralized frequency and average-voltage restoration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecondaryConfig {
    pub kp_f: f64,
    pub ki_f: f64,
    pub kp_v: f64,
    pub ki_v: f64,
    /// s
    pub period: f64,
    /// Time constant of the grid-monitoring filter on f and the average voltage [s].
    pub measurement_tau: f64,
    /// Symmetric limit on the frequency correction [Hz].
    pub delta_f_limit: f64,
    /// Symmetric limit on the voltage correction [pu].
    pub delta_e_limit: f64,
    /// Buses averaged into the voltage feedback.
    pub monitored_buses: Vec<String>,
}

impl Default for SecondaryConfig {
    fn default() -> Self {
        Self {
            kp_f: 10.0,
            ki_f: 0.1,
            kp_v: 10.0,
            ki_v: 0.1,
            period: 0.01,
            measurement_tau: 0.1,
            delta_f_limit: 2.0,
            delta_e_limit: 0.2,
            monitored_buses: vec!["bus1".into(), "bus3".into()],
        }
    }
}

/// DER at bus 1, a line to the load bus 2, a step-down transformer to the
/// PCC bus 3 and the electrolyzer's own coupling transformer.
pub fn default_network() -> NetworkDescription {
    let bus = |name: &str, v_base: f64| BusSpec {
        name: name.into(),
        v_base,
    };
    NetworkDescription {
        s_base: 5e6,
        f_nom: 60.0,
        source_bus: "bus1".into(),
        buses: vec![bus("bus1", 13.2e3), bus("bus2", 13.2e3), bus("bus3", 480.0)],
        branches: vec![
            BranchSpec {
                name: "line12".into(),
                from: "bus1".into(),
                to: "bus2".into(),
                r: 0.01,
                x: 0.05,
                tap: 1.0,
                kind: BranchKind::Line,
            },
            BranchSpec {
                name: "tx23".into(),
                from: "bus2".into(),
                to: "bus3".into(),
                r: 0.005,
                x: 0.03,
                tap: 1.0,
                kind: BranchKind::Transformer {
                    v_from: 13.2e3,
                    v_to: 480.0,
                },
            },
        ],
        loads: vec![
            LoadSpec {
                name: "Z1".into(),
                bus: "bus2".into(),
                impedance: LoadImpedance::Power { p: 3.7e6, q: 1.2e6 },
                breaker: None,
                closed: true,
            },
            LoadSpec {
                name: "Z2".into(),
                bus: "bus2".into(),
                impedance: LoadImpedance::Power {
                    p: 0.5e6,
                    q: 0.15e6,
                },
                breaker: Some("S".into()),
                closed: false,
            },
        ],
        electrolyzer: Some(ElectrolyzerAttachment {
            pcc_bus: "bus3".into(),
            transformer: Some(TransformerSpec {
                r: 0.005,
                x: 0.03,
                tap: 1.0,
                v_from: 480.0,
                v_to: 70.0,
            }),
        }),
    }
}

/// One fully specified simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub simulation: SimulationSettings,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default)]
    pub der: DerConfig,
    #[serde(default)]
    pub electrolyzer: ElectrolyzerConfig,
    #[serde(default)]
    pub secondary: SecondaryConfig,
    #[serde(default = "default_network")]
    pub network: NetworkDescription,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            simulation: SimulationSettings::default(),
            events: Vec::new(),
            der: DerConfig::default(),
            electrolyzer: ElectrolyzerConfig::default(),
            secondary: SecondaryConfig::default(),
            network: default_network(),
        }
    }
}

impl Scenario {
    /// Default network and devices with S closing at 2.2 s and opening at 3.2 s.
    pub fn load_step() -> Self {
        let ev = |time, action| Event {
            time,
            breaker: "S".into(),
            action,
        };
        Self {
            events: vec![ev(2.2, BreakerAction::Close), ev(3.2, BreakerAction::Open)],
            ..Self::default()
        }
    }

    pub fn with_case(mut self, mode: ElectrolyzerMode, secondary: bool) -> Self {
        self.simulation.electrolyzer_mode = mode;
        self.simulation.secondary = secondary;
        self
    }
}

/// A study case: the shared scenario with its own mode and secondary flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyCase {
    pub name: String,
    pub electrolyzer_mode: ElectrolyzerMode,
    pub secondary: bool,
}

/// Cases run on identical networks and events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub base: Scenario,
    pub cases: Vec<StudyCase>,
}

impl Study {
    /// Constant and supporting electrolyzer, each with and without secondary.
    pub fn four_cases(base: Scenario) -> Self {
        let case = |name: &str, electrolyzer_mode, secondary| StudyCase {
            name: name.into(),
            electrolyzer_mode,
            secondary,
        };
        Self {
            base,
            cases: vec![
                case("constant", ElectrolyzerMode::ConstantPower, false),
                case("supporting", ElectrolyzerMode::CurrentControl, false),
                case("constant_secondary", ElectrolyzerMode::ConstantPower, true),
                case(
                    "supporting_secondary",
                    ElectrolyzerMode::CurrentControl,
                    true,
                ),
            ],
        }
    }

    pub fn scenario(&self, case: &StudyCase) -> Scenario {
        self.base
            .clone()
            .with_case(case.electrolyzer_mode, case.secondary)
    }
}
