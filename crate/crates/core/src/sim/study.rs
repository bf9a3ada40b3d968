use serde::Serialize;

use super::engine::{run, RunError, RunOutput};
use super::scenario::{Study, StudyCase};
use crate::plant::ElectrolyzerMode;

#[derive(Debug)]
pub struct CaseResult {
    pub case: StudyCase,
    pub outcome: Result<RunOutput, RunError>,
}

/// Constant versus supporting electrolyzer at the same secondary setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedComparison {
    pub secondary: bool,
    pub constant_case: String,
    pub supporting_case: String,
    /// supporting / constant DER active-power swing.
    pub swing_ratio: f64,
    pub constant_f_nadir_dev: f64,
    pub supporting_f_nadir_dev: f64,
    pub constant_v_max_dev: f64,
    pub supporting_v_max_dev: f64,
    pub constant_e_h2: f64,
    pub supporting_e_h2: f64,
}

#[derive(Debug)]
pub struct StudyReport {
    pub cases: Vec<CaseResult>,
    pub comparisons: Vec<PairedComparison>,
}

impl StudyReport {
    pub fn case(&self, name: &str) -> Option<&CaseResult> {
        self.cases.iter().find(|c| c.case.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = (&StudyCase, &RunError)> {
        self.cases
            .iter()
            .filter_map(|c| c.outcome.as_ref().err().map(|e| (&c.case, e)))
    }
}

/// Runs every case concurrently. A failing case does not stop the others.
pub fn run_study(study: &Study) -> StudyReport {
    let cases: Vec<CaseResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = study
            .cases
            .iter()
            .map(|case| {
                let scenario = study.scenario(case);
                scope.spawn(move || run(&scenario))
            })
            .collect();
        study
            .cases
            .iter()
            .zip(handles)
            .map(|(case, h)| CaseResult {
                case: case.clone(),
                outcome: h.join().expect("simulation thread panicked"),
            })
            .collect()
    });
    let comparisons = pair(&cases);
    StudyReport { cases, comparisons }
}

fn pair(cases: &[CaseResult]) -> Vec<PairedComparison> {
    let find = |mode, secondary| {
        cases.iter().find_map(|c| {
            (c.case.electrolyzer_mode == mode && c.case.secondary == secondary)
                .then_some(())
                .and(c.outcome.as_ref().ok().map(|o| (c, o)))
        })
    };
    [false, true]
        .into_iter()
        .filter_map(|secondary| {
            let (cc, c) = find(ElectrolyzerMode::ConstantPower, secondary)?;
            let (sc, s) = find(ElectrolyzerMode::CurrentControl, secondary)?;
            Some(PairedComparison {
                secondary,
                constant_case: cc.case.name.clone(),
                supporting_case: sc.case.name.clone(),
                swing_ratio: s.metrics.p_g_swing / c.metrics.p_g_swing,
                constant_f_nadir_dev: c.metrics.f_nadir_dev,
                supporting_f_nadir_dev: s.metrics.f_nadir_dev,
                constant_v_max_dev: c.metrics.v_max_dev,
                supporting_v_max_dev: s.metrics.v_max_dev,
                constant_e_h2: c.metrics.e_h2,
                supporting_e_h2: s.metrics.e_h2,
            })
        })
        .collect()
}
