use serde::{Deserialize, Serialize};

use super::dq::PowerPair;
use super::secondary::SecondaryState;
use crate::error::{ensure, Result};

/// Which way the droop terms point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `f* = f‡ + k_p (P - P‡)`: consuming more than the setpoint raises
    /// the reference (electrolyzer in voltage-control mode).
    LoadSide,
    /// `f* = f‡ - k_p (P - P‡)`: conventional generator droop.
    GeneratorSide,
}

impl SignConvention {
    fn sign(self) -> f64 {
        match self {
            SignConvention::LoadSide => 1.0,
            SignConvention::GeneratorSide => -1.0,
        }
    }
}

/// Frequency/voltage droop gains and setpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroopParams {
    /// Hz per W.
    pub k_p: f64,
    /// pu volt per var.
    pub k_q: f64,
    pub f_nom: f64,
    pub e_nom: f64,
    /// W
    pub p_set: f64,
    /// var
    pub q_set: f64,
    pub sign_convention: SignConvention,
}

impl DroopParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.k_p > 0.0, || {
            format!("droop k_p must be > 0 (got {})", self.k_p)
        })?;
        ensure(self.k_q > 0.0, || {
            format!("droop k_q must be > 0 (got {})", self.k_q)
        })?;
        ensure(self.f_nom > 0.0, || {
            format!("f_nom must be > 0 (got {})", self.f_nom)
        })?;
        ensure(self.e_nom > 0.0, || {
            format!("e_nom must be > 0 (got {})", self.e_nom)
        })?;
        ensure(self.p_set.is_finite() && self.q_set.is_finite(), || {
            "droop setpoints must be finite".into()
        })
    }
}

/// Power-from-frequency/voltage gains of a grid-following converter, plus
/// the converter's consumption limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OppositeDroopParams {
    /// W per Hz.
    pub k_f: f64,
    /// var per pu volt.
    pub k_v: f64,
    pub f_nom: f64,
    pub e_nom: f64,
    pub p_set: f64,
    pub q_set: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

impl OppositeDroopParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.k_f > 0.0, || {
            format!("k_f must be > 0 (got {})", self.k_f)
        })?;
        ensure(self.k_v > 0.0, || {
            format!("k_v must be > 0 (got {})", self.k_v)
        })?;
        ensure(self.f_nom > 0.0, || {
            format!("f_nom must be > 0 (got {})", self.f_nom)
        })?;
        ensure(self.e_nom > 0.0, || {
            format!("e_nom must be > 0 (got {})", self.e_nom)
        })?;
        ensure(self.p_min <= self.p_set && self.p_set <= self.p_max, || {
            format!(
                "p_set {} must lie within [p_min {}, p_max {}]",
                self.p_set, self.p_min, self.p_max
            )
        })?;
        ensure(self.q_min <= self.q_set && self.q_set <= self.q_max, || {
            format!(
                "q_set {} must lie within [q_min {}, q_max {}]",
                self.q_set, self.q_min, self.q_max
            )
        })
    }

    pub fn setpoint(&self) -> PowerPair {
        PowerPair {
            p: self.p_set,
            q: self.q_set,
        }
    }

    pub fn clamp(&self, s: PowerPair) -> PowerPair {
        PowerPair {
            p: s.p.clamp(self.p_min, self.p_max),
            q: s.q.clamp(self.q_min, self.q_max),
        }
    }
}

/// Frequency and voltage references of a grid-forming droop controller.
///
/// Returns `(f*, E*)`. Secondary correction terms, when present, shift both
/// references additively.
pub fn droop_refs(
    measured: PowerPair,
    params: &DroopParams,
    secondary: Option<&SecondaryState>,
) -> (f64, f64) {
    let (delta_f, delta_e) = secondary.map_or((0.0, 0.0), |s| (s.delta_f, s.delta_e));
    let sign = params.sign_convention.sign();
    let f_ref = params.f_nom + sign * params.k_p * (measured.p - params.p_set) + delta_f;
    let e_ref = params.e_nom + sign * params.k_q * (measured.q - params.q_set) + delta_e;
    (f_ref, e_ref)
}

/// Power references of the opposite droop, saturated to the converter limits.
///
/// With a secondary layer active, the restored frequency and voltage no
/// longer carry the disturbance, so the secondary corrections stand in for
/// it: the deviation seen by the droop is `f - f‡ - Δf` (and `E - E‡ - ΔE`).
pub fn opposite_droop_refs(
    f_meas: f64,
    e_meas: f64,
    params: &OppositeDroopParams,
    secondary: Option<&SecondaryState>,
) -> PowerPair {
    let (delta_f, delta_e) = secondary.map_or((0.0, 0.0), |s| (s.delta_f, s.delta_e));
    let p = params.p_set + params.k_f * (f_meas - params.f_nom - delta_f);
    let q = params.q_set + params.k_v * (e_meas - params.e_nom - delta_e);
    params.clamp(PowerPair { p, q })
}

/// Headroom around the setpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerMargins {
    pub down_p: f64,
    pub up_p: f64,
    pub down_q: f64,
    pub up_q: f64,
}

pub fn power_margins(params: &OppositeDroopParams) -> PowerMargins {
    PowerMargins {
        down_p: params.p_set - params.p_min,
        up_p: params.p_max - params.p_set,
        down_q: params.q_set - params.q_min,
        up_q: params.q_max - params.q_set,
    }
}

/// Setpoint split across the primary, secondary and tertiary reserve layers.
///
/// Tertiary values are taken as given; the setpoint is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SetpointAllocation {
    pub primary: PowerPair,
    pub secondary: PowerPair,
    pub tertiary: PowerPair,
}

impl SetpointAllocation {
    pub fn total(&self) -> PowerPair {
        self.primary + self.secondary + self.tertiary
    }

    /// Writes the total into the setpoints of `params`, checking it against
    /// the converter limits.
    pub fn apply(&self, params: &OppositeDroopParams) -> Result<OppositeDroopParams> {
        let total = self.total();
        total.check("SetpointAllocation")?;
        let updated = OppositeDroopParams {
            p_set: total.p,
            q_set: total.q,
            ..*params
        };
        updated.validate()?;
        Ok(updated)
    }
}
