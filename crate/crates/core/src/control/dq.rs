use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum grid-voltage magnitude (pu) below which current references are refused.
pub const VOLTAGE_FLOOR: f64 = 0.1;

/// A voltage or current expressed in the synchronous dq frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DqPhasor {
    pub d: f64,
    pub q: f64,
}

impl DqPhasor {
    pub const ZERO: DqPhasor = DqPhasor { d: 0.0, q: 0.0 };

    pub const fn new(d: f64, q: f64) -> Self {
        Self { d, q }
    }

    pub fn magnitude(&self) -> f64 {
        self.d.hypot(self.q)
    }

    pub fn is_finite(&self) -> bool {
        self.d.is_finite() && self.q.is_finite()
    }
}

impl From<Complex64> for DqPhasor {
    fn from(c: Complex64) -> Self {
        Self { d: c.re, q: c.im }
    }
}

impl From<DqPhasor> for Complex64 {
    fn from(v: DqPhasor) -> Self {
        Complex64::new(v.d, v.q)
    }
}

/// Active/reactive power pair, load convention (positive = consumed).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerPair {
    pub p: f64,
    pub q: f64,
}

impl PowerPair {
    pub const ZERO: PowerPair = PowerPair { p: 0.0, q: 0.0 };

    /// Checked constructor; rejects NaN and infinities.
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let pair = Self { p, q };
        pair.check("PowerPair")?;
        Ok(pair)
    }

    pub(crate) fn check(&self, what: &'static str) -> Result<()> {
        if self.p.is_finite() && self.q.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn scale(self, k: f64) -> Self {
        Self {
            p: self.p * k,
            q: self.q * k,
        }
    }
}

impl std::ops::Add for PowerPair {
    type Output = PowerPair;

    fn add(self, rhs: PowerPair) -> PowerPair {
        PowerPair {
            p: self.p + rhs.p,
            q: self.q + rhs.q,
        }
    }
}

/// Power drawn from the grid by a converter with terminal voltage `v` and
/// current `i`: `p = v_d i_d + v_q i_q`, `q = v_q i_d - v_d i_q`.
///
/// This is `v * conj(i)` with `v = v_d + j v_q`, so inductive consumption is
/// positive `q`.
pub fn dq_power(v: DqPhasor, i: DqPhasor) -> PowerPair {
    PowerPair {
        p: v.d * i.d + v.q * i.q,
        q: v.q * i.d - v.d * i.q,
    }
}

/// Current references that make [`dq_power`] return exactly `(p_ref, q_ref)`
/// at grid voltage `v_g`.
///
/// The denominator is the squared voltage magnitude, which is the algebraic
/// inverse of the power equations.
pub fn dq_current_refs(p_ref: f64, q_ref: f64, v_g: DqPhasor) -> Result<DqPhasor> {
    let mag_sq = v_g.d * v_g.d + v_g.q * v_g.q;
    let magnitude = mag_sq.sqrt();
    if magnitude.is_nan() || magnitude <= VOLTAGE_FLOOR {
        return Err(Error::VoltageCollapse {
            magnitude,
            floor: VOLTAGE_FLOOR,
        });
    }
    Ok(DqPhasor {
        d: (v_g.d * p_ref + v_g.q * q_ref) / mag_sq,
        q: (v_g.q * p_ref - v_g.d * q_ref) / mag_sq,
    })
}
