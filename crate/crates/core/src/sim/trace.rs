use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names in recording order.
pub const TRACE_COLUMNS: [&str; 11] = [
    "time", "P_G", "Q_G", "f", "V_pcc", "V_bar", "P_E", "Q_E", "delta_f", "delta_e", "p_dc",
];

/// One recorded sample. Powers in W/var, voltages in pu.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub p_g: f64,
    pub q_g: f64,
    pub f: f64,
    pub v_pcc: f64,
    pub v_bar: f64,
    pub p_e: f64,
    pub q_e: f64,
    pub delta_f: f64,
    pub delta_e: f64,
    pub p_dc: f64,
}

impl Sample {
    pub fn values(&self) -> [f64; 11] {
        [
            self.time,
            self.p_g,
            self.q_g,
            self.f,
            self.v_pcc,
            self.v_bar,
            self.p_e,
            self.q_e,
            self.delta_f,
            self.delta_e,
            self.p_dc,
        ]
    }

    pub fn from_values(v: [f64; 11]) -> Self {
        Self {
            time: v[0],
            p_g: v[1],
            q_g: v[2],
            f: v[3],
            v_pcc: v[4],
            v_bar: v[5],
            p_e: v[6],
            q_e: v[7],
            delta_f: v[8],
            delta_e: v[9],
            p_dc: v[10],
        }
    }
}

/// Time series sampled every record interval.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimulationTrace {
    samples: Vec<Sample>,
}

impl SimulationTrace {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            samples: Vec::with_capacity(n),
        }
    }

    /// Appends a sample; rejects non-finite values and non-increasing time.
    pub fn push(&mut self, sample: Sample) -> Result<()> {
        if sample.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trace sample"));
        }
        if let Some(last) = self.samples.last() {
            if sample.time <= last.time {
                return Err(Error::InvalidParameter(format!(
                    "trace time must increase ({} after {})",
                    sample.time, last.time
                )));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        let mut trace = Self::with_capacity(samples.len());
        for s in samples {
            trace.push(s)?;
        }
        Ok(trace)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Column by name, e.g. `"P_G"`.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = TRACE_COLUMNS.iter().position(|c| *c == name)?;
        Some(self.samples.iter().map(|s| s.values()[idx]).collect())
    }

    /// Samples with `t0 <= time <= t1`.
    pub fn window(&self, t0: f64, t1: f64) -> &[Sample] {
        let a = self.samples.partition_point(|s| s.time < t0);
        let b = self.samples.partition_point(|s| s.time <= t1);
        &self.samples[a..b.max(a)]
    }

    /// Last sample at or before `t`.
    pub fn at(&self, t: f64) -> Option<&Sample> {
        let i = self.samples.partition_point(|s| s.time <= t);
        i.checked_sub(1).map(|i| &self.samples[i])
    }
}

/// Where metrics are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventWindow {
    pub t0: f64,
    pub t1: f64,
    /// Settling time is measured from here, normally the last event.
    pub settle_from: f64,
}

/// Band around nominal frequency that counts as settled [Hz].
pub const SETTLE_BAND: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    /// max - min of P_G in the window [W].
    pub p_g_swing: f64,
    /// max |f - f_nom| in the window [Hz].
    pub f_nadir_dev: f64,
    /// Seconds after `settle_from` from which |f - f_nom| stays inside the
    /// band; `None` if it never settles.
    pub f_settle: Option<f64>,
    /// max |V_pcc - V_pcc(t0)| in the window [pu].
    pub v_max_dev: f64,
    /// DC energy consumed in the window [J].
    pub e_h2: f64,
}

pub fn compute_metrics(
    trace: &SimulationTrace,
    window: EventWindow,
    f_nom: f64,
) -> Result<ScenarioMetrics> {
    let w = trace.window(window.t0, window.t1);
    if w.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "event window [{}, {}] holds no samples",
            window.t0, window.t1
        )));
    }
    let (mut p_min, mut p_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut f_dev: f64 = 0.0;
    let mut v_dev: f64 = 0.0;
    let v_ref = w[0].v_pcc;
    for s in w {
        p_min = p_min.min(s.p_g);
        p_max = p_max.max(s.p_g);
        f_dev = f_dev.max((s.f - f_nom).abs());
        v_dev = v_dev.max((s.v_pcc - v_ref).abs());
    }
    // Left Riemann sum; the final sample closes the window.
    let e_h2 = w
        .windows(2)
        .map(|p| p[0].p_dc * (p[1].time - p[0].time))
        .sum();

    let all = trace.samples();
    let outside = all.iter().rposition(|s| (s.f - f_nom).abs() >= SETTLE_BAND);
    let f_settle = match outside {
        None => Some(0.0),
        Some(i) if i + 1 < all.len() => Some((all[i + 1].time - window.settle_from).max(0.0)),
        Some(_) => None,
    };
    Ok(ScenarioMetrics {
        p_g_swing: p_max - p_min,
        f_nadir_dev: f_dev,
        f_settle,
        v_max_dev: v_dev,
        e_h2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(f: impl Fn(f64) -> Sample) -> SimulationTrace {
        SimulationTrace::from_samples((0..=100).map(|k| f(k as f64 * 0.01)).collect()).unwrap()
    }

    fn flat(time: f64) -> Sample {
        Sample {
            time,
            p_g: 4.1e6,
            f: 60.0,
            v_pcc: 1.0,
            p_dc: 380e3,
            ..Sample::default()
        }
    }

    const WINDOW: EventWindow = EventWindow {
        t0: 0.0,
        t1: 1.0,
        settle_from: 0.0,
    };

    #[test]
    fn constant_trace_has_zero_metrics() {
        let m = compute_metrics(&trace(flat), WINDOW, 60.0).unwrap();
        assert_eq!(m.p_g_swing, 0.0);
        assert_eq!(m.f_nadir_dev, 0.0);
        assert_eq!(m.f_settle, Some(0.0));
        assert_eq!(m.v_max_dev, 0.0);
        assert!((m.e_h2 - 380e3).abs() < 1e-6);
    }

    #[test]
    fn swing_is_max_minus_min() {
        let t = trace(|time| Sample {
            p_g: if time < 0.5 { 4.1e6 } else { 4.5e6 },
            ..flat(time)
        });
        let m = compute_metrics(&t, WINDOW, 60.0).unwrap();
        assert!((m.p_g_swing - 400e3).abs() < 1e-6);
    }

    #[test]
    fn settle_is_measured_from_reference() {
        let t = trace(|time| Sample {
            f: if time < 0.7 { 59.9 } else { 60.005 },
            ..flat(time)
        });
        let m = compute_metrics(
            &t,
            EventWindow {
                settle_from: 0.5,
                ..WINDOW
            },
            60.0,
        )
        .unwrap();
        assert!((m.f_settle.unwrap() - 0.2).abs() < 1e-9);
        assert!((m.f_nadir_dev - 0.1).abs() < 1e-12);

        let never = trace(|time| Sample {
            f: 59.9,
            ..flat(time)
        });
        assert_eq!(
            compute_metrics(&never, WINDOW, 60.0).unwrap().f_settle,
            None
        );
    }

    #[test]
    fn rejects_nan_and_time_reversal() {
        let mut t = SimulationTrace::default();
        t.push(flat(0.0)).unwrap();
        assert!(t.push(flat(0.0)).is_err());
        assert!(t
            .push(Sample {
                f: f64::NAN,
                ..flat(1.0)
            })
            .is_err());
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn empty_window_is_an_error() {
        let w = EventWindow {
            t0: 5.0,
            t1: 6.0,
            settle_from: 5.0,
        };
        assert!(compute_metrics(&trace(flat), w, 60.0).is_err());
    }
}
