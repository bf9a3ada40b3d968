use nalgebra::DVector;
use num_complex::Complex64;

use super::model::{BreakerStates, BusId, NetworkModel};
use crate::control::PowerPair;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Bus voltages and flows of one algebraic network solve, all per-unit.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSolution {
    voltages: Vec<Complex64>,
    /// Current entering each branch at its `from` end.
    branch_currents: Vec<Complex64>,
    source: BusId,
    terminal: Option<BusId>,
    pcc: Option<BusId>,
    /// Current delivered by the source into the network.
    source_current: Complex64,
    electrolyzer_current: Complex64,
    mask: usize,
}

/// Quantities seen by the grid-monitoring block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Hz
    pub f: f64,
    /// PCC voltage magnitude [pu].
    pub e_pcc: f64,
    /// Mean magnitude over the monitored buses [pu].
    pub e_bar: f64,
}

impl NetworkModel {
    /// Solves the network with the source bus pinned to `source_voltage` and
    /// `electrolyzer_current` drawn at the converter terminal.
    pub fn solve(
        &self,
        source_voltage: Complex64,
        electrolyzer_current: Complex64,
        breakers: &BreakerStates,
    ) -> Result<NetworkSolution> {
        if !source_voltage.is_finite()
            || source_voltage.norm() == 0.0
            || !electrolyzer_current.is_finite()
        {
            return Err(Error::InvalidParameter(format!(
                "solve needs a nonzero source voltage and a finite current \
                 (V = {source_voltage}, I = {electrolyzer_current})"
            )));
        }
        if breakers.len() != self.breaker_names.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} breaker states, got {}",
                self.breaker_names.len(),
                breakers.len()
            )));
        }
        if self.terminal.is_none() && electrolyzer_current != ZERO {
            return Err(Error::Topology(
                "network has no electrolyzer attachment to draw a current".into(),
            ));
        }
        let mask = breakers.mask();
        let mut voltages = vec![source_voltage; self.nodes.len()];

        if !self.unknowns.is_empty() {
            let reduced = self.factorizations[mask]
                .as_ref()
                .ok_or(Error::SingularNetwork)?;
            let m = self.unknowns.len();
            let s = self.source.0;
            let mut rhs = DVector::from_element(m, ZERO);
            for br in &self.branches {
                let (_, ft, tf, _) = br.stamps();
                if br.from.0 == s {
                    if let Some(k) = self.unknown_pos[br.to.0] {
                        rhs[k] -= tf * source_voltage;
                    }
                } else if br.to.0 == s {
                    if let Some(k) = self.unknown_pos[br.from.0] {
                        rhs[k] -= ft * source_voltage;
                    }
                }
            }
            if let Some(k) = self.terminal.and_then(|t| self.unknown_pos[t.0]) {
                rhs[k] -= electrolyzer_current;
            }
            let x = reduced.lu.solve(&rhs).ok_or(Error::SingularNetwork)?;
            for (k, &node) in self.unknowns.iter().enumerate() {
                voltages[node] = x[k];
            }
        }

        let branch_currents = self
            .branches
            .iter()
            .map(|br| {
                let (ff, ft, _, _) = br.stamps();
                ff * voltages[br.from.0] + ft * voltages[br.to.0]
            })
            .collect();

        let mut sol = NetworkSolution {
            voltages,
            branch_currents,
            source: self.source,
            terminal: self.terminal,
            pcc: self.pcc,
            source_current: ZERO,
            electrolyzer_current,
            mask,
        };
        sol.source_current = self.node_outflow(&sol, self.source);
        Ok(sol)
    }

    /// Current leaving `node` through branches, connected loads and the
    /// electrolyzer sink.
    fn node_outflow(&self, sol: &NetworkSolution, node: BusId) -> Complex64 {
        let mut out = ZERO;
        for br in &self.branches {
            let (ff, ft, tf, tt) = br.stamps();
            let (vf, vt) = (sol.voltages[br.from.0], sol.voltages[br.to.0]);
            if br.from == node {
                out += ff * vf + ft * vt;
            }
            if br.to == node {
                out += tf * vf + tt * vt;
            }
        }
        for load in &self.loads {
            if load.bus == node && self.load_connected(load, sol.mask) {
                out += sol.voltages[node.0] / load.impedance;
            }
        }
        if self.terminal == Some(node) {
            out += sol.electrolyzer_current;
        }
        out
    }

    /// Largest Kirchhoff current residual over the non-source nodes [pu].
    pub fn kcl_residual(&self, sol: &NetworkSolution) -> f64 {
        (0..self.nodes.len())
            .filter(|&n| n != self.source.0)
            .map(|n| self.node_outflow(sol, BusId(n)).norm())
            .fold(0.0, f64::max)
    }

    /// Complex power consumed by the connected loads [pu].
    pub fn load_power(&self, sol: &NetworkSolution) -> Complex64 {
        self.loads
            .iter()
            .filter(|l| self.load_connected(l, sol.mask))
            .map(|l| {
                let v = sol.voltages[l.bus.0];
                v * (v / l.impedance).conj()
            })
            .sum()
    }

    /// Complex power absorbed by the series branches [pu].
    pub fn branch_losses(&self, sol: &NetworkSolution) -> Complex64 {
        self.branches
            .iter()
            .zip(&sol.branch_currents)
            .map(|(br, &i_from)| {
                let (_, _, tf, tt) = br.stamps();
                let (vf, vt) = (sol.voltages[br.from.0], sol.voltages[br.to.0]);
                let i_to = tf * vf + tt * vt;
                vf * i_from.conj() + vt * i_to.conj()
            })
            .sum()
    }

    /// `|S_source - (loads + losses + electrolyzer)|` [pu].
    pub fn power_balance_residual(&self, sol: &NetworkSolution) -> f64 {
        let consumed = self.load_power(sol) + self.branch_losses(sol) + sol.electrolyzer_power();
        (sol.source_power() - consumed).norm()
    }

    /// Frequency and voltage measurements for the controllers. The network
    /// is single-frequency, so `f` is the source frequency.
    pub fn measure(
        &self,
        sol: &NetworkSolution,
        der_frequency: f64,
        monitored: &[BusId],
    ) -> Result<Measurement> {
        if monitored.is_empty() || monitored.iter().any(|b| b.0 >= self.bus_count) {
            return Err(Error::Topology(format!(
                "monitored buses {monitored:?} must be a non-empty set of declared buses"
            )));
        }
        let e_bar = monitored
            .iter()
            .map(|&b| sol.voltage(b).norm())
            .sum::<f64>()
            / monitored.len() as f64;
        let e_pcc = sol.voltage(self.pcc.unwrap_or(self.source)).norm();
        Ok(Measurement {
            f: der_frequency,
            e_pcc,
            e_bar,
        })
    }
}

impl NetworkSolution {
    pub fn voltage(&self, bus: BusId) -> Complex64 {
        self.voltages[bus.0]
    }

    pub fn voltages(&self) -> &[Complex64] {
        &self.voltages
    }

    pub fn branch_currents(&self) -> &[Complex64] {
        &self.branch_currents
    }

    pub fn source_current(&self) -> Complex64 {
        self.source_current
    }

    /// Complex power delivered by the source [pu].
    pub fn source_power(&self) -> Complex64 {
        self.voltages[self.source.0] * self.source_current.conj()
    }

    /// Voltage at the converter terminal, if the network has one.
    pub fn terminal_voltage(&self) -> Option<Complex64> {
        self.terminal.map(|t| self.voltages[t.0])
    }

    /// Power drawn by the converter at its terminal [pu].
    pub fn electrolyzer_power(&self) -> Complex64 {
        match self.terminal {
            Some(t) => self.voltages[t.0] * self.electrolyzer_current.conj(),
            None => ZERO,
        }
    }

    /// Power flowing from the PCC bus into the electrolyzer system
    /// (converter plus coupling transformer) [pu].
    pub fn injection_at_pcc(&self) -> PowerPair {
        let s = match (self.pcc, self.terminal) {
            (Some(pcc), Some(term)) if pcc != term => {
                // The coupling transformer is the last branch; its from end is the PCC.
                let i = *self
                    .branch_currents
                    .last()
                    .expect("coupling branch present");
                self.voltages[pcc.0] * i.conj()
            }
            _ => self.electrolyzer_power(),
        };
        PowerPair { p: s.re, q: s.im }
    }
}
