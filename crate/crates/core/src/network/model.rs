use std::collections::{HashMap, HashSet, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

const MAX_BREAKERS: usize = 10;
/// Relative pivot magnitude under which the nodal matrix counts as singular.
const SINGULAR_PIVOT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusSpec {
    pub name: String,
    /// Line-line RMS base voltage of the bus's zone [V].
    pub v_base: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BranchKind {
    Line,
    /// Rated primary/secondary voltages; must match the zones it joins.
    Transformer {
        v_from: f64,
        v_to: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub name: String,
    pub from: String,
    pub to: String,
    /// Series resistance [pu].
    pub r: f64,
    /// Series reactance [pu].
    pub x: f64,
    /// Off-nominal tap on the `from` side.
    #[serde(default = "unit_tap")]
    pub tap: f64,
    pub kind: BranchKind,
}

fn unit_tap() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadImpedance {
    /// Series RL impedance [pu].
    Impedance { r: f64, x: f64 },
    /// Constant impedance sized to draw `p` [W] and `q` [var] at 1.0 pu.
    Power { p: f64, q: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    pub name: String,
    pub bus: String,
    pub impedance: LoadImpedance,
    /// Name of the breaker switching this load; `None` for a fixed load.
    #[serde(default)]
    pub breaker: Option<String>,
    /// Initial breaker position.
    #[serde(default)]
    pub closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerSpec {
    pub r: f64,
    pub x: f64,
    #[serde(default = "unit_tap")]
    pub tap: f64,
    pub v_from: f64,
    pub v_to: f64,
}

/// Where and how the electrolyzer converter hangs off the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectrolyzerAttachment {
    pub pcc_bus: String,
    /// Coupling transformer between the PCC and the converter terminal.
    #[serde(default)]
    pub transformer: Option<TransformerSpec>,
}

/// Input to [`NetworkModel::build`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDescription {
    /// Three-phase power base [VA].
    pub s_base: f64,
    pub f_nom: f64,
    pub source_bus: String,
    pub buses: Vec<BusSpec>,
    #[serde(default)]
    pub branches: Vec<BranchSpec>,
    #[serde(default)]
    pub loads: Vec<LoadSpec>,
    #[serde(default)]
    pub electrolyzer: Option<ElectrolyzerAttachment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BusId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerUnitBase {
    pub s_base: f64,
    pub f_nom: f64,
    v_base: Vec<f64>,
}

impl PerUnitBase {
    pub fn v_base(&self, bus: BusId) -> f64 {
        self.v_base[bus.0]
    }

    pub fn z_base(&self, bus: BusId) -> f64 {
        let v = self.v_base(bus);
        v * v / self.s_base
    }

    /// Per-phase RMS base current [A] of the bus's zone.
    pub fn i_base(&self, bus: BusId) -> f64 {
        self.s_base / (3f64.sqrt() * self.v_base(bus))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Node {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub name: String,
    pub from: BusId,
    pub to: BusId,
    pub series_impedance: Complex64,
    pub tap_ratio: f64,
    pub kind: BranchKind,
}

impl Branch {
    /// `(Y_ff, Y_ft, Y_tf, Y_tt)` of the tap-on-from-side pi model.
    pub(crate) fn stamps(&self) -> (Complex64, Complex64, Complex64, Complex64) {
        let y = self.series_impedance.inv();
        let t = self.tap_ratio;
        (y / (t * t), -y / t, -y / t, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceLoad {
    pub name: String,
    pub bus: BusId,
    pub impedance: Complex64,
    pub breaker: Option<usize>,
}

/// Breaker positions indexed like [`NetworkModel::breaker_names`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BreakerStates(Vec<bool>);

impl BreakerStates {
    pub fn is_closed(&self, index: usize) -> bool {
        self.0[index]
    }

    pub fn set(&mut self, index: usize, closed: bool) {
        self.0[index] = closed;
    }

    pub(crate) fn mask(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .fold(0, |m, (i, _)| m | (1 << i))
    }

    pub(crate) fn len(&self) -> usize {
        self.0.len()
    }
}

/// Factorized reduced nodal system for one breaker configuration.
#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Validated, immutable network with its nodal structure precomputed for
/// every breaker configuration.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    pub(crate) base: PerUnitBase,
    pub(crate) nodes: Vec<Node>,
    pub(crate) bus_count: usize,
    pub(crate) source: BusId,
    pub(crate) branches: Vec<Branch>,
    pub(crate) loads: Vec<ImpedanceLoad>,
    pub(crate) breaker_names: Vec<String>,
    initial_breakers: BreakerStates,
    pub(crate) pcc: Option<BusId>,
    pub(crate) terminal: Option<BusId>,
    /// Unknown node indices in solve order (every node except the source).
    pub(crate) unknowns: Vec<usize>,
    /// Position of each node inside `unknowns`.
    pub(crate) unknown_pos: Vec<Option<usize>>,
    pub(crate) factorizations: Vec<Option<Reduced>>,
}

fn zones_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

impl NetworkModel {
    pub fn build(desc: &NetworkDescription) -> Result<Self> {
        ensure(desc.s_base > 0.0 && desc.s_base.is_finite(), || {
            format!("s_base must be > 0 (got {})", desc.s_base)
        })?;
        ensure(desc.f_nom > 0.0 && desc.f_nom.is_finite(), || {
            format!("f_nom must be > 0 (got {})", desc.f_nom)
        })?;

        let mut nodes = Vec::new();
        let mut v_base = Vec::new();
        let mut index: HashMap<&str, BusId> = HashMap::new();
        for bus in &desc.buses {
            if !(bus.v_base > 0.0 && bus.v_base.is_finite()) {
                return Err(Error::Unit(format!(
                    "bus '{}' has non-positive base voltage {}",
                    bus.name, bus.v_base
                )));
            }
            if index.insert(&bus.name, BusId(nodes.len())).is_some() {
                return Err(Error::Topology(format!("duplicate bus '{}'", bus.name)));
            }
            nodes.push(Node {
                name: bus.name.clone(),
            });
            v_base.push(bus.v_base);
        }
        let bus_count = nodes.len();
        let lookup = |name: &str, what: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Topology(format!("{what} references unknown bus '{name}'")))
        };
        let source = lookup(&desc.source_bus, "source")?;

        let mut branches = Vec::new();
        let mut names = HashSet::new();
        let mut pairs = HashSet::new();
        for spec in &desc.branches {
            let from = lookup(&spec.from, &format!("branch '{}'", spec.name))?;
            let to = lookup(&spec.to, &format!("branch '{}'", spec.name))?;
            let branch = make_branch(&spec.name, from, to, spec.r, spec.x, spec.tap, spec.kind)?;
            check_zones(&branch, v_base[from.0], v_base[to.0])?;
            if !names.insert(spec.name.as_str()) {
                return Err(Error::Topology(format!(
                    "duplicate branch name '{}'",
                    spec.name
                )));
            }
            let pair = (from.min(to), from.max(to));
            if from == to || !pairs.insert(pair) {
                return Err(Error::Topology(format!(
                    "duplicate or self-loop branch '{}' between '{}' and '{}'",
                    spec.name, spec.from, spec.to
                )));
            }
            branches.push(branch);
        }

        let mut pcc = None;
        let mut terminal = None;
        if let Some(att) = &desc.electrolyzer {
            let pcc_bus = lookup(&att.pcc_bus, "electrolyzer attachment")?;
            pcc = Some(pcc_bus);
            match &att.transformer {
                None => terminal = Some(pcc_bus),
                Some(t) => {
                    let term = BusId(nodes.len());
                    nodes.push(Node {
                        name: format!("{}:converter", att.pcc_bus),
                    });
                    v_base.push(t.v_to);
                    let branch = make_branch(
                        "electrolyzer_transformer",
                        pcc_bus,
                        term,
                        t.r,
                        t.x,
                        t.tap,
                        BranchKind::Transformer {
                            v_from: t.v_from,
                            v_to: t.v_to,
                        },
                    )?;
                    if !(t.v_to > 0.0 && t.v_to.is_finite()) {
                        return Err(Error::Unit(format!(
                            "electrolyzer transformer secondary voltage {} must be > 0",
                            t.v_to
                        )));
                    }
                    check_zones(&branch, v_base[pcc_bus.0], t.v_to)?;
                    branches.push(branch);
                    terminal = Some(term);
                }
            }
        }

        let mut breaker_names: Vec<String> = Vec::new();
        let mut initial = Vec::new();
        let mut loads = Vec::new();
        let mut load_names = HashSet::new();
        for spec in &desc.loads {
            if !load_names.insert(spec.name.as_str()) {
                return Err(Error::Topology(format!("duplicate load '{}'", spec.name)));
            }
            let bus = lookup(&spec.bus, &format!("load '{}'", spec.name))?;
            let impedance = load_impedance(spec, desc.s_base)?;
            let breaker = match &spec.breaker {
                None => None,
                Some(name) => {
                    if breaker_names.iter().any(|b| b == name) {
                        return Err(Error::Topology(format!(
                            "breaker '{name}' switches more than one load"
                        )));
                    }
                    breaker_names.push(name.clone());
                    initial.push(spec.closed);
                    Some(breaker_names.len() - 1)
                }
            };
            loads.push(ImpedanceLoad {
                name: spec.name.clone(),
                bus,
                impedance,
                breaker,
            });
        }
        ensure(breaker_names.len() <= MAX_BREAKERS, || {
            format!("at most {MAX_BREAKERS} breakers are supported")
        })?;

        check_connected(&nodes, source, &branches)?;

        let unknowns: Vec<usize> = (0..nodes.len()).filter(|&i| i != source.0).collect();
        let mut unknown_pos = vec![None; nodes.len()];
        for (k, &n) in unknowns.iter().enumerate() {
            unknown_pos[n] = Some(k);
        }

        let mut model = NetworkModel {
            base: PerUnitBase {
                s_base: desc.s_base,
                f_nom: desc.f_nom,
                v_base,
            },
            nodes,
            bus_count,
            source,
            branches,
            loads,
            breaker_names,
            initial_breakers: BreakerStates(initial),
            pcc,
            terminal,
            unknowns,
            unknown_pos,
            factorizations: Vec::new(),
        };
        model.factorizations = (0..1usize << model.breaker_names.len())
            .map(|mask| model.factorize(mask))
            .collect();
        Ok(model)
    }

    /// Full nodal admittance matrix (including closed loads) for a breaker mask.
    pub(crate) fn admittance(&self, mask: usize) -> DMatrix<Complex64> {
        let n = self.nodes.len();
        let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for br in &self.branches {
            let (ff, ft, tf, tt) = br.stamps();
            let (f, t) = (br.from.0, br.to.0);
            y[(f, f)] += ff;
            y[(f, t)] += ft;
            y[(t, f)] += tf;
            y[(t, t)] += tt;
        }
        for load in &self.loads {
            if self.load_connected(load, mask) {
                y[(load.bus.0, load.bus.0)] += load.impedance.inv();
            }
        }
        y
    }

    pub(crate) fn load_connected(&self, load: &ImpedanceLoad, mask: usize) -> bool {
        load.breaker.is_none_or(|b| mask & (1 << b) != 0)
    }

    fn factorize(&self, mask: usize) -> Option<Reduced> {
        let m = self.unknowns.len();
        if m == 0 {
            return None;
        }
        let y = self.admittance(mask);
        let scale = y.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let yuu = DMatrix::from_fn(m, m, |r, c| y[(self.unknowns[r], self.unknowns[c])]);
        let lu = yuu.lu();
        let u = lu.u();
        let singular = (0..m).any(|i| {
            let pivot = u[(i, i)].norm();
            pivot.is_nan() || pivot <= SINGULAR_PIVOT * scale
        });
        if singular {
            None
        } else {
            Some(Reduced { lu })
        }
    }

    pub fn base(&self) -> &PerUnitBase {
        &self.base
    }

    /// Number of declared buses (the converter terminal node is not a bus).
    pub fn bus_count(&self) -> usize {
        self.bus_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn bus_id(&self, name: &str) -> Option<BusId> {
        self.nodes.iter().position(|n| n.name == name).map(BusId)
    }

    pub fn bus_name(&self, bus: BusId) -> &str {
        &self.nodes[bus.0].name
    }

    pub fn source_bus(&self) -> BusId {
        self.source
    }

    pub fn pcc_bus(&self) -> Option<BusId> {
        self.pcc
    }

    /// Node where the electrolyzer current is drawn.
    pub fn converter_terminal(&self) -> Option<BusId> {
        self.terminal
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn loads(&self) -> &[ImpedanceLoad] {
        &self.loads
    }

    pub fn breaker_names(&self) -> &[String] {
        &self.breaker_names
    }

    pub fn breaker_index(&self, name: &str) -> Option<usize> {
        self.breaker_names.iter().position(|b| b == name)
    }

    pub fn initial_breakers(&self) -> BreakerStates {
        self.initial_breakers.clone()
    }
}

fn make_branch(
    name: &str,
    from: BusId,
    to: BusId,
    r: f64,
    x: f64,
    tap: f64,
    kind: BranchKind,
) -> Result<Branch> {
    let z = Complex64::new(r, x);
    ensure(r.is_finite() && x.is_finite() && z.norm() > 0.0, || {
        format!("branch '{name}' needs a nonzero finite series impedance")
    })?;
    ensure(tap > 0.0 && tap.is_finite(), || {
        format!("branch '{name}' tap ratio must be > 0 (got {tap})")
    })?;
    Ok(Branch {
        name: name.to_owned(),
        from,
        to,
        series_impedance: z,
        tap_ratio: tap,
        kind,
    })
}

fn check_zones(branch: &Branch, v_from: f64, v_to: f64) -> Result<()> {
    match branch.kind {
        BranchKind::Line => {
            if !zones_match(v_from, v_to) {
                return Err(Error::Unit(format!(
                    "line '{}' joins zones with different base voltages ({v_from} V, {v_to} V)",
                    branch.name
                )));
            }
        }
        BranchKind::Transformer {
            v_from: rated_from,
            v_to: rated_to,
        } => {
            if !zones_match(v_from, rated_from) || !zones_match(v_to, rated_to) {
                return Err(Error::Unit(format!(
                    "transformer '{}' rated {rated_from} V/{rated_to} V joins zones at {v_from} V/{v_to} V",
                    branch.name
                )));
            }
        }
    }
    Ok(())
}

fn load_impedance(spec: &LoadSpec, s_base: f64) -> Result<Complex64> {
    let z = match spec.impedance {
        LoadImpedance::Impedance { r, x } => Complex64::new(r, x),
        LoadImpedance::Power { p, q } => {
            // S = |V|^2 / conj(Z) at |V| = 1 pu.
            let s = Complex64::new(p, q) / s_base;
            ensure(
                s.norm() > 0.0 && s.re.is_finite() && s.im.is_finite(),
                || format!("load '{}' needs nonzero finite power", spec.name),
            )?;
            s.conj().inv()
        }
    };
    ensure(
        z.re > 0.0 && z.im >= 0.0 && z.re.is_finite() && z.im.is_finite(),
        || {
            format!(
                "load '{}' must be passive RL (r > 0, x >= 0); got {} + j{}",
                spec.name, z.re, z.im
            )
        },
    )?;
    Ok(z)
}

fn check_connected(nodes: &[Node], source: BusId, branches: &[Branch]) -> Result<()> {
    let mut adj = vec![Vec::new(); nodes.len()];
    for br in branches {
        adj[br.from.0].push(br.to.0);
        adj[br.to.0].push(br.from.0);
    }
    let mut seen = vec![false; nodes.len()];
    let mut queue = VecDeque::from([source.0]);
    seen[source.0] = true;
    while let Some(n) = queue.pop_front() {
        for &m in &adj[n] {
            if !seen[m] {
                seen[m] = true;
                queue.push_back(m);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(Error::Topology(format!(
            "bus '{}' is not reachable from the source",
            nodes[i].name
        ))),
        None => Ok(()),
    }
}
