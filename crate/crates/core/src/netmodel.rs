//! Network descriptions, nodal matrices and Kron reduction.
//!
//! A [`NetworkSpec`] is the raw grid: buses tagged as inverter, load or
//! virtual (zero-injection) nodes, RL lines in per-unit and passive load
//! impedances. The pipeline reduces it to a [`ReducedNetwork`], the
//! inverter-only Laplacian that drives every certification step.
//!
//! Two Laplacians are used throughout:
//!
//! * the reactance Laplacian `∇ᵀ X⁻¹ ∇` (edge weights `1/x`), which is the
//!   scaled matrix `(1 + ρ²)·B` of a network with uniform R/X ratio ρ, and
//! * the susceptance matrix `B = -Im(Y)` (edge weights `x / (r² + x²)`).

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::PI;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default nominal angular frequency, rad/s.
pub const DEFAULT_OMEGA0: f64 = 100.0 * PI;
/// Default power-measurement filter time constant, s.
pub const DEFAULT_TAU: f64 = 1.0 / (10.0 * PI);
/// Default relative spread tolerated when asserting a uniform R/X ratio.
pub const DEFAULT_RHO_TOLERANCE: f64 = 0.01;

/// Filter time constant and nominal frequency shared by every model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConstants {
    pub tau: f64,
    pub omega0: f64,
}

impl Default for TimeConstants {
    fn default() -> Self {
        TimeConstants {
            tau: DEFAULT_TAU,
            omega0: DEFAULT_OMEGA0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Inverter,
    Load,
    Virtual,
}

impl BusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BusKind::Inverter => "inverter",
            BusKind::Load => "load",
            BusKind::Virtual => "virtual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: String,
    pub kind: BusKind,
}

/// A series RL line, impedances in p.u. (`x = ω0·L`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub from: String,
    pub to: String,
    pub r: f64,
    pub x: f64,
}

impl Line {
    pub fn rho(&self) -> f64 {
        self.r / self.x
    }
}

/// Constant-impedance load to ground, p.u.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadImpedance {
    pub r: f64,
    pub x: f64,
}

impl LoadImpedance {
    pub fn magnitude(&self) -> f64 {
        self.r.hypot(self.x)
    }
}

/// Validated grid description.
///
/// Inverter buses may carry a load in `loads`; such a load sits directly at
/// the inverter terminal. Load buses must carry one, virtual buses never do.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkSpec {
    pub omega0: f64,
    pub tau: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub loads: BTreeMap<String, LoadImpedance>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    omega0: Option<f64>,
    tau: Option<f64>,
    buses: Vec<Bus>,
    #[serde(default)]
    lines: Vec<Line>,
    #[serde(default)]
    loads: BTreeMap<String, LoadImpedance>,
}

/// Parses and validates a JSON network document.
pub fn parse_network(document: &str) -> Result<NetworkSpec> {
    let doc: NetworkDocument =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    let net = NetworkSpec {
        omega0: doc.omega0.unwrap_or(DEFAULT_OMEGA0),
        tau: doc.tau.unwrap_or(DEFAULT_TAU),
        buses: doc.buses,
        lines: doc.lines,
        loads: doc.loads,
    };
    net.validate()?;
    Ok(net)
}

impl NetworkSpec {
    pub fn new(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        loads: BTreeMap<String, LoadImpedance>,
    ) -> Result<Self> {
        let net = NetworkSpec {
            omega0: DEFAULT_OMEGA0,
            tau: DEFAULT_TAU,
            buses,
            lines,
            loads,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn constants(&self) -> TimeConstants {
        TimeConstants {
            tau: self.tau,
            omega0: self.omega0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    /// Checks every structural invariant of the description.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("omega0", self.omega0), ("tau", self.tau)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Schema(format!("{name} must be positive, got {value}")));
            }
        }
        let index = self.bus_index();
        if index.len() != self.buses.len() {
            let mut seen = HashMap::new();
            for bus in &self.buses {
                if seen.insert(bus.id.as_str(), ()).is_some() {
                    return Err(Error::DuplicateBus(bus.id.clone()));
                }
            }
        }
        for (i, line) in self.lines.iter().enumerate() {
            for end in [&line.from, &line.to] {
                if !index.contains_key(end.as_str()) {
                    return Err(Error::DanglingEndpoint {
                        line: i,
                        bus: end.clone(),
                    });
                }
            }
            if line.from == line.to {
                return Err(Error::SelfLoop {
                    line: i,
                    bus: line.from.clone(),
                });
            }
            if !(line.x.is_finite() && line.x > 0.0) {
                return Err(Error::NonPositiveReactance { line: i, x: line.x });
            }
            if !(line.r.is_finite() && line.r >= 0.0) {
                return Err(Error::NegativeResistance { line: i, r: line.r });
            }
        }
        for bus in &self.buses {
            match (bus.kind, self.loads.contains_key(&bus.id)) {
                (BusKind::Load, false) => return Err(Error::MissingLoad(bus.id.clone())),
                (BusKind::Virtual, true) => {
                    return Err(Error::UnexpectedLoad {
                        bus: bus.id.clone(),
                        kind: bus.kind.as_str(),
                    })
                }
                _ => {}
            }
        }
        for (id, load) in &self.loads {
            if !index.contains_key(id.as_str()) {
                return Err(Error::InvalidLoad {
                    bus: id.clone(),
                    reason: "no such bus".into(),
                });
            }
            if !(load.x.is_finite() && load.x > 0.0 && load.r.is_finite() && load.r >= 0.0) {
                return Err(Error::InvalidLoad {
                    bus: id.clone(),
                    reason: format!("need r >= 0 and x > 0, got r = {}, x = {}", load.r, load.x),
                });
            }
        }
        let unreachable = self.unreachable_buses(&index);
        if !unreachable.is_empty() {
            return Err(Error::Disconnected(unreachable));
        }
        Ok(())
    }

    fn unreachable_buses(&self, index: &HashMap<&str, usize>) -> Vec<String> {
        if self.buses.is_empty() {
            return Vec::new();
        }
        let mut adjacency = vec![Vec::new(); self.buses.len()];
        for line in &self.lines {
            let (a, b) = (index[line.from.as_str()], index[line.to.as_str()]);
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut seen = vec![false; self.buses.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &w in &adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        self.buses
            .iter()
            .zip(seen)
            .filter(|(_, s)| !s)
            .map(|(b, _)| b.id.clone())
            .collect()
    }

    pub fn bus_index(&self) -> HashMap<&str, usize> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.as_str(), i))
            .collect()
    }

    pub fn indices_of(&self, kind: BusKind) -> Vec<usize> {
        self.buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn inverter_ids(&self) -> Vec<String> {
        self.buses
            .iter()
            .filter(|b| b.kind == BusKind::Inverter)
            .map(|b| b.id.clone())
            .collect()
    }

    pub fn inverter_count(&self) -> usize {
        self.indices_of(BusKind::Inverter).len()
    }

    pub fn line_rhos(&self) -> Vec<f64> {
        self.lines.iter().map(Line::rho).collect()
    }

    /// Same network with line resistances set to `rho_j · x_j`.
    pub fn with_line_rhos(&self, rhos: &[f64]) -> NetworkSpec {
        assert_eq!(rhos.len(), self.lines.len(), "one ratio per line");
        let mut net = self.clone();
        for (line, &rho) in net.lines.iter_mut().zip(rhos) {
            line.r = rho * line.x;
        }
        net
    }

    pub fn with_uniform_rho(&self, rho: f64) -> NetworkSpec {
        self.with_line_rhos(&vec![rho; self.lines.len()])
    }

    /// Same network with every load impedance multiplied by `factor`.
    pub fn with_scaled_loads(&self, factor: f64) -> NetworkSpec {
        let mut net = self.clone();
        for load in net.loads.values_mut() {
            load.r *= factor;
            load.x *= factor;
        }
        net
    }
}

/// Signed node-by-line incidence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    pub entries: DMatrix<f64>,
    pub bus_ids: Vec<String>,
    /// `(from, to)` per column.
    pub line_ends: Vec<(String, String)>,
}

/// Column `j` holds `-1` at the from-bus of line `j` and `+1` at its to-bus.
pub fn incidence(net: &NetworkSpec) -> IncidenceMatrix {
    let index = net.bus_index();
    let mut entries = DMatrix::zeros(net.buses.len(), net.lines.len());
    for (j, line) in net.lines.iter().enumerate() {
        entries[(index[line.from.as_str()], j)] = -1.0;
        entries[(index[line.to.as_str()], j)] = 1.0;
    }
    IncidenceMatrix {
        entries,
        bus_ids: net.buses.iter().map(|b| b.id.clone()).collect(),
        line_ends: net
            .lines
            .iter()
            .map(|l| (l.from.clone(), l.to.clone()))
            .collect(),
    }
}

fn weighted_laplacian(net: &NetworkSpec, weight: impl Fn(&Line) -> f64) -> DMatrix<f64> {
    let index = net.bus_index();
    let n = net.buses.len();
    let mut lap = DMatrix::zeros(n, n);
    for line in &net.lines {
        let (a, b) = (index[line.from.as_str()], index[line.to.as_str()]);
        let w = weight(line);
        lap[(a, a)] += w;
        lap[(b, b)] += w;
        lap[(a, b)] -= w;
        lap[(b, a)] -= w;
    }
    lap
}

/// Nodal susceptance matrix `B_a = -Im(Y)` over all buses.
///
/// Parallel lines add. For lossless lines this is `∇ᵀ X⁻¹ ∇`.
pub fn susceptance(net: &NetworkSpec) -> DMatrix<f64> {
    weighted_laplacian(net, |l| l.x / (l.r * l.r + l.x * l.x))
}

/// Reactance Laplacian `∇ᵀ X⁻¹ ∇` over all buses, independent of resistances.
pub fn reactance_laplacian(net: &NetworkSpec) -> DMatrix<f64> {
    weighted_laplacian(net, |l| 1.0 / l.x)
}

/// Complex nodal admittance matrix `Y` (lines only, no load shunts).
pub fn admittance(net: &NetworkSpec) -> DMatrix<Complex64> {
    let index = net.bus_index();
    let n = net.buses.len();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for line in &net.lines {
        let (a, b) = (index[line.from.as_str()], index[line.to.as_str()]);
        let w = Complex64::new(line.r, line.x).inv();
        y[(a, a)] += w;
        y[(b, b)] += w;
        y[(a, b)] -= w;
        y[(b, a)] -= w;
    }
    y
}

/// Outcome of the uniform R/X test.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoCheck {
    Uniform(f64),
    NonUniform { ratios: Vec<f64>, spread: f64 },
}

impl RhoCheck {
    pub fn uniform(&self) -> Option<f64> {
        match self {
            RhoCheck::Uniform(rho) => Some(*rho),
            RhoCheck::NonUniform { .. } => None,
        }
    }
}

/// Relative spread of the line R/X ratios, `(max - min) / mean`.
pub fn rho_spread(net: &NetworkSpec) -> f64 {
    let ratios = net.line_rhos();
    if ratios.is_empty() {
        return 0.0;
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    if hi - lo == 0.0 {
        0.0
    } else {
        (hi - lo) / mean.abs().max(f64::MIN_POSITIVE)
    }
}

/// Returns the uniform ratio (the mean) when the relative spread is within `tol`.
pub fn check_homogeneous_rho(net: &NetworkSpec, tol: f64) -> RhoCheck {
    let ratios = net.line_rhos();
    if ratios.is_empty() {
        return RhoCheck::Uniform(0.0);
    }
    let spread = rho_spread(net);
    if spread <= tol {
        RhoCheck::Uniform(ratios.iter().sum::<f64>() / ratios.len() as f64)
    } else {
        RhoCheck::NonUniform { ratios, spread }
    }
}

fn schur_complement<T: ComplexField + Copy>(
    matrix: &DMatrix<T>,
    keep: &[usize],
    eliminate: &[usize],
) -> Option<DMatrix<T>> {
    let kk = matrix.select_rows(keep).select_columns(keep);
    if eliminate.is_empty() {
        return Some(kk);
    }
    let ke = matrix.select_rows(keep).select_columns(eliminate);
    let ek = matrix.select_rows(eliminate).select_columns(keep);
    let ee = matrix.select_rows(eliminate).select_columns(eliminate);
    let solved = ee.lu().solve(&ek)?;
    if solved.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(kk - ke * solved)
}

/// Eliminated nodes whose component (inside the eliminated set) never
/// touches a kept node.
fn isolated_eliminated<T: ComplexField + Copy>(
    matrix: &DMatrix<T>,
    keep: &[usize],
    eliminate: &[usize],
) -> Vec<usize> {
    let n = matrix.nrows();
    let mut kept = vec![false; n];
    for &k in keep {
        kept[k] = true;
    }
    let mut reaches = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &e in eliminate {
        if keep.iter().any(|&k| matrix[(e, k)] != T::zero()) {
            reaches[e] = true;
            queue.push_back(e);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &w in eliminate {
            if !reaches[w] && w != u && matrix[(u, w)] != T::zero() {
                reaches[w] = true;
                queue.push_back(w);
            }
        }
    }
    eliminate.iter().copied().filter(|&e| !reaches[e]).collect()
}

fn complement_of(n: usize, keep: &[usize]) -> Vec<usize> {
    let mut kept = vec![false; n];
    for &k in keep {
        kept[k] = true;
    }
    (0..n).filter(|&i| !kept[i]).collect()
}

/// Schur complement `B_kk - B_ke B_ee⁻¹ B_ek` keeping the rows/columns in
/// `keep` (in that order).
///
/// The error names eliminated indices (as `#i`) that have no path to a
/// kept node.
pub fn kron_reduce(matrix: &DMatrix<f64>, keep: &[usize]) -> Result<DMatrix<f64>> {
    kron_reduce_labeled(matrix, keep, None)
}

fn kron_reduce_labeled<T: ComplexField + Copy>(
    matrix: &DMatrix<T>,
    keep: &[usize],
    labels: Option<&[String]>,
) -> Result<DMatrix<T>> {
    let eliminate = complement_of(matrix.nrows(), keep);
    let name = |i: usize| match labels {
        Some(l) => l[i].clone(),
        None => format!("#{i}"),
    };
    let isolated = isolated_eliminated(matrix, keep, &eliminate);
    if !isolated.is_empty() {
        return Err(Error::SingularEliminatedBlock(
            isolated.into_iter().map(name).collect(),
        ));
    }
    schur_complement(matrix, keep, &eliminate)
        .ok_or_else(|| Error::SingularEliminatedBlock(eliminate.into_iter().map(name).collect()))
}

/// Inverter-only reduced network.
///
/// `scaled` is the Kron-reduced reactance Laplacian (`(1 + ρ²)·B` for a
/// uniform ratio); it depends on line reactances only. `susceptance` is the
/// Kron-reduced `-Im(Y)`. `rho` is set when the line ratios are uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedNetwork {
    pub inverter_ids: Vec<String>,
    pub susceptance: DMatrix<f64>,
    pub scaled: DMatrix<f64>,
    pub rho: Option<f64>,
}

impl ReducedNetwork {
    /// Builds a reduced network directly from its scaled matrix.
    pub fn from_scaled(inverter_ids: Vec<String>, scaled: DMatrix<f64>, rho: f64) -> Self {
        assert_eq!(inverter_ids.len(), scaled.nrows());
        let susceptance = &scaled / (1.0 + rho * rho);
        ReducedNetwork {
            inverter_ids,
            susceptance,
            scaled,
            rho: Some(rho),
        }
    }

    pub fn len(&self) -> usize {
        self.inverter_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inverter_ids.is_empty()
    }

    pub fn require_rho(&self) -> Result<f64> {
        self.rho.ok_or(Error::RhoUndefined)
    }
}

/// Reduces any valid network onto its inverter buses.
///
/// Load and virtual buses are Kron-eliminated. A load sitting at an inverter
/// terminal is moved to an artificial node joined by a zero-impedance tie;
/// that node merges back into the inverter row exactly, so it leaves the
/// reduced matrices untouched. Load impedances never enter the result.
pub fn reduce_network(net: &NetworkSpec) -> Result<ReducedNetwork> {
    let keep = net.indices_of(BusKind::Inverter);
    if keep.is_empty() {
        return Err(Error::NoInverters);
    }
    let labels: Vec<String> = net.buses.iter().map(|b| b.id.clone()).collect();
    let reduce = |m: DMatrix<f64>| -> Result<DMatrix<f64>> {
        // elimination leaves cancellation residue where the true entry is zero
        let floor = 1e-12 * m.amax();
        let r = kron_reduce_labeled(&m, &keep, Some(&labels))?;
        Ok(symmetrize(r.map(|x| if x.abs() <= floor { 0.0 } else { x })))
    };
    Ok(ReducedNetwork {
        inverter_ids: net.inverter_ids(),
        susceptance: reduce(susceptance(net))?,
        scaled: reduce(reactance_laplacian(net))?,
        rho: check_homogeneous_rho(net, DEFAULT_RHO_TOLERANCE).uniform(),
    })
}

/// [`reduce_network`] for a network whose R/X ratio is uniform within `tol`.
pub fn eliminate_loads(net: &NetworkSpec, tol: f64) -> Result<ReducedNetwork> {
    let rho = match check_homogeneous_rho(net, tol) {
        RhoCheck::Uniform(rho) => rho,
        RhoCheck::NonUniform { ratios, spread } => {
            return Err(Error::NonUniformRho { spread, ratios })
        }
    };
    let mut reduced = reduce_network(net)?;
    reduced.rho = Some(rho);
    Ok(reduced)
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Replaces all virtual buses by equivalent lines between the remaining
/// buses, using Kron reduction of the complex admittance matrix.
///
/// For a uniform R/X ratio the equivalent lines keep that ratio and the
/// line dynamics are reproduced exactly.
pub fn reduce_virtual_buses(net: &NetworkSpec) -> Result<NetworkSpec> {
    let keep: Vec<usize> = (0..net.buses.len())
        .filter(|&i| net.buses[i].kind != BusKind::Virtual)
        .collect();
    if keep.len() == net.buses.len() {
        return Ok(net.clone());
    }
    let labels: Vec<String> = net.buses.iter().map(|b| b.id.clone()).collect();
    let reduced = kron_reduce_labeled(&admittance(net), &keep, Some(&labels))?;
    let scale = reduced.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut lines = Vec::new();
    for a in 0..keep.len() {
        for b in a + 1..keep.len() {
            let y = -reduced[(a, b)];
            if y.norm() <= 1e-12 * scale {
                continue;
            }
            let z = y.inv();
            let line = Line {
                from: labels[keep[a]].clone(),
                to: labels[keep[b]].clone(),
                r: if z.re.abs() <= 1e-12 * z.norm() { 0.0 } else { z.re },
                x: z.im,
            };
            lines.push(line);
        }
    }
    let out = NetworkSpec {
        omega0: net.omega0,
        tau: net.tau,
        buses: keep.iter().map(|&i| net.buses[i].clone()).collect(),
        lines,
        loads: net.loads.clone(),
    };
    out.validate()?;
    Ok(out)
}

/// Inverter-only network whose lines reproduce `rn.scaled` at a uniform
/// ratio `rho`. Couplings below `1e-12` of the largest entry are dropped.
pub fn equivalent_network(rn: &ReducedNetwork, rho: f64, consts: TimeConstants) -> Result<NetworkSpec> {
    let scale = rn.scaled.amax();
    let mut lines = Vec::new();
    for i in 0..rn.len() {
        for j in i + 1..rn.len() {
            let w = -rn.scaled[(i, j)];
            if w > 1e-12 * scale {
                lines.push(Line {
                    from: rn.inverter_ids[i].clone(),
                    to: rn.inverter_ids[j].clone(),
                    r: rho / w,
                    x: 1.0 / w,
                });
            }
        }
    }
    let net = NetworkSpec {
        omega0: consts.omega0,
        tau: consts.tau,
        buses: rn
            .inverter_ids
            .iter()
            .map(|id| Bus {
                id: id.clone(),
                kind: BusKind::Inverter,
            })
            .collect(),
        lines,
        loads: BTreeMap::new(),
    };
    net.validate()?;
    Ok(net)
}
