//! Linearized state matrices and stability verdicts.
//!
//! Two models are assembled here:
//!
//! * the full line-level model: angle, frequency and voltage per inverter,
//!   dq currents per line and per load;
//! * the homogeneous nodal model of order `5v` built from a
//!   [`ReducedNetwork`] with a uniform R/X ratio.
//!
//! Both are stored in dimensional time so eigenvalues are in rad/s.
//!
//! Load buses without an inverter have no voltage state. Their voltage is
//! the algebraic solution of the differentiated current balance at the bus,
//! which keeps the model an ODE. Each such bus adds a pair of conserved
//! current-balance combinations, and these show up as exact zero modes.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::netmodel::{BusKind, NetworkSpec, ReducedNetwork, TimeConstants};

/// Absolute real-part band (rad/s) treated as marginal.
pub const DEFAULT_MARGIN: f64 = 1e-8;
/// Zero-mode radius relative to ω0.
pub const ZERO_MODE_RELATIVE: f64 = 1e-6;

/// Frequency (`m`) and voltage (`n`) droop gains as fractions.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct DroopConfig {
    pub m: Vec<f64>,
    pub n: Vec<f64>,
}

impl DroopConfig {
    pub fn new(m: Vec<f64>, n: Vec<f64>) -> Result<Self> {
        if m.len() != n.len() {
            return Err(Error::DimensionMismatch {
                expected: m.len(),
                got: n.len(),
            });
        }
        if let Some(bad) = m.iter().chain(&n).find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::InvalidDroop(format!("gains must be positive, got {bad}")));
        }
        Ok(DroopConfig { m, n })
    }

    /// Gains with a common ratio `k = m_i / n_i`.
    pub fn with_ratio(m: Vec<f64>, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidDroop(format!("ratio k must be positive, got {k}")));
        }
        let n = m.iter().map(|mi| mi / k).collect();
        DroopConfig::new(m, n)
    }

    /// `v` identical inverters.
    pub fn equal(v: usize, m: f64, k: f64) -> Result<Self> {
        DroopConfig::with_ratio(vec![m; v], k)
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// The common ratio when every `m_i / n_i` agrees with the first to 1e-9.
    pub fn ratio(&self) -> Option<f64> {
        let k = self.m.first()? / self.n.first()?;
        self.m
            .iter()
            .zip(&self.n)
            .all(|(m, n)| ((m / n) - k).abs() / k < 1e-9)
            .then_some(k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum StateLabel {
    Theta(String),
    Omega(String),
    Voltage(String),
    /// Nodal d-axis current injection (homogeneous model).
    NodeId(String),
    NodeIq(String),
    LineId(String),
    LineIq(String),
    LoadId(String),
    LoadIq(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    Full,
    Homogeneous,
}

#[derive(Debug, Clone)]
pub struct StateMatrix {
    pub a: DMatrix<f64>,
    pub labels: Vec<StateLabel>,
    pub kind: ModelKind,
    pub omega0: f64,
}

impl StateMatrix {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

fn line_label(net: &NetworkSpec, j: usize) -> String {
    let l = &net.lines[j];
    format!("{}-{}#{}", l.from, l.to, j)
}

/// Assembles the full linearized model of a network without virtual buses.
///
/// Per inverter: `θ' = ω`, `τω' = -ω - ω0·m·P`, `τV' = -V - n·Q` where `P`
/// and `Q = -I_q` are the d and q current injections (lines plus a load at
/// the terminal). Per line `x/ω0 · I_d' = ΔV - r·I_d + x·I_q` and
/// `x/ω0 · I_q' = Δθ - r·I_q - x·I_d`, per load the same with the bus
/// voltage against ground.
pub fn assemble_full(net: &NetworkSpec, droops: &DroopConfig) -> Result<StateMatrix> {
    let virtual_buses: Vec<String> = net
        .buses
        .iter()
        .filter(|b| b.kind == BusKind::Virtual)
        .map(|b| b.id.clone())
        .collect();
    if !virtual_buses.is_empty() {
        return Err(Error::VirtualBusPresent(virtual_buses));
    }
    let inverters = net.indices_of(BusKind::Inverter);
    let v = inverters.len();
    if v == 0 {
        return Err(Error::NoInverters);
    }
    if droops.len() != v {
        return Err(Error::DimensionMismatch {
            expected: v,
            got: droops.len(),
        });
    }
    let (omega0, tau) = (net.omega0, net.tau);
    let nb = net.buses.len();
    let ne = net.lines.len();
    let load_ids: Vec<&String> = net.loads.keys().collect();
    let nl = load_ids.len();
    let dim = 3 * v + 2 * ne + 2 * nl;

    let o_theta = 0;
    let o_omega = v;
    let o_volt = 2 * v;
    let o_id = 3 * v;
    let o_iq = 3 * v + ne;
    let o_jd = 3 * v + 2 * ne;
    let o_jq = 3 * v + 2 * ne + nl;

    let index = net.bus_index();
    let inverter_slot: HashMap<usize, usize> =
        inverters.iter().enumerate().map(|(s, &b)| (b, s)).collect();
    let load_slot: HashMap<usize, usize> = load_ids
        .iter()
        .enumerate()
        .map(|(s, id)| (index[id.as_str()], s))
        .collect();
    let load_imp: Vec<_> = load_ids.iter().map(|id| net.loads[*id]).collect();

    // D[bus, line]: +1 at from (current leaves), -1 at to
    let mut ends = Vec::with_capacity(ne);
    for line in &net.lines {
        ends.push((index[line.from.as_str()], index[line.to.as_str()]));
    }
    let rho: Vec<f64> = net.lines.iter().map(|l| l.rho()).collect();
    let inv_x: Vec<f64> = net.lines.iter().map(|l| 1.0 / l.x).collect();

    let passive: Vec<usize> = net.indices_of(BusKind::Load);
    let passive_slot: HashMap<usize, usize> =
        passive.iter().enumerate().map(|(s, &b)| (b, s)).collect();

    // Node value (V on the d axis, θ on the q axis) as a row over the states.
    let node_map = |d_axis: bool| -> Result<DMatrix<f64>> {
        let (o_node, o_cur, o_other, o_j, o_jother, sgn) = if d_axis {
            (o_volt, o_id, o_iq, o_jd, o_jq, 1.0)
        } else {
            (o_theta, o_iq, o_id, o_jq, o_jd, -1.0)
        };
        let mut map = DMatrix::zeros(nb, dim);
        for (&b, &s) in &inverter_slot {
            map[(b, o_node + s)] = 1.0;
        }
        if passive.is_empty() {
            return Ok(map);
        }
        let np = passive.len();
        let mut k = DMatrix::zeros(np, np);
        let mut rhs = DMatrix::zeros(np, dim);
        for (e, &(f, t)) in ends.iter().enumerate() {
            for (node, d) in [(f, 1.0), (t, -1.0)] {
                let Some(&p) = passive_slot.get(&node) else { continue };
                // D_L X^-1 D^T U, split over passive and inverter ends
                for (other, d_other) in [(f, 1.0), (t, -1.0)] {
                    let w = d * d_other * inv_x[e];
                    if let Some(&q) = passive_slot.get(&other) {
                        k[(p, q)] += w;
                    } else {
                        rhs[(p, o_node + inverter_slot[&other])] -= w;
                    }
                }
                rhs[(p, o_cur + e)] += d * rho[e];
                rhs[(p, o_other + e)] -= sgn * d;
            }
        }
        for (&b, &p) in &passive_slot {
            let s = load_slot[&b];
            let z = load_imp[s];
            k[(p, p)] += 1.0 / z.x;
            rhs[(p, o_j + s)] += z.r / z.x;
            rhs[(p, o_jother + s)] -= sgn;
        }
        let sol = k
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SingularEliminatedBlock(
                passive.iter().map(|&b| net.buses[b].id.clone()).collect(),
            ))?;
        for (p, &b) in passive.iter().enumerate() {
            map.set_row(b, &sol.row(p));
        }
        Ok(map)
    };
    let volt = node_map(true)?;
    let theta = node_map(false)?;

    let mut a = DMatrix::zeros(dim, dim);
    for s in 0..v {
        a[(o_theta + s, o_omega + s)] = 1.0;
        a[(o_omega + s, o_omega + s)] = -1.0 / tau;
        a[(o_volt + s, o_volt + s)] = -1.0 / tau;
    }
    let p_gain = |s: usize| -omega0 * droops.m[s] / tau;
    let q_gain = |s: usize| droops.n[s] / tau;
    for (e, &(f, t)) in ends.iter().enumerate() {
        for (node, d) in [(f, 1.0), (t, -1.0)] {
            if let Some(&s) = inverter_slot.get(&node) {
                a[(o_omega + s, o_id + e)] += d * p_gain(s);
                a[(o_volt + s, o_iq + e)] += d * q_gain(s);
            }
        }
    }
    for (&b, &l) in &load_slot {
        if let Some(&s) = inverter_slot.get(&b) {
            a[(o_omega + s, o_jd + l)] += p_gain(s);
            a[(o_volt + s, o_jq + l)] += q_gain(s);
        }
    }
    for (e, &(f, t)) in ends.iter().enumerate() {
        let w = omega0 * inv_x[e];
        let drive_d = (volt.row(f) - volt.row(t)) * w;
        let drive_q = (theta.row(f) - theta.row(t)) * w;
        let mut row_d = a.row_mut(o_id + e);
        row_d += drive_d;
        let mut row_q = a.row_mut(o_iq + e);
        row_q += drive_q;
        a[(o_id + e, o_id + e)] -= omega0 * rho[e];
        a[(o_id + e, o_iq + e)] += omega0;
        a[(o_iq + e, o_iq + e)] -= omega0 * rho[e];
        a[(o_iq + e, o_id + e)] -= omega0;
    }
    for (&b, &l) in &load_slot {
        let z = load_imp[l];
        let w = omega0 / z.x;
        let drive_d = volt.row(b) * w;
        let drive_q = theta.row(b) * w;
        let mut row_d = a.row_mut(o_jd + l);
        row_d += drive_d;
        let mut row_q = a.row_mut(o_jq + l);
        row_q += drive_q;
        a[(o_jd + l, o_jd + l)] -= omega0 * z.r / z.x;
        a[(o_jd + l, o_jq + l)] += omega0;
        a[(o_jq + l, o_jq + l)] -= omega0 * z.r / z.x;
        a[(o_jq + l, o_jd + l)] -= omega0;
    }

    let inv_ids: Vec<String> = inverters.iter().map(|&b| net.buses[b].id.clone()).collect();
    let mut labels = Vec::with_capacity(dim);
    labels.extend(inv_ids.iter().cloned().map(StateLabel::Theta));
    labels.extend(inv_ids.iter().cloned().map(StateLabel::Omega));
    labels.extend(inv_ids.iter().cloned().map(StateLabel::Voltage));
    labels.extend((0..ne).map(|j| StateLabel::LineId(line_label(net, j))));
    labels.extend((0..ne).map(|j| StateLabel::LineIq(line_label(net, j))));
    labels.extend(load_ids.iter().map(|id| StateLabel::LoadId((*id).clone())));
    labels.extend(load_ids.iter().map(|id| StateLabel::LoadIq((*id).clone())));

    Ok(StateMatrix {
        a,
        labels,
        kind: ModelKind::Full,
        omega0,
    })
}

/// Assembles the `5v` nodal model of an unloaded network with uniform ρ:
///
/// ```text
/// θ'  = ω
/// ω'  = (-ω - ω0·M·I_d) / τ
/// V'  = (-V + N·I_q) / τ
/// I_d' = ω0·(𝓑·V - ρ·I_d + I_q)
/// I_q' = ω0·(𝓑·θ - I_d - ρ·I_q)
/// ```
pub fn assemble_homogeneous(
    rn: &ReducedNetwork,
    droops: &DroopConfig,
    consts: TimeConstants,
) -> Result<StateMatrix> {
    let TimeConstants { tau, omega0 } = consts;
    let v = rn.len();
    if v == 0 {
        return Err(Error::NoInverters);
    }
    if droops.len() != v {
        return Err(Error::DimensionMismatch {
            expected: v,
            got: droops.len(),
        });
    }
    let rho = rn.require_rho()?;
    let mut a = DMatrix::zeros(5 * v, 5 * v);
    let (th, om, vo, id, iq) = (0, v, 2 * v, 3 * v, 4 * v);
    for i in 0..v {
        a[(th + i, om + i)] = 1.0;
        a[(om + i, om + i)] = -1.0 / tau;
        a[(om + i, id + i)] = -omega0 * droops.m[i] / tau;
        a[(vo + i, vo + i)] = -1.0 / tau;
        a[(vo + i, iq + i)] = droops.n[i] / tau;
        a[(id + i, id + i)] = -omega0 * rho;
        a[(id + i, iq + i)] = omega0;
        a[(iq + i, iq + i)] = -omega0 * rho;
        a[(iq + i, id + i)] = -omega0;
        for j in 0..v {
            a[(id + i, vo + j)] = omega0 * rn.scaled[(i, j)];
            a[(iq + i, th + j)] = omega0 * rn.scaled[(i, j)];
        }
    }
    let ids = &rn.inverter_ids;
    let mut labels = Vec::with_capacity(5 * v);
    labels.extend(ids.iter().cloned().map(StateLabel::Theta));
    labels.extend(ids.iter().cloned().map(StateLabel::Omega));
    labels.extend(ids.iter().cloned().map(StateLabel::Voltage));
    labels.extend(ids.iter().cloned().map(StateLabel::NodeId));
    labels.extend(ids.iter().cloned().map(StateLabel::NodeIq));
    Ok(StateMatrix {
        a,
        labels,
        kind: ModelKind::Homogeneous,
        omega0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Rightmost eigenvalue outside the zero-mode disc; ties prefer the
    /// upper half plane.
    pub dominant: Option<Complex64>,
    pub zero_modes: usize,
    pub tol_zero: f64,
}

#[derive(Serialize)]
struct SpectrumRow {
    re: f64,
    im: f64,
    is_zero_mode: bool,
}

impl Spectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<Complex64>, omega0: f64) -> Self {
        linalg::sort_complex(&mut eigenvalues);
        let tol_zero = ZERO_MODE_RELATIVE * omega0;
        let zero_modes = eigenvalues.iter().filter(|z| z.norm() < tol_zero).count();
        let dominant = eigenvalues
            .iter()
            .filter(|z| z.norm() >= tol_zero)
            .copied()
            .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Spectrum {
            eigenvalues,
            dominant,
            zero_modes,
            tol_zero,
        }
    }

    pub fn is_zero_mode(&self, z: Complex64) -> bool {
        z.norm() < self.tol_zero
    }

    pub fn dominant_re(&self) -> f64 {
        self.dominant.map_or(f64::NEG_INFINITY, |z| z.re)
    }

    /// CSV with columns `re,im,is_zero_mode`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        for z in &self.eigenvalues {
            w.serialize(SpectrumRow {
                re: z.re,
                im: z.im,
                is_zero_mode: self.is_zero_mode(*z),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn spectrum(sm: &StateMatrix) -> Result<Spectrum> {
    let eigenvalues = linalg::eigenvalues(&sm.a)?;
    Ok(Spectrum::from_eigenvalues(eigenvalues, sm.omega0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

/// Classifies the dominant mode against an absolute real-part band.
pub fn verdict(s: &Spectrum, margin: f64) -> Verdict {
    match s.dominant {
        None => Verdict::Marginal,
        Some(z) if z.re > margin => Verdict::Unstable,
        Some(z) if z.re.abs() <= margin => Verdict::Marginal,
        Some(_) => Verdict::Stable,
    }
}
