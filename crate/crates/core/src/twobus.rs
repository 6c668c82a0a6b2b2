//! Two-bus equivalents and the critical threshold μ_cr(ρ, k).
//!
//! Every eigenvalue `μ` of the generalized Laplacian maps to a single
//! inverter against an infinite bus whose characteristic polynomial, in the
//! scaled variable `s = λ/ω0`, is
//!
//! ```text
//! k·s·f(s) + g(s)·(k + s)·μ + μ² = 0
//! g(s) = 1 + τ·ω0·s,    f(s) = g(s)²·((ρ + s)² + 1)
//! ```
//!
//! This is degree five in `s`. The threshold μ_cr is the smallest `μ` at
//! which a root crosses into the right half plane. Below it the system is
//! stable; above it stability can return in isolated windows.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::netmodel::TimeConstants;
use crate::parallel;

/// Default absolute bisection tolerance on μ.
pub const DEFAULT_TOL_MU: f64 = 1e-4;
/// Crossings above this μ are ignored.
pub const SCAN_LIMIT: f64 = 1e3;

/// Coefficients `c[0] + c[1]·s + … + c[5]·s⁵` in scaled time `s = λ/ω0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticCoeffs {
    pub c: [f64; 6],
    pub omega0: f64,
}

impl QuinticCoeffs {
    /// Evaluates the polynomial at a dimensional `λ` (rad/s).
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        let s = lambda / self.omega0;
        self.c
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Builds the two-bus characteristic polynomial.
pub fn quintic(mu: f64, rho: f64, k: f64, consts: TimeConstants) -> Result<QuinticCoeffs> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
    }
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be nonnegative, got {mu}")));
    }
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be nonnegative, got {rho}")));
    }
    let t = consts.tau * consts.omega0;
    let g = [1.0, t];
    let line = [rho * rho + 1.0, 2.0 * rho, 1.0];
    let f = poly_mul(&poly_mul(&g, &g), &line);
    let mut c = [0.0; 6];
    for (i, fi) in f.iter().enumerate() {
        c[i + 1] += k * fi;
    }
    for (i, v) in poly_mul(&g, &[k, 1.0]).iter().enumerate() {
        c[i] += mu * v;
    }
    c[0] += mu * mu;
    Ok(QuinticCoeffs {
        c,
        omega0: consts.omega0,
    })
}

/// The five roots in rad/s, from a balanced companion matrix.
pub fn roots(q: &QuinticCoeffs) -> Result<[Complex64; 5]> {
    let lead = q.c[5];
    if lead == 0.0 || !lead.is_finite() {
        return Err(Error::InvalidParameter("leading coefficient must be nonzero".into()));
    }
    let mut companion = DMatrix::zeros(5, 5);
    for i in 1..5 {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..5 {
        companion[(i, 4)] = -q.c[i] / lead;
    }
    let ev = linalg::eigenvalues(&companion)?;
    let mut out = [Complex64::new(0.0, 0.0); 5];
    for (o, z) in out.iter_mut().zip(ev) {
        *o = z * q.omega0;
    }
    linalg::sort_complex(&mut out);
    Ok(out)
}

pub fn max_real_root(mu: f64, rho: f64, k: f64, consts: TimeConstants) -> Result<f64> {
    let r = roots(&quintic(mu, rho, k, consts)?)?;
    Ok(r.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// True when every root lies left of `-margin`.
pub fn two_bus_stable(mu: f64, rho: f64, k: f64, consts: TimeConstants, margin: f64) -> Result<bool> {
    Ok(max_real_root(mu, rho, k, consts)? < -margin)
}

/// Positive `μ` at which some root of the quintic sits on the imaginary axis,
/// ascending.
///
/// With `s = i·y` the quintic is a quadratic in `μ` whose imaginary part is
/// linear, `(1 + τω0·k)·y·μ + Im c(iy) = 0`, so every crossing is a positive
/// real root of a quartic in `y²`.
pub fn axis_crossings(rho: f64, k: f64, consts: TimeConstants) -> Result<Vec<f64>> {
    quintic(0.0, rho, k, consts)?;
    let t = consts.tau * consts.omega0;
    let f = poly_mul(&poly_mul(&[1.0, t], &[1.0, t]), &[rho * rho + 1.0, 2.0 * rho, 1.0]);
    let mut c = vec![0.0];
    c.extend(f.iter().map(|x| k * x));
    let b = poly_mul(&[1.0, t], &[k, 1.0]);
    // split p(iy) into real and imaginary parts, dropping the factor y from
    // the odd ones
    let split = |p: &[f64]| {
        let (mut re, mut im) = (vec![0.0; p.len()], vec![0.0; p.len()]);
        for (j, a) in p.iter().enumerate() {
            let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if j % 2 == 0 {
                re[j] = sign * a;
            } else {
                im[j - 1] = sign * a;
            }
        }
        (re, im)
    };
    let (b_re, b_im) = split(&b);
    let (c_re, c_im) = split(&c);
    let slope = b_im[0];
    // μ(y) = -c_im(y)/slope, substituted into the real part
    let mu_poly: Vec<f64> = c_im.iter().map(|x| -x / slope).collect();
    let h = poly_add(&poly_add(&poly_mul(&mu_poly, &mu_poly), &poly_mul(&b_re, &mu_poly)), &c_re);
    // every part is even in y, so work in z = y²
    let even = |p: &[f64]| p.iter().step_by(2).copied().collect::<Vec<f64>>();
    let mu_z = even(&mu_poly);
    let mut out: Vec<f64> = real_roots(&even(&h))?
        .into_iter()
        .filter(|&z| z > 0.0)
        .map(|z| poly_eval(&mu_z, z))
        .filter(|&mu| mu > 0.0)
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Real roots from the companion matrix, Newton-polished. Near-double roots
/// come back as a pair, which is harmless for the caller.
fn real_roots(p: &[f64]) -> Result<Vec<f64>> {
    let scale = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let deg = match p.iter().rposition(|x| x.abs() > 1e-14 * scale) {
        Some(d) if d > 0 => d,
        _ => return Ok(Vec::new()),
    };
    let mut companion = DMatrix::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -p[i] / p[deg];
    }
    let dp: Vec<f64> = (1..=deg).map(|j| j as f64 * p[j]).collect();
    let mut out = Vec::new();
    for z in linalg::eigenvalues(&companion)? {
        if z.im.abs() > 1e-6 * (1.0 + z.re.abs()) {
            continue;
        }
        let mut y = z.re;
        for _ in 0..8 {
            let d = poly_eval(&dp, y);
            if d == 0.0 {
                break;
            }
            y -= poly_eval(&p[..=deg], y) / d;
        }
        out.push(y);
    }
    Ok(out)
}

/// Critical threshold: the first axis crossing past which the two-bus system
/// is unstable. Crossings where a root only touches the axis are skipped.
///
/// A plain ascending scan can step over a narrow unstable window in `μ`,
/// which does occur for small ρ and k.
pub fn mu_cr(rho: f64, k: f64, consts: TimeConstants, tol_mu: f64) -> Result<f64> {
    if !(tol_mu > 0.0) {
        return Err(Error::InvalidParameter(format!("tol_mu must be positive, got {tol_mu}")));
    }
    for mu in axis_crossings(rho, k, consts)? {
        if mu > SCAN_LIMIT {
            break;
        }
        let probe = mu + (1e-7 * mu.max(1.0)).min(0.5 * tol_mu);
        if max_real_root(probe, rho, k, consts)? > 0.0 {
            return Ok(mu);
        }
    }
    Err(Error::NoFiniteThreshold {
        rho,
        k,
        limit: SCAN_LIMIT,
    })
}

/// Closed interval sampled at `n` evenly spaced points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) || n == 0 || (n == 1 && lo != hi) {
            return Err(Error::InvalidParameter(format!(
                "bad grid {lo}..{hi} with {n} points"
            )));
        }
        Ok(Grid { lo, hi, n })
    }

    /// `lo, lo + step, …` up to `hi` (inclusive within rounding).
    pub fn from_step(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter(format!("grid step must be positive, got {step}")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let hi = lo + step * (n - 1) as f64;
        Grid::linspace(lo, hi, n)
    }

    pub fn point(&self, i: usize) -> f64 {
        if self.n == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    pub fn spacing(&self) -> f64 {
        if self.n > 1 {
            (self.hi - self.lo) / (self.n - 1) as f64
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub rho: f64,
    pub k: f64,
    pub mu_cr_min: f64,
}

/// Gridded `μ_cr(ρ, k)`, `values[i][j]` at `(rho_grid[i], k_grid[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct MuCrSurface {
    pub rho_grid: Vec<f64>,
    pub k_grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub worst: WorstCase,
}

#[derive(Serialize)]
struct SurfaceRow {
    rho: f64,
    k: f64,
    mu_cr: f64,
}

impl MuCrSurface {
    /// CSV with columns `rho,k,mu_cr`, ρ-major.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        for (i, &rho) in self.rho_grid.iter().enumerate() {
            for (j, &k) in self.k_grid.iter().enumerate() {
                w.serialize(SurfaceRow {
                    rho,
                    k,
                    mu_cr: self.values[i][j],
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn grid_min(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::INFINITY);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    }
}

/// Evaluates μ_cr on the grid (in parallel, deterministic order) and refines
/// the minimum by a bounded pattern search.
pub fn mu_cr_surface(
    rho: &Grid,
    k: &Grid,
    consts: TimeConstants,
    tol_mu: f64,
) -> Result<MuCrSurface> {
    let rho_grid = rho.points();
    let k_grid = k.points();
    let cells: Vec<(f64, f64)> = rho_grid
        .iter()
        .flat_map(|&r| k_grid.iter().map(move |&kk| (r, kk)))
        .collect();
    let flat: Vec<f64> = parallel::install(|| {
        cells
            .par_iter()
            .map(|&(r, kk)| mu_cr(r, kk, consts, tol_mu))
            .collect::<Result<Vec<f64>>>()
    })?;
    let values: Vec<Vec<f64>> = flat.chunks(k_grid.len()).map(<[f64]>::to_vec).collect();
    let mut surface = MuCrSurface {
        rho_grid,
        k_grid,
        values,
        worst: WorstCase {
            rho: 0.0,
            k: 0.0,
            mu_cr_min: 0.0,
        },
    };
    let (i, j, v) = surface.grid_min();
    surface.worst = refine_minimum(
        WorstCase {
            rho: surface.rho_grid[i],
            k: surface.k_grid[j],
            mu_cr_min: v,
        },
        rho,
        k,
        consts,
        tol_mu,
    )?;
    Ok(surface)
}

/// Smallest step (in ρ and k) of the refinement pattern search.
pub const REFINE_MIN_STEP: f64 = 1e-4;

fn refine_minimum(
    start: WorstCase,
    rho: &Grid,
    k: &Grid,
    consts: TimeConstants,
    tol_mu: f64,
) -> Result<WorstCase> {
    let tol = tol_mu.min(1e-9);
    let eval = |r: f64, kk: f64| mu_cr(r, kk, consts, tol);
    let mut best = WorstCase {
        mu_cr_min: eval(start.rho, start.k)?,
        ..start
    };
    let mut d_rho = rho.spacing();
    let mut d_k = k.spacing();
    while d_rho > REFINE_MIN_STEP || d_k > REFINE_MIN_STEP {
        let mut moved = false;
        for (dr, dk) in [(d_rho, 0.0), (-d_rho, 0.0), (0.0, d_k), (0.0, -d_k)] {
            let r = (best.rho + dr).clamp(rho.lo, rho.hi);
            let kk = (best.k + dk).clamp(k.lo, k.hi);
            if (r, kk) == (best.rho, best.k) {
                continue;
            }
            let v = eval(r, kk)?;
            if v < best.mu_cr_min {
                best = WorstCase {
                    rho: r,
                    k: kk,
                    mu_cr_min: v,
                };
                moved = true;
            }
        }
        if !moved {
            d_rho *= 0.5;
            d_k *= 0.5;
        }
    }
    Ok(best)
}

/// Range over which the certification threshold is minimized.
pub fn certification_grids() -> (Grid, Grid) {
    (
        Grid::from_step(0.4, 2.5, 0.05).expect("static grid"),
        Grid::from_step(0.3, 5.0, 0.05).expect("static grid"),
    )
}

/// Display range of the threshold surface.
pub fn display_grids() -> (Grid, Grid) {
    (
        Grid::from_step(0.4, 5.0, 0.05).expect("static grid"),
        Grid::from_step(0.3, 5.0, 0.05).expect("static grid"),
    )
}

/// μ_cr,min over the certification range.
pub fn worst_case(consts: TimeConstants, tol_mu: f64) -> Result<WorstCase> {
    let (rho, k) = certification_grids();
    Ok(mu_cr_surface(&rho, &k, consts, tol_mu)?.worst)
}
