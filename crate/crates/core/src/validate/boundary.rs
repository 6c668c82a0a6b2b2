//! Equal-droop stability boundary of the full model by bisection.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::netmodel::{reduce_virtual_buses, NetworkSpec};
use crate::parallel;
use crate::statespace::{assemble_full, spectrum, verdict, DroopConfig, Verdict, DEFAULT_MARGIN};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub k: f64,
    /// Frequency droop (fraction) at which the verdict flips.
    pub m: f64,
}

/// Full-model verdict with `m_i = m`, `n_i = m/k` everywhere.
pub fn equal_droop_verdict(net: &NetworkSpec, m: f64, k: f64) -> Result<Verdict> {
    let droops = DroopConfig::equal(net.inverter_count(), m, k)?;
    let s = spectrum(&assemble_full(net, &droops)?)?;
    Ok(verdict(&s, DEFAULT_MARGIN))
}

fn boundary_at(net: &NetworkSpec, k: f64, bracket: (f64, f64), tol_m: f64) -> Result<f64> {
    let stable = |m: f64| -> Result<bool> { Ok(equal_droop_verdict(net, m, k)? == Verdict::Stable) };
    let (mut lo, mut hi) = bracket;
    if !stable(lo)? || stable(hi)? {
        return Err(Error::NoSignChange { k, lo, hi });
    }
    while hi - lo > tol_m {
        let mid = 0.5 * (lo + hi);
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// For each `k`, bisects `m` inside `m_bracket` (stable at the low end,
/// not stable at the high end) to width `tol_m`.
pub fn true_boundary(
    net: &NetworkSpec,
    k_grid: &[f64],
    m_bracket: (f64, f64),
    tol_m: f64,
) -> Result<Vec<BoundaryPoint>> {
    if !(tol_m > 0.0) || !(m_bracket.0 > 0.0 && m_bracket.0 < m_bracket.1) {
        return Err(Error::InvalidParameter(format!(
            "bad bracket {m_bracket:?} or tolerance {tol_m}"
        )));
    }
    let net = reduce_virtual_buses(net)?;
    parallel::install(|| {
        k_grid
            .par_iter()
            .map(|&k| {
                Ok(BoundaryPoint {
                    k,
                    m: boundary_at(&net, k, m_bracket, tol_m)?,
                })
            })
            .collect()
    })
}
