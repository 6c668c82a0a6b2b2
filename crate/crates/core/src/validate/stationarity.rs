//! Finite-difference sensitivity of the dominant real part to per-line ρ.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::netmodel::{reduce_virtual_buses, NetworkSpec};
use crate::parallel;
use crate::statespace::{assemble_full, spectrum, DroopConfig};

pub const DEFAULT_STEP: f64 = 1e-4;
/// Differences smaller than this are indistinguishable from rounding.
pub const NOISE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub rho: f64,
    pub h: f64,
    /// Re(λ_dom) at the uniform ratio.
    pub base_re: f64,
    /// Central difference along each line's ρ_j.
    pub per_line: Vec<f64>,
    /// Central difference with every ρ_j moved together.
    pub uniform: f64,
    /// Second difference along the uniform direction.
    pub uniform_second: f64,
    /// Lines whose two-sided difference fell below the noise floor.
    pub noisy_lines: Vec<usize>,
}

impl StationarityReport {
    pub fn max_abs_per_line(&self) -> f64 {
        self.per_line.iter().fold(0.0, |a, d| a.max(d.abs()))
    }

    pub fn has_noise_warning(&self) -> bool {
        !self.noisy_lines.is_empty()
    }
}

/// Dominant real part with the given per-line ratios.
pub fn dominant_re(net: &NetworkSpec, droops: &DroopConfig, rhos: &[f64]) -> Result<f64> {
    let s = spectrum(&assemble_full(&net.with_line_rhos(rhos), droops)?)?;
    Ok(s.dominant_re())
}

/// Sets every line to `rho` and differentiates Re(λ_dom) with step `h`.
pub fn stationarity_check(
    net: &NetworkSpec,
    droops: &DroopConfig,
    rho: f64,
    h: f64,
) -> Result<StationarityReport> {
    if !(h > 0.0 && h < rho) {
        return Err(Error::InvalidParameter(format!("step must be in (0, rho), got {h}")));
    }
    let net = reduce_virtual_buses(net)?;
    let base = vec![rho; net.lines.len()];
    let eval = |rhos: &[f64]| dominant_re(&net, droops, rhos);
    let base_re = eval(&base)?;
    let shifted = |j: Option<usize>, delta: f64| {
        let mut r = base.clone();
        match j {
            Some(j) => r[j] += delta,
            None => r.iter_mut().for_each(|x| *x += delta),
        }
        r
    };
    let pairs: Vec<(f64, f64)> = parallel::install(|| {
        (0..net.lines.len())
            .into_par_iter()
            .map(|j| Ok((eval(&shifted(Some(j), h))?, eval(&shifted(Some(j), -h))?)))
            .collect::<Result<Vec<_>>>()
    })?;
    let per_line = pairs.iter().map(|(p, m)| (p - m) / (2.0 * h)).collect();
    let noisy_lines = pairs
        .iter()
        .enumerate()
        .filter(|(_, (p, m))| (p - m).abs() < NOISE_FLOOR)
        .map(|(j, _)| j)
        .collect();
    let up = eval(&shifted(None, h))?;
    let down = eval(&shifted(None, -h))?;
    Ok(StationarityReport {
        rho,
        h,
        base_re,
        per_line,
        uniform: (up - down) / (2.0 * h),
        uniform_second: (up - 2.0 * base_re + down) / (h * h),
        noisy_lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    #[test]
    fn step_must_be_positive_and_small() {
        let net = samples::two_bus();
        let d = DroopConfig::equal(2, 0.05, 1.0).unwrap();
        assert!(stationarity_check(&net, &d, 1.3, 0.0).is_err());
        assert!(stationarity_check(&net, &d, 1.3, 2.0).is_err());
    }

    #[test]
    fn single_line_matches_uniform_direction() {
        let net = samples::two_bus();
        let d = DroopConfig::equal(2, 0.05, 1.0).unwrap();
        let r = stationarity_check(&net, &d, 0.8, 1e-4).unwrap();
        assert_eq!(r.per_line.len(), 1);
        assert!((r.per_line[0] - r.uniform).abs() < 1e-9);
    }
}
