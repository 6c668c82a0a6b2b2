//! Point count of a brute-force droop grid search.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityEstimate {
    pub v: u32,
    /// Mesh step in percent.
    pub epsilon: f64,
    /// Search area per inverter in the (m, n) plane, percent².
    pub area: f64,
    pub log10_points: f64,
    /// `10^log10_points`; infinite when it overflows.
    pub points: f64,
}

/// `N_p = A^v / ε^(2v)`, evaluated in log space.
pub fn complexity(v: u32, epsilon_percent: f64, area: f64) -> Result<ComplexityEstimate> {
    if v == 0 || !(epsilon_percent > 0.0) || !(area > 0.0) {
        return Err(Error::InvalidParameter(
            "v, epsilon and area must be positive".into(),
        ));
    }
    let v_f = f64::from(v);
    let log10_points = v_f * area.log10() - 2.0 * v_f * epsilon_percent.log10();
    Ok(ComplexityEstimate {
        v,
        epsilon: epsilon_percent,
        area,
        log10_points,
        points: 10f64.powf(log10_points),
    })
}
