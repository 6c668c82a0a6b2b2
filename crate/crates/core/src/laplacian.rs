//! Generalized Laplacian `C = M·𝓑` and its spectrum.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::netmodel::ReducedNetwork;
use crate::statespace::DroopConfig;

/// Eigenvalues down to this value are treated as rounding noise and clamped.
pub const NEGATIVE_CLAMP: f64 = -1e-9;

fn check_dims(droops: &DroopConfig, rn: &ReducedNetwork) -> Result<()> {
    if droops.len() != rn.len() {
        return Err(Error::DimensionMismatch {
            expected: rn.len(),
            got: droops.len(),
        });
    }
    Ok(())
}

/// `diag(m)·𝓑`.
pub fn generalized_laplacian(droops: &DroopConfig, rn: &ReducedNetwork) -> Result<DMatrix<f64>> {
    check_dims(droops, rn)?;
    let mut c = rn.scaled.clone();
    for (i, m) in droops.m.iter().enumerate() {
        c.row_mut(i).scale_mut(*m);
    }
    Ok(c)
}

/// Ascending eigenvalues μ of the generalized Laplacian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuSpectrum {
    pub mu: Vec<f64>,
}

impl MuSpectrum {
    /// μ_v, the largest eigenvalue.
    pub fn max(&self) -> f64 {
        self.mu.last().copied().unwrap_or(0.0)
    }
}

/// Spectrum of `C` from the similar symmetric matrix `M^½·𝓑·M^½`.
pub fn mu_spectrum(droops: &DroopConfig, rn: &ReducedNetwork) -> Result<MuSpectrum> {
    check_dims(droops, rn)?;
    let s: Vec<f64> = droops.m.iter().map(|m| m.sqrt()).collect();
    let sym = DMatrix::from_fn(rn.len(), rn.len(), |i, j| s[i] * rn.scaled[(i, j)] * s[j]);
    let mu = linalg::symmetric_eigenvalues(&sym)
        .into_iter()
        .map(|x| if (NEGATIVE_CLAMP..0.0).contains(&x) { 0.0 } else { x })
        .collect();
    Ok(MuSpectrum { mu })
}

/// Gershgorin interval `[0, 2·m_i·𝓑_ii]` for one inverter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GershgorinBound {
    pub id: String,
    pub upper: f64,
}

pub fn gershgorin(droops: &DroopConfig, rn: &ReducedNetwork) -> Result<Vec<GershgorinBound>> {
    check_dims(droops, rn)?;
    Ok(rn
        .inverter_ids
        .iter()
        .enumerate()
        .map(|(i, id)| GershgorinBound {
            id: id.clone(),
            upper: 2.0 * droops.m[i] * rn.scaled[(i, i)],
        })
        .collect())
}

#[derive(Serialize)]
struct MuRow<'a> {
    index: usize,
    mu: f64,
    inverter: &'a str,
    gershgorin_upper: f64,
}

/// CSV with one μ per row alongside the Gershgorin bound of inverter `index`.
pub fn write_mu_csv<W: Write>(mu: &MuSpectrum, bounds: &[GershgorinBound], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for (index, (m, b)) in mu.mu.iter().zip(bounds).enumerate() {
        w.serialize(MuRow {
            index,
            mu: *m,
            inverter: &b.id,
            gershgorin_upper: b.upper,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn couple(rn: &ReducedNetwork, i: usize, j: usize, weight: f64) -> Result<ReducedNetwork> {
    if i == j {
        return Err(Error::InvalidParameter(format!("line endpoints coincide at {i}")));
    }
    if i >= rn.len() || j >= rn.len() {
        return Err(Error::InvalidParameter(format!(
            "inverter index out of range for {} inverters",
            rn.len()
        )));
    }
    let mut out = rn.clone();
    let rho = rn.rho.unwrap_or(0.0);
    for (m, w) in [(&mut out.scaled, weight), (&mut out.susceptance, weight / (1.0 + rho * rho))] {
        m[(i, i)] += w;
        m[(j, j)] += w;
        m[(i, j)] -= w;
        m[(j, i)] -= w;
    }
    Ok(out)
}

/// Adds a line of reactance `x_new` between inverters `i` and `j`, at the
/// network's own R/X ratio (lossless when that ratio is undefined).
pub fn add_line(rn: &ReducedNetwork, i: usize, j: usize, x_new: f64) -> Result<ReducedNetwork> {
    if !(x_new.is_finite() && x_new > 0.0) {
        return Err(Error::InvalidParameter(format!("reactance must be positive, got {x_new}")));
    }
    couple(rn, i, j, 1.0 / x_new)
}

/// Multiplies the existing coupling between `i` and `j` by `factor ≥ 1`.
pub fn scale_line(rn: &ReducedNetwork, i: usize, j: usize, factor: f64) -> Result<ReducedNetwork> {
    if !(factor.is_finite() && factor >= 1.0) {
        return Err(Error::InvalidParameter(format!("line scale must be at least 1, got {factor}")));
    }
    if i >= rn.len() || j >= rn.len() {
        return Err(Error::InvalidParameter("inverter index out of range".into()));
    }
    let w = -rn.scaled[(i, j)];
    couple(rn, i, j, (factor - 1.0) * w)
}

/// Multiplies both droops of inverter `index` by `d ≥ 1`.
pub fn scale_droop(droops: &DroopConfig, index: usize, d: f64) -> Result<DroopConfig> {
    if !(d.is_finite() && d >= 1.0) {
        return Err(Error::InvalidParameter(format!("droop scale must be at least 1, got {d}")));
    }
    if index >= droops.len() {
        return Err(Error::InvalidParameter(format!("no inverter at index {index}")));
    }
    let mut out = droops.clone();
    out.m[index] *= d;
    out.n[index] *= d;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(b: f64, rho: f64) -> ReducedNetwork {
        let s = DMatrix::from_row_slice(2, 2, &[b, -b, -b, b]);
        ReducedNetwork::from_scaled(vec!["a".into(), "b".into()], s, rho)
    }

    fn droops(m: &[f64]) -> DroopConfig {
        DroopConfig::with_ratio(m.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn identity_droops_give_the_laplacian() {
        let rn = pair(3.0, 0.5);
        assert_eq!(generalized_laplacian(&droops(&[1.0, 1.0]), &rn).unwrap(), rn.scaled);
        let c = generalized_laplacian(&droops(&[2.0, 1.0]), &rn).unwrap();
        assert_eq!(c.row(0)[0], 6.0);
        assert_eq!(c.row(1)[0], -3.0);
    }

    #[test]
    fn single_inverter_is_zero() {
        let rn = ReducedNetwork::from_scaled(vec!["a".into()], DMatrix::zeros(1, 1), 1.0);
        let c = generalized_laplacian(&droops(&[0.05]), &rn).unwrap();
        assert_eq!(c[(0, 0)], 0.0);
        assert_eq!(mu_spectrum(&droops(&[0.05]), &rn).unwrap().mu, vec![0.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let rn = pair(2.0, 1.0);
        let mu = mu_spectrum(&droops(&[0.3, 0.1]), &rn).unwrap();
        assert!(mu.mu[0].abs() < 1e-12);
        assert!((mu.mu[1] - 0.4 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn equal_droops_scale_the_laplacian_spectrum() {
        let s = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 1.5, -0.5, -1.0, -0.5, 1.5]);
        let rn = ReducedNetwork::from_scaled(vec!["a".into(), "b".into(), "c".into()], s.clone(), 1.0);
        let eig = linalg::symmetric_eigenvalues(&s);
        let mu = mu_spectrum(&droops(&[0.2; 3]), &rn).unwrap();
        for (a, b) in mu.mu.iter().zip(eig) {
            assert!((a - 0.2 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn gershgorin_equality_for_a_pair() {
        let rho = 1.3;
        let b = 4.0;
        // scaled matrix of one line with susceptance b is (1 + ρ²)·b
        let rn = pair(b * (1.0 + rho * rho), rho);
        let d = droops(&[0.02, 0.02]);
        let g = gershgorin(&d, &rn).unwrap();
        let top = 2.0 * 0.02 * b * (1.0 + rho * rho);
        for bound in &g {
            assert!((bound.upper - top).abs() < 1e-12);
        }
        assert!((mu_spectrum(&d, &rn).unwrap().max() - top).abs() < 1e-12);
    }

    #[test]
    fn modifications() {
        let rn = pair(2.0, 1.0);
        assert!(add_line(&rn, 0, 0, 1.0).is_err());
        assert!(add_line(&rn, 0, 1, 0.0).is_err());
        let more = add_line(&rn, 0, 1, 0.5).unwrap();
        assert_eq!(more.scaled[(0, 1)], -4.0);
        assert_eq!(more.susceptance[(0, 1)], -2.0);
        let scaled = scale_line(&rn, 0, 1, 3.0).unwrap();
        assert_eq!(scaled.scaled[(0, 0)], 6.0);
        let d = droops(&[0.1, 0.2]);
        assert_eq!(scale_droop(&d, 1, 1.0).unwrap(), d);
        assert!(scale_droop(&d, 1, 0.5).is_err());
        assert!(scale_droop(&d, 2, 2.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let rn = pair(2.0, 1.0);
        let d = droops(&[0.5, 0.5]);
        let mut buf = Vec::new();
        write_mu_csv(
            &mu_spectrum(&d, &rn).unwrap(),
            &gershgorin(&d, &rn).unwrap(),
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("index,mu,inverter,gershgorin_upper"));
        assert_eq!(text.lines().count(), 3);
    }
}
