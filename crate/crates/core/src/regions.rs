//! Certified droop regions and whole-system certification.
//!
//! Every region is a product of per-inverter triangles
//! `0 < m_i ≤ m_max,i`, `m_i/k_max ≤ n_i ≤ m_i/k_min`. Droops inside it keep
//! every μ of the generalized Laplacian at or below the threshold.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplacian::mu_spectrum;
use crate::linalg;
use crate::netmodel::{ReducedNetwork, TimeConstants};
use crate::statespace::DroopConfig;
use crate::twobus::{self, DEFAULT_TOL_MU};

pub const K_MIN: f64 = 0.3;
pub const K_MAX: f64 = 5.0;
/// Published worst-case threshold for the default time constants.
pub const REFERENCE_MU_MIN: f64 = 0.826;
/// Allowed distance between the recomputed and published thresholds.
pub const REFERENCE_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionVariant {
    Equal,
    Relative,
    Conservative,
}

impl RegionVariant {
    pub const ALL: [RegionVariant; 3] = [
        RegionVariant::Equal,
        RegionVariant::Relative,
        RegionVariant::Conservative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionVariant::Equal => "equal",
            RegionVariant::Relative => "relative",
            RegionVariant::Conservative => "conservative",
        }
    }
}

impl fmt::Display for RegionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal" => Ok(RegionVariant::Equal),
            "relative" => Ok(RegionVariant::Relative),
            "conservative" => Ok(RegionVariant::Conservative),
            other => Err(Error::InvalidParameter(format!("unknown region variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedRegion {
    pub variant: RegionVariant,
    pub inverter_ids: Vec<String>,
    /// Maximum frequency droop per inverter, as a fraction.
    pub m_max: Vec<f64>,
    pub k_min: f64,
    pub k_max: f64,
    pub mu_threshold: f64,
}

impl CertifiedRegion {
    /// The vertex `m_i = m_max,i`, `n_i = m_i / k`.
    pub fn vertex(&self, k: f64) -> Result<DroopConfig> {
        DroopConfig::with_ratio(self.m_max.clone(), k)
    }

    /// JSON export in percent, each bound rounded down to 1e-6 %.
    ///
    /// Rounding toward the interior keeps the exported vertex strictly
    /// certifiable.
    pub fn to_json(&self) -> String {
        let doc = RegionDocument {
            variant: self.variant,
            unit: "percent".into(),
            k_min: self.k_min,
            k_max: self.k_max,
            mu_threshold: self.mu_threshold,
            inverters: self
                .inverter_ids
                .iter()
                .zip(&self.m_max)
                .map(|(id, m)| RegionEntry {
                    id: id.clone(),
                    m_max_percent: floor_percent(*m),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("region serializes")
    }

    /// CSV `id,m_max_percent` for bar charts.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        for (id, m) in self.inverter_ids.iter().zip(&self.m_max) {
            w.serialize(RegionEntry {
                id: id.clone(),
                m_max_percent: floor_percent(*m),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

fn floor_percent(m: f64) -> f64 {
    (m * 1e8).floor() / 1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEntry {
    pub id: String,
    pub m_max_percent: f64,
}

/// Serialized form of a [`CertifiedRegion`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDocument {
    pub variant: RegionVariant,
    pub unit: String,
    pub k_min: f64,
    pub k_max: f64,
    pub mu_threshold: f64,
    pub inverters: Vec<RegionEntry>,
}

fn build(rn: &ReducedNetwork, variant: RegionVariant, mu_min: f64, m_max: Vec<f64>) -> CertifiedRegion {
    CertifiedRegion {
        variant,
        inverter_ids: rn.inverter_ids.clone(),
        m_max,
        k_min: K_MIN,
        k_max: K_MAX,
        mu_threshold: mu_min,
    }
}

fn check_mu(mu_min: f64) -> Result<()> {
    if mu_min.is_finite() && mu_min > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("mu_min must be positive, got {mu_min}")))
    }
}

fn diagonal(rn: &ReducedNetwork) -> Result<Vec<f64>> {
    (0..rn.len())
        .map(|i| {
            let d = rn.scaled[(i, i)];
            if d > 0.0 {
                Ok(d)
            } else {
                Err(Error::ZeroDiagonal(rn.inverter_ids[i].clone()))
            }
        })
        .collect()
}

/// Common bound `m ≤ μ_min / λ_max(𝓑)`.
pub fn region_equal(rn: &ReducedNetwork, mu_min: f64) -> Result<CertifiedRegion> {
    check_mu(mu_min)?;
    let lmax = linalg::symmetric_max_eigenvalue(&rn.scaled);
    let scale = rn.scaled.amax();
    if !(lmax > 1e-12 * scale) || scale == 0.0 {
        return Err(Error::UnboundedRegion);
    }
    Ok(build(rn, RegionVariant::Equal, mu_min, vec![mu_min / lmax; rn.len()]))
}

/// `m_i ≤ μ_min / (λ_max(C_r)·𝓑_ii)` with `C_r = diag(1/𝓑_ii)·𝓑`.
pub fn region_relative(rn: &ReducedNetwork, mu_min: f64) -> Result<CertifiedRegion> {
    check_mu(mu_min)?;
    let d = diagonal(rn)?;
    let s: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
    let normalized = DMatrix::from_fn(rn.len(), rn.len(), |i, j| rn.scaled[(i, j)] / (s[i] * s[j]));
    let lr = linalg::symmetric_max_eigenvalue(&normalized);
    if !(lr > 1e-12) {
        return Err(Error::UnboundedRegion);
    }
    let m_max = d.iter().map(|dii| mu_min / (lr * dii)).collect();
    Ok(build(rn, RegionVariant::Relative, mu_min, m_max))
}

/// `m_i ≤ μ_min / (2·𝓑_ii)`.
pub fn region_conservative(rn: &ReducedNetwork, mu_min: f64) -> Result<CertifiedRegion> {
    check_mu(mu_min)?;
    let m_max = diagonal(rn)?.iter().map(|dii| mu_min / (2.0 * dii)).collect();
    Ok(build(rn, RegionVariant::Conservative, mu_min, m_max))
}

pub fn region(rn: &ReducedNetwork, variant: RegionVariant, mu_min: f64) -> Result<CertifiedRegion> {
    match variant {
        RegionVariant::Equal => region_equal(rn, mu_min),
        RegionVariant::Relative => region_relative(rn, mu_min),
        RegionVariant::Conservative => region_conservative(rn, mu_min),
    }
}

/// Inclusive triangle test for every inverter.
pub fn in_region(droops: &DroopConfig, region: &CertifiedRegion) -> Result<bool> {
    if droops.len() != region.m_max.len() {
        return Err(Error::DimensionMismatch {
            expected: region.m_max.len(),
            got: droops.len(),
        });
    }
    Ok(droops
        .m
        .iter()
        .zip(&droops.n)
        .zip(&region.m_max)
        .all(|((&m, &n), &cap)| {
            m > 0.0 && m <= cap && m / region.k_max <= n && n <= m / region.k_min
        }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Certification {
    /// Carries μ_v, strictly below the threshold.
    Certified(f64),
    /// Carries the offending μ_v. Not a proof of instability.
    NotCertified(f64),
}

impl Certification {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certification::Certified(_))
    }

    pub fn mu_max(&self) -> f64 {
        match *self {
            Certification::Certified(m) | Certification::NotCertified(m) => m,
        }
    }
}

/// Certified iff every μ_i(C) is strictly below `mu_min`.
pub fn certify(rn: &ReducedNetwork, droops: &DroopConfig, mu_min: f64) -> Result<Certification> {
    check_mu(mu_min)?;
    let top = mu_spectrum(droops, rn)?.max();
    Ok(if top < mu_min {
        Certification::Certified(top)
    } else {
        Certification::NotCertified(top)
    })
}

/// Threshold recomputed from the two-bus worst case.
///
/// For the default time constants the result must agree with
/// [`REFERENCE_MU_MIN`]; the default case is computed once per process.
pub fn default_mu_min(consts: TimeConstants) -> Result<f64> {
    static DEFAULT: OnceLock<std::result::Result<f64, String>> = OnceLock::new();
    if consts != TimeConstants::default() {
        return Ok(twobus::worst_case(consts, DEFAULT_TOL_MU)?.mu_cr_min);
    }
    let value = DEFAULT
        .get_or_init(|| {
            twobus::worst_case(consts, DEFAULT_TOL_MU)
                .map(|w| w.mu_cr_min)
                .map_err(|e| e.to_string())
        })
        .clone()
        .map_err(Error::InvalidParameter)?;
    if (value - REFERENCE_MU_MIN).abs() >= REFERENCE_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "recomputed threshold {value} disagrees with {REFERENCE_MU_MIN}"
        )));
    }
    Ok(value)
}
