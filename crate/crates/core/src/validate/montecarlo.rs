//! Seeded Monte Carlo runs of the full model.
//!
//! Sample `i` draws from a ChaCha8 generator seeded with `seed` on stream
//! `i`, in this order: one ρ per line (line order), one k per inverter, one
//! droop fraction per inverter, one load magnitude per load (bus id order).
//! Disabled samplers draw nothing.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::netmodel::{reduce_virtual_buses, NetworkSpec};
use crate::parallel;
use crate::statespace::{assemble_full, spectrum, verdict, DroopConfig, Verdict, ZERO_MODE_RELATIVE};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SamplerSpec {
    /// Per-line R/X ratio range.
    pub line_rho: Option<(f64, f64)>,
    /// Per-inverter `k = m/n` range; sets `n_i = m_i / k_i`.
    pub inverter_k: Option<(f64, f64)>,
    /// Per-inverter multiplier on the base droops.
    pub droop_fraction: Option<(f64, f64)>,
    /// Per-load impedance magnitude (p.u.), angle kept.
    pub load_magnitude: Option<(f64, f64)>,
}

impl SamplerSpec {
    /// ρ ∈ [0.4, 2.5], k ∈ [0.3, 5], droops in [0.5, 1] of the base and
    /// load magnitudes in [0.5, 2] p.u.
    pub fn soundness() -> Self {
        SamplerSpec {
            line_rho: Some((0.4, 2.5)),
            inverter_k: Some((0.3, 5.0)),
            droop_fraction: Some((0.5, 1.0)),
            load_magnitude: Some((0.5, 2.0)),
        }
    }
}

fn draw<R: Rng>(rng: &mut R, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..=range.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleDraw {
    pub line_rho: Vec<f64>,
    pub m: Vec<f64>,
    pub n: Vec<f64>,
    pub load_magnitude: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub index: usize,
    pub draw: SampleDraw,
    pub dominant: Option<Complex64>,
    pub verdict: Verdict,
    pub eigenvalues: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleReport {
    pub seed: u64,
    pub samples: Vec<SampleRecord>,
    pub violated: usize,
    pub margin: f64,
    pub omega0: f64,
}

#[derive(Serialize)]
struct ScatterRow {
    re: f64,
    im: f64,
    is_zero_mode: bool,
}

#[derive(Serialize)]
struct SummaryRow {
    index: usize,
    dominant_re: f64,
    dominant_im: f64,
    verdict: Verdict,
}

impl SampleReport {
    /// Rightmost dominant real part over all samples.
    pub fn worst_re(&self) -> f64 {
        self.samples
            .iter()
            .filter_map(|s| s.dominant)
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// All eigenvalues of all samples, `re,im,is_zero_mode`.
    pub fn write_scatter_csv<W: Write>(&self, out: W) -> Result<()> {
        let tol = ZERO_MODE_RELATIVE * self.omega0;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        for z in self.samples.iter().flat_map(|s| &s.eigenvalues) {
            w.serialize(ScatterRow {
                re: z.re,
                im: z.im,
                is_zero_mode: z.norm() < tol,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per sample with its dominant mode and verdict.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        for s in &self.samples {
            let z = s.dominant.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            w.serialize(SummaryRow {
                index: s.index,
                dominant_re: z.re,
                dominant_im: z.im,
                verdict: s.verdict,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sample_one(
    net: &NetworkSpec,
    droops: &DroopConfig,
    spec: &SamplerSpec,
    seed: u64,
    index: usize,
    margin: f64,
) -> Result<SampleRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let line_rho: Vec<f64> = match spec.line_rho {
        Some(r) => net.lines.iter().map(|_| draw(&mut rng, r)).collect(),
        None => net.line_rhos(),
    };
    let ks: Option<Vec<f64>> = spec
        .inverter_k
        .map(|r| (0..droops.len()).map(|_| draw(&mut rng, r)).collect());
    let fractions: Vec<f64> = match spec.droop_fraction {
        Some(r) => (0..droops.len()).map(|_| draw(&mut rng, r)).collect(),
        None => vec![1.0; droops.len()],
    };
    let m: Vec<f64> = droops.m.iter().zip(&fractions).map(|(m, f)| m * f).collect();
    let n: Vec<f64> = match &ks {
        Some(ks) => m.iter().zip(ks).map(|(m, k)| m / k).collect(),
        None => droops.n.iter().zip(&fractions).map(|(n, f)| n * f).collect(),
    };
    let mut sampled = net.with_line_rhos(&line_rho);
    let mut load_magnitude = Vec::new();
    if let Some(r) = spec.load_magnitude {
        for load in sampled.loads.values_mut() {
            let z = draw(&mut rng, r);
            let scale = z / load.magnitude();
            load.r *= scale;
            load.x *= scale;
            load_magnitude.push(z);
        }
    }
    let sampled_droops = DroopConfig::new(m.clone(), n.clone())?;
    let reduced = reduce_virtual_buses(&sampled)?;
    let s = spectrum(&assemble_full(&reduced, &sampled_droops)?)?;
    Ok(SampleRecord {
        index,
        draw: SampleDraw {
            line_rho,
            m,
            n,
            load_magnitude,
        },
        dominant: s.dominant,
        verdict: verdict(&s, margin),
        eigenvalues: s.eigenvalues,
    })
}

/// Runs `count` independent samples; results are ordered by sample index
/// and bit-identical for a given seed.
pub fn monte_carlo(
    net: &NetworkSpec,
    droops: &DroopConfig,
    spec: &SamplerSpec,
    count: usize,
    seed: u64,
    margin: f64,
) -> Result<SampleReport> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    if droops.len() != net.inverter_count() {
        return Err(Error::DimensionMismatch {
            expected: net.inverter_count(),
            got: droops.len(),
        });
    }
    let samples = parallel::install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| {
                sample_one(net, droops, spec, seed, i, margin).map_err(|e| Error::Sample {
                    index: i,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let violated = samples.iter().filter(|s| s.verdict == Verdict::Unstable).count();
    Ok(SampleReport {
        seed,
        samples,
        violated,
        margin,
        omega0: net.omega0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use crate::statespace::DEFAULT_MARGIN;

    #[test]
    fn deterministic_for_a_seed() {
        let net = samples::two_area();
        let d = DroopConfig::equal(4, 0.01, 1.0).unwrap();
        let spec = SamplerSpec::soundness();
        let a = monte_carlo(&net, &d, &spec, 3, 42, DEFAULT_MARGIN).unwrap();
        let b = monte_carlo(&net, &d, &spec, 3, 42, DEFAULT_MARGIN).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo(&net, &d, &spec, 3, 43, DEFAULT_MARGIN).unwrap();
        assert_ne!(a.samples[0].draw, c.samples[0].draw);
        // the first sample does not depend on how many follow
        let one = monte_carlo(&net, &d, &spec, 1, 42, DEFAULT_MARGIN).unwrap();
        assert_eq!(one.samples[0], a.samples[0]);
    }

    #[test]
    fn draws_respect_ranges() {
        let net = samples::two_area();
        let d = DroopConfig::equal(4, 0.02, 1.0).unwrap();
        let r = monte_carlo(&net, &d, &SamplerSpec::soundness(), 5, 1, DEFAULT_MARGIN).unwrap();
        for s in &r.samples {
            assert!(s.draw.line_rho.iter().all(|x| (0.4..=2.5).contains(x)));
            for (m, n) in s.draw.m.iter().zip(&s.draw.n) {
                assert!((0.01..=0.02).contains(m));
                assert!((0.3..=5.0).contains(&(m / n)));
            }
            assert_eq!(s.draw.load_magnitude.len(), 2);
        }
    }

    #[test]
    fn zero_count_is_rejected() {
        let d = DroopConfig::equal(4, 0.01, 1.0).unwrap();
        assert!(monte_carlo(&samples::two_area(), &d, &SamplerSpec::default(), 0, 1, 0.0).is_err());
    }
}
