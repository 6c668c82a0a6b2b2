//! Wall-clock comparison of region computation against one full-model
//! eigensolve on synthetic networks.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netmodel::reduce_network;
use crate::regions::{region_relative, REFERENCE_MU_MIN};
use crate::statespace::{assemble_full, spectrum, DroopConfig};
use crate::validate::synth::synthetic_network;

pub const OP_REGION: &str = "region_relative";
pub const OP_EIGEN: &str = "full_eigensolve";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub v: usize,
    pub op: String,
    pub median_ms: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn time_ms<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<f64> {
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        std::hint::black_box(f()?);
        samples.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(median(samples))
}

/// Median timings per size, measured sequentially on the calling thread.
/// The region timing includes the Kron reduction.
pub fn benchmark(sizes: &[usize], repetitions: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if repetitions == 0 || sizes.iter().any(|&v| v < 2) {
        return Err(Error::InvalidParameter(
            "need at least one repetition and two inverters".into(),
        ));
    }
    let mut rows = Vec::new();
    for &v in sizes {
        let net = synthetic_network(v, seed);
        let droops = DroopConfig::equal(v, 0.01, 1.0)?;
        let region = time_ms(repetitions, || region_relative(&reduce_network(&net)?, REFERENCE_MU_MIN))?;
        let eigen = time_ms(repetitions, || spectrum(&assemble_full(&net, &droops)?))?;
        rows.push(BenchRow {
            v,
            op: OP_REGION.into(),
            median_ms: region,
        });
        rows.push(BenchRow {
            v,
            op: OP_EIGEN.into(),
            median_ms: eigen,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log t` against `log v` for one operation.
pub fn growth_exponent(rows: &[BenchRow], op: &str) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.op == op && r.median_ms > 0.0)
        .map(|r| ((r.v as f64).ln(), r.median_ms.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_per_size() {
        let rows = benchmark(&[4, 8], 1, 3).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.median_ms >= 0.0));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("v,op,median_ms\n4,region_relative,"));
    }

    #[test]
    fn exponent_of_a_power_law() {
        let rows: Vec<BenchRow> = [2usize, 4, 8]
            .iter()
            .map(|&v| BenchRow {
                v,
                op: "x".into(),
                median_ms: (v as f64).powi(3),
            })
            .collect();
        assert!((growth_exponent(&rows, "x").unwrap() - 3.0).abs() < 1e-12);
        assert!(growth_exponent(&rows, "y").is_none());
        assert_eq!(median(vec![3.0, 1.0, 2.0, 10.0]), 2.5);
    }
}
