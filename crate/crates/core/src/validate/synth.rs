//! Random connected networks for tests and benchmarks.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netmodel::{Bus, BusKind, Line, LoadImpedance, NetworkSpec};

/// How line R/X ratios are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineRho {
    Uniform(f64),
    /// Drawn independently per line from `[lo, hi]`.
    PerLine(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub inverters: usize,
    pub load_buses: usize,
    /// Extra edges beyond the spanning tree, as a fraction of tree edges.
    pub extra_edge_fraction: f64,
    pub x_range: (f64, f64),
    pub rho: LineRho,
    /// Load impedance magnitude range (p.u.).
    pub load_magnitude: (f64, f64),
}

impl SynthOptions {
    pub fn new(inverters: usize, load_buses: usize, rho: LineRho) -> Self {
        SynthOptions {
            inverters,
            load_buses,
            extra_edge_fraction: 0.2,
            x_range: (0.05, 0.5),
            rho,
            load_magnitude: (0.5, 2.0),
        }
    }
}

/// Random spanning tree plus extra edges over inverter buses `G*` and load
/// buses `L*`. Loads get a lagging power-factor angle in [0.2, 0.6] rad.
pub fn random_network<R: Rng>(rng: &mut R, opts: &SynthOptions) -> NetworkSpec {
    assert!(opts.inverters >= 1, "at least one inverter");
    let mut ids: Vec<(String, BusKind)> = (0..opts.inverters)
        .map(|i| (format!("G{i}"), BusKind::Inverter))
        .chain((0..opts.load_buses).map(|i| (format!("L{i}"), BusKind::Load)))
        .collect();
    ids.shuffle(rng);
    let n = ids.len();
    let mut edges = BTreeSet::new();
    for i in 1..n {
        let parent = rng.random_range(0..i);
        edges.insert((parent, i));
    }
    let extra = ((n.saturating_sub(1)) as f64 * opts.extra_edge_fraction).round() as usize;
    let max_edges = n * (n - 1) / 2;
    let target = (edges.len() + extra).min(max_edges);
    while edges.len() < target {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let lines = edges
        .into_iter()
        .map(|(a, b)| {
            let x = rng.random_range(opts.x_range.0..=opts.x_range.1);
            let rho = match opts.rho {
                LineRho::Uniform(r) => r,
                LineRho::PerLine(lo, hi) => rng.random_range(lo..=hi),
            };
            Line {
                from: ids[a].0.clone(),
                to: ids[b].0.clone(),
                r: rho * x,
                x,
            }
        })
        .collect();
    let mut loads = BTreeMap::new();
    for (id, kind) in &ids {
        if *kind == BusKind::Load {
            let z = rng.random_range(opts.load_magnitude.0..=opts.load_magnitude.1);
            let angle: f64 = rng.random_range(0.2..=0.6);
            loads.insert(
                id.clone(),
                LoadImpedance {
                    r: z * angle.cos(),
                    x: z * angle.sin(),
                },
            );
        }
    }
    let buses = ids
        .into_iter()
        .map(|(id, kind)| Bus { id, kind })
        .collect();
    NetworkSpec::new(buses, lines, loads).expect("generated network is valid")
}

/// Benchmark network: `v` inverters, `v/2` load buses, per-line ρ in
/// [0.4, 2.5], deterministic in `(v, seed)`.
pub fn synthetic_network(v: usize, seed: u64) -> NetworkSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(v as u64);
    random_network(&mut rng, &SynthOptions::new(v, v / 2, LineRho::PerLine(0.4, 2.5)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::rho_spread;

    #[test]
    fn generated_networks_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for v in 1..8 {
            let net = random_network(&mut rng, &SynthOptions::new(v, 3, LineRho::Uniform(1.1)));
            assert_eq!(net.inverter_count(), v);
            assert!(rho_spread(&net) < 1e-12);
            assert_eq!(net.loads.len(), 3);
        }
    }

    #[test]
    fn extra_edges() {
        let net = synthetic_network(20, 1);
        let n = net.buses.len();
        assert_eq!(net.lines.len(), n - 1 + ((n - 1) as f64 * 0.2).round() as usize);
        assert_eq!(net, synthetic_network(20, 1));
    }
}
