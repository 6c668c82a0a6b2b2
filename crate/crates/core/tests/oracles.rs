//! Cross-module checks against the full model.

use droopstab::linalg;
use droopstab::netmodel::{equivalent_network, reduce_network, TimeConstants};
use droopstab::regions::{self, region, RegionVariant};
use droopstab::samples;
use droopstab::statespace::{DroopConfig, DEFAULT_MARGIN};
use droopstab::twobus::{self, DEFAULT_TOL_MU};
use droopstab::validate::stationarity::DEFAULT_STEP;
use droopstab::validate::synth::{random_network, LineRho, SynthOptions};
use droopstab::validate::{monte_carlo, stationarity_check, true_boundary, SamplerSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MU_MIN: f64 = 0.826;

#[test]
fn symmetric_pair_boundary_matches_the_two_bus_threshold() {
    let net = samples::two_bus();
    let rn = reduce_network(&net).unwrap();
    let lmax = linalg::symmetric_max_eigenvalue(&rn.scaled);
    let expected = twobus::mu_cr(1.3, 0.3, TimeConstants::default(), 1e-8).unwrap() / lmax;
    let b = true_boundary(&net, &[0.3], (0.5 * expected, 2.0 * expected), 1e-7 * expected).unwrap();
    assert!((b[0].m / expected - 1.0).abs() < 0.02, "{} vs {}", b[0].m, expected);
}

#[test]
fn unloaded_boundary_never_falls_inside_the_certified_bound() {
    let mu = regions::default_mu_min(TimeConstants::default()).unwrap();
    let net = samples::two_bus();
    let certified = regions::region_equal(&reduce_network(&net).unwrap(), mu).unwrap().m_max[0];
    let kgrid = twobus::Grid::linspace(0.3, 5.0, 20).unwrap().points();
    for p in true_boundary(&net, &kgrid, (0.5 * certified, 1.0), 1e-7 * certified).unwrap() {
        assert!(p.m >= certified - 1e-9, "k = {}: {} < {}", p.k, p.m, certified);
    }
}

#[test]
fn random_unloaded_networks_sit_inside_their_boundary() {
    let mu = regions::default_mu_min(TimeConstants::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let v = rng.random_range(2..=5);
        let net = random_network(&mut rng, &SynthOptions::new(v, 0, LineRho::PerLine(0.4, 2.5)));
        let certified = regions::region_equal(&reduce_network(&net).unwrap(), mu).unwrap().m_max[0];
        for p in true_boundary(&net, &[0.3, 1.0, 5.0], (0.5 * certified, 1.0), 1e-6 * certified).unwrap() {
            assert!(p.m >= certified - 1e-9);
        }
    }
}

#[test]
fn far_outside_the_region_is_unstable() {
    let net = samples::two_area();
    let reg = region(&reduce_network(&net).unwrap(), RegionVariant::Relative, MU_MIN).unwrap();
    let base = DroopConfig::with_ratio(reg.m_max.iter().map(|m| 10.0 * m).collect(), 1.0).unwrap();
    let spec = SamplerSpec {
        inverter_k: Some((0.3, 5.0)),
        ..SamplerSpec::default()
    };
    let r = monte_carlo(&net, &base, &spec, 20, 5, DEFAULT_MARGIN).unwrap();
    assert!(r.violated > 0);
}

#[test]
fn soundness_on_random_networks() {
    let mu = regions::default_mu_min(TimeConstants::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut unstable = 0;
    for variant in RegionVariant::ALL {
        for _ in 0..2 {
            let v = rng.random_range(2..=6);
            let loads = rng.random_range(0..=3);
            let net = random_network(&mut rng, &SynthOptions::new(v, loads, LineRho::PerLine(0.4, 2.5)));
            let base = region(&reduce_network(&net).unwrap(), variant, mu).unwrap().vertex(1.0).unwrap();
            let spec = SamplerSpec {
                droop_fraction: Some((0.0001, 0.9999)),
                ..SamplerSpec::soundness()
            };
            unstable += monte_carlo(&net, &base, &spec, 34, rng.random(), DEFAULT_MARGIN)
                .unwrap()
                .violated;
        }
    }
    assert_eq!(unstable, 0);
}

#[test]
fn stationarity_at_the_worst_case() {
    let consts = TimeConstants::default();
    let w = twobus::worst_case(consts, DEFAULT_TOL_MU).unwrap();
    let rn = reduce_network(&samples::two_area()).unwrap();
    let m = w.mu_cr_min / linalg::symmetric_max_eigenvalue(&rn.scaled);
    let droops = DroopConfig::equal(4, m, w.k).unwrap();
    let net = equivalent_network(&rn, w.rho, consts).unwrap();
    let coarse = stationarity_check(&net, &droops, w.rho, DEFAULT_STEP).unwrap();
    let fine = stationarity_check(&net, &droops, w.rho, DEFAULT_STEP / 2.0).unwrap();
    let off = stationarity_check(&equivalent_network(&rn, 0.5, consts).unwrap(), &droops, 0.5, DEFAULT_STEP).unwrap();
    assert!(10.0 * coarse.max_abs_per_line() <= off.max_abs_per_line());
    assert!(!off.has_noise_warning());
    // h and h/2 agree to first order
    for (a, b) in coarse.per_line.iter().zip(&fine.per_line) {
        assert!((a - b).abs() <= 10.0 * DEFAULT_STEP * coarse.uniform_second.abs().max(1.0));
    }
    let off_fine = stationarity_check(&equivalent_network(&rn, 0.5, consts).unwrap(), &droops, 0.5, DEFAULT_STEP / 2.0).unwrap();
    for (a, b) in off.per_line.iter().zip(&off_fine.per_line) {
        assert!((a - b).abs() <= 1e-3 * a.abs().max(1.0));
    }
}

#[test]
fn loads_barely_move_the_oscillatory_modes() {
    // the two-area network with and without its loads at half the bound
    let net = samples::two_area();
    let rn = reduce_network(&net).unwrap();
    let reg = region(&rn, RegionVariant::Equal, MU_MIN).unwrap();
    let droops = DroopConfig::with_ratio(reg.m_max.iter().map(|m| 0.5 * m).collect(), 1.0).unwrap();
    let loaded = droopstab::spectrum(&droopstab::assemble_full(&net, &droops).unwrap()).unwrap();
    let unloaded_net = equivalent_network(&rn, 1.3, TimeConstants::default()).unwrap();
    let unloaded = droopstab::spectrum(&droopstab::assemble_full(&unloaded_net, &droops).unwrap()).unwrap();
    // loads turn the common-angle zero mode into a slow real mode, so
    // compare the rightmost oscillatory modes
    let oscillatory = |s: &droopstab::Spectrum| {
        s.eigenvalues
            .iter()
            .filter(|z| z.im > 1.0)
            .copied()
            .max_by(|a, b| a.re.total_cmp(&b.re))
            .unwrap()
    };
    let (a, b) = (oscillatory(&loaded), oscillatory(&unloaded));
    assert!((a - b).norm() < 0.05 * b.norm(), "{a} vs {b}");
}
