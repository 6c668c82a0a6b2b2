//! Random droops, line ratios and loads inside a certified region, checked on
//! the full model.

use droopstab::netmodel::reduce_network;
use droopstab::regions::default_mu_min;
use droopstab::statespace::DEFAULT_MARGIN;
use droopstab::validate::{monte_carlo, SamplerSpec};
use droopstab::{region, samples, RegionVariant};

fn main() -> droopstab::Result<()> {
    let count: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let net = samples::two_area();
    let rn = reduce_network(&net)?;
    let mu_min = default_mu_min(net.constants())?;
    for variant in RegionVariant::ALL {
        let base = region(&rn, variant, mu_min)?.vertex(1.0)?;
        let r = monte_carlo(&net, &base, &SamplerSpec::soundness(), count, 42, DEFAULT_MARGIN)?;
        println!(
            "{:<13} {} draws, {} unstable, worst Re {:.3} rad/s",
            variant.as_str(),
            r.samples.len(),
            r.violated,
            r.worst_re()
        );
    }

    // far outside the region the same sampler finds instability
    let rel = region(&rn, RegionVariant::Relative, mu_min)?;
    let outside = droopstab::DroopConfig::with_ratio(rel.m_max.iter().map(|m| 10.0 * m).collect(), 1.0)?;
    let spec = SamplerSpec {
        inverter_k: Some((0.3, 5.0)),
        ..SamplerSpec::default()
    };
    let r = monte_carlo(&net, &outside, &spec, 20, 42, DEFAULT_MARGIN)?;
    println!("10x the bound: {} of 20 unstable", r.violated);
    Ok(())
}
