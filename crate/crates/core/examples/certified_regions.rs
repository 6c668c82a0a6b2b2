//! Certified droop regions on the feeder surrogate.

use droopstab::netmodel::reduce_network;
use droopstab::regions::{default_mu_min, in_region};
use droopstab::{certify, gershgorin, region, samples, DroopConfig, RegionVariant};

fn main() -> droopstab::Result<()> {
    let net = samples::feeder_surrogate();
    let rn = reduce_network(&net)?;
    let mu_min = default_mu_min(net.constants())?;
    println!("mu_cr_min = {mu_min:.4}");

    let regions = RegionVariant::ALL
        .iter()
        .map(|&v| region(&rn, v, mu_min))
        .collect::<droopstab::Result<Vec<_>>>()?;
    print!("{:>5}", "id");
    for r in &regions {
        print!("{:>14}", r.variant.as_str());
    }
    println!();
    for (i, id) in rn.inverter_ids.iter().enumerate() {
        print!("{id:>5}");
        for r in &regions {
            print!("{:>13.3}%", 100.0 * r.m_max[i]);
        }
        println!();
    }

    // the vertex sits exactly on mu = mu_cr_min, which certify treats as not
    // certified; a step inside is
    let rel = &regions[1];
    let vertex = rel.vertex(1.0)?;
    println!("vertex in region: {}", in_region(&vertex, rel)?);
    println!("vertex: {:?}", certify(&rn, &vertex, mu_min)?);
    let droops = DroopConfig::with_ratio(vertex.m.iter().map(|m| 0.99 * m).collect(), 1.0)?;
    println!("0.99 x vertex: {:?}", certify(&rn, &droops, mu_min)?);
    let big = droopstab::laplacian::scale_droop(&droops, 0, 3.0)?;
    println!("first droop x3: {:?}", certify(&rn, &big, mu_min)?);
    let top = gershgorin(&big, &rn)?.iter().map(|b| b.upper).fold(0.0, f64::max);
    println!("Gershgorin upper bound on mu: {top:.3}");
    Ok(())
}
