//! Equal-droop stability boundary of the full model against the certified
//! bound.

use droopstab::netmodel::reduce_network;
use droopstab::regions::{default_mu_min, region_equal};
use droopstab::samples;
use droopstab::validate::true_boundary;

fn main() -> droopstab::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "feeder_surrogate".into());
    let net = samples::by_name(&name).unwrap_or_else(|| panic!("no bundled network {name}"));
    let mu_min = default_mu_min(net.constants())?;
    let certified = region_equal(&reduce_network(&net)?, mu_min)?.m_max[0];
    println!("{name}: certified equal droop m <= {:.4}%", 100.0 * certified);

    let ks = [0.3, 0.5, 1.0, 2.0, 3.5, 5.0];
    for p in true_boundary(&net, &ks, (0.5 * certified, 1.0), 1e-6 * certified)? {
        println!("k = {:4.2}: boundary {:7.4}%  ({:.2}x)", p.k, 100.0 * p.m, p.m / certified);
    }
    Ok(())
}
