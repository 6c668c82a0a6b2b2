//! A uniform-ratio network splits into two-bus equivalents: the spectrum of
//! the homogeneous model is the union of quintic roots over the eigenvalues
//! of the generalized Laplacian.

use droopstab::netmodel::reduce_network;
use droopstab::{assemble_homogeneous, mu_spectrum, samples, spectrum, twobus, DroopConfig};

fn main() -> droopstab::Result<()> {
    let net = samples::two_area();
    let consts = net.constants();
    let rn = reduce_network(&net)?;
    let rho = rn.require_rho()?;
    let k = 0.8;
    let droops = DroopConfig::with_ratio(vec![0.02, 0.03, 0.025, 0.02], k)?;

    let mu = mu_spectrum(&droops, &rn)?;
    println!("mu_i: {:.4?}", mu.mu);

    let full = spectrum(&assemble_homogeneous(&rn, &droops, consts)?)?;
    let mut worst: f64 = 0.0;
    for &m in &mu.mu {
        for z in twobus::roots(&twobus::quintic(m, rho, k, consts)?)? {
            let nearest = full
                .eigenvalues
                .iter()
                .map(|e| (e - z).norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest / z.norm().max(1.0));
        }
    }
    println!("{} state eigenvalues, worst relative distance to a quintic root {worst:.2e}", full.eigenvalues.len());
    if let Some(d) = full.dominant {
        println!("dominant mode {d:.3}");
    }
    let cr = twobus::mu_cr(rho, k, consts, twobus::DEFAULT_TOL_MU)?;
    println!("largest mu {:.4} vs mu_cr({rho}, {k}) = {cr:.4}", mu.max());
    Ok(())
}
