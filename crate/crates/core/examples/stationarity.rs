//! Sensitivity of the dominant mode to each line's R/X ratio, at the
//! worst-case ratio and away from it.

use droopstab::netmodel::{equivalent_network, reduce_network};
use droopstab::twobus::{self, DEFAULT_TOL_MU};
use droopstab::validate::stationarity::DEFAULT_STEP;
use droopstab::validate::stationarity_check;
use droopstab::{linalg, samples, DroopConfig};

fn main() -> droopstab::Result<()> {
    let net = samples::two_area();
    let consts = net.constants();
    let rn = reduce_network(&net)?;
    let w = twobus::worst_case(consts, DEFAULT_TOL_MU)?;
    // droops that put the largest mu right at the threshold
    let m = w.mu_cr_min / linalg::symmetric_max_eigenvalue(&rn.scaled);
    let droops = DroopConfig::equal(rn.len(), m, w.k)?;

    for rho in [w.rho, 0.5, 2.0] {
        let r = stationarity_check(&equivalent_network(&rn, rho, consts)?, &droops, rho, DEFAULT_STEP)?;
        println!(
            "rho = {rho:.4}: Re lambda = {:+.4}, max |dRe/drho_j| = {:.3e}",
            r.base_re,
            r.max_abs_per_line()
        );
    }
    Ok(())
}
