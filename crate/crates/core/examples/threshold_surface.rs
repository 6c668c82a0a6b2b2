//! Critical threshold μ_cr over (ρ, k) and the worst case.
//!
//! `cargo run --example threshold_surface -- surface.csv` also writes the
//! display-range surface.

use std::fs::File;
use std::io::BufWriter;

use droopstab::twobus::{self, DEFAULT_TOL_MU};
use droopstab::netmodel::TimeConstants;

fn main() -> droopstab::Result<()> {
    let consts = TimeConstants::default();
    println!("   rho     k=0.3     k=1     k=5");
    for rho in [0.4, 0.8, 1.3, 2.0, 2.5, 5.0] {
        let row: Vec<String> = [0.3, 1.0, 5.0]
            .iter()
            .map(|&k| twobus::mu_cr(rho, k, consts, DEFAULT_TOL_MU).map(|m| format!("{m:8.4}")))
            .collect::<Result<_, _>>()?;
        println!("{rho:6.2} {}", row.join(""));
    }

    let w = twobus::worst_case(consts, DEFAULT_TOL_MU)?;
    println!("worst case: mu_cr_min = {:.4} at rho = {:.3}, k = {:.2}", w.mu_cr_min, w.rho, w.k);

    // roots just below and above the threshold
    for mu in [0.98 * w.mu_cr_min, 1.02 * w.mu_cr_min] {
        let re = twobus::max_real_root(mu, w.rho, w.k, consts)?;
        println!("mu = {mu:.4}: max Re = {re:+.3} rad/s");
    }

    if let Some(path) = std::env::args().nth(1) {
        let (rho, k) = twobus::display_grids();
        let s = twobus::mu_cr_surface(&rho, &k, consts, DEFAULT_TOL_MU)?;
        s.write_csv(BufWriter::new(File::create(&path)?))?;
        println!("wrote {} cells to {path}", rho.n * k.n);
    }
    Ok(())
}
