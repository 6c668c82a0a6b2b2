//! Grid-search cost against the region computation.

use droopstab::validate::bench::{growth_exponent, OP_EIGEN, OP_REGION};
use droopstab::validate::{benchmark, complexity};

fn main() -> droopstab::Result<()> {
    for v in [4, 10, 20] {
        let c = complexity(v, 0.5, 100.0)?;
        println!("v = {v:2}: a 0.5% mesh needs 10^{:.1} eigensolves", c.log10_points);
    }

    let rows = benchmark(&[4, 8, 16, 32], 3, 1)?;
    for r in &rows {
        println!("v = {:2} {:<16} {:9.3} ms", r.v, r.op, r.median_ms);
    }
    for op in [OP_REGION, OP_EIGEN] {
        if let Some(p) = growth_exponent(&rows, op) {
            println!("{op}: time ~ v^{p:.2}");
        }
    }
    Ok(())
}
