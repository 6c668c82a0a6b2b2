//! Parse a small grid with a virtual junction and a load bus, then reduce it
//! to its inverters.

use droopstab::netmodel::{check_homogeneous_rho, reactance_laplacian, reduce_network};
use droopstab::parse_network;

const GRID: &str = r#"{
  "buses": [
    {"id": "A", "kind": "inverter"},
    {"id": "B", "kind": "inverter"},
    {"id": "C", "kind": "inverter"},
    {"id": "J", "kind": "virtual"},
    {"id": "L", "kind": "load"}
  ],
  "lines": [
    {"from": "A", "to": "J", "r": 0.08, "x": 0.1},
    {"from": "B", "to": "J", "r": 0.16, "x": 0.2},
    {"from": "J", "to": "L", "r": 0.04, "x": 0.05},
    {"from": "L", "to": "C", "r": 0.24, "x": 0.3}
  ],
  "loads": {"L": {"r": 1.2, "x": 0.4}}
}"#;

fn main() -> droopstab::Result<()> {
    let net = parse_network(GRID)?;
    println!("{} buses, {} lines", net.buses.len(), net.lines.len());
    println!("uniform R/X: {:?}", check_homogeneous_rho(&net, 1e-9).uniform());

    println!("reactance Laplacian:{:.3}", reactance_laplacian(&net));
    let rn = reduce_network(&net)?;
    println!("reduced onto {:?}:{:.4}", rn.inverter_ids, rn.scaled);
    // rows of a Laplacian sum to zero
    for (id, row) in rn.inverter_ids.iter().zip(rn.scaled.row_iter()) {
        println!("  row {id}: sum {:+.1e}", row.sum());
    }
    Ok(())
}
