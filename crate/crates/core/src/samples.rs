//! Bundled example networks.
//!
//! - `two_bus`: two inverters joined by one line with ρ = 1.3.
//! - `two_area`: four inverters around two load buses joined by a weak tie.
//! - `feeder_surrogate`: ten inverters on a sixteen-bus radial feeder with
//!   mixed R/X ratios, a tightly coupled pair and one remote unit.

use crate::netmodel::{parse_network, NetworkSpec};

pub const TWO_BUS_JSON: &str = include_str!("../data/two_bus.json");
pub const TWO_AREA_JSON: &str = include_str!("../data/two_area.json");
pub const FEEDER_SURROGATE_JSON: &str = include_str!("../data/feeder_surrogate.json");

pub fn two_bus() -> NetworkSpec {
    parse_network(TWO_BUS_JSON).expect("bundled network is valid")
}

pub fn two_area() -> NetworkSpec {
    parse_network(TWO_AREA_JSON).expect("bundled network is valid")
}

pub fn feeder_surrogate() -> NetworkSpec {
    parse_network(FEEDER_SURROGATE_JSON).expect("bundled network is valid")
}

/// Looks a bundled network up by name.
pub fn by_name(name: &str) -> Option<NetworkSpec> {
    match name {
        "two_bus" => Some(two_bus()),
        "two_area" => Some(two_area()),
        "feeder_surrogate" => Some(feeder_surrogate()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_networks_parse() {
        assert_eq!(two_bus().inverter_count(), 2);
        assert_eq!(two_area().inverter_count(), 4);
        let f = feeder_surrogate();
        assert_eq!(f.inverter_count(), 10);
        assert_eq!(f.loads.len(), 16);
        assert!(by_name("ieee123").is_none());
    }
}
