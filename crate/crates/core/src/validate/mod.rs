//! Numerical experiments that check the certified regions against the full
//! model.

pub mod bench;
pub mod boundary;
pub mod complexity;
pub mod montecarlo;
pub mod stationarity;
pub mod synth;

pub use bench::{benchmark, BenchRow};
pub use boundary::{true_boundary, BoundaryPoint};
pub use complexity::{complexity, ComplexityEstimate};
pub use montecarlo::{monte_carlo, SampleReport, SamplerSpec};
pub use stationarity::{stationarity_check, StationarityReport};
