//! Small-signal stability certification for droop-controlled inverter
//! networks.
//!
//! A network is Kron-reduced onto its inverters ([`netmodel`]). The droop
//! gains and the reduced matrix form a generalized Laplacian ([`laplacian`])
//! whose eigenvalues each map to a fifth-order two-bus problem
//! ([`twobus`]). Keeping every eigenvalue below the worst two-bus threshold
//! certifies the whole network, which yields closed-form droop regions
//! ([`regions`]). [`statespace`] holds the full linearized model used to
//! check those regions, and [`validate`] runs the experiments.

pub mod cli;
pub mod error;
pub mod laplacian;
pub mod linalg;
pub mod netmodel;
pub mod parallel;
pub mod regions;
pub mod samples;
pub mod statespace;
pub mod twobus;
pub mod validate;

pub use error::{Error, Result};
pub use laplacian::{generalized_laplacian, gershgorin, mu_spectrum, MuSpectrum};
pub use netmodel::{parse_network, reduce_network, NetworkSpec, ReducedNetwork, TimeConstants};
pub use regions::{certify, region, CertifiedRegion, Certification, RegionVariant};
pub use statespace::{assemble_full, assemble_homogeneous, spectrum, verdict, DroopConfig, Spectrum, Verdict};
pub use twobus::{mu_cr, mu_cr_surface, worst_case, MuCrSurface, WorstCase};
