//! Toric code under single-qubit coherent noise, mapped to (generally
//! non-Hermitian) Ashkin-Teller models on the square lattice.

pub mod coupling_map;
pub mod ctmrg_engine;
pub mod error;
pub mod lattice_exact;
pub mod noise_models;
pub mod phase_scan;
pub mod scalar;
pub mod small;
pub mod staggered_vertex;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` instantiations of the generic types.
pub type Couplings = coupling_map::ATCouplings<f64>;
pub type Boltzmann = coupling_map::BoltzmannCouplings<f64>;
pub type Axis = noise_models::RotationAxis<f64>;
pub type Distribution = noise_models::AngleDistribution<f64>;
pub type Channel = noise_models::NoiseChannelSpec<f64>;
