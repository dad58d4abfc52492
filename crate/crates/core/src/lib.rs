//! Finite-volume Gibbs measures on path space relative to a P(φ)₁ reference
//! process: spectral data of `-½Δ + V`, exact grid sampling of the reference
//! chain, double-time interaction energies, MCMC and brute-force samplers, and
//! numerical diagnostics for tightness and infinite-volume limits.

pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod io;
pub mod model;
pub mod quadrature;
pub mod reference;
pub mod rng;
pub mod sampler;
pub mod spectral;
pub mod stats;

pub use energy::{apply_shift, doubled_energy, energy, DoubledPath, EnergyRegion};
pub use error::{Error, Result};
pub use model::{PairPotentialW, PotentialV};
pub use reference::{Path, ReferenceChain, TimeGrid};
pub use spectral::{heat_kernel, solve_ground_state, GroundState, HeatKernel, SpaceGrid};
