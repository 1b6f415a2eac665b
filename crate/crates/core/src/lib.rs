//! Simulation and analysis toolkit for the subcritical two-dimensional
//! random cluster (Fortuin-Kasteleyn) model: sampling, outermost circuits,
//! Wulff shapes, regeneration sites, surgeries and area-conditioned chains.

pub mod circuits;
pub mod conditioning;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod regeneration;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod surgery;
pub mod wulff;

pub use error::{Error, Result};
pub use lattice::{BondConfig, BondGraph, BoundaryCondition, EdgeListGraph, EdgeSet, LatticeBox, Site};
pub use sampler::FKParams;
