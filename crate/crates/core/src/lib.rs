//! Simulation and exact-computation workbench for cyclic Pólya urns.
//!
//! A cyclic urn holds balls of types `0..m`. Each step draws a ball uniformly,
//! returns it, and adds a ball of the next type modulo `m`. The crate covers
//! the spectral structure of that process, fast seeded simulation, exact
//! rational and product-form moments, the martingale and residual chain
//! around the periodic limit, the binary-search-tree split and its
//! fixed-point sampler, and the statistical verdicts tying these together.

pub mod error;
pub mod exact;
pub mod fixpoint;
pub mod gamma;
pub mod residual;
pub mod spectral;
pub mod stats;
pub mod urn;
pub mod verify;

pub use error::{Result, UrnError};
