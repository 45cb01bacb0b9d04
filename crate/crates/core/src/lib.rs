//! Simulation and verification lab for two-dimensional Euler flow with
//! nonnegative vorticity on domains with singular boundaries.
//!
//! Everything is computed disc-side: a domain is described by the tangent
//! angle data of its boundary, the Riemann map `S: D -> Omega` is built from
//! that data, and vortex particles live in the unit disc.

pub mod advect;
pub mod conformal;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod numerics;
pub mod quadrature;
pub mod verify;

pub use advect::{simulate, backward_simulate, step, ConservationLog, SimConfig, Trajectory};
pub use conformal::{image, ConformalMap, DiskPoint, PhysicalPoint};
pub use error::{Error, Result};
pub use field::{FieldSample, VortexField};
pub use geometry::{compute_delta, validate_domain, Domain, DomainSpec, StructuralConstants};
pub use verify::EstimateReport;

pub use num_complex::Complex64;
