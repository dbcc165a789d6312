//! Spectral fractional Laplacian `(-Δ)^s`, `1/2 < s < 1`, on intervals and
//! rectangles with mixed Dirichlet–Neumann boundary data.
//!
//! Two independent discretizations are provided:
//!
//! * [`spectral`]: eigenexpansion over the mass-orthonormal eigenpairs of the
//!   discrete mixed Laplacian ([`eigenbasis`]);
//! * [`extension`]: the degenerate elliptic problem `-div(y^{1-2s} ∇U) = 0`
//!   on a truncated, graded cylinder whose weighted conormal derivative at
//!   `y = 0` recovers the fractional operator.
//!
//! [`regularity`] holds the level-set, oscillation and Hölder diagnostics and
//! the De Giorgi iteration thresholds; [`experiments`] wires everything into
//! reproducible studies driven by a flat key/value config.

pub mod eigenbasis;
pub mod error;
pub mod experiments;
pub mod extension;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod regularity;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{BoundaryArc, BoundaryPartition, DomainSpec, Edge, Grid, GridFunction, MovingFamily, NodeTag};
