//! Numerical toolkit for isometric immersions of the flat unit disk
//! `D^m` into `R^d`.
//!
//! The library computes the first- and second-order extrinsic invariants of
//! an immersion (strain, second fundamental form, shape operators, flatness
//! residuals), the relative-nullity stratification of the disk, straight
//! generator segments inside nullity leaves, the epsilon-jump chaining that
//! extends them to the boundary, and span/confinement reports — including
//! the explicit map that confines the disk into an arbitrarily small ball
//! once the ambient dimension reaches `2m`.
//!
//! Entry points:
//! - [`immersion::ImmersionSpec`]: built-in analytic families and sampled grids.
//! - [`geometry`]: strain, normal frames, second fundamental form, residuals.
//! - [`nullity`]: flat forms, kernels, the constructive null vector, strata.
//! - [`generators`]: straightness checks, tracing, chaining to the boundary.
//! - [`span`]: distances, span estimates, confinement reports.
//! - [`sweep`]: a seeded property sweep over curvature forms.

pub mod error;
pub mod generators;
pub mod geometry;
pub mod grid;
pub mod immersion;
pub mod nullity;
pub mod span;
pub mod sweep;
pub mod tol;

pub use error::{Error, Result};
pub use grid::DomainGrid;
pub use immersion::{DerivativeMode, ImmersionKind, ImmersionSpec, JetAtPoint, SampledGrid};
