//! Numerical laboratory for iteration of transcendental entire functions of
//! small growth: growth profiling (M(r), m(r), order), log-domain
//! verification of connectedness certificates for escaping sets, and grid
//! approximation of escaping sets with connectivity analysis.
//!
//! The crate is generic over the floating-point scalar through [`Real`]
//! (f32 or f64); the `*64` aliases below are the concrete types the CLI and
//! most callers use.

// validation deliberately uses `!(x > y)` so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod criteria;
pub mod grid;
pub mod profile;
pub mod scalar;

pub use catalog::{CatalogError, EvalResult, FunctionSpec, Orbit, OrbitExit, ZeroRadiiRule};
pub use scalar::Real;

/// Concrete f64 aliases.
pub type FunctionSpec64 = catalog::FunctionSpec<f64>;
pub type EvalResult64 = catalog::EvalResult<f64>;
pub type Orbit64 = catalog::Orbit<f64>;
pub type RadialProfile64 = profile::RadialProfile<f64>;
pub type GrowthReport64 = profile::GrowthReport<f64>;
pub type BakerCertificate64 = criteria::BakerCertificate<f64>;
pub type CurveCheck64 = criteria::CurveCheck<f64>;
pub type GridSpec64 = grid::GridSpec<f64>;
pub type EscapeGrid64 = grid::EscapeGrid<f64>;
