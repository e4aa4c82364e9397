//! Solver suite for the dimensionless two-species PSA adsorption system
//!
//! ```text
//! ∂ₓ(u c) + ∂ₜ I(c) = 0,    ∂ₓ u + ∂ₜ h(c) = 0,
//! ```
//!
//! where the column coordinate `x` plays the role of evolution variable.
//!
//! - [`isotherm`]: closed-form isotherms and the derived functions `h, I, f, H, a, A±, g, G`.
//! - [`kinetic`]: the kinetic upwind scheme marching in `x`, with its diagnostics.
//! - [`riemann`]: exact self-similar Riemann solver (convex-envelope wave fan).
//! - [`harness`]: TOML configuration, scheme-vs-exact comparison, sweeps and CSV output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod isotherm;
pub mod kinetic;
pub mod numeric;
pub mod riemann;

pub use error::{HarnessError, IsothermError, QuadratureError, RiemannError, SchemeError};
pub use isotherm::{BetForm, DerivedFunctions, Isotherm, IsothermModel, PointValues};
