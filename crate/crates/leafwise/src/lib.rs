//! Bounded solution operators for the damped transport equation
//! `u + Xu = v` along the leaves of one-dimensional foliations.
//!
//! The plain equation `du/dt = v` along a leaf has no bounded solution even
//! for `v = 1`; adding the zeroth-order term fixes that, and multiplying by
//! `e^t` gives the integrating-factor form `(e^t u)' = e^t v` whose bounded
//! solution is an exponentially weighted average of the past of `v`. This
//! crate evaluates that operator numerically, with a truncation depth
//! certified by the input's sup-norm bound, across a family of concrete
//! geometries:
//!
//! - the real line and periodic leaves ([`operator`]);
//! - the linear irrational flow on the torus, and the spiral foliation of
//!   the annulus between two circles with its chart transforms and induced
//!   tangent field ([`geometry`]);
//! - general flows of non-vanishing vector fields, with derivative checks of
//!   the solution through differentiation under the integral ([`flow`]);
//! - a vector field with zeros on the line (solvable with the `x e^|x|`
//!   weight) and on the circle (provably obstructed) ([`singular`]);
//! - rank-1 bundles over covers with multiplicative transition constants,
//!   cocycle verification and section gluing ([`bundle`]).
//!
//! # Quick start
//!
//! ```
//! use leafwise::catalog::LeafFunction;
//! use leafwise::operator::{solve_on_line, OperatorConfig};
//!
//! let v = LeafFunction::constant(1.0).unwrap();
//! let grid: Vec<f64> = (0..41).map(|k| -2.0 + 0.1 * k as f64).collect();
//! let u = solve_on_line(&v, &grid, &OperatorConfig::default()).unwrap();
//! assert!(u.values().iter().all(|&x| (x - 1.0).abs() < 1e-9));
//! ```
//!
//! The `examples/` directory carries one runnable program per capability;
//! the `leafwise` binary exposes the same scenarios as subcommands and
//! writes CSV plus a run report.

pub mod bundle;
pub mod catalog;
pub mod cli;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod operator;
mod quadrature;
pub mod singular;
pub mod verify;

pub use error::{Error, Result};
