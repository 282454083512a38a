//! Numerical toolkit for the cubic fourth-order Schrödinger equation
//! `i∂ₜu − ∂ₓ⁴u + λ|u|²u = 0` on star graphs.
//!
//! - [`vertex_algebra`]: coupling matrices of the vertex conditions, their
//!   determinants and the γ-solve.
//! - [`fractional`]: Riemann–Liouville integrals and derivatives.
//! - [`forcing_kernel`]: the kernel `B`, free group, Duhamel term, boundary
//!   forcing operators `L^λ` and the linear reconstruction on a star graph.
//! - [`graph_sim`]: Crank–Nicolson simulation on a truncated star graph.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod forcing_kernel;
pub mod fractional;
pub mod graph_sim;
pub mod io;
pub mod linalg;
pub mod vertex_algebra;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
