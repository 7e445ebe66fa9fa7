//! Homogenization toolkit for thin two-dimensional domains whose top
//! boundary oscillates on the same scale as the thickness.
//!
//! The pipeline: validate a boundary profile ([`profile`]), solve periodic
//! cell problems on cross-section cells ([`geometry`], [`mesh`], [`fem2d`]),
//! tabulate the effective coefficients and solve the one-dimensional limit
//! equation ([`homog`]), then measure how fast the first-order corrector
//! closes the gap to the full 2D solution as the thickness shrinks
//! ([`corrector`], [`study`]). The [`pullback`] module cross-checks the cell
//! solver by transporting cell problems between different roofs through a
//! vertical-stretch change of variables.

pub mod corrector;
pub mod error;
pub mod fem2d;
pub mod geometry;
pub mod homog;
pub mod mesh;
pub mod par;
pub mod profile;
pub mod pullback;
pub mod study;

mod quadrature;

pub use error::{Error, Result};
