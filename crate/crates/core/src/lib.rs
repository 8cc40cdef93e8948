//! Discrete conformal maps `z^c`, `z^2` and `log z` built as cross-ratio
//! lattices and Schramm circle patterns, together with numerical checks of
//! their embeddedness, of the radius equations, of the unitary discrete
//! Painlevé II solution and of their behavior at infinity.
//!
//! The crate is `no_std` (it needs `alloc`). Lattice and Painlevé
//! propagation run in multiprecision internally; everything exposed is
//! binary64.
#![cfg_attr(not(test), no_std)]
// negated comparisons reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod mp;

pub mod asymptotics;
pub mod geometry;
pub mod lattice;
pub mod numerics;
pub mod painleve;
pub mod radii;

pub use error::{Axis, Error, Result};
pub use lattice::{
    boundary_extend, constraint_residual, dual_map, generate, generate_naive, generate_with,
    ConformalLattice, DualAnchor, FillOrder, GenerateOptions, LatticeIndex, LatticeKind,
};
pub use numerics::{cross_ratio, solve_fourth, Complex, ExtendedComplex, ToleranceConfig};
