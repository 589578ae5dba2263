//! Closest Point (CP) and Curvature-Augmented Closest Point (CACP) solvers for
//! elliptic surface PDEs `c u - Δ_s u = m` on Cartesian grids.
//!
//! Modules, bottom-up:
//!
//! * [`grid`]: uniform grids and band classification.
//! * [`surface`]: closest points and curvature.
//! * [`interp`]: tensor-product Lagrange interpolation matrices.
//! * [`assembly`]: the CP and CACP linear systems.
//! * [`solver`]: sparse solves and condition estimates.
//! * [`axisym`]: axisymmetric embeddings and the tension solve.
//! * [`bench`]: convergence studies and nonzero growth fits.

pub mod assembly;
pub mod axisym;
pub mod bench;
pub mod error;
pub mod grid;
pub mod interp;
pub mod solver;
pub mod sparse;
pub mod surface;

pub use error::{Error, Result};

/// A point in R² or R³. Unused trailing components are zero.
pub type Point = [f64; 3];

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
