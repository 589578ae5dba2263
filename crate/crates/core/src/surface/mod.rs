//! Geometry providers for the test surfaces and the data fields of the
//! model problems posed on them.
//!
//! Every surface answers one query, [`Surface::project`], which bundles the
//! closest point, the signed distance (positive outside) and the curvature
//! evaluated at the closest point. Data fields are embedded by composition
//! with the closest point map, `c(x) = c̃(cp(x))`, `m(x) = m̃(cp(x))`.

mod clover;
pub mod curve;

use std::f64::consts::PI;

pub use clover::{clover_closest_param, clover_curvature, clover_forcing, CloverSurface};

use crate::error::Result;
use crate::{norm, Point};

/// Closest point data for a query point `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// `cp(x)`.
    pub point: Point,
    /// Signed distance `phi(x)`, positive outside.
    pub distance: f64,
    /// Curvature (first principal curvature in R³) at `cp(x)`.
    pub kappa: f64,
    /// Second principal curvature at `cp(x)`; zero for curves.
    pub h: f64,
    /// Outward unit normal at `cp(x)`.
    pub normal: Point,
    /// Surface parameters of `cp(x)`: `θ` for curves, `(θ, ψ)` on the sphere.
    pub param: [f64; 2],
}

impl Projection {
    /// `1 + phi * kappa`.
    pub fn stretch(&self) -> f64 {
        1.0 + self.distance * self.kappa
    }

    /// `1 + phi * h`.
    pub fn stretch_h(&self) -> f64 {
        1.0 + self.distance * self.h
    }
}

/// Embedded coefficient and forcing of `c u - Δ_s u = m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataFields {
    pub c: f64,
    pub m: f64,
}

/// A closed surface of codimension one together with a model problem.
pub trait Surface: Sync {
    /// Dimension of the embedding space.
    fn dim(&self) -> usize;

    fn project(&self, x: &Point) -> Result<Projection>;

    /// Cheap lower bound on `|phi(x)|`, used to skip far-away nodes.
    fn distance_lower_bound(&self, _x: &Point) -> f64 {
        0.0
    }

    /// `(c̃, m̃)` at the closest point described by `proj`.
    fn data(&self, proj: &Projection) -> DataFields;

    /// Exact solution at the closest point, when known.
    fn exact_solution(&self, proj: &Projection) -> Option<f64>;

    /// Whether distance and curvature have closed forms valid anywhere in
    /// the tube, as opposed to being obtained per grid node by a search.
    fn analytic_geometry(&self) -> bool {
        true
    }

    /// Principal tangent directions at the closest point (R³ only).
    fn principal_tangents(&self, _proj: &Projection) -> Option<[Point; 2]> {
        None
    }
}

pub fn closest_point<S: Surface + ?Sized>(surface: &S, x: &Point) -> Result<Point> {
    Ok(surface.project(x)?.point)
}

pub fn data_fields<S: Surface + ?Sized>(surface: &S, x: &Point) -> Result<DataFields> {
    Ok(surface.data(&surface.project(x)?))
}

/// Circle of radius `R` centred at the origin with exact solution
/// `u(θ) = sin θ + sin 12θ` and `c̃ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleSurface {
    pub radius: f64,
}

impl Default for CircleSurface {
    fn default() -> Self {
        Self { radius: 1.0 }
    }
}

impl Surface for CircleSurface {
    fn dim(&self) -> usize {
        2
    }

    fn project(&self, x: &Point) -> Result<Projection> {
        let r = x[0].hypot(x[1]);
        let n = if r < 1e-14 {
            // Every point of the circle is equidistant; take θ = 0.
            log::debug!("ambiguous closest point at {x:?}, taking theta = 0");
            [1.0, 0.0, 0.0]
        } else {
            [x[0] / r, x[1] / r, 0.0]
        };
        Ok(Projection {
            point: [self.radius * n[0], self.radius * n[1], 0.0],
            distance: r - self.radius,
            kappa: 1.0 / self.radius,
            h: 0.0,
            normal: n,
            param: [n[1].atan2(n[0]), 0.0],
        })
    }

    fn distance_lower_bound(&self, x: &Point) -> f64 {
        (x[0].hypot(x[1]) - self.radius).abs()
    }

    fn data(&self, proj: &Projection) -> DataFields {
        let t = proj.param[0];
        let r2 = self.radius * self.radius;
        DataFields {
            c: 1.0,
            m: t.sin() + (12.0 * t).sin() + (t.sin() + 144.0 * (12.0 * t).sin()) / r2,
        }
    }

    fn exact_solution(&self, proj: &Projection) -> Option<f64> {
        let t = proj.param[0];
        Some(t.sin() + (12.0 * t).sin())
    }
}

/// Sphere of radius `R` centred at the origin.
///
/// The model solution is the degree-5 spherical harmonic
/// `cos 3θ sin³ψ (9 cos²ψ - 1)` with `θ` the azimuth and `ψ` the polar
/// angle from the `z` axis, i.e. `(x³ - 3xy²)(9z² - 1)` on the unit sphere.
/// Its Laplace-Beltrami eigenvalue is `-30 / R²`, so `m̃ = (1 + 30/R²) u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSurface {
    pub radius: f64,
}

impl Default for SphereSurface {
    fn default() -> Self {
        Self { radius: 1.0 }
    }
}

/// `cos 3θ sin³ψ (9 cos²ψ - 1)` at the unit vector `n`.
pub fn sphere_harmonic(n: &Point) -> f64 {
    (n[0].powi(3) - 3.0 * n[0] * n[1] * n[1]) * (9.0 * n[2] * n[2] - 1.0)
}

/// Laplace-Beltrami eigenvalue of [`sphere_harmonic`] on the unit sphere.
pub const SPHERE_HARMONIC_EIGENVALUE: f64 = -30.0;

impl Surface for SphereSurface {
    fn dim(&self) -> usize {
        3
    }

    fn project(&self, x: &Point) -> Result<Projection> {
        let r = norm(x);
        let n = if r < 1e-14 {
            log::debug!("ambiguous closest point at {x:?}, taking theta = psi = 0");
            [0.0, 0.0, 1.0]
        } else {
            [x[0] / r, x[1] / r, x[2] / r]
        };
        let theta = n[1].atan2(n[0]);
        let psi = n[2].clamp(-1.0, 1.0).acos();
        Ok(Projection {
            point: [self.radius * n[0], self.radius * n[1], self.radius * n[2]],
            distance: r - self.radius,
            kappa: 1.0 / self.radius,
            h: 1.0 / self.radius,
            normal: n,
            param: [theta, psi],
        })
    }

    fn distance_lower_bound(&self, x: &Point) -> f64 {
        (norm(x) - self.radius).abs()
    }

    fn data(&self, proj: &Projection) -> DataFields {
        let u = sphere_harmonic(&proj.normal);
        let r2 = self.radius * self.radius;
        DataFields {
            c: 1.0,
            m: u - SPHERE_HARMONIC_EIGENVALUE / r2 * u,
        }
    }

    fn exact_solution(&self, proj: &Projection) -> Option<f64> {
        Some(sphere_harmonic(&proj.normal))
    }

    fn principal_tangents(&self, proj: &Projection) -> Option<[Point; 2]> {
        let [theta, psi] = proj.param;
        let e_theta = [-theta.sin(), theta.cos(), 0.0];
        let e_psi = [theta.cos() * psi.cos(), theta.sin() * psi.cos(), -psi.sin()];
        Some([e_theta, e_psi])
    }
}

/// Wraps a parameter into `[0, 2π)`.
pub(crate) fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}
