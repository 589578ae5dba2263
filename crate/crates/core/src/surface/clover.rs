use std::f64::consts::PI;

use super::curve::{closest_param, ClosedCurve};
use super::{wrap_angle, DataFields, Projection, Surface};
use crate::error::Result;
use crate::Point;

/// Star-shaped curve `r(θ) = g(θ)(cos θ, sin θ)` with
/// `g(θ) = 1 + A cos(4θ - π)`. The default amplitude is `A = 0.25`.
///
/// The model solution is `u(θ) = sin θ + sin 12θ` with `c̃ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloverSurface {
    pub amplitude: f64,
}

impl Default for CloverSurface {
    fn default() -> Self {
        Self { amplitude: 0.25 }
    }
}

impl CloverSurface {
    /// `(g, g_θ, g_θθ)`.
    pub fn profile(&self, t: f64) -> (f64, f64, f64) {
        let a = self.amplitude;
        let s = 4.0 * t - PI;
        (1.0 + a * s.cos(), -4.0 * a * s.sin(), -16.0 * a * s.cos())
    }
}

impl ClosedCurve for CloverSurface {
    fn point(&self, t: f64) -> [f64; 2] {
        let (g, _, _) = self.profile(t);
        [g * t.cos(), g * t.sin()]
    }

    fn d1(&self, t: f64) -> [f64; 2] {
        let (g, g1, _) = self.profile(t);
        let (s, c) = t.sin_cos();
        [g1 * c - g * s, g1 * s + g * c]
    }

    fn d2(&self, t: f64) -> [f64; 2] {
        let (g, g1, g2) = self.profile(t);
        let (s, c) = t.sin_cos();
        [g2 * c - 2.0 * g1 * s - g * c, g2 * s + 2.0 * g1 * c - g * s]
    }

    fn curvature(&self, t: f64) -> f64 {
        let (g, g1, g2) = self.profile(t);
        clover_curvature_from(g, g1, g2)
    }
}

fn clover_curvature_from(g: f64, g1: f64, g2: f64) -> f64 {
    (g * g - g2 * g + 2.0 * g1 * g1) / (g1 * g1 + g * g).powf(1.5)
}

/// Curvature of the default clover at parameter `θ`.
pub fn clover_curvature(theta: f64) -> f64 {
    CloverSurface::default().curvature(theta)
}

/// Parameter of the closest point of the default clover to `x`.
pub fn clover_closest_param(x: [f64; 2]) -> Result<f64> {
    closest_param(&CloverSurface::default(), x)
}

/// Forcing `m̃ = -u_θθ/(g_θ² + g²) + (g_θ g_θθ + g g_θ) u_θ/(g_θ² + g²)² + u`
/// that makes `u` the solution of `u - Δ_s u = m̃` on the clover.
pub fn clover_forcing(g: (f64, f64, f64), u: (f64, f64, f64)) -> f64 {
    let (g0, g1, g2) = g;
    let (u0, u1, u2) = u;
    let s = g1 * g1 + g0 * g0;
    -u2 / s + (g1 * g2 + g0 * g1) * u1 / (s * s) + u0
}

fn model_solution(t: f64) -> (f64, f64, f64) {
    (
        t.sin() + (12.0 * t).sin(),
        t.cos() + 12.0 * (12.0 * t).cos(),
        -t.sin() - 144.0 * (12.0 * t).sin(),
    )
}

impl Surface for CloverSurface {
    fn dim(&self) -> usize {
        2
    }

    fn project(&self, x: &Point) -> Result<Projection> {
        let t = wrap_angle(closest_param(self, [x[0], x[1]])?);
        let r = self.point(t);
        let n = self.normal(t);
        let dist = (x[0] - r[0]).hypot(x[1] - r[1]);
        // Star-shaped about the origin: outside iff |x| > g(atan2(x)).
        let (g_x, _, _) = self.profile(x[1].atan2(x[0]));
        let sign = if x[0].hypot(x[1]) > g_x { 1.0 } else { -1.0 };
        Ok(Projection {
            point: [r[0], r[1], 0.0],
            distance: sign * dist,
            kappa: self.curvature(t),
            h: 0.0,
            normal: [n[0], n[1], 0.0],
            param: [t, 0.0],
        })
    }

    fn analytic_geometry(&self) -> bool {
        false
    }

    fn distance_lower_bound(&self, x: &Point) -> f64 {
        let r = x[0].hypot(x[1]);
        let a = self.amplitude.abs();
        ((1.0 - a) - r).max(r - (1.0 + a)).max(0.0)
    }

    fn data(&self, proj: &Projection) -> DataFields {
        let t = proj.param[0];
        DataFields {
            c: 1.0,
            m: clover_forcing(self.profile(t), model_solution(t)),
        }
    }

    fn exact_solution(&self, proj: &Projection) -> Option<f64> {
        Some(model_solution(proj.param[0]).0)
    }
}
