//! Closest point queries on closed parametric plane curves.

use std::f64::consts::TAU;

use log::debug;

use crate::error::{Error, Result};

/// A smooth closed curve `r(t)`, `t ∈ [0, 2π)`, traversed counter-clockwise.
pub trait ClosedCurve {
    fn point(&self, t: f64) -> [f64; 2];
    fn d1(&self, t: f64) -> [f64; 2];
    fn d2(&self, t: f64) -> [f64; 2];

    /// Outward unit normal (tangent rotated clockwise).
    fn normal(&self, t: f64) -> [f64; 2] {
        let d = self.d1(t);
        let len = d[0].hypot(d[1]);
        [d[1] / len, -d[0] / len]
    }

    /// Signed curvature, positive where the curve bends towards its interior.
    fn curvature(&self, t: f64) -> f64 {
        let a = self.d1(t);
        let b = self.d2(t);
        (a[0] * b[1] - a[1] * b[0]) / (a[0] * a[0] + a[1] * a[1]).powf(1.5)
    }
}

/// Number of uniform samples of the coarse scan.
pub const SCAN_SAMPLES: usize = 256;
const MAX_NEWTON: usize = 100;
const CANDIDATES: usize = 4;

fn dist2<C: ClosedCurve + ?Sized>(c: &C, x: [f64; 2], t: f64) -> f64 {
    let r = c.point(t);
    (r[0] - x[0]).powi(2) + (r[1] - x[1]).powi(2)
}

/// Half the derivative of `|r(t) - x|²`.
fn optimality<C: ClosedCurve + ?Sized>(c: &C, x: [f64; 2], t: f64) -> (f64, f64) {
    let r = c.point(t);
    let d1 = c.d1(t);
    let d2 = c.d2(t);
    let e = [r[0] - x[0], r[1] - x[1]];
    let f = e[0] * d1[0] + e[1] * d1[1];
    let df = d1[0] * d1[0] + d1[1] * d1[1] + e[0] * d2[0] + e[1] * d2[1];
    (f, df)
}

/// Scale used to make the optimality residual dimensionless.
fn residual_scale<C: ClosedCurve + ?Sized>(c: &C, x: [f64; 2], t: f64) -> f64 {
    let d1 = c.d1(t);
    let speed = d1[0].hypot(d1[1]);
    speed * dist2(c, x, t).sqrt().max(1.0)
}

/// Finds the parameter of the closest point on `curve` to `x`.
///
/// A uniform scan over [`SCAN_SAMPLES`] parameters locates the discrete local
/// minima of the distance; the best few are refined with safeguarded Newton
/// iterations on `(r(t) - x)·r'(t) = 0` and the globally closest one is kept.
/// Equidistant candidates resolve to the smallest parameter.
pub fn closest_param<C: ClosedCurve + ?Sized>(curve: &C, x: [f64; 2]) -> Result<f64> {
    let n = SCAN_SAMPLES;
    let h = TAU / n as f64;
    let d: Vec<f64> = (0..n).map(|i| dist2(curve, x, i as f64 * h)).collect();
    let mut minima: Vec<usize> = (0..n)
        .filter(|&i| d[i] <= d[(i + n - 1) % n] && d[i] <= d[(i + 1) % n])
        .collect();
    minima.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    minima.truncate(CANDIDATES);

    let mut best: Option<(f64, f64)> = None;
    let mut last_err = None;
    for &i in &minima {
        let t = match refine(curve, x, i as f64 * h, h) {
            Ok(t) => t.rem_euclid(TAU),
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let dt = dist2(curve, x, t);
        best = match best {
            None => Some((t, dt)),
            Some((bt, bd)) => {
                let tol = 1e-12 * bd.max(1e-300);
                if (dt - bd).abs() <= tol && (t - bt).abs() > 1e-9 {
                    debug!("equidistant closest points at t={bt} and t={t} for x={x:?}");
                    if t < bt {
                        Some((t, dt))
                    } else {
                        Some((bt, bd))
                    }
                } else if dt < bd {
                    Some((t, dt))
                } else {
                    Some((bt, bd))
                }
            }
        };
    }
    match (best, last_err) {
        (Some((t, _)), _) => Ok(t),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::NoConvergence {
            point: [x[0], x[1], 0.0],
            best_param: 0.0,
            residual: f64::INFINITY,
        }),
    }
}

/// Safeguarded Newton refinement of a minimum near `t0` (scan spacing `h`).
fn refine<C: ClosedCurve + ?Sized>(curve: &C, x: [f64; 2], t0: f64, h: f64) -> Result<f64> {
    let (f0, _) = optimality(curve, x, t0);
    if f0 == 0.0 {
        return Ok(t0);
    }
    // Bracket a sign change of the optimality function from - to +.
    let sub = 16;
    let mut lo = t0 - h;
    let mut hi = t0 + h;
    let mut found = false;
    let mut prev_t = lo;
    let mut prev_f = optimality(curve, x, lo).0;
    for k in 1..=2 * sub {
        let t = t0 - h + k as f64 * h / sub as f64;
        let f = optimality(curve, x, t).0;
        if prev_f <= 0.0 && f >= 0.0 {
            // Prefer the bracket containing the scan point.
            let contains = prev_t <= t0 + 1e-15 && t0 <= t + 1e-15;
            if !found || contains {
                lo = prev_t;
                hi = t;
                found = true;
                if contains {
                    break;
                }
            }
        }
        prev_t = t;
        prev_f = f;
    }
    if !found {
        return Err(Error::NoConvergence {
            point: [x[0], x[1], 0.0],
            best_param: t0,
            residual: f0.abs(),
        });
    }

    let mut t = 0.5 * (lo + hi);
    let mut last_res = f64::INFINITY;
    for _ in 0..MAX_NEWTON {
        let (f, df) = optimality(curve, x, t);
        let scale = residual_scale(curve, x, t);
        last_res = f.abs() / scale;
        if last_res <= 1e-13 {
            return Ok(t);
        }
        if f < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - f / df;
        let next = if df > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= 1e-16 * t.abs().max(1.0) || hi - lo <= 1e-16 * t.abs().max(1.0) {
            let (f, _) = optimality(curve, x, next);
            last_res = f.abs() / residual_scale(curve, x, next);
            if last_res <= 1e-12 {
                return Ok(next);
            }
            break;
        }
        t = next;
    }
    Err(Error::NoConvergence {
        point: [x[0], x[1], 0.0],
        best_param: t,
        residual: last_res,
    })
}
