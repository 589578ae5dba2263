//! Axisymmetric embeddings on the meridian plane.
//!
//! A surface of revolution about the `y` axis is described by its generating
//! curve `r(σ) = (x(σ), y(σ))`. The curve is handled as a closed plane curve
//! symmetric about `x = 0`, so `σ ∈ (0, π)` traces the `x > 0` half and the
//! poles sit at `σ = 0` and `σ = π`.
//!
//! With principal curvatures `κ` (meridional) and `h` (azimuthal), the
//! embedded operators on the meridian grid are
//!
//! ```text
//! ∇_s γ   = (1 + φκ) ∇γ
//! Δ_s γ   = (1 + φκ)(1 + φh) ∇·((1 + φκ)/(1 + φh) ∇γ)
//! ∇_s·f_t = (1 + φκ)(1 + φh) ∇·(f_t/(1 + φh))
//! ```
//!
//! where `∇·F = x⁻¹ ∂_x(x F_x) + ∂_y F_y` and `f_t` is tangential. The
//! unknowns live on band nodes with `x ≥ 0`; nodes across the axis fold
//! onto their mirror image with even parity for scalars and for axial
//! components, odd parity for radial components.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use crate::assembly::{Band, BandNode};
use crate::error::{Error, Result};
use crate::grid::{BandMap, ClassifyOptions, GridSpec, NodeIndex, NodeLabel};
use crate::interp::build_interp_matrix_with;
use crate::sparse::{CsrBuilder, CsrMatrix};
use crate::surface::curve::{closest_param, ClosedCurve};
use crate::surface::{DataFields, Projection, Surface};
use crate::Point;

/// Below this radius a point counts as on the axis.
pub const AXIS_TOL: f64 = 1e-8;

/// Spheroid with meridian `x = a sin σ`, `y = -c cos σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spheroid {
    /// Equatorial radius.
    pub a: f64,
    /// Polar semi-axis along `y`.
    pub c: f64,
}

impl Spheroid {
    pub fn sphere(radius: f64) -> Self {
        Self {
            a: radius,
            c: radius,
        }
    }
}

impl ClosedCurve for Spheroid {
    fn point(&self, t: f64) -> [f64; 2] {
        [self.a * t.sin(), -self.c * t.cos()]
    }

    fn d1(&self, t: f64) -> [f64; 2] {
        [self.a * t.cos(), self.c * t.sin()]
    }

    fn d2(&self, t: f64) -> [f64; 2] {
        [-self.a * t.sin(), self.c * t.cos()]
    }
}

/// Meridional arc-length speed `|r_σ|`.
fn speed<C: ClosedCurve + ?Sized>(c: &C, t: f64) -> f64 {
    let d = c.d1(t);
    d[0].hypot(d[1])
}

/// Azimuthal curvature `h = y_σ / (x |r_σ|)`, with the umbilic limit `h = κ`
/// on the axis.
pub fn azimuthal_curvature<C: ClosedCurve + ?Sized>(c: &C, t: f64) -> f64 {
    let x = c.point(t)[0];
    if x.abs() < AXIS_TOL {
        c.curvature(t)
    } else {
        c.d1(t)[1] / (x * speed(c, t))
    }
}

/// Axisymmetric scalar fields given as functions of the meridian point,
/// returning `(γ, γ_σ, γ_σσ)` along the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZonalField {
    /// `γ = 1`.
    Constant,
    /// `γ = y`.
    Height,
    /// `γ = (3y² - 1)/2`.
    Legendre2,
}

impl ZonalField {
    pub fn eval<C: ClosedCurve + ?Sized>(&self, c: &C, t: f64) -> (f64, f64, f64) {
        let y = c.point(t)[1];
        let y1 = c.d1(t)[1];
        let y2 = c.d2(t)[1];
        match self {
            ZonalField::Constant => (1.0, 0.0, 0.0),
            ZonalField::Height => (y, y1, y2),
            ZonalField::Legendre2 => (
                0.5 * (3.0 * y * y - 1.0),
                3.0 * y * y1,
                3.0 * (y1 * y1 + y * y2),
            ),
        }
    }
}

/// Laplace-Beltrami of an axisymmetric field along the generating curve,
/// `(x|r_σ|)⁻¹ (x γ_σ / |r_σ|)_σ`, from the field's σ-derivatives.
pub fn meridian_laplace_beltrami<C: ClosedCurve + ?Sized>(
    c: &C,
    t: f64,
    g: (f64, f64, f64),
) -> f64 {
    let (_, g1, g2) = g;
    let r = c.point(t);
    let d1 = c.d1(t);
    let d2 = c.d2(t);
    let s = d1[0].hypot(d1[1]);
    let s1 = (d1[0] * d2[0] + d1[1] * d2[1]) / s;
    // x_σ γ_σ / x tends to γ_σσ at a pole, where x and γ_σ vanish together.
    let radial = if r[0].abs() < AXIS_TOL {
        g2
    } else {
        d1[0] * g1 / r[0]
    };
    radial / (s * s) + g2 / (s * s) - g1 * s1 / (s * s * s)
}

/// Generating curve plus a manufactured tension problem
/// `H² γ - Δ_s γ = m` with exact solution `field`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisymGeometry<C> {
    pub curve: C,
    pub field: ZonalField,
}

impl<C: ClosedCurve> AxisymGeometry<C> {
    pub fn new(curve: C, field: ZonalField) -> Self {
        Self { curve, field }
    }

    /// `H = κ + h` at parameter `t`.
    pub fn total_curvature(&self, t: f64) -> f64 {
        self.curve.curvature(t) + azimuthal_curvature(&self.curve, t)
    }

    /// Unit tangent `r_σ / |r_σ|` in the meridian plane.
    pub fn tangent(&self, t: f64) -> [f64; 2] {
        let d = self.curve.d1(t);
        let s = d[0].hypot(d[1]);
        [d[0] / s, d[1] / s]
    }
}

impl<C: ClosedCurve + Sync> Surface for AxisymGeometry<C> {
    fn dim(&self) -> usize {
        2
    }

    fn project(&self, x: &Point) -> Result<Projection> {
        let t = closest_param(&self.curve, [x[0], x[1]])?.rem_euclid(TAU);
        let r = self.curve.point(t);
        let n = self.curve.normal(t);
        let e = [x[0] - r[0], x[1] - r[1]];
        let dist = e[0].hypot(e[1]);
        let sign = if e[0] * n[0] + e[1] * n[1] >= 0.0 {
            1.0
        } else {
            -1.0
        };
        Ok(Projection {
            point: [r[0], r[1], 0.0],
            distance: sign * dist,
            kappa: self.curve.curvature(t),
            h: azimuthal_curvature(&self.curve, t),
            normal: [n[0], n[1], 0.0],
            param: [t, 0.0],
        })
    }

    fn data(&self, proj: &Projection) -> DataFields {
        let t = proj.param[0];
        let g = self.field.eval(&self.curve, t);
        let h = proj.kappa + proj.h;
        DataFields {
            c: h * h,
            m: h * h * g.0 - meridian_laplace_beltrami(&self.curve, t, g),
        }
    }

    fn exact_solution(&self, proj: &Projection) -> Option<f64> {
        Some(self.field.eval(&self.curve, proj.param[0]).0)
    }
}

/// Parity of a folded quantity under `x → -x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Band on the meridian grid restricted to `x ≥ 0`.
///
/// The grid must be symmetric about `x = 0` with an even number of cells so
/// that the axis is a grid column.
#[derive(Debug, Clone)]
pub struct AxisymBand {
    band: Band,
    axis: usize,
}

impl AxisymBand {
    pub fn build<S: Surface + ?Sized>(
        grid: &GridSpec,
        surface: &S,
        opts: &ClassifyOptions,
    ) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::Config("meridian grids are 2D".into()));
        }
        let axis_pos = -grid.lower()[0] / grid.dx();
        let axis = axis_pos.round();
        if (axis_pos - axis).abs() > 1e-9 || axis <= 0.0 || axis as usize >= grid.cells() {
            return Err(Error::Config(
                "the axis x = 0 must be an interior grid column".into(),
            ));
        }
        let axis = axis as usize;
        let classes = crate::grid::classify_nodes_with(grid, surface, opts)?;
        let map = BandMap::from_predicate(grid.node_count(), |lin| {
            classes.label(lin) != NodeLabel::Outside && grid.node_index(lin)[0] >= axis
        });
        let band = Band::from_parts(grid.clone(), classes, map, surface)?;
        Ok(Self { band, axis })
    }

    pub fn band(&self) -> &Band {
        &self.band
    }

    pub fn grid(&self) -> &GridSpec {
        self.band.grid()
    }

    pub fn len(&self) -> usize {
        self.band.len()
    }

    pub fn is_empty(&self) -> bool {
        self.band.is_empty()
    }

    pub fn nodes(&self) -> &[BandNode] {
        self.band.nodes()
    }

    /// Grid column of the axis.
    pub fn axis_column(&self) -> usize {
        self.axis
    }

    /// Row holding `node` and the sign its value picks up for `parity`.
    pub fn fold(&self, node: NodeIndex, parity: Parity) -> Option<(usize, f64)> {
        let (n, sign) = if node[0] < self.axis {
            let mirrored = [2 * self.axis - node[0], node[1], node[2]];
            let s = match parity {
                Parity::Even => 1.0,
                Parity::Odd => -1.0,
            };
            (mirrored, s)
        } else {
            (node, 1.0)
        };
        if n[0] > self.grid().cells() {
            return None;
        }
        let row = self.band.map().row_of(self.grid().linear_index(n))?;
        Some((row, sign))
    }

    fn neighbour(
        &self,
        row: usize,
        axis: usize,
        step: i64,
        parity: Parity,
    ) -> Result<(usize, f64)> {
        let node = self.nodes()[row].node;
        let mut idx = [node[0] as i64, node[1] as i64, 0];
        idx[axis] += step;
        let nb = self
            .grid()
            .checked_node(idx)
            .ok_or(Error::StencilOutOfGrid {
                point: self.nodes()[row].coord,
                degree: 1,
            })?;
        self.fold(nb, parity)
            .ok_or(Error::NodeNotInBand { node: nb, row })
    }

    fn on_axis(&self, row: usize) -> bool {
        self.nodes()[row].node[0] == self.axis
    }

    /// Cubic interpolation matrix onto the closest points with even folding.
    pub fn interp_matrix(&self) -> Result<CsrMatrix> {
        build_interp_matrix_with(
            self.grid(),
            self.len(),
            &self.band.closest_points(),
            3,
            |n| self.fold(n, Parity::Even).map(|(r, _)| r),
        )
    }

    /// Writes `i,j,x,y,<name>` over the band.
    pub fn write_field_csv<W: Write>(&self, mut out: W, name: &str, values: &[f64]) -> Result<()> {
        writeln!(out, "i,j,x,y,{name}")?;
        for (n, v) in self.nodes().iter().zip(values) {
            writeln!(
                out,
                "{},{},{:.17e},{:.17e},{:.17e}",
                n.node[0], n.node[1], n.coord[0], n.coord[1], v
            )?;
        }
        Ok(())
    }
}

fn tube(n: &BandNode) -> Result<(f64, f64)> {
    let a = n.proj.stretch();
    let b = n.proj.stretch_h();
    if a > 0.0 && b > 0.0 {
        Ok((a, b))
    } else {
        Err(Error::TubeViolation {
            point: n.coord,
            factor: a.min(b),
        })
    }
}

/// `(1 + φκ) ∇γ` at band row `row` by centred differences.
pub fn embed_gradient_axisym(band: &AxisymBand, gamma: &[f64], row: usize) -> Result<[f64; 2]> {
    let n = &band.nodes()[row];
    let (a, _) = tube(n)?;
    let dx = band.grid().dx();
    let mut g = [0.0; 2];
    for (axis, gi) in g.iter_mut().enumerate() {
        let (p, sp) = band.neighbour(row, axis, 1, Parity::Even)?;
        let (m, sm) = band.neighbour(row, axis, -1, Parity::Even)?;
        *gi = a * (sp * gamma[p] - sm * gamma[m]) / (2.0 * dx);
    }
    Ok(g)
}

/// Stencil of the embedded Laplace-Beltrami operator at an interpolation
/// row, as `(column, weight)` pairs.
fn laplace_beltrami_row(band: &AxisymBand, row: usize) -> Result<Vec<(usize, f64)>> {
    let nodes = band.nodes();
    let n = &nodes[row];
    let (a, b) = tube(n)?;
    let inv = 1.0 / (band.grid().dx() * band.grid().dx());
    let coef = |r: usize| -> Result<f64> {
        let (a, b) = tube(&nodes[r])?;
        Ok(a / b)
    };
    let c0 = coef(row)?;
    let x0 = n.coord[0];
    let mut out = Vec::with_capacity(5);
    let mut diag = 0.0;

    // Radial part.
    let (p, _) = band.neighbour(row, 0, 1, Parity::Even)?;
    let cp = 0.5 * (c0 + coef(p)?);
    if band.on_axis(row) {
        // γ is even across the axis, so x⁻¹(x C γ_x)_x → 2 (C γ_x)_x.
        let w = 4.0 * cp * inv;
        out.push((p, w));
        diag -= w;
    } else {
        let (m, _) = band.neighbour(row, 0, -1, Parity::Even)?;
        let dx = band.grid().dx();
        let wp = 0.5 * (x0 * c0 + (x0 + dx) * coef(p)?) / x0 * inv;
        let wm = 0.5 * (x0 * c0 + (x0 - dx) * coef(m)?) / x0 * inv;
        out.push((p, wp));
        out.push((m, wm));
        diag -= wp + wm;
    }

    // Axial part.
    for step in [-1, 1] {
        let (q, _) = band.neighbour(row, 1, step, Parity::Even)?;
        let w = 0.5 * (c0 + coef(q)?) * inv;
        out.push((q, w));
        diag -= w;
    }
    out.push((row, diag));
    let scale = a * b;
    Ok(out.into_iter().map(|(c, w)| (c, scale * w)).collect())
}

/// Embedded Laplace-Beltrami of a band field; `None` on edge rows.
pub fn embed_laplace_beltrami_axisym(band: &AxisymBand, gamma: &[f64]) -> Result<Vec<Option<f64>>> {
    (0..band.len())
        .map(|row| {
            if band.nodes()[row].label != NodeLabel::Interpolation {
                return Ok(None);
            }
            let st = laplace_beltrami_row(band, row)?;
            Ok(Some(st.iter().map(|&(c, w)| w * gamma[c]).sum()))
        })
        .collect()
}

/// Embedded surface divergence of `f = f_τ τ + f_n n`, given per band row as
/// the closest-point values `(f_τ, f_n)`. The tangential part goes through
/// the embedding; the normal part contributes `H f_n`. `None` on edge rows.
pub fn embed_surface_divergence_axisym<C: ClosedCurve + Sync>(
    geom: &AxisymGeometry<C>,
    band: &AxisymBand,
    f: &[(f64, f64)],
) -> Result<Vec<Option<f64>>> {
    let nodes = band.nodes();
    let dx = band.grid().dx();
    // Tangential field divided by 1 + φh, as meridian-plane components.
    let g: Vec<[f64; 2]> = nodes
        .iter()
        .zip(f)
        .map(|(n, &(ft, _))| {
            let (_, b) = tube(n)?;
            let t = geom.tangent(n.proj.param[0]);
            Ok([ft * t[0] / b, ft * t[1] / b])
        })
        .collect::<Result<_>>()?;

    (0..band.len())
        .map(|row| {
            let n = &nodes[row];
            if n.label != NodeLabel::Interpolation {
                return Ok(None);
            }
            let (a, b) = tube(n)?;
            let (p, _) = band.neighbour(row, 0, 1, Parity::Odd)?;
            let radial = if band.on_axis(row) {
                // Odd radial component: x⁻¹(x G)_x → 2 G_x = 2 G(Δx)/Δx.
                2.0 * g[p][0] / dx
            } else {
                let (m, sm) = band.neighbour(row, 0, -1, Parity::Odd)?;
                let x0 = n.coord[0];
                ((x0 + dx) * g[p][0] - (x0 - dx) * sm * g[m][0]) / (2.0 * dx * x0)
            };
            let (u, _) = band.neighbour(row, 1, 1, Parity::Even)?;
            let (d, _) = band.neighbour(row, 1, -1, Parity::Even)?;
            let axial = (g[u][1] - g[d][1]) / (2.0 * dx);
            let h = n.proj.kappa + n.proj.h;
            Ok(Some(a * b * (radial + axial) + h * f[row].1))
        })
        .collect()
}

/// Inextensibility residual `(x|r_σ|)⁻¹ (x u_τ)_σ + H u_n` at `σ_k = kπ/n`,
/// `k = 0..=n`, from samples of `(u_τ, u_n)` on the same points.
///
/// Centred differences in `σ`; at the poles `u_τ` is extended oddly, which
/// turns the first term into its limit `2 (u_τ)_σ / |r_σ|`.
pub fn inextensibility_residual<C: ClosedCurve + Sync>(
    geom: &AxisymGeometry<C>,
    u: &[(f64, f64)],
) -> Result<Vec<f64>> {
    let n = u
        .len()
        .checked_sub(1)
        .filter(|&n| n >= 2)
        .ok_or(Error::Underdetermined {
            needed: 3,
            got: u.len(),
        })?;
    let ds = PI / n as f64;
    let c = &geom.curve;
    Ok((0..=n)
        .map(|k| {
            let t = k as f64 * ds;
            let s = speed(c, t);
            let x = c.point(t)[0];
            let first = if k == 0 {
                2.0 * u[1].0 / ds / s
            } else if k == n {
                -2.0 * u[n - 1].0 / ds / s
            } else {
                let xp = c.point(t + ds)[0];
                let xm = c.point(t - ds)[0];
                (xp * u[k + 1].0 - xm * u[k - 1].0) / (2.0 * ds) / (x * s)
            };
            first + geom.total_curvature(t) * u[k].1
        })
        .collect())
}

/// Unsimplified surface divergence `g^{ij} r_i·u_j` of the axisymmetric
/// field `u(σ) = u_τ τ + u_n n` at `σ`, rotated about the `y` axis and
/// differenced in `σ` and `θ` with step `h`. Requires `x(σ) > 0`.
pub fn surface_divergence_by_parameters<C: ClosedCurve>(
    geom: &AxisymGeometry<C>,
    u: impl Fn(f64) -> (f64, f64),
    sigma: f64,
    h: f64,
) -> f64 {
    let c = &geom.curve;
    let field = |s: f64, th: f64| -> [f64; 3] {
        let (ut, un) = u(s);
        let t = geom.tangent(s);
        let nn = c.normal(s);
        let v = [ut * t[0] + un * nn[0], ut * t[1] + un * nn[1]];
        [v[0] * th.cos(), v[1], v[0] * th.sin()]
    };
    let r_s = {
        let d = c.d1(sigma);
        [d[0], d[1], 0.0]
    };
    let x = c.point(sigma)[0];
    let r_th = [0.0, 0.0, x];
    let u_s: Vec<f64> = (0..3)
        .map(|i| (field(sigma + h, 0.0)[i] - field(sigma - h, 0.0)[i]) / (2.0 * h))
        .collect();
    let u_th: Vec<f64> = (0..3)
        .map(|i| (field(sigma, h)[i] - field(sigma, -h)[i]) / (2.0 * h))
        .collect();
    let g_ss = r_s[0] * r_s[0] + r_s[1] * r_s[1];
    let dot = |a: &[f64; 3], b: &[f64]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    dot(&r_s, &u_s) / g_ss + dot(&r_th, &u_th) / (x * x)
}

/// Assembled tension system over an axisymmetric band.
#[derive(Debug, Clone)]
pub struct TensionSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Assembles `H² γ - Δ_s γ = m` with edge rows `(4/Δx²)(I - E₃)`.
pub fn assemble_tension_axisym<S: Surface + ?Sized>(
    surface: &S,
    band: &AxisymBand,
) -> Result<TensionSystem> {
    let e3 = band.interp_matrix()?;
    let dx = band.grid().dx();
    let w = 4.0 / (dx * dx);
    let mut b = CsrBuilder::new(band.len());
    let mut rhs = Vec::with_capacity(band.len());
    for (row, n) in band.nodes().iter().enumerate() {
        if n.label == NodeLabel::Edge {
            b.add(row, w);
            let (cols, vals) = e3.row(row);
            for (&j, &v) in cols.iter().zip(vals) {
                b.add(j, -w * v);
            }
            rhs.push(0.0);
        } else {
            let data = surface.data(&n.proj);
            b.add(row, data.c);
            for (c, v) in laplace_beltrami_row(band, row)? {
                b.add(c, -v);
            }
            rhs.push(data.m);
        }
        b.finish_row();
    }
    Ok(TensionSystem {
        matrix: b.build(),
        rhs,
    })
}

/// Solves the manufactured tension problem carried by `surface`.
pub fn solve_tension_axisym<S: Surface + ?Sized>(
    surface: &S,
    band: &AxisymBand,
) -> Result<Vec<f64>> {
    let sys = assemble_tension_axisym(surface, band)?;
    let f = crate::solver::Factorization::new(&sys.matrix)?;
    f.solve(&sys.rhs)
}
