//! Assembly of the CP and CACP linear systems `A γ = b` over the band.
//!
//! The CP system is `A = I - E₁L + ω(I - E₃)` with `ω = 2·dim/Δx²`, where
//! `L` is the standard `2·dim + 1` point Laplacian on interpolation rows
//! and the identity on edge rows.
//!
//! The CACP system discretizes `c γ - Δ_s γ` on interpolation rows with the
//! curvature-augmented embedding of the Laplace-Beltrami operator and closes
//! the band with `ω(I - E₃)` on edge rows.

use crate::error::{Error, Result};
use crate::grid::{
    classify_nodes_with, enumerate_band, BandMap, ClassifyOptions, GridSpec, NodeClassification,
    NodeIndex, NodeLabel,
};
use crate::interp::build_interp_matrix;
use crate::sparse::{CsrBuilder, CsrMatrix};
use crate::surface::{Projection, Surface};
use crate::Point;

/// One band node with its closest point data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandNode {
    pub node: NodeIndex,
    pub label: NodeLabel,
    pub coord: Point,
    pub proj: Projection,
}

/// Classified grid with per-row geometry.
#[derive(Debug, Clone)]
pub struct Band {
    grid: GridSpec,
    classes: NodeClassification,
    map: BandMap,
    nodes: Vec<BandNode>,
}

impl Band {
    pub fn build<S: Surface + ?Sized>(
        grid: &GridSpec,
        surface: &S,
        opts: &ClassifyOptions,
    ) -> Result<Self> {
        let classes = classify_nodes_with(grid, surface, opts)?;
        let map = enumerate_band(&classes);
        Self::from_parts(grid.clone(), classes, map, surface)
    }

    pub fn from_parts<S: Surface + ?Sized>(
        grid: GridSpec,
        classes: NodeClassification,
        map: BandMap,
        surface: &S,
    ) -> Result<Self> {
        let nodes = map
            .nodes()
            .iter()
            .map(|&lin| {
                let node = grid.node_index(lin);
                let coord = grid.coord(node);
                Ok(BandNode {
                    node,
                    label: classes.label(lin),
                    coord,
                    proj: surface.project(&coord)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            classes,
            map,
            nodes,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn classes(&self) -> &NodeClassification {
        &self.classes
    }

    pub fn map(&self) -> &BandMap {
        &self.map
    }

    pub fn nodes(&self) -> &[BandNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn closest_points(&self) -> Vec<Point> {
        self.nodes.iter().map(|n| n.proj.point).collect()
    }

    /// Row of the node at `node + offset`, erroring when it is not in the band.
    pub(crate) fn neighbour_row(&self, row: usize, axis: usize, step: i64) -> Result<usize> {
        let node = self.nodes[row].node;
        let mut idx = [node[0] as i64, node[1] as i64, node[2] as i64];
        idx[axis] += step;
        let nb = self.grid.checked_node(idx).ok_or(Error::StencilOutOfGrid {
            point: self.nodes[row].coord,
            degree: 1,
        })?;
        self.map
            .row_of(self.grid.linear_index(nb))
            .ok_or(Error::NodeNotInBand { node: nb, row })
    }
}

/// Discretization method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Cp,
    Cacp,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Cp => "cp",
            Method::Cacp => "cacp",
        })
    }
}

/// How the face coefficients `1 + phi*kappa` of the 2D CACP stencil are
/// obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoefficientVariant {
    /// [`Face`](Self::Face) when the surface has closed-form geometry off
    /// the grid, [`NodeAverage`](Self::NodeAverage) otherwise.
    #[default]
    Auto,
    /// Evaluate the geometry at the face midpoint.
    Face,
    /// Average the two nodal values adjacent to the face.
    NodeAverage,
}

/// Right-hand side used on CACP edge rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeRhs {
    /// `b_k = 0` on edge rows, so they state the side condition exactly.
    #[default]
    Zero,
    /// `b_k = m(x_k)` on every row.
    Forcing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AssemblyOptions {
    pub coefficients: CoefficientVariant,
    pub edge_rhs: EdgeRhs,
}

/// Assembled system over a band.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub method: Method,
    /// Edge-closure scale `2·dim/Δx²`.
    pub omega: f64,
}

impl SparseSystem {
    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }
}

pub fn omega(grid: &GridSpec) -> f64 {
    2.0 * grid.dim() as f64 / (grid.dx() * grid.dx())
}

/// Standard Laplacian on interpolation rows, identity on edge rows.
pub fn laplacian_matrix(band: &Band) -> Result<CsrMatrix> {
    let dim = band.grid().dim();
    let inv = 1.0 / (band.grid().dx() * band.grid().dx());
    let mut b = CsrBuilder::new(band.len());
    for (row, n) in band.nodes().iter().enumerate() {
        if n.label == NodeLabel::Interpolation {
            b.add(row, -2.0 * dim as f64 * inv);
            for axis in 0..dim {
                for step in [-1, 1] {
                    b.add(band.neighbour_row(row, axis, step)?, inv);
                }
            }
        } else {
            b.add(row, 1.0);
        }
        b.finish_row();
    }
    Ok(b.build())
}

fn forcing<S: Surface + ?Sized>(band: &Band, surface: &S) -> Vec<f64> {
    band.nodes()
        .iter()
        .map(|n| surface.data(&n.proj).m)
        .collect()
}

/// `A = I - E₁L + ω(I - E₃)`, `b_k = m(x_k)`.
pub fn assemble_cp<S: Surface + ?Sized>(band: &Band, surface: &S) -> Result<SparseSystem> {
    let grid = band.grid();
    let cps = band.closest_points();
    let e1 = build_interp_matrix(grid, band.map(), &cps, 1)?;
    let e3 = build_interp_matrix(grid, band.map(), &cps, 3)?;
    let lap = laplacian_matrix(band)?;
    let w = omega(grid);

    let mut b = CsrBuilder::new(band.len());
    for row in 0..band.len() {
        b.add(row, 1.0 + w);
        let (cols, vals) = e1.row(row);
        for (&j, &ej) in cols.iter().zip(vals) {
            let (lc, lv) = lap.row(j);
            for (&k, &l) in lc.iter().zip(lv) {
                b.add(k, -ej * l);
            }
        }
        let (cols, vals) = e3.row(row);
        for (&j, &v) in cols.iter().zip(vals) {
            b.add(j, -w * v);
        }
        b.finish_row();
    }
    Ok(SparseSystem {
        matrix: b.build(),
        rhs: forcing(band, surface),
        method: Method::Cp,
        omega: w,
    })
}

fn check_tube(point: Point, factor: f64) -> Result<f64> {
    if factor > 0.0 {
        Ok(factor)
    } else {
        Err(Error::TubeViolation { point, factor })
    }
}

/// Appends the edge-closure row `ω(δ_k - E₃ row k)`.
fn edge_row(b: &mut CsrBuilder, row: usize, e3: &CsrMatrix, w: f64) {
    b.add(row, w);
    let (cols, vals) = e3.row(row);
    for (&j, &v) in cols.iter().zip(vals) {
        b.add(j, -w * v);
    }
}

fn cacp_rhs<S: Surface + ?Sized>(band: &Band, surface: &S, opts: &AssemblyOptions) -> Vec<f64> {
    band.nodes()
        .iter()
        .map(|n| match (n.label, opts.edge_rhs) {
            (NodeLabel::Edge, EdgeRhs::Zero) => 0.0,
            _ => surface.data(&n.proj).m,
        })
        .collect()
}

/// CACP system in R²: on interpolation rows
/// `c γ - (1 + φκ)_k Σ_faces a_f (γ_nb - γ_k)/Δx²` with face coefficients
/// `a_f ≈ 1 + φκ` at the face; edge rows hold `ω(I - E₃)`.
pub fn assemble_cacp_2d<S: Surface + ?Sized>(
    band: &Band,
    surface: &S,
    opts: &AssemblyOptions,
) -> Result<SparseSystem> {
    let grid = band.grid();
    if grid.dim() != 2 {
        return Err(Error::Config("assemble_cacp_2d needs a 2D grid".into()));
    }
    let e3 = build_interp_matrix(grid, band.map(), &band.closest_points(), 3)?;
    let w = omega(grid);
    let inv = 1.0 / (grid.dx() * grid.dx());
    let variant = match opts.coefficients {
        CoefficientVariant::Auto if surface.analytic_geometry() => CoefficientVariant::Face,
        CoefficientVariant::Auto => CoefficientVariant::NodeAverage,
        v => v,
    };

    let mut b = CsrBuilder::new(band.len());
    for (row, n) in band.nodes().iter().enumerate() {
        if n.label == NodeLabel::Edge {
            edge_row(&mut b, row, &e3, w);
            b.finish_row();
            continue;
        }
        let centre = check_tube(n.coord, n.proj.stretch())?;
        let c = surface.data(&n.proj).c;
        let mut diag = c;
        for axis in 0..2 {
            for step in [-1i64, 1] {
                let nb = band.neighbour_row(row, axis, step)?;
                let face = match variant {
                    CoefficientVariant::Auto | CoefficientVariant::Face => {
                        let mut x = n.coord;
                        x[axis] += 0.5 * step as f64 * grid.dx();
                        let p = surface.project(&x)?;
                        check_tube(x, p.stretch())?
                    }
                    CoefficientVariant::NodeAverage => {
                        let other = &band.nodes()[nb];
                        let s = check_tube(other.coord, other.proj.stretch())?;
                        0.5 * (centre + s)
                    }
                };
                let coef = centre * face * inv;
                diag += coef;
                b.add(nb, -coef);
            }
        }
        b.add(row, diag);
        b.finish_row();
    }
    Ok(SparseSystem {
        matrix: b.build(),
        rhs: cacp_rhs(band, surface, opts),
        method: Method::Cacp,
        omega: w,
    })
}

/// CACP system for an umbilic surface in R³ (the sphere), where the
/// embedding reduces to `Δ_s γ = (1 + φκ)² Δγ`.
pub fn assemble_cacp_sphere<S: Surface + ?Sized>(
    band: &Band,
    surface: &S,
    opts: &AssemblyOptions,
) -> Result<SparseSystem> {
    let grid = band.grid();
    if grid.dim() != 3 {
        return Err(Error::Config("assemble_cacp_sphere needs a 3D grid".into()));
    }
    let e3 = build_interp_matrix(grid, band.map(), &band.closest_points(), 3)?;
    let w = omega(grid);
    let inv = 1.0 / (grid.dx() * grid.dx());

    let mut b = CsrBuilder::new(band.len());
    for (row, n) in band.nodes().iter().enumerate() {
        if n.label == NodeLabel::Edge {
            edge_row(&mut b, row, &e3, w);
            b.finish_row();
            continue;
        }
        if (n.proj.kappa - n.proj.h).abs() > 1e-12 * n.proj.kappa.abs().max(1.0) {
            return Err(Error::Config(format!(
                "non-umbilic point {:?}: the sphere embedding needs kappa == h",
                n.proj.point
            )));
        }
        let s = check_tube(n.coord, n.proj.stretch())?;
        let coef = s * s * inv;
        let c = surface.data(&n.proj).c;
        b.add(row, c + 6.0 * coef);
        for axis in 0..3 {
            for step in [-1, 1] {
                b.add(band.neighbour_row(row, axis, step)?, -coef);
            }
        }
        b.finish_row();
    }
    Ok(SparseSystem {
        matrix: b.build(),
        rhs: cacp_rhs(band, surface, opts),
        method: Method::Cacp,
        omega: w,
    })
}

/// Dispatches on method and dimension.
pub fn assemble<S: Surface + ?Sized>(
    band: &Band,
    surface: &S,
    method: Method,
    opts: &AssemblyOptions,
) -> Result<SparseSystem> {
    match (method, band.grid().dim()) {
        (Method::Cp, _) => assemble_cp(band, surface),
        (Method::Cacp, 2) => assemble_cacp_2d(band, surface, opts),
        (Method::Cacp, _) => assemble_cacp_sphere(band, surface, opts),
    }
}
