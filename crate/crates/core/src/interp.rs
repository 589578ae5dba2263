//! Tensor-product Lagrange interpolation on the grid and the sparse
//! interpolation matrices `E_q` that map band values to values at closest
//! points.

use crate::error::{Error, Result};
use crate::grid::{BandMap, GridSpec, NodeIndex};
use crate::sparse::{CsrBuilder, CsrMatrix};
use crate::Point;

/// Interpolation weights on the `(q+1)^dim` nodes starting at `base`.
///
/// Weights are stored with the first axis varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpStencil {
    pub target: Point,
    pub base: NodeIndex,
    pub degree: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
}

impl InterpStencil {
    /// Iterates over `(node, weight)` pairs.
    pub fn entries(&self) -> impl Iterator<Item = (NodeIndex, f64)> + '_ {
        let n = self.degree + 1;
        self.weights.iter().enumerate().map(move |(flat, &w)| {
            let mut node = self.base;
            let mut rem = flat;
            for a in (0..self.dim).rev() {
                node[a] += rem % n;
                rem /= n;
            }
            (node, w)
        })
    }
}

/// Fractional grid coordinate, snapped onto grid lines it is within
/// rounding distance of.
fn grid_coord(grid: &GridSpec, p: &Point, axis: usize) -> f64 {
    let t = (p[axis] - grid.lower()[axis]) / grid.dx();
    let r = t.round();
    if (t - r).abs() < 1e-9 {
        r
    } else {
        t
    }
}

/// First node of the degree-`q` stencil around `p`: the enclosing cell's
/// lower corner shifted back by `floor((q - 1) / 2)` on every axis, then
/// clamped so the stencil stays inside the grid. Points outside the grid
/// box, or grids with fewer than `q + 1` nodes per axis, are errors.
pub fn stencil_base(grid: &GridSpec, p: &Point, q: usize) -> Result<NodeIndex> {
    let m = grid.cells() as i64;
    let shift = ((q as i64) - 1).div_euclid(2);
    let mut base = [0; 3];
    for a in 0..grid.dim() {
        let t = grid_coord(grid, p, a);
        if !(0.0..=m as f64).contains(&t) || (q as i64) > m {
            return Err(Error::StencilOutOfGrid {
                point: *p,
                degree: q,
            });
        }
        let cell = (t.floor() as i64).min(m - 1);
        base[a] = (cell - shift).clamp(0, m - q as i64) as usize;
    }
    Ok(base)
}

/// Barycentric Lagrange weights for nodes `0..=q` at local coordinate `u`.
fn lagrange_1d(u: f64, q: usize) -> Vec<f64> {
    if let Some(j) = (0..=q).find(|&j| u == j as f64) {
        let mut w = vec![0.0; q + 1];
        w[j] = 1.0;
        return w;
    }
    let mut binom = 1.0;
    let mut w = Vec::with_capacity(q + 1);
    for j in 0..=q {
        if j > 0 {
            binom = binom * (q + 1 - j) as f64 / j as f64;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        w.push(sign * binom / (u - j as f64));
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Degree-`q` tensor-product Lagrange weights for the point `p`.
pub fn interpolation_weights(grid: &GridSpec, p: &Point, q: usize) -> Result<InterpStencil> {
    let dim = grid.dim();
    let base = stencil_base(grid, p, q)?;
    let per_axis: Vec<Vec<f64>> = (0..dim)
        .map(|a| lagrange_1d(grid_coord(grid, p, a) - base[a] as f64, q))
        .collect();
    let n = q + 1;
    let count = n.pow(dim as u32);
    let mut weights = Vec::with_capacity(count);
    for flat in 0..count {
        let mut w = 1.0;
        let mut rem = flat;
        for a in (0..dim).rev() {
            w *= per_axis[a][rem % n];
            rem /= n;
        }
        weights.push(w);
    }
    Ok(InterpStencil {
        target: *p,
        base,
        degree: q,
        dim,
        weights,
    })
}

/// Builds `E_q`: row `r` interpolates band values at `targets[r]`.
pub fn build_interp_matrix(
    grid: &GridSpec,
    band: &BandMap,
    targets: &[Point],
    q: usize,
) -> Result<CsrMatrix> {
    build_interp_matrix_with(grid, band.len(), targets, q, |node| {
        band.row_of(grid.linear_index(node))
    })
}

/// Like [`build_interp_matrix`] with a caller-supplied node-to-column map,
/// which may fold several nodes onto one column.
pub fn build_interp_matrix_with(
    grid: &GridSpec,
    ncols: usize,
    targets: &[Point],
    q: usize,
    column: impl Fn(NodeIndex) -> Option<usize>,
) -> Result<CsrMatrix> {
    let mut builder = CsrBuilder::new(ncols);
    for (row, p) in targets.iter().enumerate() {
        let stencil = interpolation_weights(grid, p, q)?;
        for (node, w) in stencil.entries().filter(|e| e.1 != 0.0) {
            let col = column(node).ok_or(Error::NodeNotInBand { node, row })?;
            builder.add(col, w);
        }
        builder.finish_row();
    }
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn unit_grid(dim: usize) -> GridSpec {
        build_grid(dim, &vec![0.0; dim], &vec![1.0; dim], 10).unwrap()
    }

    #[test]
    fn bilinear_cell_centre() {
        let g = unit_grid(2);
        let s = interpolation_weights(&g, &[0.35, 0.55, 0.0], 1).unwrap();
        assert_eq!(s.weights.len(), 4);
        for w in &s.weights {
            assert!((w - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn cubic_cardinality_on_node() {
        let g = unit_grid(2);
        let p = g.coord([4, 6, 0]);
        let s = interpolation_weights(&g, &p, 3).unwrap();
        for (node, w) in s.entries() {
            let expect = if node == [4, 6, 0] { 1.0 } else { 0.0 };
            assert_eq!(w, expect);
        }
    }

    #[test]
    fn cubic_reproduces_cubic_times_quadratic() {
        let g = unit_grid(2);
        let f = |x: &Point| x[0].powi(3) * x[1].powi(2);
        let p = [0.437, 0.5813, 0.0];
        let s = interpolation_weights(&g, &p, 3).unwrap();
        let v: f64 = s.entries().map(|(n, w)| w * f(&g.coord(n))).sum();
        assert!((v - f(&p)).abs() < 1e-12);
    }

    #[test]
    fn stencil_near_the_boundary_is_clamped() {
        let g = unit_grid(2);
        let s = interpolation_weights(&g, &[0.05, 0.97, 0.0], 3).unwrap();
        assert_eq!(&s.base[..2], &[0, g.cells() - 3]);
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(interpolation_weights(&g, &[0.05, 0.5, 0.0], 1).is_ok());
    }

    #[test]
    fn point_outside_grid_is_an_error() {
        let g = unit_grid(2);
        assert!(interpolation_weights(&g, &[-0.01, 0.5, 0.0], 3).is_err());
        assert!(interpolation_weights(&g, &[0.5, 1.2, 0.0], 1).is_err());
    }

    #[test]
    fn stencil_base_is_centred() {
        let g = unit_grid(3);
        let b = stencil_base(&g, &[0.43, 0.51, 0.29], 3).unwrap();
        assert_eq!(b, [3, 4, 1]);
        let b1 = stencil_base(&g, &[0.43, 0.51, 0.29], 1).unwrap();
        assert_eq!(b1, [4, 5, 2]);
    }
}
