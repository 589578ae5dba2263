//! Uniform Cartesian grids and the interpolation/edge band that forms the
//! computational domain.
//!
//! Nodes are addressed by a multi-index `(i, j[, k])` and enumerated
//! lexicographically with the first axis varying slowest, so `(0, 1)` comes
//! before `(1, 0)`.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::interp::interpolation_weights;
use crate::surface::Surface;
use crate::Point;

/// Multi-index of a grid node. Unused trailing axes are zero.
pub type NodeIndex = [usize; 3];

/// Uniform grid with `cells` cells of width `dx` on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dim: usize,
    lower: Point,
    upper: Point,
    cells: usize,
    dx: f64,
}

/// Builds a grid over the box `[lower, upper]` with `cells` cells per axis.
pub fn build_grid(dim: usize, lower: &[f64], upper: &[f64], cells: usize) -> Result<GridSpec> {
    GridSpec::new(dim, lower, upper, cells)
}

impl GridSpec {
    pub fn new(dim: usize, lower: &[f64], upper: &[f64], cells: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Config(format!(
                "grid dimension must be 2 or 3, got {dim}"
            )));
        }
        if lower.len() != dim || upper.len() != dim {
            return Err(Error::Config(format!(
                "bounds must have {dim} components (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        if cells < 4 {
            return Err(Error::Config(format!(
                "need at least 4 cells per axis, got {cells}"
            )));
        }
        let extent = upper[0] - lower[0];
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::Config(format!(
                "empty or invalid extent {extent} on axis 0"
            )));
        }
        for axis in 1..dim {
            let e = upper[axis] - lower[axis];
            if (e - extent).abs() > 1e-12 * extent.abs() {
                return Err(Error::Config(format!(
                    "unequal extents: axis 0 spans {extent}, axis {axis} spans {e}"
                )));
            }
        }
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        lo[..dim].copy_from_slice(lower);
        hi[..dim].copy_from_slice(upper);
        Ok(Self {
            dim,
            lower: lo,
            upper: hi,
            cells,
            dx: extent / cells as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.cells + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis().pow(self.dim as u32)
    }

    /// Coordinate of a node, computed as `lower + i * dx` on each axis.
    pub fn coord(&self, node: NodeIndex) -> Point {
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.lower[a] + node[a] as f64 * self.dx;
        }
        p
    }

    pub fn linear_index(&self, node: NodeIndex) -> usize {
        let n = self.nodes_per_axis();
        let mut lin = 0;
        for &i in node.iter().take(self.dim) {
            lin = lin * n + i;
        }
        lin
    }

    pub fn node_index(&self, mut lin: usize) -> NodeIndex {
        let n = self.nodes_per_axis();
        let mut node = [0; 3];
        for a in (0..self.dim).rev() {
            node[a] = lin % n;
            lin /= n;
        }
        node
    }

    /// Converts a signed multi-index to a node if it lies inside the grid.
    pub fn checked_node(&self, idx: [i64; 3]) -> Option<NodeIndex> {
        let n = self.nodes_per_axis() as i64;
        let mut node = [0; 3];
        for a in 0..self.dim {
            if idx[a] < 0 || idx[a] >= n {
                return None;
            }
            node[a] = idx[a] as usize;
        }
        Some(node)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeIndex> + '_ {
        (0..self.node_count()).map(|lin| self.node_index(lin))
    }

    /// Offsets of the neighbourhood used to grow edge nodes out of the
    /// interpolation set.
    pub fn neighbour_offsets(&self, hood: Neighbourhood) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        match hood {
            Neighbourhood::Axial => {
                for a in 0..self.dim {
                    for s in [-1, 1] {
                        let mut o = [0; 3];
                        o[a] = s;
                        out.push(o);
                    }
                }
            }
            Neighbourhood::Full => {
                let r = |a: usize| if a < self.dim { -1..=1 } else { 0..=0 };
                for i in r(0) {
                    for j in r(1) {
                        for k in r(2) {
                            if (i, j, k) != (0, 0, 0) {
                                out.push([i, j, k]);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Label of a grid node with respect to the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    Outside,
    Interpolation,
    Edge,
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeLabel::Outside => "outside",
            NodeLabel::Interpolation => "interpolation",
            NodeLabel::Edge => "edge",
        })
    }
}

/// Neighbourhood used for edge detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Neighbourhood {
    /// All `3^dim - 1` surrounding nodes, diagonals included.
    Full,
    /// The `2 * dim` axis neighbours of the standard Laplacian stencil.
    #[default]
    Axial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Degree of the interpolation stencil whose members become
    /// interpolation nodes.
    pub degree: usize,
    pub neighbourhood: Neighbourhood,
    /// Nodes with `|phi| <= seed_factor * dx` have their closest point's
    /// stencil marked. `None` uses `(degree + 2) * sqrt(dim)`.
    pub seed_factor: Option<f64>,
    /// Each seed cell is also sampled on a `subsample^dim` lattice, which
    /// fills in surface points the node seeds alone would miss.
    pub subsample: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            degree: 3,
            neighbourhood: Neighbourhood::Axial,
            seed_factor: None,
            subsample: 1,
        }
    }
}

/// Per-node labels over the whole grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeClassification {
    labels: Vec<NodeLabel>,
}

impl NodeClassification {
    pub fn from_labels(labels: Vec<NodeLabel>) -> Self {
        Self { labels }
    }

    pub fn label(&self, lin: usize) -> NodeLabel {
        self.labels[lin]
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    pub fn count(&self, label: NodeLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// Classifies every grid node with the default options and stencil degree `q`.
pub fn classify_nodes<S: Surface + ?Sized>(
    grid: &GridSpec,
    surface: &S,
    degree: usize,
) -> Result<NodeClassification> {
    classify_nodes_with(
        grid,
        surface,
        &ClassifyOptions {
            degree,
            ..Default::default()
        },
    )
}

pub fn classify_nodes_with<S: Surface + ?Sized>(
    grid: &GridSpec,
    surface: &S,
    opts: &ClassifyOptions,
) -> Result<NodeClassification> {
    if surface.dim() != grid.dim() {
        return Err(Error::Config(format!(
            "surface lives in R^{} but the grid is {}-dimensional",
            surface.dim(),
            grid.dim()
        )));
    }
    let dim = grid.dim();
    let q = opts.degree;
    let factor = opts
        .seed_factor
        .unwrap_or((q as f64 + 2.0) * (dim as f64).sqrt());
    let radius = factor * grid.dx();
    let mut labels = vec![NodeLabel::Outside; grid.node_count()];
    let sub = opts.subsample.max(1);
    let mark = |labels: &mut [NodeLabel], p: &Point| -> Result<()> {
        let stencil = interpolation_weights(grid, p, q)?;
        for (n, w) in stencil.entries() {
            // A surface point on a grid line only reaches the nodes that
            // carry weight, which keeps the band mirror-symmetric.
            if w != 0.0 {
                labels[grid.linear_index(n)] = NodeLabel::Interpolation;
            }
        }
        Ok(())
    };

    for lin in 0..grid.node_count() {
        let node = grid.node_index(lin);
        let x = grid.coord(node);
        if surface.distance_lower_bound(&x) > radius {
            continue;
        }
        let proj = surface.project(&x)?;
        if proj.distance.abs() > radius {
            continue;
        }
        mark(&mut labels, &proj.point)?;
        if sub == 1 {
            continue;
        }
        // Extra seeds inside the cell above this node.
        let h = grid.dx() / sub as f64;
        let count = sub.pow(dim as u32);
        for flat in 1..count {
            let mut y = x;
            let mut rem = flat;
            for a in 0..dim {
                y[a] += (rem % sub) as f64 * h;
                rem /= sub;
            }
            if y.iter().zip(grid.upper()).any(|(c, u)| *c > *u) {
                continue;
            }
            let p = surface.project(&y)?;
            if p.distance.abs() <= radius {
                mark(&mut labels, &p.point)?;
            }
        }
    }

    let offsets = grid.neighbour_offsets(opts.neighbourhood);
    for lin in 0..labels.len() {
        if labels[lin] != NodeLabel::Interpolation {
            continue;
        }
        let node = grid.node_index(lin);
        for o in &offsets {
            let idx = [
                node[0] as i64 + o[0],
                node[1] as i64 + o[1],
                node[2] as i64 + o[2],
            ];
            let nb = grid
                .checked_node(idx)
                .ok_or_else(|| Error::StencilOutOfGrid {
                    point: grid.coord(node),
                    degree: q,
                })?;
            let nl = grid.linear_index(nb);
            if labels[nl] == NodeLabel::Outside {
                labels[nl] = NodeLabel::Edge;
            }
        }
    }
    Ok(NodeClassification { labels })
}

/// Bijection between band nodes and matrix rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMap {
    /// Linear node index of every row.
    nodes: Vec<usize>,
    /// Row of every grid node, `u32::MAX` when outside the band.
    rows: Vec<u32>,
}

const NOT_IN_BAND: u32 = u32::MAX;

/// Enumerates Interpolation and Edge nodes in lexicographic order.
pub fn enumerate_band(classes: &NodeClassification) -> BandMap {
    BandMap::from_predicate(classes.labels.len(), |lin| {
        classes.labels[lin] != NodeLabel::Outside
    })
}

impl BandMap {
    /// Builds a map over the grid nodes accepted by `keep`, in linear order.
    pub fn from_predicate(node_count: usize, keep: impl Fn(usize) -> bool) -> Self {
        let mut nodes = Vec::new();
        let mut rows = vec![NOT_IN_BAND; node_count];
        for lin in 0..node_count {
            if keep(lin) {
                rows[lin] = nodes.len() as u32;
                nodes.push(lin);
            }
        }
        Self { nodes, rows }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn row_of(&self, lin: usize) -> Option<usize> {
        match self.rows.get(lin) {
            Some(&r) if r != NOT_IN_BAND => Some(r as usize),
            _ => None,
        }
    }

    pub fn node_of(&self, row: usize) -> usize {
        self.nodes[row]
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }
}

/// Writes `i,j[,k],label,row` for every node of the grid. Rows outside the
/// band are left empty.
pub fn write_band_csv<W: Write>(
    mut out: W,
    grid: &GridSpec,
    classes: &NodeClassification,
    map: &BandMap,
) -> Result<()> {
    let axes = ["i", "j", "k"];
    writeln!(out, "{},label,row", axes[..grid.dim()].join(","))?;
    for lin in 0..grid.node_count() {
        let node = grid.node_index(lin);
        for &i in node.iter().take(grid.dim()) {
            write!(out, "{i},")?;
        }
        match map.row_of(lin) {
            Some(r) => writeln!(out, "{},{r}", classes.label(lin))?,
            None => writeln!(out, "{},", classes.label(lin))?,
        }
    }
    Ok(())
}
