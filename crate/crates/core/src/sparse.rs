//! Compressed sparse row matrices and Matrix Market / CSV export.

use std::io::Write;

use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Real sparse matrix in compressed row form. Column indices are sorted
/// within each row and no explicit zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Row-by-row builder. Duplicate entries within a row are summed and exact
/// zeros are dropped when the row is finished.
#[derive(Debug, Clone)]
pub struct CsrBuilder {
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    pending: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            row_ptr: vec![0],
            col_idx: Vec::new(),
            values: Vec::new(),
            pending: Vec::new(),
        }
    }

    pub fn add(&mut self, col: usize, value: f64) {
        debug_assert!(col < self.ncols);
        self.pending.push((col, value));
    }

    pub fn finish_row(&mut self) {
        self.pending.sort_unstable_by_key(|e| e.0);
        let mut i = 0;
        while i < self.pending.len() {
            let col = self.pending[i].0;
            let mut v = 0.0;
            while i < self.pending.len() && self.pending[i].0 == col {
                v += self.pending[i].1;
                i += 1;
            }
            if v != 0.0 {
                self.col_idx.push(col);
                self.values.push(v);
            }
        }
        self.pending.clear();
        self.row_ptr.push(self.col_idx.len());
    }

    pub fn build(self) -> CsrMatrix {
        CsrMatrix {
            nrows: self.row_ptr.len() - 1,
            ncols: self.ncols,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            values: self.values,
        }
    }
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut b = CsrBuilder::new(ncols);
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                b.add(j, v);
            }
            b.finish_row();
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                col_idx[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut sums = vec![0.0; self.ncols];
        for (&j, &v) in self.col_idx.iter().zip(&self.values) {
            sums[j] += v.abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    pub(crate) fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                triplets.push(Triplet::new(i, j, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::Config(format!("cannot convert matrix: {e:?}")))
    }

    /// Writes the matrix in Matrix Market coordinate format (1-based).
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Writes `row,value` lines for a vector.
pub fn write_vector_csv<W: Write>(mut out: W, name: &str, v: &[f64]) -> Result<()> {
    writeln!(out, "row,{name}")?;
    for (i, x) in v.iter().enumerate() {
        writeln!(out, "{i},{x:.17e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builder_merges_and_drops_zeros() {
        let mut b = CsrBuilder::new(4);
        b.add(2, 1.0);
        b.add(0, 3.0);
        b.add(2, -1.0);
        b.add(3, 0.5);
        b.finish_row();
        let m = b.build();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.row(0).0, &[0, 3]);
        assert_eq!(m.get(0, 2), 0.0);
    }

    #[test]
    fn matrix_market_layout() {
        let m = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![-2.0, 4.0]]);
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines[1], "2 2 3");
        assert!(lines[3].starts_with("2 1 -2.0"));
        assert_eq!(m.one_norm(), 4.0);
    }

    proptest! {
        #[test]
        fn transpose_is_an_involution(entries in proptest::collection::vec((0usize..6, 0usize..5, -3.0f64..3.0), 0..20)) {
            let mut dense = vec![vec![0.0; 5]; 6];
            for (i, j, v) in entries {
                dense[i][j] += v;
            }
            let m = CsrMatrix::from_dense(&dense);
            let t = m.transpose();
            prop_assert_eq!(t.nrows(), 5);
            prop_assert_eq!(t.transpose(), m.clone());
            let x: Vec<f64> = (0..5).map(|k| k as f64 - 1.5).collect();
            let y = m.matvec(&x);
            for i in 0..6 {
                let direct: f64 = (0..5).map(|j| dense[i][j] * x[j]).sum();
                prop_assert!((y[i] - direct).abs() < 1e-12);
            }
        }
    }
}
