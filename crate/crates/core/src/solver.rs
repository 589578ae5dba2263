//! Linear solves, 1-norm condition estimates and error norms.
//!
//! Direct solves use a sparse LU factorization with fill-reducing ordering.
//! Large 3D systems can instead use restarted GMRES preconditioned with
//! ILU(0).

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::Mat;

use crate::assembly::{Band, SparseSystem};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::surface::Surface;

/// Output of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// `‖Aγ - b‖∞ / ‖b‖∞`.
    pub relative_residual: f64,
    pub condition: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// LU, switching to GMRES above [`AUTO_ITERATIVE_THRESHOLD`] unknowns.
    #[default]
    Auto,
    Direct,
    Gmres,
}

/// Band size above which [`SolverKind::Auto`] picks GMRES.
pub const AUTO_ITERATIVE_THRESHOLD: usize = 120_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub kind: SolverKind,
    /// Also estimate the 1-norm condition number.
    pub condition: bool,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    pub gmres_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Auto,
            condition: false,
            gmres_restart: 60,
            gmres_max_iter: 20_000,
            gmres_tol: 1e-12,
        }
    }
}

static SEQUENTIAL: Once = Once::new();

fn sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Sparse LU factorization of a square matrix.
pub struct Factorization {
    n: usize,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.n).finish()
    }
}

impl Factorization {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Config(format!(
                "matrix is {}x{}, expected square",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() == 0 {
            return Err(Error::Config("empty system".into()));
        }
        sequential();
        let m = a.to_faer()?;
        // faer panics on an exactly zero numeric pivot instead of erroring.
        let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| m.sp_lu()))
            .map_err(|_| Error::Singular("zero pivot".into()))?
            .map_err(|e| Error::Singular(format!("{e:?}")))?;
        Ok(Self { n: a.nrows(), lu })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn apply(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>> {
        let mut x = Mat::from_fn(self.n, 1, |i, _| b[i]);
        if transpose {
            self.lu.solve_transpose_in_place(x.as_mut());
        } else {
            self.lu.solve_in_place(x.as_mut());
        }
        let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("non-finite entries in LU solve".into()));
        }
        Ok(out)
    }

    /// `A⁻¹ b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.apply(b, false)
    }

    /// `A⁻ᵀ b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.apply(b, true)
    }
}

/// GMRES settings for the solves inside the condition estimator, which
/// only need a few correct digits.
fn estimator_options(opts: &SolveOptions) -> SolveOptions {
    SolveOptions {
        gmres_tol: opts.gmres_tol.max(1e-8),
        gmres_restart: opts.gmres_restart.max(200),
        ..*opts
    }
}

/// Access to `A⁻¹` and `A⁻ᵀ`, enough for a 1-norm condition estimate.
pub trait InverseOperator {
    fn dim(&self) -> usize;
    /// `A⁻¹ b`.
    fn apply_inverse(&self, b: &[f64]) -> Result<Vec<f64>>;
    /// `A⁻ᵀ b`.
    fn apply_inverse_transpose(&self, b: &[f64]) -> Result<Vec<f64>>;

    /// Lower-bound estimate of `‖A⁻¹‖₁` (Hager's method with Higham's
    /// refinements, at most five iterations).
    fn inverse_one_norm_estimate(&self) -> Result<f64> {
        let n = self.dim();
        if n == 1 {
            return Ok(self.apply_inverse(&[1.0])?[0].abs());
        }
        let one_norm = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        let sign = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|&x| if x >= 0.0 { 1.0 } else { -1.0 })
                .collect()
        };

        let mut x = vec![1.0 / n as f64; n];
        let mut y = self.apply_inverse(&x)?;
        let mut est = one_norm(&y);
        let mut xi = sign(&y);
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let z = self.apply_inverse_transpose(&xi)?;
            let (j, zmax) =
                z.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |(bj, bv), (k, &v)| {
                        if v.abs() > bv {
                            (k, v.abs())
                        } else {
                            (bj, bv)
                        }
                    });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![0.0; n];
            x[j] = 1.0;
            y = self.apply_inverse(&x)?;
            let new_est = one_norm(&y);
            let new_xi = sign(&y);
            if new_xi == xi || new_est <= est {
                est = est.max(new_est);
                break;
            }
            est = new_est;
            xi = new_xi;
        }

        // Alternating test vector guards against the power iteration
        // stalling on structured inputs.
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + i as f64 / (n - 1) as f64)
            })
            .collect();
        let alt_est = 2.0 * one_norm(&self.apply_inverse(&alt)?) / (3.0 * n as f64);
        Ok(est.max(alt_est))
    }
}

impl InverseOperator for Factorization {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_inverse(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve(b)
    }

    fn apply_inverse_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_transpose(b)
    }
}

/// `A⁻¹` through preconditioned GMRES on `A` and `Aᵀ`, for systems whose
/// LU factors do not fit in memory.
pub struct IterativeInverse<'a> {
    a: &'a CsrMatrix,
    at: CsrMatrix,
    ilu: Ilu0,
    ilu_t: Ilu0,
    opts: SolveOptions,
}

impl<'a> IterativeInverse<'a> {
    pub fn new(a: &'a CsrMatrix, opts: &SolveOptions) -> Result<Self> {
        let at = a.transpose();
        Ok(Self {
            a,
            ilu: Ilu0::new(a)?,
            ilu_t: Ilu0::new(&at)?,
            at,
            opts: *opts,
        })
    }
}

impl std::fmt::Debug for IterativeInverse<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IterativeInverse")
            .field("n", &self.a.nrows())
            .finish()
    }
}

impl InverseOperator for IterativeInverse<'_> {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn apply_inverse(&self, b: &[f64]) -> Result<Vec<f64>> {
        gmres(self.a, &self.ilu, b, &self.opts)
    }

    fn apply_inverse_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        gmres(&self.at, &self.ilu_t, b, &self.opts)
    }
}

/// Estimate of `κ₁(A) = ‖A‖₁ ‖A⁻¹‖₁`.
pub fn estimate_cond1(a: &CsrMatrix) -> Result<f64> {
    let f = Factorization::new(a)?;
    Ok(a.one_norm() * f.inverse_one_norm_estimate()?)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let bn = inf_norm(b);
    if bn == 0.0 {
        inf_norm(&r)
    } else {
        inf_norm(&r) / bn
    }
}

/// Solves with default options.
pub fn solve(system: &SparseSystem) -> Result<SolveReport> {
    solve_with(system, &SolveOptions::default())
}

pub fn solve_with(system: &SparseSystem, opts: &SolveOptions) -> Result<SolveReport> {
    let a = &system.matrix;
    let b = &system.rhs;
    if b.len() != a.nrows() {
        return Err(Error::Config(format!(
            "rhs has {} entries for {} rows",
            b.len(),
            a.nrows()
        )));
    }
    let iterative = match opts.kind {
        SolverKind::Direct => false,
        SolverKind::Gmres => true,
        SolverKind::Auto => a.nrows() > AUTO_ITERATIVE_THRESHOLD,
    };
    if iterative {
        let solution = gmres_ilu0(a, b, opts)?;
        let relative_residual = relative_residual(a, &solution, b);
        let condition = if opts.condition {
            let inv = IterativeInverse::new(a, &estimator_options(opts))?;
            Some(a.one_norm() * inv.inverse_one_norm_estimate()?)
        } else {
            None
        };
        return Ok(SolveReport {
            solution,
            relative_residual,
            condition,
        });
    }
    let f = Factorization::new(a)?;
    let mut solution = f.solve(b)?;
    let mut res = relative_residual(a, &solution, b);
    // One step of iterative refinement when the first solve falls short.
    if res > 1e-12 {
        let ax = a.matvec(&solution);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let d = f.solve(&r)?;
        let refined: Vec<f64> = solution.iter().zip(&d).map(|(x, e)| x + e).collect();
        let res2 = relative_residual(a, &refined, b);
        if res2 < res {
            solution = refined;
            res = res2;
        }
    }
    let condition = if opts.condition {
        Some(a.one_norm() * f.inverse_one_norm_estimate()?)
    } else {
        None
    };
    Ok(SolveReport {
        solution,
        relative_residual: res,
        condition,
    })
}

/// Incomplete LU with zero fill on the sparsity pattern of `a`.
struct Ilu0 {
    n: usize,
    diag: Vec<usize>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Ilu0 {
    fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::with_capacity(a.nnz());
        let mut values = Vec::with_capacity(a.nnz());
        for i in 0..n {
            let (c, v) = a.row(i);
            col_idx.extend_from_slice(c);
            values.extend_from_slice(v);
            row_ptr.push(col_idx.len());
        }
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::Singular(format!("ILU(0): zero diagonal in row {i}")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for k in start..end {
                pos[col_idx[k]] = k;
            }
            for k in start..end {
                let j = col_idx[k];
                if j >= i {
                    break;
                }
                let pivot = values[diag[j]];
                let l = values[k] / pivot;
                values[k] = l;
                for kk in diag[j] + 1..row_ptr[j + 1] {
                    let p = pos[col_idx[kk]];
                    if p != usize::MAX {
                        values[p] -= l * values[kk];
                    }
                }
            }
            for k in start..end {
                pos[col_idx[k]] = usize::MAX;
            }
            if values[diag[i]] == 0.0 || !values[diag[i]].is_finite() {
                return Err(Error::Singular(format!("ILU(0): zero pivot in row {i}")));
            }
        }
        Ok(Self {
            n,
            diag,
            row_ptr,
            col_idx,
            values,
        })
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = r.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in self.row_ptr[i]..self.diag[i] {
                s -= self.values[k] * y[self.col_idx[k]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.values[k] * y[self.col_idx[k]];
            }
            y[i] = s / self.values[self.diag[i]];
        }
        y
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned restarted GMRES with ILU(0).
pub fn gmres_ilu0(a: &CsrMatrix, b: &[f64], opts: &SolveOptions) -> Result<Vec<f64>> {
    gmres(a, &Ilu0::new(a)?, b, opts)
}

fn gmres(a: &CsrMatrix, ilu: &Ilu0, b: &[f64], opts: &SolveOptions) -> Result<Vec<f64>> {
    let n = a.nrows();
    let m = opts.gmres_restart.max(1);
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < opts.gmres_max_iter {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm2(&r);
        rel = beta / bnorm;
        if rel <= opts.gmres_tol {
            log::debug!("gmres: {iterations} iterations, residual {rel:.2e}");
            return Ok(x);
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            iterations += 1;
            let zk = ilu.apply(&v[k]);
            let mut w = a.matvec(&zk);
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                h[i][k] = hik;
                w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= hik * vj);
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = g[k + 1].abs() / bnorm;
            if rel <= opts.gmres_tol || hn == 0.0 || iterations >= opts.gmres_max_iter {
                break;
            }
            v.push(w.iter().map(|t| t / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            x.iter_mut().zip(zi).for_each(|(xj, zj)| *xj += yi * zj);
        }
    }
    let ax = a.matvec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    rel = rel.max(norm2(&r) / bnorm);
    if rel <= opts.gmres_tol * 10.0 {
        Ok(x)
    } else {
        Err(Error::SolverStalled {
            iterations,
            residual: rel,
        })
    }
}

/// Error measures over the band, `e_k = γ_exact(cp(x_k)) - γ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `(1/M̃) sqrt(Σ e_k²)`.
    pub l2: f64,
    /// `sqrt(Σ e_k² / M̃)`, the root mean square.
    pub rms: f64,
    /// `max |e_k|`.
    pub linf: f64,
}

impl ErrorNorms {
    pub fn of(errors: &[f64]) -> Self {
        if errors.is_empty() {
            return Self {
                l2: 0.0,
                rms: 0.0,
                linf: 0.0,
            };
        }
        let n = errors.len() as f64;
        let root = errors.iter().map(|e| e * e).sum::<f64>().sqrt();
        Self {
            l2: root / n,
            rms: root / n.sqrt(),
            linf: inf_norm(errors),
        }
    }
}

/// Pointwise errors `γ_exact(cp(x_k)) - γ_k` over the band.
pub fn band_errors<S: Surface + ?Sized>(
    gamma: &[f64],
    surface: &S,
    band: &Band,
) -> Result<Vec<f64>> {
    if gamma.len() != band.len() {
        return Err(Error::Config(format!(
            "solution has {} entries for a band of {}",
            gamma.len(),
            band.len()
        )));
    }
    band.nodes()
        .iter()
        .zip(gamma)
        .map(|(n, g)| {
            surface
                .exact_solution(&n.proj)
                .map(|e| e - g)
                .ok_or_else(|| Error::Config("surface has no exact solution".into()))
        })
        .collect()
}

/// All error measures of a band solution.
pub fn error_stats<S: Surface + ?Sized>(
    gamma: &[f64],
    surface: &S,
    band: &Band,
) -> Result<ErrorNorms> {
    Ok(ErrorNorms::of(&band_errors(gamma, surface, band)?))
}

/// `(L₂, L∞)` with `L₂ = (1/M̃) sqrt(Σ e_k²)` and `L∞ = max |e_k|`.
pub fn error_norms<S: Surface + ?Sized>(
    gamma: &[f64],
    surface: &S,
    band: &Band,
) -> Result<(f64, f64)> {
    let e = error_stats(gamma, surface, band)?;
    Ok((e.l2, e.linf))
}
