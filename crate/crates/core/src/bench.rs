//! Convergence studies, CACP/CP comparisons and growth fits.
//!
//! Every run uses the box `[-2, 2]^d` split into `M` cells per axis. The
//! reported `l2` column is the root mean square band error.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use crate::assembly::{assemble, AssemblyOptions, Band, CoefficientVariant, Method};
use crate::axisym::{assemble_tension_axisym, AxisymBand, AxisymGeometry, Spheroid, ZonalField};
use crate::error::{Error, Result};
use crate::grid::{build_grid, ClassifyOptions, GridSpec, NodeLabel};
use crate::interp::build_interp_matrix;
use crate::solver::{
    solve_with, ErrorNorms, Factorization, InverseOperator, SolveOptions, SolverKind,
};
use crate::sparse::CsrMatrix;
use crate::surface::{CircleSurface, CloverSurface, SphereSurface, Surface};

/// Version tag written in every CSV header comment.
pub const SCHEMA_VERSION: u32 = 1;

/// Test problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceKind {
    Circle,
    Clover,
    Sphere,
    AxisymSphere,
    AxisymEllipsoid,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 5] = [
        SurfaceKind::Circle,
        SurfaceKind::Clover,
        SurfaceKind::Sphere,
        SurfaceKind::AxisymSphere,
        SurfaceKind::AxisymEllipsoid,
    ];

    pub fn dim(self) -> usize {
        match self {
            SurfaceKind::Sphere => 3,
            _ => 2,
        }
    }

    pub fn is_axisym(self) -> bool {
        matches!(
            self,
            SurfaceKind::AxisymSphere | SurfaceKind::AxisymEllipsoid
        )
    }

    /// Degree of the nnz growth law in `M`.
    pub fn nnz_degree(self) -> usize {
        self.dim() - 1
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurfaceKind::Circle => "circle",
            SurfaceKind::Clover => "clover",
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::AxisymSphere => "axisym-sphere",
            SurfaceKind::AxisymEllipsoid => "axisym-ellipsoid",
        })
    }
}

impl FromStr for SurfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown surface {s:?}")))
    }
}

/// Methods to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    Cp,
    #[default]
    Cacp,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Cp => vec![Method::Cp],
            MethodChoice::Cacp => vec![Method::Cacp],
            MethodChoice::Both => vec![Method::Cp, Method::Cacp],
        }
    }
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cp" => Ok(MethodChoice::Cp),
            "cacp" => Ok(MethodChoice::Cacp),
            "both" => Ok(MethodChoice::Both),
            _ => Err(Error::Config(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub surface: SurfaceKind,
    pub method: MethodChoice,
    pub ms: Vec<usize>,
    pub out: Option<PathBuf>,
    pub coefficients: CoefficientVariant,
    /// Estimate `κ₁(A)` for every row.
    pub condition: bool,
    /// Leave wall-clock times out so reports are reproducible byte for byte.
    pub no_timing: bool,
    pub solver: SolverKind,
}

impl RunConfig {
    pub fn new(surface: SurfaceKind, method: MethodChoice, ms: Vec<usize>) -> Self {
        Self {
            surface,
            method,
            ms,
            out: None,
            coefficients: CoefficientVariant::Auto,
            condition: false,
            no_timing: false,
            solver: SolverKind::Auto,
        }
    }

    /// Checks `M ≥ 40` and `M ≡ 0 mod 4`.
    pub fn validate(&self) -> Result<()> {
        if self.ms.is_empty() {
            return Err(Error::Config("no grid sizes given".into()));
        }
        if let Some(m) = self.ms.iter().find(|&&m| m < 40 || m % 4 != 0) {
            return Err(Error::Config(format!(
                "M = {m}: grid sizes must be multiples of 4 and at least 40"
            )));
        }
        if self.surface.is_axisym() && self.method != MethodChoice::Cacp {
            return Err(Error::Config(
                "axisymmetric surfaces only support the cacp method".into(),
            ));
        }
        Ok(())
    }
}

/// Grid `[-2, 2]^dim` with `m` cells per axis.
pub fn benchmark_grid(dim: usize, m: usize) -> Result<GridSpec> {
    build_grid(dim, &vec![-2.0; dim], &vec![2.0; dim], m)
}

/// Result of one `(surface, method, M)` solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub m: usize,
    pub method: Method,
    /// Band size.
    pub unknowns: usize,
    pub nnz: usize,
    pub norms: ErrorNorms,
    pub cond: Option<f64>,
    pub seconds: f64,
    /// `max_k |γ_k - (E₃γ)(cp(x_k))|` over all band rows.
    pub side_condition: f64,
    pub relative_residual: f64,
}

fn side_condition(e3: &CsrMatrix, gamma: &[f64]) -> f64 {
    e3.matvec(gamma)
        .iter()
        .zip(gamma)
        .fold(0.0, |m, (p, g)| m.max((p - g).abs()))
}

fn solve_options(config: &RunConfig) -> SolveOptions {
    SolveOptions {
        kind: config.solver,
        condition: config.condition,
        ..SolveOptions::default()
    }
}

fn run_band_case<S: Surface>(
    surface: &S,
    m: usize,
    method: Method,
    config: &RunConfig,
) -> Result<CaseResult> {
    let start = Instant::now();
    let grid = benchmark_grid(surface.dim(), m)?;
    let band = Band::build(&grid, surface, &ClassifyOptions::default())?;
    let opts = AssemblyOptions {
        coefficients: config.coefficients,
        ..AssemblyOptions::default()
    };
    let sys = assemble(&band, surface, method, &opts)?;
    let report = solve_with(&sys, &solve_options(config))?;
    let errors = crate::solver::band_errors(&report.solution, surface, &band)?;
    let e3 = build_interp_matrix(&grid, band.map(), &band.closest_points(), 3)?;
    Ok(CaseResult {
        m,
        method,
        unknowns: band.len(),
        nnz: sys.nnz(),
        norms: ErrorNorms::of(&errors),
        cond: report.condition,
        seconds: start.elapsed().as_secs_f64(),
        side_condition: side_condition(&e3, &report.solution),
        relative_residual: report.relative_residual,
    })
}

fn run_axisym_case<C: crate::surface::curve::ClosedCurve + Sync>(
    geom: &AxisymGeometry<C>,
    m: usize,
    config: &RunConfig,
) -> Result<CaseResult> {
    let start = Instant::now();
    let grid = benchmark_grid(2, m)?;
    let band = AxisymBand::build(&grid, geom, &ClassifyOptions::default())?;
    let sys = assemble_tension_axisym(geom, &band)?;
    let f = Factorization::new(&sys.matrix)?;
    let gamma = f.solve(&sys.rhs)?;
    let cond = if config.condition {
        Some(sys.matrix.one_norm() * f.inverse_one_norm_estimate()?)
    } else {
        None
    };
    let errors: Vec<f64> = band
        .nodes()
        .iter()
        .zip(&gamma)
        .map(|(n, g)| geom.exact_solution(&n.proj).unwrap_or(f64::NAN) - g)
        .collect();
    let e3 = band.interp_matrix()?;
    Ok(CaseResult {
        m,
        method: Method::Cacp,
        unknowns: band.len(),
        nnz: sys.matrix.nnz(),
        norms: ErrorNorms::of(&errors),
        cond,
        seconds: start.elapsed().as_secs_f64(),
        side_condition: side_condition(&e3, &gamma),
        relative_residual: crate::solver::relative_residual(&sys.matrix, &gamma, &sys.rhs),
    })
}

/// Assembles and solves one case.
pub fn run_case(
    surface: SurfaceKind,
    method: Method,
    m: usize,
    config: &RunConfig,
) -> Result<CaseResult> {
    match surface {
        SurfaceKind::Circle => run_band_case(&CircleSurface::default(), m, method, config),
        SurfaceKind::Clover => run_band_case(&CloverSurface::default(), m, method, config),
        SurfaceKind::Sphere => run_band_case(&SphereSurface::default(), m, method, config),
        SurfaceKind::AxisymSphere | SurfaceKind::AxisymEllipsoid => {
            if method != Method::Cacp {
                return Err(Error::Config(
                    "axisymmetric surfaces only support the cacp method".into(),
                ));
            }
            let curve = if surface == SurfaceKind::AxisymSphere {
                Spheroid::sphere(1.0)
            } else {
                Spheroid { a: 0.5, c: 1.0 }
            };
            run_axisym_case(&AxisymGeometry::new(curve, ZonalField::Height), m, config)
        }
    }
}

/// Nonzeros of the assembled matrix without solving.
pub fn assembled_nnz(
    surface: SurfaceKind,
    method: Method,
    m: usize,
    coefficients: CoefficientVariant,
) -> Result<usize> {
    fn band_nnz<S: Surface>(
        s: &S,
        m: usize,
        method: Method,
        c: CoefficientVariant,
    ) -> Result<usize> {
        let grid = benchmark_grid(s.dim(), m)?;
        let band = Band::build(&grid, s, &ClassifyOptions::default())?;
        let opts = AssemblyOptions {
            coefficients: c,
            ..AssemblyOptions::default()
        };
        Ok(assemble(&band, s, method, &opts)?.nnz())
    }
    match surface {
        SurfaceKind::Circle => band_nnz(&CircleSurface::default(), m, method, coefficients),
        SurfaceKind::Clover => band_nnz(&CloverSurface::default(), m, method, coefficients),
        SurfaceKind::Sphere => band_nnz(&SphereSurface::default(), m, method, coefficients),
        _ => {
            let curve = if surface == SurfaceKind::AxisymSphere {
                Spheroid::sphere(1.0)
            } else {
                Spheroid { a: 0.5, c: 1.0 }
            };
            let geom = AxisymGeometry::new(curve, ZonalField::Height);
            let band =
                AxisymBand::build(&benchmark_grid(2, m)?, &geom, &ClassifyOptions::default())?;
            Ok(assemble_tension_axisym(&geom, &band)?.matrix.nnz())
        }
    }
}

/// Growth fit of assembled nonzeros over `config.ms` for one method.
pub fn nnz_growth(config: &RunConfig, method: Method) -> Result<(Vec<(usize, usize)>, GrowthFit)> {
    config.validate()?;
    let pts = config
        .ms
        .iter()
        .map(|&m| {
            Ok((
                m,
                assembled_nnz(config.surface, method, m, config.coefficients)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let xy: Vec<(f64, f64)> = pts.iter().map(|&(m, n)| (m as f64, n as f64)).collect();
    let fit = fit_nnz_growth(&xy, config.surface.nnz_degree())?;
    Ok((pts, fit))
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub m: usize,
    pub l2: f64,
    pub linf: f64,
    /// Previous row's error over this row's, absent on the first row.
    pub ratio2: Option<f64>,
    pub ratio_inf: Option<f64>,
    pub nnz: usize,
    pub cond: Option<f64>,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub surface: SurfaceKind,
    pub method: Method,
    pub rows: Vec<ConvergenceRow>,
    /// Complete results behind `rows`.
    pub cases: Vec<CaseResult>,
    /// `(M, message)` for rows that failed.
    pub failures: Vec<(usize, String)>,
}

impl ConvergenceReport {
    pub fn complete(&self) -> bool {
        self.failures.is_empty()
    }

    /// Observed order `log₂(e_first / e_last) / log₂(M_last / M_first)` of
    /// the `l2` column over rows with `lo ≤ M ≤ hi`.
    pub fn observed_order(&self, lo: usize, hi: usize) -> Option<f64> {
        let rows: Vec<_> = self
            .rows
            .iter()
            .filter(|r| r.m >= lo && r.m <= hi)
            .collect();
        let (a, b) = (rows.first()?, rows.last()?);
        if a.m == b.m {
            return None;
        }
        Some((a.l2 / b.l2).log2() / (b.m as f64 / a.m as f64).log2())
    }
}

fn ratio(prev: f64, cur: f64) -> f64 {
    prev / cur
}

/// Runs every `M` of `config` with a single method. Failing rows are
/// recorded and skipped; ratios link consecutive completed rows.
pub fn run_convergence_for(config: &RunConfig, method: Method) -> Result<ConvergenceReport> {
    config.validate()?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut cases = Vec::new();
    let mut failures = Vec::new();
    for &m in &config.ms {
        match run_case(config.surface, method, m, config) {
            Ok(c) => {
                let prev = rows.last();
                rows.push(ConvergenceRow {
                    m,
                    l2: c.norms.rms,
                    linf: c.norms.linf,
                    ratio2: prev.map(|p| ratio(p.l2, c.norms.rms)),
                    ratio_inf: prev.map(|p| ratio(p.linf, c.norms.linf)),
                    nnz: c.nnz,
                    cond: c.cond,
                    seconds: (!config.no_timing).then_some(c.seconds),
                });
                log::info!(
                    "{} {} M={m}: l2={:.6e} linf={:.6e} nnz={}",
                    config.surface,
                    method,
                    c.norms.rms,
                    c.norms.linf,
                    c.nnz
                );
                cases.push(c);
            }
            Err(e) => {
                log::warn!("{} {} M={m} failed: {e}", config.surface, method);
                failures.push((m, e.to_string()));
            }
        }
    }
    Ok(ConvergenceReport {
        surface: config.surface,
        method,
        rows,
        cases,
        failures,
    })
}

/// Runs every method of `config`.
pub fn run_convergence(config: &RunConfig) -> Result<Vec<ConvergenceReport>> {
    config
        .method
        .methods()
        .into_iter()
        .map(|m| run_convergence_for(config, m))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub m: usize,
    /// CACP over CP.
    pub ratio2: f64,
    pub ratio_inf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub surface: SurfaceKind,
    pub rows: Vec<ComparisonRow>,
    /// Mean ratio over the largest two common `M`.
    pub asymptotic: Option<(f64, f64)>,
    pub cp: ConvergenceReport,
    pub cacp: ConvergenceReport,
}

impl ComparisonReport {
    pub fn complete(&self) -> bool {
        self.cp.complete() && self.cacp.complete()
    }

    /// Ratios at the finest common `M`.
    pub fn finest(&self) -> Option<ComparisonRow> {
        self.rows.last().copied()
    }
}

/// Error ratios CACP/CP on identical bands.
pub fn compare_methods(config: &RunConfig) -> Result<ComparisonReport> {
    let cp = run_convergence_for(config, Method::Cp)?;
    let cacp = run_convergence_for(config, Method::Cacp)?;
    Ok(compare_reports(cp, cacp))
}

/// Pairs rows of two finished reports by `M`.
pub fn compare_reports(cp: ConvergenceReport, cacp: ConvergenceReport) -> ComparisonReport {
    let rows: Vec<ComparisonRow> = cacp
        .rows
        .iter()
        .filter_map(|a| {
            let b = cp.rows.iter().find(|b| b.m == a.m)?;
            Some(ComparisonRow {
                m: a.m,
                ratio2: a.l2 / b.l2,
                ratio_inf: a.linf / b.linf,
            })
        })
        .collect();
    let asymptotic = match rows.as_slice() {
        [.., p, q] => Some((
            0.5 * (p.ratio2 + q.ratio2),
            0.5 * (p.ratio_inf + q.ratio_inf),
        )),
        _ => None,
    };
    ComparisonReport {
        surface: cacp.surface,
        rows,
        asymptotic,
        cp,
        cacp,
    }
}

/// `nnz ≈ a·M^degree + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub degree: usize,
    pub a: f64,
    pub b: f64,
}

impl GrowthFit {
    pub fn eval(&self, m: f64) -> f64 {
        self.a * m.powi(self.degree as i32) + self.b
    }
}

/// Ordinary least squares of `nnz = a·M^degree + b` over `(M, nnz)` pairs.
/// Degree 1 is the 2D law, degree 2 the 3D one.
pub fn fit_nnz_growth(points: &[(f64, f64)], degree: usize) -> Result<GrowthFit> {
    if !(1..=2).contains(&degree) {
        return Err(Error::Config(format!("fit degree {degree} not in 1..=2")));
    }
    if points.len() < 3 {
        return Err(Error::Underdetermined {
            needed: 3,
            got: points.len(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.powi(degree as i32)).collect();
    let n = points.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(points)
        .map(|(x, p)| (x - mx) * (p.1 - my))
        .sum();
    if sxx == 0.0 {
        return Err(Error::Underdetermined { needed: 2, got: 1 });
    }
    let a = sxy / sxx;
    Ok(GrowthFit {
        degree,
        a,
        b: my - a * mx,
    })
}

/// nnz fit of a finished report.
pub fn fit_report_nnz(report: &ConvergenceReport) -> Result<GrowthFit> {
    let pts: Vec<(f64, f64)> = report
        .rows
        .iter()
        .map(|r| (r.m as f64, r.nnz as f64))
        .collect();
    fit_nnz_growth(&pts, report.surface.nnz_degree())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6e}"))
}

fn header<W: Write>(out: &mut W, kind: &str, surface: SurfaceKind) -> Result<()> {
    writeln!(
        out,
        "# cacp-bench {kind} v{SCHEMA_VERSION} surface={surface}"
    )?;
    Ok(())
}

/// `M,l2,linf,ratio2,ratioInf,nnz,cond,seconds` with a `method` column
/// prepended.
pub fn write_convergence_csv<W: Write>(mut out: W, reports: &[ConvergenceReport]) -> Result<()> {
    let Some(first) = reports.first() else {
        return Ok(());
    };
    header(&mut out, "convergence", first.surface)?;
    writeln!(out, "method,M,l2,linf,ratio2,ratioInf,nnz,cond,seconds")?;
    for r in reports {
        for row in &r.rows {
            writeln!(
                out,
                "{},{},{:.6e},{:.6e},{},{},{},{},{}",
                r.method,
                row.m,
                row.l2,
                row.linf,
                opt(row.ratio2),
                opt(row.ratio_inf),
                row.nnz,
                opt(row.cond),
                row.seconds
                    .map_or_else(|| "NA".into(), |s| format!("{s:.3}")),
            )?;
        }
    }
    Ok(())
}

/// Whitespace-separated columns for gnuplot.
pub fn write_convergence_dat<W: Write>(mut out: W, report: &ConvergenceReport) -> Result<()> {
    writeln!(out, "# {} {}: M l2 linf nnz", report.surface, report.method)?;
    for row in &report.rows {
        writeln!(out, "{} {:.6e} {:.6e} {}", row.m, row.l2, row.linf, row.nnz)?;
    }
    Ok(())
}

/// `M,ratio2,ratioInf`; the asymptotic value is in the header comment.
pub fn write_ratios_csv<W: Write>(mut out: W, report: &ComparisonReport) -> Result<()> {
    header(&mut out, "ratios", report.surface)?;
    if let Some((a, b)) = report.asymptotic {
        writeln!(out, "# asymptotic ratio2={a:.4} ratioInf={b:.4}")?;
    }
    writeln!(out, "M,ratio2,ratioInf")?;
    for r in &report.rows {
        writeln!(out, "{},{:.4},{:.4}", r.m, r.ratio2, r.ratio_inf)?;
    }
    Ok(())
}

/// `method,degree,a,b`.
pub fn write_nnzfit_csv<W: Write>(
    mut out: W,
    surface: SurfaceKind,
    fits: &[(Method, GrowthFit)],
) -> Result<()> {
    header(&mut out, "nnzfit", surface)?;
    writeln!(out, "method,degree,a,b")?;
    for (m, f) in fits {
        writeln!(out, "{m},{},{:.6e},{:.6e}", f.degree, f.a, f.b)?;
    }
    Ok(())
}

/// Number of interpolation and edge rows of a classified band.
pub fn band_census(band: &Band) -> (usize, usize) {
    let interp = band
        .nodes()
        .iter()
        .filter(|n| n.label == NodeLabel::Interpolation)
        .count();
    (interp, band.len() - interp)
}
