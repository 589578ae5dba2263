//! Command-line experiment runner.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use cacp::assembly::{CoefficientVariant, Method};
use cacp::bench::{
    compare_reports, nnz_growth, run_convergence, run_convergence_for, write_convergence_csv,
    write_convergence_dat, write_nnzfit_csv, write_ratios_csv, ConvergenceReport, MethodChoice,
    RunConfig, SurfaceKind,
};
use cacp::solver::SolverKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bench", version, about = "CP and CACP convergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error table per M: convergence.csv
    Convergence(Common),
    /// CACP/CP error ratios: convergence.csv and ratios.csv
    Compare(Common),
    /// Growth fit of nonzeros in M: nnzfit.csv
    Nnz(Common),
    /// 1-norm condition estimates: convergence.csv with the cond column
    Condest(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Auto,
    Face,
    NodeAvg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Auto,
    Direct,
    Gmres,
}

#[derive(Args)]
struct Common {
    /// circle, clover, sphere, axisym-sphere or axisym-ellipsoid
    #[arg(long, default_value = "circle")]
    surface: SurfaceKind,
    /// cp, cacp or both
    #[arg(long, default_value = "both")]
    method: MethodChoice,
    /// Comma-separated grid sizes
    #[arg(long = "M", value_delimiter = ',', default_values_t = [40usize, 80, 160, 320, 640])]
    ms: Vec<usize>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    coeff_variant: Variant,
    /// Omit wall-clock times so outputs are reproducible
    #[arg(long)]
    no_timing: bool,
    /// Linear solver; auto switches to GMRES for large bands
    #[arg(long, value_enum, default_value = "auto")]
    solver: Solver,
    /// Also write gnuplot .dat files
    #[arg(long)]
    dat: bool,
}

impl Common {
    fn config(&self, condition: bool) -> RunConfig {
        let mut c = RunConfig::new(self.surface, self.method, self.ms.clone());
        c.out = Some(self.out.clone());
        c.coefficients = match self.coeff_variant {
            Variant::Auto => CoefficientVariant::Auto,
            Variant::Face => CoefficientVariant::Face,
            Variant::NodeAvg => CoefficientVariant::NodeAverage,
        };
        c.condition = condition;
        c.no_timing = self.no_timing;
        c.solver = match self.solver {
            Solver::Auto => SolverKind::Auto,
            Solver::Direct => SolverKind::Direct,
            Solver::Gmres => SolverKind::Gmres,
        };
        c
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_tables(args: &Common, reports: &[ConvergenceReport]) -> Result<()> {
    write_convergence_csv(create(&args.out, "convergence.csv")?, reports)?;
    if args.dat {
        for r in reports {
            let name = format!("convergence_{}_{}.dat", r.surface, r.method);
            write_convergence_dat(create(&args.out, &name)?, r)?;
        }
    }
    Ok(())
}

fn print(reports: &[ConvergenceReport]) {
    for r in reports {
        println!("{} {}", r.surface, r.method);
        println!(
            "{:>6} {:>13} {:>13} {:>7} {:>7} {:>9} {:>11}",
            "M", "l2", "linf", "r2", "rinf", "nnz", "cond"
        );
        for row in &r.rows {
            let f = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x:.3}"));
            println!(
                "{:>6} {:>13.6e} {:>13.6e} {:>7} {:>7} {:>9} {:>11}",
                row.m,
                row.l2,
                row.linf,
                f(row.ratio2),
                f(row.ratio_inf),
                row.nnz,
                row.cond.map_or("-".into(), |c| format!("{c:.4e}")),
            );
        }
        for (m, e) in &r.failures {
            eprintln!("M={m} failed: {e}");
        }
    }
}

fn tables(args: &Common, condition: bool) -> Result<bool> {
    fs::create_dir_all(&args.out)?;
    let reports = run_convergence(&args.config(condition))?;
    print(&reports);
    write_tables(args, &reports)?;
    Ok(reports.iter().all(ConvergenceReport::complete))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Convergence(args) => tables(&args, false),
        Command::Condest(args) => tables(&args, true),
        Command::Compare(args) => {
            fs::create_dir_all(&args.out)?;
            let config = args.config(false);
            let cp = run_convergence_for(&config, Method::Cp)?;
            let cacp = run_convergence_for(&config, Method::Cacp)?;
            let reports = [cp.clone(), cacp.clone()];
            print(&reports);
            write_tables(&args, &reports)?;
            let cmp = compare_reports(cp, cacp);
            for r in &cmp.rows {
                println!(
                    "M={} cacp/cp l2={:.4} linf={:.4}",
                    r.m, r.ratio2, r.ratio_inf
                );
            }
            write_ratios_csv(create(&args.out, "ratios.csv")?, &cmp)?;
            Ok(cmp.complete())
        }
        Command::Nnz(args) => {
            fs::create_dir_all(&args.out)?;
            let config = args.config(false);
            let mut fits = Vec::new();
            for method in config.method.methods() {
                let (pts, f) = nnz_growth(&config, method)?;
                for (m, n) in pts {
                    println!("{} {method} M={m}: nnz={n}", args.surface);
                }
                println!(
                    "{} {method}: nnz ~ {:.2} M^{} + {:.1}",
                    args.surface, f.a, f.degree, f.b
                );
                fits.push((method, f));
            }
            write_nnzfit_csv(create(&args.out, "nnzfit.csv")?, args.surface, &fits)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
