//! Command-line driver: convergence sweeps or explicit meshes, CSV report and sampled field output.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Parser;

use crate::benchmarks::{make_case, run_meshes, BenchmarkId, ConvergenceReport};
use crate::discretization::ElementKind;
use crate::postprocess::{FieldHeader, SolutionField};
use crate::{Result, ShellError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err("must be a positive finite number".into())
    }
}

fn element_count(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err("element counts must be positive integers".into()),
    }
}

/// Run configuration parsed from the command line.
#[derive(Debug, Clone, Parser)]
#[command(name = "klshell", version, about = "Linear Kirchhoff-Love shell benchmarks with quadratic NURBS")]
pub struct RunConfig {
    /// strip | hemisphere | scordelis | hypar
    #[arg(long)]
    pub benchmark: BenchmarkId,

    /// cs | cas
    #[arg(long, default_value = "cas")]
    pub element: ElementKind,

    /// Gauss points per direction.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub quad: u8,

    /// R/t (L/t for hypar). Defaults to the smallest standard value of the benchmark.
    #[arg(long, value_parser = positive)]
    pub slenderness: Option<f64>,

    /// Number of uniform refinement levels starting from the initial mesh.
    #[arg(long, conflicts_with = "elements_per_side", value_parser = clap::value_parser!(u32).range(1..))]
    pub levels: Option<u32>,

    /// Explicit meshes by element count along the first direction, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = element_count)]
    pub elements_per_side: Vec<usize>,

    /// Sample points per parametric direction for field.dat; no field file when absent.
    #[arg(long)]
    pub field_density: Option<usize>,

    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,

    /// Append wall-clock seconds to report.csv (breaks bitwise reproducibility).
    #[arg(long)]
    pub timings: bool,
}

impl RunConfig {
    pub fn slenderness(&self) -> f64 {
        self.slenderness
            .unwrap_or_else(|| self.benchmark.standard_slenderness()[0])
    }

    /// Meshes to solve, coarsest first.
    pub fn meshes(&self) -> Result<Vec<(usize, usize)>> {
        let case = make_case(self.benchmark, self.slenderness())?;
        if self.elements_per_side.is_empty() {
            let levels = self.levels.unwrap_or(1) as usize;
            Ok((0..levels).map(|l| case.mesh_for_level(l)).collect())
        } else {
            Ok(self.elements_per_side.iter().map(|&n| case.mesh_for_elements(n)).collect())
        }
    }
}

fn execute(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<ConvergenceReport> {
    let case = make_case(cfg.benchmark, cfg.slenderness())?;
    let meshes = cfg.meshes()?;
    fs::create_dir_all(&cfg.out)?;
    let mut last: Option<SolutionField> = None;
    let mut io_err = None;
    let report = run_meshes(&case, cfg.element, cfg.quad as usize, &meshes, |row, analysis| {
        let norm = row.normalized.map_or("-".to_string(), |v| format!("{v:.6}"));
        if let Err(e) = writeln!(
            stdout,
            "level {} mesh {}x{} dofs {} deflection {:.6e} normalized {}",
            row.level, row.mesh.0, row.mesh.1, row.dofs, row.deflection, norm
        ) {
            io_err.get_or_insert(e);
        }
        if cfg.field_density.is_some() {
            last = Some(analysis.field.clone());
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    report.write_csv(fs::File::create(cfg.out.join("report.csv"))?, cfg.timings)?;
    if let (Some(density), Some(field)) = (cfg.field_density, last) {
        let mut w = BufWriter::new(fs::File::create(cfg.out.join("field.dat"))?);
        let header = FieldHeader {
            benchmark: cfg.benchmark.to_string(),
            slenderness: cfg.slenderness(),
        };
        field.write_field(&mut w, &header, density)?;
        w.flush()?;
    }
    Ok(report)
}

/// Usage errors are those a user fixes by changing arguments.
fn exit_code(e: &ShellError) -> i32 {
    match e {
        ShellError::Unsupported(_) | ShellError::InvalidMaterial(_) => EXIT_USAGE,
        ShellError::Level { source, .. } => exit_code(source),
        _ => EXIT_NUMERICAL,
    }
}

/// Entry point shared by the binary and tests; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = write!(stderr, "{}", e.render());
            return EXIT_USAGE;
        }
        Err(e) => {
            // --help and --version
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(&cfg, stdout) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
