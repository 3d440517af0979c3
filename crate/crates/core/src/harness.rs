//! Batch runs: load a matrix, build a right-hand side, factor and solve in
//! a chosen precision mode and summarize the result as a JSON report.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::fixtures::mod_eleven;
use crate::hybrid::{hybrid_factor, HybridOptions};
use crate::krylov::{ConvergenceHistory, Method, SolverConfig};
use crate::lowfactor::FactorOptions;
use crate::precision::{DoubleDouble, DoubleQuad, PrecisionPair, Pure, Scalar, ScalarKind, SingleDouble};
use crate::sparsemat::{read_matrix_market_file, SparseMatrix};

pub const REPORT_SCHEMA: u32 = 1;

/// Precision mode of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `(single, double)` or `(double, double-double)`.
    Mixed(ScalarKind),
    /// One kind for everything; inner solves are direct.
    Pure(ScalarKind),
}

impl Mode {
    /// Mixed pair named by its higher kind: `f32f64` or `f64dd`.
    pub fn parse_pair(s: &str) -> Result<Self> {
        match s {
            "f32f64" => Ok(Mode::Mixed(ScalarKind::Double)),
            "f64dd" => Ok(Mode::Mixed(ScalarKind::DoubleDouble)),
            _ => Err(Error::Config(format!("unknown pair `{s}` (expected f32f64 or f64dd)"))),
        }
    }

    pub fn parse_pure(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Mode::Pure(ScalarKind::Single)),
            "f64" => Ok(Mode::Pure(ScalarKind::Double)),
            "dd" => Ok(Mode::Pure(ScalarKind::DoubleDouble)),
            _ => Err(Error::Config(format!("unknown pure kind `{s}` (expected f32, f64 or dd)"))),
        }
    }

    fn higher(self) -> ScalarKind {
        match self {
            Mode::Mixed(k) | Mode::Pure(k) => k,
        }
    }
}

/// How the right-hand side is produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RhsMode {
    /// `x*_i = i mod 11` (1-based), `b = K x*`.
    ModEleven,
    /// `b` read from a text file; no reference solution.
    File(PathBuf),
    /// `x*` uniform in `[-1, 1)` from a seeded generator, `b = K x*`.
    Seeded(u64),
}

impl FromStr for RhsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "mod11" {
            return Ok(RhsMode::ModEleven);
        }
        if let Some(p) = s.strip_prefix("file:") {
            return Ok(RhsMode::File(PathBuf::from(p)));
        }
        if let Some(seed) = s.strip_prefix("seed:") {
            return seed
                .parse()
                .map(RhsMode::Seeded)
                .map_err(|_| Error::Config(format!("bad seed in `{s}`")));
        }
        Err(Error::Config(format!("unknown rhs `{s}` (expected mod11, file:PATH or seed:N)")))
    }
}

impl fmt::Display for RhsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhsMode::ModEleven => f.write_str("mod11"),
            RhsMode::File(p) => write!(f, "file:{}", p.display()),
            RhsMode::Seeded(s) => write!(f, "seed:{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub matrix_path: PathBuf,
    pub tau: f64,
    /// `None` picks the default for the matrix size.
    pub levels: Option<usize>,
    pub n_extra: usize,
    pub mode: Mode,
    pub method: Method,
    /// `None` means `50 * eps` of the higher kind.
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub rhs: RhsMode,
    /// Convergence history of the Schur-complement construction; the inner
    /// history of the solve goes next to it with a `.solve` suffix.
    pub history_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    /// Computed solution, one value per line (`hi lo` for double-double).
    pub solution_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(matrix_path: impl Into<PathBuf>) -> Self {
        let f = FactorOptions::default();
        Self {
            matrix_path: matrix_path.into(),
            tau: f.tau,
            levels: None,
            n_extra: f.n_extra,
            mode: Mode::Mixed(ScalarKind::Double),
            method: Method::BlockGCR,
            tol: None,
            max_iter: 100,
            rhs: RhsMode::ModEleven,
            history_path: None,
            report_path: None,
            solution_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if let Some(0) = self.levels {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        SolverConfig::new(self.tol.unwrap_or(1.0), self.max_iter, self.method).validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    NotConverged,
}

/// One run's summary. Relative errors and residuals use the max norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub schema: u32,
    pub matrix: String,
    pub n: usize,
    pub nnz: usize,
    /// `mixed` or `pure`.
    pub mode: String,
    /// e.g. `mixed(double+single)` or `quadruple`.
    pub precision: String,
    pub method: Method,
    pub rhs: String,
    pub tau: f64,
    pub levels: usize,
    pub tol: f64,
    /// `||x - x*|| / ||x*||`; absent for a file right-hand side.
    pub error: Option<f64>,
    /// `||b - K x|| / ||b||`, evaluated in double-double.
    pub residual: Option<f64>,
    pub kernel_dim: usize,
    pub postponed: usize,
    pub moved: usize,
    pub inconsistent: bool,
    pub status: RunStatus,
    /// Iterations of the Schur-complement construction and of the solve.
    pub factor_iterations: Option<usize>,
    pub solve_iterations: Option<usize>,
    pub factor_seconds: f64,
    pub solve_seconds: f64,
    pub norm: &'static str,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Outcome of [`run`]: the report plus the solution lifted to
/// double-double (empty when the run failed).
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: SolveReport,
    pub solution: Vec<DoubleDouble>,
}

/// Loads the matrix and runs the configured mode, writing the report,
/// histories and solution to the configured paths.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let k = read_matrix_market_file(&cfg.matrix_path)?;
    let name = cfg
        .matrix_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    run_matrix(&k, &name, cfg)
}

/// [`run`] on a matrix already in memory.
pub fn run_matrix(k: &SparseMatrix<f64>, name: &str, cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    if k.nrows() != k.ncols() {
        return Err(Error::Dimension(format!("matrix is {}x{}, expected square", k.nrows(), k.ncols())));
    }
    let out = match cfg.mode {
        Mode::Mixed(ScalarKind::Double) => run_typed::<SingleDouble>(k, name, cfg)?,
        Mode::Mixed(ScalarKind::DoubleDouble) => run_typed::<DoubleQuad>(k, name, cfg)?,
        Mode::Mixed(ScalarKind::Single) => {
            return Err(Error::Config("single is not the higher kind of any pair".into()))
        }
        Mode::Pure(ScalarKind::Single) => run_typed::<Pure<f32>>(k, name, cfg)?,
        Mode::Pure(ScalarKind::Double) => run_typed::<Pure<f64>>(k, name, cfg)?,
        Mode::Pure(ScalarKind::DoubleDouble) => run_typed::<Pure<DoubleDouble>>(k, name, cfg)?,
    };
    if let Some(p) = &cfg.report_path {
        let mut w = BufWriter::new(File::create(p)?);
        writeln!(w, "{}", out.report.to_json()?)?;
        w.flush()?;
    }
    if let Some(p) = &cfg.solution_path {
        if out.report.status == RunStatus::Ok {
            write_solution(&out.solution, cfg.mode.higher(), p)?;
        }
    }
    Ok(out)
}

/// Right-hand side and reference solution (if any) in double-double.
/// Products are formed in the run's higher kind, or double for pure single
/// runs, so `b` is what that kind's `spmv` gives.
pub fn build_rhs(k: &SparseMatrix<f64>, rhs: &RhsMode, higher: ScalarKind) -> Result<(Vec<DoubleDouble>, Option<Vec<DoubleDouble>>)> {
    let n = k.nrows();
    let xs = match rhs {
        RhsMode::ModEleven => mod_eleven(n),
        RhsMode::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
        RhsMode::File(p) => {
            let b = read_vector(p, n)?;
            return Ok((b.into_iter().map(DoubleDouble::from_f64).collect(), None));
        }
    };
    let b: Vec<DoubleDouble> = if higher == ScalarKind::DoubleDouble {
        let xd: Vec<DoubleDouble> = xs.iter().map(|&v| DoubleDouble::from_f64(v)).collect();
        k.cast::<DoubleDouble>().spmv(&xd)?
    } else {
        k.spmv(&xs)?.into_iter().map(DoubleDouble::from_f64).collect()
    };
    Ok((b, Some(xs.into_iter().map(DoubleDouble::from_f64).collect())))
}

/// `||b - K x||_inf / ||b||_inf` in double-double.
pub fn relative_residual(k: &SparseMatrix<f64>, x: &[DoubleDouble], b: &[DoubleDouble]) -> Result<f64> {
    let kx = k.cast::<DoubleDouble>().spmv(x)?;
    let num = b.iter().zip(&kx).map(|(&bi, &ki)| (bi - ki).abs().to_f64()).fold(0.0, f64::max);
    let den = b.iter().map(|v| v.abs().to_f64()).fold(0.0, f64::max);
    Ok(if den > 0.0 { num / den } else { num })
}

fn relative_error(x: &[DoubleDouble], xs: &[DoubleDouble]) -> f64 {
    let num = x.iter().zip(xs).map(|(&a, &b)| (a - b).abs().to_f64()).fold(0.0, f64::max);
    let den = xs.iter().map(|v| v.abs().to_f64()).fold(0.0, f64::max);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// One run in the pair `P`. The matrix is rounded to `P::Higher`.
pub fn run_typed<P: PrecisionPair>(k: &SparseMatrix<f64>, name: &str, cfg: &RunConfig) -> Result<RunOutcome> {
    let n = k.nrows();
    let kind = P::kind();
    let (b, xs) = build_rhs(k, &cfg.rhs, kind.higher)?;
    let solver = SolverConfig::new(cfg.tol.unwrap_or(50.0 * P::Higher::eps()), cfg.max_iter, cfg.method);
    let mut opts = HybridOptions::for_pair::<P>().with_tau(cfg.tau).with_n_extra(cfg.n_extra).with_solver(solver);
    if let Some(m) = cfg.levels {
        opts = opts.with_levels(m);
    }

    let mut report = SolveReport {
        schema: REPORT_SCHEMA,
        matrix: name.to_string(),
        n,
        nnz: k.nnz(),
        mode: if P::is_pure() { "pure" } else { "mixed" }.to_string(),
        precision: kind.label(),
        method: cfg.method,
        rhs: cfg.rhs.to_string(),
        tau: cfg.tau,
        levels: 0,
        tol: solver.tol,
        error: None,
        residual: None,
        kernel_dim: 0,
        postponed: 0,
        moved: 0,
        inconsistent: false,
        status: RunStatus::Ok,
        factor_iterations: None,
        solve_iterations: None,
        factor_seconds: 0.0,
        solve_seconds: 0.0,
        norm: "max",
    };

    let kh: SparseMatrix<P::Higher> = k.cast();
    let t = Instant::now();
    let factored = hybrid_factor::<P>(&kh, &opts);
    report.factor_seconds = t.elapsed().as_secs_f64();
    let f = match factored {
        Ok(f) => f,
        Err(Error::NotConverged { history, .. }) => {
            report.status = RunStatus::NotConverged;
            report.factor_iterations = Some(history.iterations());
            emit_opt(cfg.history_path.as_deref(), &history)?;
            return Ok(RunOutcome { report, solution: Vec::new() });
        }
        Err(e) => return Err(e),
    };
    report.levels = f.levels();
    report.kernel_dim = f.kernel_dim();
    report.postponed = f.postponed_count();
    report.moved = f.partition().moved;
    report.factor_iterations = f.x12_history().map(|h| h.iterations());
    if let Some(h) = f.x12_history() {
        emit_opt(cfg.history_path.as_deref(), h)?;
    }

    let bh = DenseMat::from_column(&b.iter().map(|&v| P::Higher::from_dd(v)).collect::<Vec<_>>());
    let t = Instant::now();
    let solved = f.solve(&bh);
    report.solve_seconds = t.elapsed().as_secs_f64();
    let solve_history = cfg.history_path.as_deref().map(solve_history_path);
    let sol = match solved {
        Ok(s) => s,
        Err(Error::NotConverged { history, .. }) => {
            report.status = RunStatus::NotConverged;
            report.solve_iterations = Some(history.iterations());
            emit_opt(solve_history.as_deref(), &history)?;
            return Ok(RunOutcome { report, solution: Vec::new() });
        }
        Err(e) => return Err(e),
    };
    if let Some(h) = &sol.history {
        report.solve_iterations = Some(h.iterations());
        emit_opt(solve_history.as_deref(), h)?;
    }
    report.inconsistent = sol.inconsistent;

    let x: Vec<DoubleDouble> = sol.x.column(0).into_iter().map(|v| v.to_dd()).collect();
    report.residual = Some(relative_residual(k, &x, &b)?);
    report.error = xs.as_ref().map(|xs| relative_error(&x, xs));
    Ok(RunOutcome { report, solution: x })
}

/// Writes a convergence history as CSV.
pub fn emit_history(h: &ConvergenceHistory, path: &Path) -> Result<()> {
    if h.records.is_empty() {
        return Err(Error::Config("refusing to write an empty convergence history".into()));
    }
    h.write_csv_file(path)
}

fn emit_opt(path: Option<&Path>, h: &ConvergenceHistory) -> Result<()> {
    match path {
        Some(p) if !h.records.is_empty() => emit_history(h, p),
        _ => Ok(()),
    }
}

/// `run.csv` becomes `run.solve.csv`.
pub fn solve_history_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.solve.{}", ext.to_string_lossy()),
        None => format!("{stem}.solve"),
    };
    path.with_file_name(name)
}

fn write_solution(x: &[DoubleDouble], kind: ScalarKind, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in x {
        if kind == ScalarKind::DoubleDouble {
            writeln!(w, "{:e} {:e}", v.hi, v.lo)?;
        } else {
            writeln!(w, "{:e}", v.hi)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a solution written by a run; one or two numbers per line.
pub fn read_solution(path: &Path) -> Result<Vec<DoubleDouble>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace().map(|t| {
            t.parse::<f64>().map_err(|e| Error::Parse { line: i + 1, msg: format!("{t}: {e}") })
        });
        let hi = match parts.next() {
            Some(v) => v?,
            None => continue,
        };
        let lo = parts.next().transpose()?.unwrap_or(0.0);
        out.push(DoubleDouble::new(hi, lo));
    }
    Ok(out)
}

/// Plain list of `n` numbers. Lines starting with `%` or `#` are skipped,
/// and a Matrix Market array header `n 1` is accepted.
pub fn read_vector(path: &Path, n: usize) -> Result<Vec<f64>> {
    let r = BufReader::new(File::open(path)?);
    let mut vals = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        for tok in t.split_whitespace() {
            vals.push(tok.parse::<f64>().map_err(|e| Error::Parse { line: i + 1, msg: format!("{tok}: {e}") })?);
        }
    }
    if vals.len() == n + 2 && vals[0] == n as f64 && vals[1] == 1.0 {
        vals.drain(..2);
    }
    if vals.len() != n {
        return Err(Error::Dimension(format!("right-hand side has {} entries, matrix has {n} rows", vals.len())));
    }
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_modes_parse() {
        assert_eq!("mod11".parse::<RhsMode>().unwrap(), RhsMode::ModEleven);
        assert_eq!("seed:42".parse::<RhsMode>().unwrap(), RhsMode::Seeded(42));
        assert_eq!("file:a/b.txt".parse::<RhsMode>().unwrap(), RhsMode::File("a/b.txt".into()));
        assert!("seed:x".parse::<RhsMode>().is_err());
        assert!("ones".parse::<RhsMode>().is_err());
        assert_eq!(RhsMode::Seeded(3).to_string(), "seed:3");
    }

    #[test]
    fn modes_parse() {
        assert_eq!(Mode::parse_pair("f64dd").unwrap(), Mode::Mixed(ScalarKind::DoubleDouble));
        assert_eq!(Mode::parse_pure("f32").unwrap(), Mode::Pure(ScalarKind::Single));
        assert!(Mode::parse_pair("f32").is_err());
    }

    #[test]
    fn identity_mod_eleven_is_exact() {
        let k = SparseMatrix::<f64>::identity(10);
        let out = run_matrix(&k, "identity", &RunConfig::new("identity.mtx")).unwrap();
        let r = out.report;
        assert_eq!(r.status, RunStatus::Ok);
        assert!(r.error.unwrap() <= f64::EPSILON);
        assert!(r.residual.unwrap() <= f64::EPSILON);
        assert_eq!(r.kernel_dim, 0);
        assert_eq!(r.postponed, 0);
        assert_eq!(r.precision, "mixed(double+single)");
    }

    #[test]
    fn solve_history_name() {
        assert_eq!(solve_history_path(Path::new("/t/h.csv")), PathBuf::from("/t/h.solve.csv"));
        assert_eq!(solve_history_path(Path::new("h")), PathBuf::from("h.solve"));
    }

    #[test]
    fn report_is_single_line_json_with_schema() {
        let k = SparseMatrix::<f64>::identity(4);
        let mut cfg = RunConfig::new("id.mtx");
        cfg.mode = Mode::Pure(ScalarKind::Double);
        let json = run_matrix(&k, "id", &cfg).unwrap().report.to_json().unwrap();
        assert!(!json.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["mode"], "pure");
        assert_eq!(v["norm"], "max");
        assert_eq!(v["method"], "bgcr");
    }

    #[test]
    fn vector_file_with_array_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.mtx");
        std::fs::write(&p, "%%MatrixMarket matrix array real general\n3 1\n1\n2.5\n-3\n").unwrap();
        assert_eq!(read_vector(&p, 3).unwrap(), vec![1.0, 2.5, -3.0]);
        assert!(read_vector(&p, 4).is_err());
    }
}
