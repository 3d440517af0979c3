//! Iterative refinement, preconditioned GCR and preconditioned block GCR.
//!
//! All three start from `X0 = Q^{-1} B`, where `Q^{-1}` is the
//! preconditioner (normally the lower-precision factorization), and work
//! on residuals in the operator's own (higher) precision.

mod block;
mod gcr;
mod history;
mod ir;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::precision::Scalar;
use crate::sparsemat::SparseMatrix;

pub use block::{block_gcr, block_gcr_observed};
pub use gcr::{gcr, gcr_observed};
pub use history::{ConvergenceHistory, HistoryRecord, SolveStatus};
pub use ir::iterative_refinement;

pub const DEFAULT_MAX_ITER: usize = 100;

/// `y = A x` on blocks of columns.
pub trait LinearOperator<T: Scalar>: Sync {
    fn size(&self) -> usize;
    fn apply(&self, x: &DenseMat<T>) -> Result<DenseMat<T>>;
}

impl<T: Scalar> LinearOperator<T> for SparseMatrix<T> {
    fn size(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &DenseMat<T>) -> Result<DenseMat<T>> {
        self.spmm(x)
    }
}

impl<T: Scalar> LinearOperator<T> for DenseMat<T> {
    fn size(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &DenseMat<T>) -> Result<DenseMat<T>> {
        if x.nrows() != self.ncols() {
            return Err(Error::Dimension(format!("operator of size {} given {} rows", self.ncols(), x.nrows())));
        }
        Ok(self.matmul(x))
    }
}

/// Approximate inverse `Q^{-1}` applied to blocks of residuals.
pub trait Preconditioner<T: Scalar>: Sync {
    fn size(&self) -> usize;
    fn apply(&self, r: &DenseMat<T>) -> Result<DenseMat<T>>;
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityPreconditioner(pub usize);

impl<T: Scalar> Preconditioner<T> for IdentityPreconditioner {
    fn size(&self) -> usize {
        self.0
    }

    fn apply(&self, r: &DenseMat<T>) -> Result<DenseMat<T>> {
        Ok(r.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ir")]
    IR,
    #[serde(rename = "gcr")]
    GCR,
    #[serde(rename = "bgcr")]
    BlockGCR,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::IR => "ir",
            Method::GCR => "gcr",
            Method::BlockGCR => "bgcr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ir" => Ok(Method::IR),
            "gcr" => Ok(Method::GCR),
            "bgcr" | "blockgcr" | "block-gcr" => Ok(Method::BlockGCR),
            _ => Err(Error::Config(format!("unknown method `{s}` (expected ir, gcr or bgcr)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Per-column target for `||r|| / ||b||`.
    pub tol: f64,
    pub max_iter: usize,
    pub method: Method,
}

impl SolverConfig {
    pub fn new(tol: f64, max_iter: usize, method: Method) -> Self {
        Self { tol, max_iter, method }
    }

    /// `50 * eps` of `T`, block GCR, 100 iterations.
    pub fn default_for<T: Scalar>() -> Self {
        Self { tol: 50.0 * T::eps(), max_iter: DEFAULT_MAX_ITER, method: Method::BlockGCR }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Runs the method named in `cfg`. Single-column GCR on several columns
/// solves them one after another.
pub fn solve<T: Scalar>(
    a: &dyn LinearOperator<T>,
    q: &dyn Preconditioner<T>,
    b: &DenseMat<T>,
    cfg: &SolverConfig,
) -> Result<(DenseMat<T>, ConvergenceHistory)> {
    match cfg.method {
        Method::IR => iterative_refinement(a, q, b, cfg),
        Method::GCR => gcr(a, q, b, cfg),
        Method::BlockGCR => block_gcr(a, q, b, cfg),
    }
}

/// One snapshot handed to solver observers after each completed iteration.
pub struct StepView<'a, T> {
    pub iter: usize,
    /// Current residual block, all columns.
    pub residual: &'a DenseMat<T>,
    /// Retained `A p` blocks, oldest first.
    pub directions: &'a [DenseMat<T>],
}

fn check_dims<T: Scalar>(a: &dyn LinearOperator<T>, q: &dyn Preconditioner<T>, b: &DenseMat<T>) -> Result<()> {
    if a.size() != q.size() || b.nrows() != a.size() {
        return Err(Error::Dimension(format!(
            "operator {}, preconditioner {}, right-hand side {} rows",
            a.size(),
            q.size(),
            b.nrows()
        )));
    }
    Ok(())
}

/// Relative residual norms `||r_j|| / ||b_j||`; zero columns of `b` report
/// the absolute norm.
fn relative_norms<T: Scalar>(r: &DenseMat<T>, bnorm: &[f64]) -> Vec<f64> {
    r.column_norms()
        .into_iter()
        .zip(bnorm)
        .map(|(n, &b)| if b > 0.0 { n.to_f64() / b } else { n.to_f64() })
        .collect()
}
