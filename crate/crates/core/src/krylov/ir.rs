use std::time::Instant;

use super::{check_dims, relative_norms, ConvergenceHistory, LinearOperator, Method, Preconditioner, SolveStatus, SolverConfig};
use crate::dense::DenseMat;
use crate::error::Result;
use crate::precision::Scalar;

/// Residual growth factor (relative to the starting residual) that counts
/// toward divergence.
const DIVERGENCE_GROWTH: f64 = 10.0;
/// Consecutive growing steps after which a column is declared divergent.
const DIVERGENCE_STEPS: usize = 3;

/// Iterative refinement: `x += Q^{-1} r`, `r = b - A x`, column by column.
/// Converged or divergent columns stop updating.
pub fn iterative_refinement<T: Scalar>(
    a: &dyn LinearOperator<T>,
    q: &dyn Preconditioner<T>,
    b: &DenseMat<T>,
    cfg: &SolverConfig,
) -> Result<(DenseMat<T>, ConvergenceHistory)> {
    cfg.validate()?;
    check_dims(a, q, b)?;
    let start = Instant::now();
    let m = b.ncols();
    let bnorm: Vec<f64> = b.column_norms().into_iter().map(Scalar::to_f64).collect();

    let mut x = q.apply(b)?;
    let mut r = b.sub(&a.apply(&x)?);
    let mut res = relative_norms(&r, &bnorm);
    let mut hist = ConvergenceHistory::new(Method::IR, m);
    hist.push(0, &res, start.elapsed().as_secs_f64(), cfg.tol);

    let initial = res.clone();
    let mut growing = vec![0usize; m];
    let mut diverged = vec![false; m];
    for it in 1..=cfg.max_iter {
        let active: Vec<usize> = (0..m).filter(|&j| res[j] > cfg.tol && !diverged[j]).collect();
        if active.is_empty() {
            break;
        }
        let e = q.apply(&r.select_columns(&active))?;
        for i in 0..x.nrows() {
            for (c, &j) in active.iter().enumerate() {
                x[(i, j)] += e[(i, c)];
            }
        }
        let ax = a.apply(&x.select_columns(&active))?;
        for i in 0..x.nrows() {
            for (c, &j) in active.iter().enumerate() {
                r[(i, j)] = b[(i, j)] - ax[(i, c)];
            }
        }
        let fresh = relative_norms(&r, &bnorm);
        for &j in &active {
            res[j] = fresh[j];
            if res[j] > DIVERGENCE_GROWTH * initial[j] {
                growing[j] += 1;
                diverged[j] = growing[j] >= DIVERGENCE_STEPS;
            } else {
                growing[j] = 0;
            }
        }
        hist.push(it, &res, start.elapsed().as_secs_f64(), cfg.tol);
    }

    hist.status = if res.iter().all(|&v| v <= cfg.tol) {
        SolveStatus::Converged
    } else if diverged.iter().any(|&d| d) {
        SolveStatus::Diverged
    } else {
        SolveStatus::MaxIterations
    };
    Ok((x, hist))
}
