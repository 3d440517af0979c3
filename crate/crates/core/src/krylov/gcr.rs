use std::time::Instant;

use super::{
    check_dims, ConvergenceHistory, HistoryRecord, LinearOperator, Method, Preconditioner, SolveStatus, SolverConfig, StepView,
};
use crate::dense::{dot, norm2, DenseMat};
use crate::error::Result;
use crate::precision::Scalar;

/// Preconditioned GCR, one column at a time.
pub fn gcr<T: Scalar>(
    a: &dyn LinearOperator<T>,
    q: &dyn Preconditioner<T>,
    b: &DenseMat<T>,
    cfg: &SolverConfig,
) -> Result<(DenseMat<T>, ConvergenceHistory)> {
    gcr_observed(a, q, b, cfg, &mut |_: StepView<'_, T>| {})
}

/// [`gcr`] with a callback after every iteration. Columns are solved one
/// after another, so the view holds the single column in progress.
pub fn gcr_observed<T: Scalar>(
    a: &dyn LinearOperator<T>,
    q: &dyn Preconditioner<T>,
    b: &DenseMat<T>,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(StepView<'_, T>),
) -> Result<(DenseMat<T>, ConvergenceHistory)> {
    cfg.validate()?;
    check_dims(a, q, b)?;
    let start = Instant::now();
    let m = b.ncols();
    let mut x = DenseMat::zeros(b.nrows(), m);
    let mut hist = ConvergenceHistory::new(Method::GCR, m);
    let mut all = true;
    let mut status = SolveStatus::Converged;
    for j in 0..m {
        let bj = DenseMat::from_column(&b.column(j));
        let (xj, hj) = gcr_column(a, q, &bj, None, cfg.max_iter, cfg.tol, start, observer)?;
        x.set_column(j, xj.as_slice());
        for rec in &hj.records {
            hist.records.push(HistoryRecord { column: j, ..*rec });
        }
        hist.converged_at[j] = hj.converged_at[0];
        if !hj.converged() {
            all = false;
            status = hj.status;
        }
    }
    hist.records.sort_by_key(|r| (r.iter, r.column));
    hist.status = if all { SolveStatus::Converged } else { status };
    Ok((x, hist))
}

/// GCR on a single column from `x0` (or `Q^{-1} b`). Directions are
/// orthogonalized by two passes of modified Gram-Schmidt against every
/// stored `q_m`, and each new residual gets one more projection against
/// all of them.
#[allow(clippy::too_many_arguments)]
pub(super) fn gcr_column<T: Scalar>(
    a: &dyn LinearOperator<T>,
    q: &dyn Preconditioner<T>,
    b: &DenseMat<T>,
    x0: Option<DenseMat<T>>,
    max_iter: usize,
    tol: f64,
    start: Instant,
    observer: &mut dyn FnMut(StepView<'_, T>),
) -> Result<(DenseMat<T>, ConvergenceHistory)> {
    let bnorm = norm2(b.as_slice()).to_f64();
    let rel = |r: &DenseMat<T>| {
        let n = norm2(r.as_slice()).to_f64();
        if bnorm > 0.0 {
            n / bnorm
        } else {
            n
        }
    };
    let mut x = match x0 {
        Some(x0) => x0,
        None => q.apply(b)?,
    };
    let mut r = b.sub(&a.apply(&x)?);
    let mut res = rel(&r);
    let mut hist = ConvergenceHistory::new(Method::GCR, 1);
    hist.push(0, &[res], start.elapsed().as_secs_f64(), tol);

    let mut ps: Vec<DenseMat<T>> = Vec::new();
    let mut qs: Vec<DenseMat<T>> = Vec::new();
    let mut qq: Vec<T> = Vec::new();
    hist.status = SolveStatus::MaxIterations;
    for it in 1..=max_iter {
        if res <= tol {
            break;
        }
        let mut w = q.apply(&r)?;
        let mut z = a.apply(&w)?;
        for _ in 0..2 {
            for ((pm, qm), &nm) in ps.iter().zip(&qs).zip(&qq) {
                let beta = -dot(z.as_slice(), qm.as_slice()) / nm;
                z.axpy(beta, qm);
                w.axpy(beta, pm);
            }
        }
        let zz = dot(z.as_slice(), z.as_slice());
        if !(zz > T::zero()) || !zz.is_finite() {
            hist.status = SolveStatus::Breakdown;
            break;
        }
        let alpha = dot(r.as_slice(), z.as_slice()) / zz;
        x.axpy(alpha, &w);
        r.axpy(-alpha, &z);
        ps.push(w);
        qs.push(z);
        qq.push(zz);
        for ((pm, qm), &nm) in ps.iter().zip(&qs).zip(&qq) {
            let c = dot(r.as_slice(), qm.as_slice()) / nm;
            r.axpy(-c, qm);
            x.axpy(c, pm);
        }
        res = rel(&r);
        hist.push(it, &[res], start.elapsed().as_secs_f64(), tol);
        observer(StepView { iter: it, residual: &r, directions: &qs });
    }
    if res <= tol {
        hist.status = SolveStatus::Converged;
    }
    Ok((x, hist))
}
