use std::time::Instant;

use super::gcr::gcr_column;
use super::{
    check_dims, relative_norms, ConvergenceHistory, LinearOperator, Method, Preconditioner, SolveStatus,
    SolverConfig, StepView,
};
use crate::dense::{dot, gemm_acc, DenseMat, PivotedCholesky};
use crate::error::Result;
use crate::precision::Scalar;

/// Preconditioned block GCR: all columns share one Krylov space.
pub fn block_gcr<T: Scalar>(
    a: &dyn LinearOperator<T>,
    q: &dyn Preconditioner<T>,
    b: &DenseMat<T>,
    cfg: &SolverConfig,
) -> Result<(DenseMat<T>, ConvergenceHistory)> {
    block_gcr_observed(a, q, b, cfg, &mut |_: StepView<'_, T>| {})
}

/// [`block_gcr`] with a callback after every iteration.
///
/// Each iteration preconditions the residuals of the columns that have not
/// converged yet and orthogonalizes the new block against every stored block
/// (`Z -= Q_m M_m^{-1} Q_m^T Z`, two passes). Inside the block, columns are
/// orthonormalized by two-pass modified Gram-Schmidt; a column whose squared
/// norm falls to `eps * ||M_n||` or below is dropped. The update
/// `X += P M^{-1} A`, `R -= Q M^{-1} A` is applied to all columns, so
/// converged columns keep improving. If every new direction is dropped the
/// remaining columns finish with single-column GCR.
pub fn block_gcr_observed<T: Scalar>(
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
    let bnorm: Vec<f64> = b.column_norms().into_iter().map(Scalar::to_f64).collect();

    let mut x = q.apply(b)?;
    let mut r = b.sub(&a.apply(&x)?);
    let mut res = relative_norms(&r, &bnorm);
    let mut hist = ConvergenceHistory::new(Method::BlockGCR, m);
    hist.push(0, &res, start.elapsed().as_secs_f64(), cfg.tol);

    let mut ps: Vec<DenseMat<T>> = Vec::new();
    let mut qs: Vec<DenseMat<T>> = Vec::new();
    let mut grams: Vec<PivotedCholesky<T>> = Vec::new();
    let mut it = 0;
    while it < cfg.max_iter {
        let active: Vec<usize> = (0..m).filter(|&j| res[j] > cfg.tol).collect();
        if active.is_empty() {
            break;
        }
        let mut w = q.apply(&r.select_columns(&active))?;
        let mut z = a.apply(&w)?;
        let gram_norm = z.tr_matmul(&z).frobenius_norm();
        project_out(&ps, &qs, &grams, &mut z, &mut w);
        let (keep, chol) = orthonormalize_block(&ps, &qs, &grams, &mut z, &mut w, gram_norm);
        if keep.is_empty() {
            hist.status = SolveStatus::Breakdown;
            finish_with_gcr(a, q, b, cfg, &active, &mut x, &mut hist, it, start, observer)?;
            return Ok((x, hist));
        }
        let pn = w.select_columns(&keep);
        let qn = z.select_columns(&keep);
        let mut gamma = qn.tr_matmul(&r);
        chol.solve_in_place(&mut gamma);
        gemm_acc(T::one(), &pn, &gamma, &mut x);
        gemm_acc(-T::one(), &qn, &gamma, &mut r);
        ps.push(pn);
        qs.push(qn);
        grams.push(chol);
        reproject_residual(&ps, &qs, &grams, &mut r, &mut x);

        it += 1;
        res = relative_norms(&r, &bnorm);
        hist.push(it, &res, start.elapsed().as_secs_f64(), cfg.tol);
        observer(StepView { iter: it, residual: &r, directions: &qs });
    }
    hist.status = if res.iter().all(|&v| v <= cfg.tol) { SolveStatus::Converged } else { SolveStatus::MaxIterations };
    Ok((x, hist))
}

#[allow(clippy::too_many_arguments)]
fn finish_with_gcr<T: Scalar>(
    a: &dyn LinearOperator<T>,
    q: &dyn Preconditioner<T>,
    b: &DenseMat<T>,
    cfg: &SolverConfig,
    active: &[usize],
    x: &mut DenseMat<T>,
    hist: &mut ConvergenceHistory,
    done: usize,
    start: Instant,
    observer: &mut dyn FnMut(StepView<'_, T>),
) -> Result<()> {
    let mut all = true;
    for &j in active {
        let bj = DenseMat::from_column(&b.column(j));
        let xj = DenseMat::from_column(&x.column(j));
        let (xj, hj) = gcr_column(a, q, &bj, Some(xj), cfg.max_iter - done, cfg.tol, start, observer)?;
        x.set_column(j, xj.as_slice());
        hist.append(&hj, &[j], done, 0.0);
        all &= hj.converged();
    }
    if all {
        hist.status = SolveStatus::Converged;
    }
    Ok(())
}

fn project_out<T: Scalar>(
    ps: &[DenseMat<T>],
    qs: &[DenseMat<T>],
    grams: &[PivotedCholesky<T>],
    z: &mut DenseMat<T>,
    w: &mut DenseMat<T>,
) {
    for ((pm, qm), gm) in ps.iter().zip(qs).zip(grams) {
        let mut coef = qm.tr_matmul(z);
        gm.solve_in_place(&mut coef);
        gemm_acc(-T::one(), qm, &coef, z);
        gemm_acc(-T::one(), pm, &coef, w);
    }
}

/// Second projection of the residual onto the complement of every stored
/// block, with the matching correction of `x`.
fn reproject_residual<T: Scalar>(
    ps: &[DenseMat<T>],
    qs: &[DenseMat<T>],
    grams: &[PivotedCholesky<T>],
    r: &mut DenseMat<T>,
    x: &mut DenseMat<T>,
) {
    for ((pm, qm), gm) in ps.iter().zip(qs).zip(grams) {
        let mut coef = qm.tr_matmul(r);
        gm.solve_in_place(&mut coef);
        gemm_acc(-T::one(), qm, &coef, r);
        gemm_acc(T::one(), pm, &coef, x);
    }
}

/// Orthonormalizes the columns of `z` against the stored blocks and each
/// other (mirroring every operation on `w`). A column is reprojected until
/// a pass keeps at least half of its squared norm, at most three times, and
/// is dropped once its squared norm is `eps * gram_norm` or below. Returns
/// the surviving columns with the Cholesky factor of their Gram matrix.
fn orthonormalize_block<T: Scalar>(
    ps: &[DenseMat<T>],
    qs: &[DenseMat<T>],
    grams: &[PivotedCholesky<T>],
    z: &mut DenseMat<T>,
    w: &mut DenseMat<T>,
    gram_norm: T,
) -> (Vec<usize>, PivotedCholesky<T>) {
    let threshold = T::from_f64(T::eps()) * gram_norm;
    let half = T::from_f64(0.5);
    let mut keep: Vec<usize> = Vec::new();
    let mut kz: Vec<Vec<T>> = Vec::new();
    let mut kw: Vec<Vec<T>> = Vec::new();
    for j in 0..z.ncols() {
        let mut zj = z.column(j);
        let mut wj = w.column(j);
        let mut nn = dot(&zj, &zj);
        for pass in 0..3 {
            if pass > 0 {
                let mut zm = DenseMat::from_column(&zj);
                let mut wm = DenseMat::from_column(&wj);
                project_out(ps, qs, grams, &mut zm, &mut wm);
                zj = zm.into_vec();
                wj = wm.into_vec();
            }
            for (zi, wi) in kz.iter().zip(&kw) {
                let c = dot(zi, &zj);
                for t in 0..zj.len() {
                    zj[t] -= c * zi[t];
                    wj[t] -= c * wi[t];
                }
            }
            let before = nn;
            nn = dot(&zj, &zj);
            if !(nn > threshold) || !nn.is_finite() || (pass > 0 && nn >= half * before) {
                break;
            }
        }
        if nn > threshold && nn.is_finite() {
            let s = T::one() / nn.sqrt();
            zj.iter_mut().for_each(|v| *v *= s);
            wj.iter_mut().for_each(|v| *v *= s);
            keep.push(j);
            kz.push(zj);
            kw.push(wj);
        }
    }
    for (k, &j) in keep.iter().enumerate() {
        z.set_column(j, &kz[k]);
        w.set_column(j, &kw[k]);
    }
    let qn = z.select_columns(&keep);
    let chol = PivotedCholesky::new(&qn.tr_matmul(&qn), T::zero());
    (keep, chol)
}
