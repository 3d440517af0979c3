//! Hybrid factorization: lower-precision LDU of the moderate part, an
//! iteratively built higher-precision Schur complement of the postponed
//! part, and a rank-revealing factorization of that Schur complement.

mod schur;

use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::krylov::{self, ConvergenceHistory, SolverConfig};
use crate::lowfactor::{factor_with_postponing, FactorOptions, LowerFactor, PostponedPartition};
use crate::ordering::{build_bisection_tree, default_levels};
use crate::precision::{PairKind, PrecisionPair, Scalar};
use crate::sparsemat::{extract_blocks, scale_symmetric, BlockView, DiagonalScaling, SparseMatrix};

pub use schur::{factor_schur, factor_schur_scaled, PivotBlock, SchurFactor, BK_ALPHA};

/// Default gap ratio for kernel detection: `1e6 * eps` of the higher kind.
pub fn default_kernel_tol_ratio<T: Scalar>() -> f64 {
    1e6 * T::eps()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridOptions {
    pub factor: FactorOptions,
    /// Bisection levels; `None` picks [`default_levels`].
    pub levels: Option<usize>,
    /// Inner solver for `K11 X12 = K12` and for the first step of a solve.
    pub solver: SolverConfig,
    pub kernel_tol_ratio: f64,
}

impl HybridOptions {
    /// Defaults for a pair: tau 0.05, four extra entries, block GCR to
    /// `50 * eps(higher)`.
    pub fn for_pair<P: PrecisionPair>() -> Self {
        Self {
            factor: FactorOptions::default(),
            levels: None,
            solver: SolverConfig::default_for::<P::Higher>(),
            kernel_tol_ratio: default_kernel_tol_ratio::<P::Higher>(),
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.factor.tau = tau;
        self
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = Some(levels);
        self
    }

    pub fn with_n_extra(mut self, n_extra: usize) -> Self {
        self.factor.n_extra = n_extra;
        self
    }

    pub fn with_forced(mut self, forced: Vec<usize>) -> Self {
        self.factor.forced_postpone = forced;
        self
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }
}

/// A completed hybrid factorization of `Kbar`.
#[derive(Debug, Clone)]
pub struct HybridFactorization<P: PrecisionPair> {
    n: usize,
    levels: usize,
    scaling: DiagonalScaling<P::Higher>,
    partition: PostponedPartition,
    lower: LowerFactor<P>,
    blocks: BlockView<P::Higher>,
    x12: DenseMat<P::Higher>,
    schur: SchurFactor<P::Higher>,
    x12_history: Option<ConvergenceHistory>,
    solver: SolverConfig,
}

/// Result of [`hybrid_solve`].
#[derive(Debug, Clone)]
pub struct HybridSolution<T> {
    pub x: DenseMat<T>,
    /// History of the inner solve with `K11`; `None` for pure pairs, whose
    /// inner solves are direct.
    pub history: Option<ConvergenceHistory>,
    /// Per column, the relative cokernel component removed from the Schur
    /// right-hand side (zero when `S22` is nonsingular).
    pub cokernel_residual: Vec<f64>,
    /// Set when some column's cokernel component exceeds `sqrt(tol)`.
    pub inconsistent: bool,
}

/// Factorizes `kbar` following the hybrid scheme: scale, order, factor the
/// moderate part in `P::Lower` with postponing, solve `K11 X12 = K12`
/// iteratively in `P::Higher` (directly for pure pairs), form
/// `S22 = K22 - K21 X12` and factor it with kernel detection.
pub fn hybrid_factor<P: PrecisionPair>(
    kbar: &SparseMatrix<P::Higher>,
    opts: &HybridOptions,
) -> Result<HybridFactorization<P>> {
    let n = kbar.nrows();
    if kbar.ncols() != n {
        return Err(Error::Dimension(format!("hybrid factorization needs a square matrix, got {}x{}", n, kbar.ncols())));
    }
    opts.solver.validate()?;
    let (k, scaling) = scale_symmetric(kbar)?;
    let levels = opts.levels.unwrap_or_else(|| default_levels(n));
    let (_, tree) = build_bisection_tree(&k, levels)?;
    let (lower, partition) = factor_with_postponing::<P>(&k, &tree, &opts.factor)?;
    let blocks = extract_blocks(&k, &partition.permutation, partition.n1())?;
    let (n1, n2) = (blocks.n1, blocks.n2);

    let k12 = blocks.k12.to_dense();
    let (x12, x12_history) = if n1 == 0 || n2 == 0 {
        (DenseMat::zeros(n1, n2), None)
    } else if P::is_pure() {
        (lower.precond_solve(&k12)?, None)
    } else {
        let (x, h) = krylov::solve(&blocks.k11, &lower, &k12, &opts.solver)?;
        if !h.converged() {
            let residual = h.final_residuals().into_iter().fold(0.0, f64::max);
            return Err(Error::NotConverged { stage: "Schur complement construction", residual, history: Box::new(h) });
        }
        (x, Some(h))
    };

    let mut s22 = blocks.k22.to_dense();
    if n1 > 0 && n2 > 0 {
        s22 = s22.sub(&blocks.k21.apply(&x12)?);
    }
    let scale = k.max_abs().to_f64();
    let schur = factor_schur_scaled(&s22, opts.kernel_tol_ratio, scale)?;

    Ok(HybridFactorization {
        n,
        levels: tree.levels(),
        scaling,
        partition,
        lower,
        blocks,
        x12,
        schur,
        x12_history,
        solver: opts.solver,
    })
}

impl<P: PrecisionPair> HybridFactorization<P> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Bisection levels actually used.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn pair(&self) -> PairKind {
        P::kind()
    }

    pub fn scaling(&self) -> &DiagonalScaling<P::Higher> {
        &self.scaling
    }

    pub fn partition(&self) -> &PostponedPartition {
        &self.partition
    }

    pub fn lower(&self) -> &LowerFactor<P> {
        &self.lower
    }

    /// Blocks of the scaled, permuted matrix.
    pub fn blocks(&self) -> &BlockView<P::Higher> {
        &self.blocks
    }

    /// `N x M`, rows in `lambda1` order.
    pub fn x12(&self) -> &DenseMat<P::Higher> {
        &self.x12
    }

    pub fn schur(&self) -> &SchurFactor<P::Higher> {
        &self.schur
    }

    /// History of the `K11 X12 = K12` solve.
    pub fn x12_history(&self) -> Option<&ConvergenceHistory> {
        self.x12_history.as_ref()
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    /// Size M of the postponed set.
    pub fn postponed_count(&self) -> usize {
        self.partition.n2()
    }

    pub fn kernel_dim(&self) -> usize {
        self.schur.kernel_dim()
    }

    /// Null vectors of `Kbar` built from the Schur kernel:
    /// `Q Pi [-X12 v; v]` for each kernel vector `v` of `S22`.
    pub fn full_kernel_basis(&self) -> DenseMat<P::Higher> {
        let v = self.schur.kernel_basis();
        let kd = v.ncols();
        let mut out = DenseMat::zeros(self.n, kd);
        if kd == 0 {
            return out;
        }
        let top = self.x12.matmul(v);
        let perm = &self.partition.permutation;
        for c in 0..kd {
            let mut col = Vec::with_capacity(self.n);
            col.extend(top.column(c).into_iter().map(|t| -t));
            col.extend(v.column(c));
            let col = perm.scatter(&col);
            out.set_column(c, &self.scaling.apply(&col));
        }
        out
    }

    /// Solves with the factorization's own solver settings.
    pub fn solve(&self, b: &DenseMat<P::Higher>) -> Result<HybridSolution<P::Higher>> {
        hybrid_solve(self, b, &self.solver)
    }
}

pub fn kernel_dimension<P: PrecisionPair>(f: &HybridFactorization<P>) -> usize {
    f.kernel_dim()
}

/// Forward/backward substitution through the hybrid factors for every
/// column of `b`: `y1 = K11^{-1} b1` by the inner solver, `y2 = b2 - K21 y1`,
/// `x2 = S22^{-1} y2`, `x1 = y1 - X12 x2`, then undo permutation and
/// scaling.
pub fn hybrid_solve<P: PrecisionPair>(
    f: &HybridFactorization<P>,
    b: &DenseMat<P::Higher>,
    cfg: &SolverConfig,
) -> Result<HybridSolution<P::Higher>> {
    let n = f.n;
    if b.nrows() != n {
        return Err(Error::Dimension(format!("system of size {n} given {} rows", b.nrows())));
    }
    cfg.validate()?;
    let m = b.ncols();
    let perm = &f.partition.permutation;
    let (n1, n2) = (f.partition.n1(), f.partition.n2());
    let q = &f.scaling.q;

    let mut b1 = DenseMat::zeros(n1, m);
    let mut b2 = DenseMat::zeros(n2, m);
    for (p, &i) in perm.order().iter().enumerate() {
        for c in 0..m {
            let v = q[i] * b[(i, c)];
            if p < n1 {
                b1[(p, c)] = v;
            } else {
                b2[(p - n1, c)] = v;
            }
        }
    }

    let (y1, history) = if n1 == 0 {
        (b1, None)
    } else if P::is_pure() {
        (f.lower.precond_solve(&b1)?, None)
    } else {
        let (y, h) = krylov::solve(&f.blocks.k11, &f.lower, &b1, cfg)?;
        if !h.converged() {
            let residual = h.final_residuals().into_iter().fold(0.0, f64::max);
            return Err(Error::NotConverged { stage: "hybrid solve", residual, history: Box::new(h) });
        }
        (y, Some(h))
    };

    let (x1, x2, cokernel_residual) = if n2 == 0 {
        (y1, b2, vec![0.0; m])
    } else {
        let y2 = if n1 > 0 { b2.sub(&f.blocks.k21.apply(&y1)?) } else { b2 };
        let (x2, inc) = f.schur.solve(&y2)?;
        let x1 = if n1 > 0 { y1.sub(&f.x12.matmul(&x2)) } else { y1 };
        (x1, x2, inc)
    };

    let mut x = DenseMat::zeros(n, m);
    for (p, &i) in perm.order().iter().enumerate() {
        for c in 0..m {
            let v = if p < n1 { x1[(p, c)] } else { x2[(p - n1, c)] };
            x[(i, c)] = q[i] * v;
        }
    }
    let limit = cfg.tol.sqrt();
    let inconsistent = cokernel_residual.iter().any(|&r| r > limit);
    Ok(HybridSolution { x, history, cokernel_residual, inconsistent })
}

#[cfg(test)]
mod tests;
