use serde::Serialize;

use crate::dense::{dot, DenseMat};
use crate::error::{Error, Result};
use crate::ordering::Permutation;
use crate::precision::Scalar;

/// Bunch-Kaufman constant `(1 + sqrt(17)) / 8`.
pub const BK_ALPHA: f64 = 0.640_388_203_202_208_4;

/// One diagonal block of `D`, in elimination positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PivotBlock {
    pub start: usize,
    /// 1 or 2.
    pub size: usize,
}

/// Symmetrically pivoted `Pi^T S Pi = L D U` of a dense Schur complement,
/// with `D` made of 1x1 and 2x2 blocks, plus the detected kernel.
#[derive(Debug, Clone)]
pub struct SchurFactor<T> {
    s22: DenseMat<T>,
    perm: Permutation,
    blocks: Vec<PivotBlock>,
    /// Packed factors in elimination positions: `L` below the block
    /// diagonal, `U` above it, `D` on it.
    lu: DenseMat<T>,
    magnitudes: Vec<f64>,
    rank: usize,
    kernel_tol_ratio: f64,
    kernel_basis: DenseMat<T>,
    cokernel_basis: DenseMat<T>,
    kernel_q: DenseMat<T>,
    cokernel_q: DenseMat<T>,
    kernel_residual: f64,
}

/// Factorizes `s22` with the gap rule measured against `s22` itself.
pub fn factor_schur<T: Scalar>(s22: &DenseMat<T>, kernel_tol_ratio: f64) -> Result<SchurFactor<T>> {
    let scale = s22.max_abs().to_f64();
    factor_schur_scaled(s22, kernel_tol_ratio, scale)
}

/// Factorizes `s22`. At each step the largest diagonal entry is taken as a
/// 1x1 pivot when it is at least `BK_ALPHA` times the largest off-diagonal
/// entry of its row and column; otherwise it is paired with its strongest
/// coupling into a 2x2 pivot.
///
/// The kernel is the trailing run of pivots split off at the smallest ratio
/// `max(tail) / min(head)` below `kernel_tol_ratio`. Trailing pivots at or
/// below `kernel_tol_ratio * scale` also count as kernel, which covers a
/// Schur complement that is numerically zero as a whole.
pub fn factor_schur_scaled<T: Scalar>(s22: &DenseMat<T>, kernel_tol_ratio: f64, scale: f64) -> Result<SchurFactor<T>> {
    let m = s22.nrows();
    if s22.ncols() != m {
        return Err(Error::Dimension(format!("Schur complement must be square, got {}x{}", m, s22.ncols())));
    }
    if !(kernel_tol_ratio > 0.0 && kernel_tol_ratio < 1.0) {
        return Err(Error::Config(format!("kernel_tol_ratio must lie in (0, 1), got {kernel_tol_ratio}")));
    }
    let mut a = s22.clone();
    let mut order: Vec<usize> = (0..m).collect();
    let mut blocks = Vec::new();
    let mut magnitudes = Vec::with_capacity(m);
    let alpha = T::from_f64(BK_ALPHA);

    let mut k = 0;
    while k < m {
        let (r, dmax) = (k..m).map(|i| (i, a[(i, i)].abs())).fold((k, T::zero()), |b, c| if c.1 > b.1 { c } else { b });
        let (t, lambda) = (k..m)
            .filter(|&i| i != r)
            .map(|i| (i, max(a[(i, r)].abs(), a[(r, i)].abs())))
            .fold((r, T::zero()), |b, c| if c.1 > b.1 { c } else { b });
        if dmax == T::zero() && lambda == T::zero() {
            // whatever remains is exactly zero
            for p in k..m {
                blocks.push(PivotBlock { start: p, size: 1 });
                magnitudes.push(0.0);
            }
            break;
        }
        if dmax >= alpha * lambda || t == r {
            swap_sym(&mut a, &mut order, k, r);
            eliminate1(&mut a, k);
            blocks.push(PivotBlock { start: k, size: 1 });
            magnitudes.push(a[(k, k)].abs().to_f64());
            k += 1;
            continue;
        }
        let det = a[(r, r)] * a[(t, t)] - a[(r, t)] * a[(t, r)];
        if det == T::zero() || !det.is_finite() {
            if dmax == T::zero() {
                for p in k..m {
                    blocks.push(PivotBlock { start: p, size: 1 });
                    magnitudes.push(0.0);
                }
                break;
            }
            swap_sym(&mut a, &mut order, k, r);
            eliminate1(&mut a, k);
            blocks.push(PivotBlock { start: k, size: 1 });
            magnitudes.push(a[(k, k)].abs().to_f64());
            k += 1;
            continue;
        }
        swap_sym(&mut a, &mut order, k, r);
        let t = if t == k { r } else { t };
        swap_sym(&mut a, &mut order, k + 1, t);
        eliminate2(&mut a, k);
        blocks.push(PivotBlock { start: k, size: 2 });
        let (s1, s2) = singular_values_2x2([a[(k, k)], a[(k, k + 1)], a[(k + 1, k)], a[(k + 1, k + 1)]]);
        magnitudes.push(s1);
        magnitudes.push(s2);
        k += 2;
    }

    let rank = detect_rank(&blocks, &magnitudes, kernel_tol_ratio, scale);
    let perm = Permutation::from_order(order)?;
    let mut f = SchurFactor {
        s22: s22.clone(),
        perm,
        blocks,
        lu: a,
        magnitudes,
        rank,
        kernel_tol_ratio,
        kernel_basis: DenseMat::zeros(m, 0),
        cokernel_basis: DenseMat::zeros(m, 0),
        kernel_q: DenseMat::zeros(m, 0),
        cokernel_q: DenseMat::zeros(m, 0),
        kernel_residual: 0.0,
    };
    f.build_kernel();
    Ok(f)
}

fn max<T: Scalar>(a: T, b: T) -> T {
    if a > b {
        a
    } else {
        b
    }
}

fn swap_sym<T: Scalar>(a: &mut DenseMat<T>, order: &mut [usize], i: usize, j: usize) {
    if i == j {
        return;
    }
    let n = a.nrows();
    for c in 0..n {
        let t = a[(i, c)];
        a[(i, c)] = a[(j, c)];
        a[(j, c)] = t;
    }
    for r in 0..n {
        let t = a[(r, i)];
        a[(r, i)] = a[(r, j)];
        a[(r, j)] = t;
    }
    order.swap(i, j);
}

fn eliminate1<T: Scalar>(a: &mut DenseMat<T>, k: usize) {
    let n = a.nrows();
    let d = a[(k, k)];
    for i in k + 1..n {
        let l = a[(i, k)] / d;
        a[(i, k)] = l;
        if l != T::zero() {
            for j in k + 1..n {
                let u = a[(k, j)];
                a[(i, j)] -= l * u;
            }
        }
    }
    for j in k + 1..n {
        a[(k, j)] /= d;
    }
}

fn inverse_2x2<T: Scalar>(p: [T; 4]) -> [T; 4] {
    let det = p[0] * p[3] - p[1] * p[2];
    [p[3] / det, -p[1] / det, -p[2] / det, p[0] / det]
}

fn eliminate2<T: Scalar>(a: &mut DenseMat<T>, k: usize) {
    let n = a.nrows();
    let pinv = inverse_2x2([a[(k, k)], a[(k, k + 1)], a[(k + 1, k)], a[(k + 1, k + 1)]]);
    for i in k + 2..n {
        let (c0, c1) = (a[(i, k)], a[(i, k + 1)]);
        let l0 = c0 * pinv[0] + c1 * pinv[2];
        let l1 = c0 * pinv[1] + c1 * pinv[3];
        a[(i, k)] = l0;
        a[(i, k + 1)] = l1;
        for j in k + 2..n {
            let v = l0 * a[(k, j)] + l1 * a[(k + 1, j)];
            a[(i, j)] -= v;
        }
    }
    for j in k + 2..n {
        let (r0, r1) = (a[(k, j)], a[(k + 1, j)]);
        a[(k, j)] = pinv[0] * r0 + pinv[1] * r1;
        a[(k + 1, j)] = pinv[2] * r0 + pinv[3] * r1;
    }
}

fn singular_values_2x2<T: Scalar>(p: [T; 4]) -> (f64, f64) {
    let v: Vec<f64> = p.iter().map(|x| x.to_f64()).collect();
    let s: f64 = v.iter().map(|x| x * x).sum();
    let det = (p[0] * p[3] - p[1] * p[2]).abs().to_f64();
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    let s1 = ((s + disc) / 2.0).sqrt();
    let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
    (s1, s2)
}

/// Number of pivots kept before the kernel split.
fn detect_rank(blocks: &[PivotBlock], mags: &[f64], ratio: f64, scale: f64) -> usize {
    let m = mags.len();
    if m == 0 {
        return 0;
    }
    let floor = ratio * scale;
    let mut rank = m;
    let mut best = ratio;
    for b in blocks.iter().skip(1) {
        let i = b.start;
        let head = mags[..i].iter().cloned().fold(f64::INFINITY, f64::min);
        let tail = mags[i..].iter().cloned().fold(0.0, f64::max);
        if head > 0.0 && tail / head < best {
            best = tail / head;
            rank = i;
        }
    }
    for b in blocks.iter().rev() {
        if b.start >= rank {
            continue;
        }
        if mags[b.start..b.start + b.size].iter().all(|&v| v <= floor) {
            rank = b.start;
        } else {
            break;
        }
    }
    rank
}

impl<T: Scalar> SchurFactor<T> {
    /// Size M.
    pub fn size(&self) -> usize {
        self.s22.nrows()
    }

    pub fn s22(&self) -> &DenseMat<T> {
        &self.s22
    }

    /// `Pi_2`: `order()[p]` is the index eliminated at position `p`.
    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn pivots(&self) -> &[PivotBlock] {
        &self.blocks
    }

    /// Pivot magnitudes in elimination order; a 2x2 block contributes its
    /// two singular values.
    pub fn pivot_magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn kernel_dim(&self) -> usize {
        self.size() - self.rank
    }

    pub fn kernel_tol_ratio(&self) -> f64 {
        self.kernel_tol_ratio
    }

    /// `M x kernel_dim`, right null vectors of `S22`.
    pub fn kernel_basis(&self) -> &DenseMat<T> {
        &self.kernel_basis
    }

    /// `M x kernel_dim`, left null vectors of `S22`.
    pub fn cokernel_basis(&self) -> &DenseMat<T> {
        &self.cokernel_basis
    }

    /// Largest `||S22 v|| / (||S22||_F ||v||)` over the kernel basis.
    pub fn kernel_residual(&self) -> f64 {
        self.kernel_residual
    }

    fn same_block(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        b == a + 1 && self.blocks.iter().any(|p| p.size == 2 && p.start == a)
    }

    fn l(&self, i: usize, j: usize) -> T {
        if self.same_block(i, j) {
            T::zero()
        } else {
            self.lu[(i, j)]
        }
    }

    fn u(&self, i: usize, j: usize) -> T {
        if self.same_block(i, j) {
            T::zero()
        } else {
            self.lu[(i, j)]
        }
    }

    fn build_kernel(&mut self) {
        let (m, r) = (self.size(), self.rank);
        let k = m - r;
        let mut kb = DenseMat::zeros(m, k);
        let mut cb = DenseMat::zeros(m, k);
        for c in 0..k {
            // v = [-U11^{-1} U12; I], w = [-L11^{-T} L21^T; I]
            let mut v = vec![T::zero(); m];
            let mut w = vec![T::zero(); m];
            v[r + c] = T::one();
            w[r + c] = T::one();
            for i in (0..r).rev() {
                let mut s = self.u(i, r + c);
                for j in i + 1..r {
                    s += self.u(i, j) * v[j];
                }
                v[i] = -s;
            }
            for i in (0..r).rev() {
                let mut s = self.l(r + c, i);
                for j in i + 1..r {
                    s += self.l(j, i) * w[j];
                }
                w[i] = -s;
            }
            for p in 0..m {
                let o = self.perm.order()[p];
                kb[(o, c)] = v[p];
                cb[(o, c)] = w[p];
            }
        }
        self.kernel_q = orthonormal_columns(&kb);
        self.cokernel_q = orthonormal_columns(&cb);
        let sn = self.s22.frobenius_norm().to_f64();
        let sv = self.s22.matmul(&kb);
        self.kernel_residual = (0..k)
            .map(|c| {
                let vn = kb.column(c).iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt();
                let rn = sv.column(c).iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt();
                if sn > 0.0 && vn > 0.0 {
                    rn / (sn * vn)
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        self.kernel_basis = kb;
        self.cokernel_basis = cb;
    }

    /// Solves `S22 x = y` column by column. On a singular `S22` the
    /// cokernel component of `y` is removed first and the kernel component
    /// of `x` is set to zero. Returns `x` and, per column, the relative size
    /// of the removed cokernel component.
    pub fn solve(&self, y: &DenseMat<T>) -> Result<(DenseMat<T>, Vec<f64>)> {
        let m = self.size();
        if y.nrows() != m {
            return Err(Error::Dimension(format!("Schur solve of size {m} given {} rows", y.nrows())));
        }
        let r = self.rank;
        let mut x = DenseMat::zeros(m, y.ncols());
        let mut incons = Vec::with_capacity(y.ncols());
        for c in 0..y.ncols() {
            let mut yc = y.column(c);
            let yn = dot(&yc, &yc).sqrt().to_f64();
            let removed = project_out(&self.cokernel_q, &mut yc);
            incons.push(if yn > 0.0 { removed / yn } else { 0.0 });

            let mut z: Vec<T> = (0..m).map(|p| yc[self.perm.order()[p]]).collect();
            for i in 0..r {
                let mut s = z[i];
                for j in 0..i {
                    s -= self.l(i, j) * z[j];
                }
                z[i] = s;
            }
            for b in &self.blocks {
                if b.start >= r {
                    break;
                }
                let k = b.start;
                if b.size == 1 {
                    z[k] /= self.lu[(k, k)];
                } else {
                    let p = inverse_2x2([self.lu[(k, k)], self.lu[(k, k + 1)], self.lu[(k + 1, k)], self.lu[(k + 1, k + 1)]]);
                    let (a0, a1) = (z[k], z[k + 1]);
                    z[k] = p[0] * a0 + p[1] * a1;
                    z[k + 1] = p[2] * a0 + p[3] * a1;
                }
            }
            for i in (0..r).rev() {
                let mut s = z[i];
                for j in i + 1..r {
                    s -= self.u(i, j) * z[j];
                }
                z[i] = s;
            }
            let mut xc = vec![T::zero(); m];
            for p in 0..r {
                xc[self.perm.order()[p]] = z[p];
            }
            project_out(&self.kernel_q, &mut xc);
            x.set_column(c, &xc);
        }
        Ok((x, incons))
    }
}

/// Removes the span of the orthonormal columns of `q` from `v` and returns
/// the norm of what was removed.
fn project_out<T: Scalar>(q: &DenseMat<T>, v: &mut [T]) -> f64 {
    let mut removed = vec![T::zero(); v.len()];
    for _ in 0..2 {
        for j in 0..q.ncols() {
            let qj = q.column(j);
            let c = dot(&qj, v);
            for ((x, r), &qv) in v.iter_mut().zip(removed.iter_mut()).zip(&qj) {
                *x -= c * qv;
                *r += c * qv;
            }
        }
    }
    dot(&removed, &removed).sqrt().to_f64()
}

/// Two-pass modified Gram-Schmidt on the columns of `a`.
pub(crate) fn orthonormal_columns<T: Scalar>(a: &DenseMat<T>) -> DenseMat<T> {
    let mut cols: Vec<Vec<T>> = (0..a.ncols()).map(|j| a.column(j)).collect();
    for j in 0..cols.len() {
        for _ in 0..2 {
            for i in 0..j {
                let c = dot(&cols[i], &cols[j]);
                let qi = cols[i].clone();
                for (x, &q) in cols[j].iter_mut().zip(&qi) {
                    *x -= c * q;
                }
            }
        }
        let n = dot(&cols[j], &cols[j]).sqrt();
        if n > T::zero() {
            cols[j].iter_mut().for_each(|x| *x /= n);
        }
    }
    DenseMat::from_columns(a.nrows(), &cols)
}
