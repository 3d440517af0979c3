//! Row-major dense matrices and the handful of kernels the solvers need.
//!
//! Multi-column blocks (right-hand sides, Krylov directions, `X12`) are
//! stored row-major so that a sparse row of `A` touches contiguous memory
//! when it is applied to all columns at once.

use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::precision::{convert, Scalar};

/// Rows per task when a kernel is split across threads.
pub(crate) const PAR_ROWS: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMat<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![T::zero(); nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::Dimension(format!(
                "{} values for a {nrows}x{ncols} matrix",
                data.len()
            )));
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    /// A single column as an `n x 1` matrix.
    pub fn from_column(col: &[T]) -> Self {
        Self { nrows: col.len(), ncols: 1, data: col.to_vec() }
    }

    pub fn from_columns(nrows: usize, cols: &[Vec<T>]) -> Self {
        Self::from_fn(nrows, cols.len(), |i, j| cols[j][i])
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[T]) {
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.nrows, cols.len(), |i, j| self[(i, cols[j])])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseMat<U> {
        DenseMat { nrows: self.nrows, ncols: self.ncols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn cast<U: Scalar>(&self) -> DenseMat<U> {
        self.map(convert::<T, U>)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn column_norms(&self) -> Vec<T> {
        let mut acc = vec![T::zero(); self.ncols];
        for i in 0..self.nrows {
            for (a, &v) in acc.iter_mut().zip(self.row(i)) {
                *a += v * v;
            }
        }
        acc.into_iter().map(Scalar::sqrt).collect()
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: T, other: &Self) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self { nrows: self.nrows, ncols: self.ncols, data }
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.ncols, rhs.nrows, "matmul inner dimension");
        let mut out = Self::zeros(self.nrows, rhs.ncols);
        gemm_acc(T::one(), self, rhs, &mut out);
        out
    }

    /// `self^T * rhs`, accumulated row by row.
    pub fn tr_matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.nrows, rhs.nrows, "tr_matmul row count");
        let p = self.ncols;
        let q = rhs.ncols;
        let partial = |rows: std::ops::Range<usize>| {
            let mut c = vec![T::zero(); p * q];
            for i in rows {
                let a = self.row(i);
                let b = rhs.row(i);
                for (l, &al) in a.iter().enumerate() {
                    let cl = &mut c[l * q..(l + 1) * q];
                    for (ck, &bk) in cl.iter_mut().zip(b) {
                        *ck += al * bk;
                    }
                }
            }
            c
        };
        let data = if self.nrows > 4 * PAR_ROWS {
            // Fixed chunking keeps the summation order independent of threads.
            let chunks: Vec<_> = (0..self.nrows)
                .step_by(PAR_ROWS)
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|s| partial(s..(s + PAR_ROWS).min(self.nrows)))
                .collect();
            let mut acc = vec![T::zero(); p * q];
            for c in chunks {
                for (a, b) in acc.iter_mut().zip(c) {
                    *a += b;
                }
            }
            acc
        } else {
            partial(0..self.nrows)
        };
        Self { nrows: p, ncols: q, data }
    }
}

/// `out += alpha * a * b`.
pub fn gemm_acc<T: Scalar>(alpha: T, a: &DenseMat<T>, b: &DenseMat<T>, out: &mut DenseMat<T>) {
    assert_eq!(a.ncols, b.nrows);
    assert_eq!((out.nrows, out.ncols), (a.nrows, b.ncols));
    let q = b.ncols;
    if q == 0 {
        return;
    }
    let body = |(i, orow): (usize, &mut [T])| {
        for (l, &ail) in a.row(i).iter().enumerate() {
            if ail == T::zero() {
                continue;
            }
            let s = alpha * ail;
            for (o, &bv) in orow.iter_mut().zip(b.row(l)) {
                *o += s * bv;
            }
        }
    };
    if a.nrows > PAR_ROWS {
        out.data.par_chunks_mut(q).enumerate().for_each(body);
    } else {
        out.data.chunks_mut(q).enumerate().for_each(body);
    }
}

impl<T> Index<(usize, usize)> for DenseMat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[i * self.ncols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[i * self.ncols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
}

/// Cholesky factorization of a symmetric positive semidefinite matrix with
/// diagonal (complete) pivoting, stopped once the largest remaining pivot
/// drops to `threshold` or below.
///
/// The first `rank` entries of `order` index the retained, numerically
/// independent rows/columns; `factor` holds the lower factor of that leading
/// block in pivot order.
#[derive(Debug, Clone)]
pub struct PivotedCholesky<T> {
    pub order: Vec<usize>,
    pub rank: usize,
    factor: DenseMat<T>,
}

impl<T: Scalar> PivotedCholesky<T> {
    pub fn new(gram: &DenseMat<T>, threshold: T) -> Self {
        let n = gram.nrows();
        assert_eq!(n, gram.ncols());
        let mut a = gram.clone();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rank = 0;
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if a[(i, i)] > a[(p, p)] {
                    p = i;
                }
            }
            if !(a[(p, p)] > threshold) {
                break;
            }
            if p != k {
                order.swap(k, p);
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
                for i in 0..n {
                    let t = a[(i, k)];
                    a[(i, k)] = a[(i, p)];
                    a[(i, p)] = t;
                }
            }
            let d = a[(k, k)].sqrt();
            a[(k, k)] = d;
            for i in k + 1..n {
                a[(i, k)] /= d;
            }
            for j in k + 1..n {
                let ljk = a[(j, k)];
                for i in j..n {
                    let v = a[(i, k)] * ljk;
                    a[(i, j)] -= v;
                }
                // keep the trailing block symmetric for the pivot search
                for i in j + 1..n {
                    a[(j, i)] = a[(i, j)];
                }
            }
            rank += 1;
        }
        let factor = DenseMat::from_fn(rank, rank, |i, j| if j <= i { a[(i, j)] } else { T::zero() });
        Self { order, rank, factor }
    }

    pub fn retained(&self) -> &[usize] {
        &self.order[..self.rank]
    }

    /// Solves `G_r x = b` for the retained block `G_r`, where the rows of `b`
    /// are already in retained order.
    pub fn solve_in_place(&self, b: &mut DenseMat<T>) {
        let r = self.rank;
        assert_eq!(b.nrows(), r);
        let l = &self.factor;
        for i in 0..r {
            for k in 0..i {
                let lik = l[(i, k)];
                for c in 0..b.ncols() {
                    let v = lik * b[(k, c)];
                    b[(i, c)] -= v;
                }
            }
            let d = l[(i, i)];
            for c in 0..b.ncols() {
                b[(i, c)] /= d;
            }
        }
        for i in (0..r).rev() {
            for k in i + 1..r {
                let lki = l[(k, i)];
                for c in 0..b.ncols() {
                    let v = lki * b[(k, c)];
                    b[(i, c)] -= v;
                }
            }
            let d = l[(i, i)];
            for c in 0..b.ncols() {
                b[(i, c)] /= d;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_transpose_products_agree() {
        let a = DenseMat::from_fn(7, 3, |i, j| (i * 3 + j) as f64 * 0.25 - 1.0);
        let b = DenseMat::from_fn(7, 2, |i, j| (i as f64 - j as f64).sin());
        let direct = a.transpose().matmul(&b);
        let fused = a.tr_matmul(&b);
        for i in 0..3 {
            for j in 0..2 {
                assert!((direct[(i, j)] - fused[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn tr_matmul_parallel_path_is_deterministic() {
        let a = DenseMat::from_fn(5000, 4, |i, j| ((i * 7 + j * 13) % 17) as f64 / 17.0 - 0.5);
        let g1 = a.tr_matmul(&a);
        let g2 = a.tr_matmul(&a);
        assert_eq!(g1, g2);
    }

    #[test]
    fn pivoted_cholesky_detects_dependent_column() {
        // Third column = first + second.
        let q = DenseMat::from_fn(6, 3, |i, j| match j {
            0 => (i as f64 + 1.0).sqrt(),
            1 => ((i * i) as f64 * 0.1).cos(),
            _ => (i as f64 + 1.0).sqrt() + ((i * i) as f64 * 0.1).cos(),
        });
        let g = q.tr_matmul(&q);
        let thr = f64::EPSILON * g.max_abs();
        let ch = PivotedCholesky::new(&g, thr);
        assert_eq!(ch.rank, 2);
        let r = ch.retained().to_vec();
        let gr = DenseMat::from_fn(2, 2, |i, j| g[(r[i], r[j])]);
        let mut b = DenseMat::from_fn(2, 1, |i, _| i as f64 + 1.0);
        let rhs = b.clone();
        ch.solve_in_place(&mut b);
        let back = gr.matmul(&b);
        for i in 0..2 {
            assert!((back[(i, 0)] - rhs[(i, 0)]).abs() < 1e-10);
        }
    }
}
