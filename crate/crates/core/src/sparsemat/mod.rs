//! Compressed sparse row storage, symmetric diagonal scaling, SpMV/SpMM and
//! 2x2 block extraction under a symmetric permutation.

mod market;

use rayon::prelude::*;

pub use market::{read_matrix_market, read_matrix_market_file, write_matrix_market};

use crate::dense::{DenseMat, PAR_ROWS};
use crate::error::{Error, Result};
use crate::ordering::Permutation;
use crate::precision::{convert, Scalar};

/// Off-diagonal and trailing blocks are materialized densely up to this size.
pub const DENSE_BLOCK_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    /// Values are exactly symmetric (full storage is still kept).
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_starts: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
    symmetry: Symmetry,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Validates raw CSR arrays. Column indices must be strictly increasing
    /// within each row.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_starts: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if row_starts.len() != nrows + 1 || row_starts[0] != 0 {
            return Err(Error::Dimension("row_starts must have nrows + 1 entries starting at 0".into()));
        }
        if col_indices.len() != values.len() || *row_starts.last().unwrap() != values.len() {
            return Err(Error::Dimension("row_starts, col_indices and values disagree".into()));
        }
        for i in 0..nrows {
            let (s, e) = (row_starts[i], row_starts[i + 1]);
            if s > e {
                return Err(Error::Dimension(format!("row_starts decreases at row {i}")));
            }
            let cols = &col_indices[s..e];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Dimension(format!("row {i} columns not strictly increasing")));
            }
            if cols.last().is_some_and(|&c| c >= ncols) {
                return Err(Error::Dimension(format!("row {i} has a column out of range")));
            }
        }
        let mut m = Self { nrows, ncols, row_starts, col_indices, values, symmetry: Symmetry::General };
        m.symmetry = m.detect_symmetry();
        Ok(m)
    }

    /// Assembles coordinate entries; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        if let Some(&(i, j, _)) = entries.iter().find(|&&(i, j, _)| i >= nrows || j >= ncols) {
            return Err(Error::Dimension(format!("entry ({i}, {j}) outside {nrows}x{ncols}")));
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut row_starts = vec![0usize; nrows + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_starts[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_starts[i + 1] += row_starts[i];
        }
        Self::from_csr(nrows, ncols, row_starts, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_csr(n, n, (0..=n).collect(), (0..n).collect(), vec![T::one(); n]).unwrap()
    }

    pub fn from_dense(a: &DenseMat<T>) -> Self {
        let mut trip = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != T::zero() {
                    trip.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), trip).unwrap()
    }

    fn detect_symmetry(&self) -> Symmetry {
        if self.nrows != self.ncols {
            return Symmetry::General;
        }
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j > i && self.get(j, i) != v {
                    return Symmetry::General;
                }
                if j < i && self.find(j, i).is_none() {
                    return Symmetry::General;
                }
            }
        }
        Symmetry::Symmetric
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
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn row_starts(&self) -> &[usize] {
        &self.row_starts
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (s, e) = (self.row_starts[i], self.row_starts[i + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    fn find(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|k| self.row_starts[i] + k)
    }

    /// Stored value, or zero when the entry is structurally absent.
    pub fn get(&self, i: usize, j: usize) -> T {
        self.find(i, j).map_or(T::zero(), |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SparseMatrix<U> {
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_starts: self.row_starts.clone(),
            col_indices: self.col_indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            symmetry: self.symmetry,
        }
    }

    pub fn cast<U: Scalar>(&self) -> SparseMatrix<U> {
        self.map(convert::<T, U>)
    }

    pub fn to_dense(&self) -> DenseMat<T> {
        let mut d = DenseMat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn transpose(&self) -> Self {
        let trip = (0..self.nrows).flat_map(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (j, i, v))
        });
        Self::from_triplets(self.ncols, self.nrows, trip.collect::<Vec<_>>()).unwrap()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }

    /// Neighbour lists of the pattern of `A + A^T`, diagonal excluded,
    /// each sorted ascending.
    pub fn symmetric_adjacency(&self) -> Vec<Vec<usize>> {
        assert_eq!(self.nrows, self.ncols, "adjacency needs a square matrix");
        let mut adj = vec![Vec::new(); self.nrows];
        for i in 0..self.nrows {
            for &j in self.row(i).0 {
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[T]) -> Result<Vec<T>> {
        let mut y = vec![T::zero(); self.nrows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[T], y: &mut [T]) -> Result<()> {
        if x.len() != self.ncols || y.len() != self.nrows {
            return Err(Error::Dimension(format!(
                "spmv: {}x{} matrix, x of {}, y of {}",
                self.nrows,
                self.ncols,
                x.len(),
                y.len()
            )));
        }
        let body = |(i, yi): (usize, &mut T)| {
            let (cols, vals) = self.row(i);
            let mut acc = T::zero();
            for (&j, &a) in cols.iter().zip(vals) {
                acc += a * x[j];
            }
            *yi = acc;
        };
        if self.nrows > 4 * PAR_ROWS {
            y.par_iter_mut().with_min_len(PAR_ROWS).enumerate().for_each(body);
        } else {
            y.iter_mut().enumerate().for_each(body);
        }
        Ok(())
    }

    /// `Y = A X` for a row-major block `X`; `A` is streamed once for all
    /// columns of `X`.
    pub fn spmm(&self, x: &DenseMat<T>) -> Result<DenseMat<T>> {
        let mut y = DenseMat::zeros(self.nrows, x.ncols());
        self.spmm_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmm_into(&self, x: &DenseMat<T>, y: &mut DenseMat<T>) -> Result<()> {
        if x.nrows() != self.ncols || y.nrows() != self.nrows || y.ncols() != x.ncols() {
            return Err(Error::Dimension(format!(
                "spmm: {}x{} matrix times {}x{} block",
                self.nrows,
                self.ncols,
                x.nrows(),
                x.ncols()
            )));
        }
        let m = x.ncols();
        if m == 0 {
            return Ok(());
        }
        let body = |(i, yrow): (usize, &mut [T])| {
            yrow.fill(T::zero());
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                for (yk, &xk) in yrow.iter_mut().zip(x.row(j)) {
                    *yk += a * xk;
                }
            }
        };
        if self.nrows > PAR_ROWS {
            y.as_mut_slice().par_chunks_mut(m).with_min_len(PAR_ROWS / 4).enumerate().for_each(body);
        } else {
            y.as_mut_slice().chunks_mut(m).enumerate().for_each(body);
        }
        Ok(())
    }

    /// `P^T A P` with `P` the given symmetric permutation: entry `(i, j)` of
    /// the result is `A[order[i], order[j]]`.
    pub fn permute_symmetric(&self, perm: &Permutation) -> Result<Self> {
        if perm.len() != self.nrows || self.nrows != self.ncols {
            return Err(Error::InvalidPermutation(format!(
                "permutation of length {} for a {}x{} matrix",
                perm.len(),
                self.nrows,
                self.ncols
            )));
        }
        Ok(self.submatrix(perm.order(), perm.order()))
    }

    /// Rows `rows` and columns `cols` (both lists of original indices) in
    /// the listed order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_pos = vec![usize::MAX; self.ncols];
        for (p, &c) in cols.iter().enumerate() {
            col_pos[c] = p;
        }
        let mut row_starts = Vec::with_capacity(rows.len() + 1);
        row_starts.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut buf: Vec<(usize, T)> = Vec::new();
        for &r in rows {
            buf.clear();
            let (rc, rv) = self.row(r);
            for (&c, &v) in rc.iter().zip(rv) {
                let p = col_pos[c];
                if p != usize::MAX {
                    buf.push((p, v));
                }
            }
            buf.sort_unstable_by_key(|e| e.0);
            for &(p, v) in &buf {
                col_indices.push(p);
                values.push(v);
            }
            row_starts.push(col_indices.len());
        }
        Self::from_csr(rows.len(), cols.len(), row_starts, col_indices, values).unwrap()
    }
}

/// Symmetric diagonal scaling `K = Q Kbar Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalScaling<T> {
    pub q: Vec<T>,
}

impl<T: Scalar> DiagonalScaling<T> {
    pub fn identity(n: usize) -> Self {
        Self { q: vec![T::one(); n] }
    }

    /// Elementwise `Q x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.q).map(|(&v, &q)| v * q).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.q.iter().all(|&q| q == T::one())
    }
}

/// Scales so every diagonal entry becomes -1, 0 or 1: `q_i = 1/sqrt(|a_ii|)`
/// for nonzero diagonals and 1 otherwise. Scaled diagonals are stored as the
/// exact sign.
pub fn scale_symmetric<T: Scalar>(a: &SparseMatrix<T>) -> Result<(SparseMatrix<T>, DiagonalScaling<T>)> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("scaling needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    let q: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| if d == T::zero() { T::one() } else { T::one() / d.abs().sqrt() })
        .collect();
    let mut k = a.clone();
    for i in 0..k.nrows {
        let (s, e) = (k.row_starts[i], k.row_starts[i + 1]);
        for p in s..e {
            let j = k.col_indices[p];
            let v = k.values[p];
            k.values[p] = if i == j {
                if v > T::zero() {
                    T::one()
                } else if v < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            } else {
                q[i] * v * q[j]
            };
        }
    }
    k.symmetry = k.detect_symmetry();
    Ok((k, DiagonalScaling { q }))
}

/// A trailing or off-diagonal block: dense when small, sparse otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum OffBlock<T> {
    Dense(DenseMat<T>),
    Sparse(SparseMatrix<T>),
}

impl<T: Scalar> OffBlock<T> {
    fn build(sub: SparseMatrix<T>, dense: bool) -> Self {
        if dense {
            OffBlock::Dense(sub.to_dense())
        } else {
            OffBlock::Sparse(sub)
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            OffBlock::Dense(d) => d.nrows(),
            OffBlock::Sparse(s) => s.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            OffBlock::Dense(d) => d.ncols(),
            OffBlock::Sparse(s) => s.ncols(),
        }
    }

    pub fn to_dense(&self) -> DenseMat<T> {
        match self {
            OffBlock::Dense(d) => d.clone(),
            OffBlock::Sparse(s) => s.to_dense(),
        }
    }

    /// `self * x`.
    pub fn apply(&self, x: &DenseMat<T>) -> Result<DenseMat<T>> {
        match self {
            OffBlock::Dense(d) => {
                if d.ncols() != x.nrows() {
                    return Err(Error::Dimension("block apply".into()));
                }
                Ok(d.matmul(x))
            }
            OffBlock::Sparse(s) => s.spmm(x),
        }
    }
}

/// `P^T K P` split after row/column `n1`.
#[derive(Debug, Clone)]
pub struct BlockView<T> {
    pub k11: SparseMatrix<T>,
    pub k12: OffBlock<T>,
    pub k21: OffBlock<T>,
    pub k22: OffBlock<T>,
    pub n1: usize,
    pub n2: usize,
}

impl<T: Scalar> BlockView<T> {
    /// Reassembles the permuted matrix from its four blocks.
    pub fn reassemble(&self) -> SparseMatrix<T> {
        let n1 = self.n1;
        let mut trip = Vec::new();
        for i in 0..n1 {
            let (c, v) = self.k11.row(i);
            trip.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, x)));
        }
        let mut push_block = |b: &OffBlock<T>, ro: usize, co: usize| match b {
            OffBlock::Dense(d) => {
                for i in 0..d.nrows() {
                    for j in 0..d.ncols() {
                        if d[(i, j)] != T::zero() {
                            trip.push((ro + i, co + j, d[(i, j)]));
                        }
                    }
                }
            }
            OffBlock::Sparse(s) => {
                for i in 0..s.nrows() {
                    let (c, v) = s.row(i);
                    trip.extend(c.iter().zip(v).map(|(&j, &x)| (ro + i, co + j, x)));
                }
            }
        };
        push_block(&self.k12, 0, n1);
        push_block(&self.k21, n1, 0);
        push_block(&self.k22, n1, n1);
        let n = n1 + self.n2;
        SparseMatrix::from_triplets(n, n, trip).unwrap()
    }
}

/// Splits `P^T K P` into `[[K11, K12], [K21, K22]]` with `K11` of size `n1`.
pub fn extract_blocks<T: Scalar>(k: &SparseMatrix<T>, perm: &Permutation, n1: usize) -> Result<BlockView<T>> {
    let n = k.nrows();
    if k.ncols() != n || perm.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "permutation of length {} for a {}x{} matrix",
            perm.len(),
            n,
            k.ncols()
        )));
    }
    if n1 > n {
        return Err(Error::Dimension(format!("block size {n1} exceeds matrix size {n}")));
    }
    let (first, second) = perm.order().split_at(n1);
    let n2 = n - n1;
    let dense = n2 <= DENSE_BLOCK_LIMIT;
    Ok(BlockView {
        k11: k.submatrix(first, first),
        k12: OffBlock::build(k.submatrix(first, second), dense),
        k21: OffBlock::build(k.submatrix(second, first), dense),
        k22: OffBlock::build(k.submatrix(second, second), dense),
        n1,
        n2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_from(rows: &[&[f64]]) -> SparseMatrix<f64> {
        let d = DenseMat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
        SparseMatrix::from_dense(&d)
    }

    fn random_sparse(n: usize, density: f64, seed: u64) -> SparseMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || rng.gen::<f64>() < density {
                    trip.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        SparseMatrix::from_triplets(n, n, trip).unwrap()
    }

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = SparseMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 2, 0.5), (1, 0, 3.0)]).unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.row(1).0, &[0, 2]);
        assert_eq!(m.get(1, 2), 1.5);
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0f64)]).is_err());
    }

    #[test]
    fn csr_validation_rejects_unsorted_columns() {
        assert!(SparseMatrix::<f64>::from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::<f64>::from_csr(1, 3, vec![0, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn scale_examples() {
        let (k, q) = scale_symmetric(&dense_from(&[&[4.0, 2.0], &[2.0, 1.0]])).unwrap();
        assert_eq!(q.q, vec![0.5, 1.0]);
        assert_eq!(k.to_dense(), DenseMat::from_fn(2, 2, |_, _| 1.0));

        let (k, q) = scale_symmetric(&SparseMatrix::<f64>::identity(3)).unwrap();
        assert!(q.is_identity());
        assert_eq!(k, SparseMatrix::identity(3));

        let zero_diag = dense_from(&[&[0.0, 3.0], &[3.0, 0.0]]);
        let (k, q) = scale_symmetric(&zero_diag).unwrap();
        assert!(q.is_identity());
        assert_eq!(k.to_dense(), zero_diag.to_dense());
    }

    #[test]
    fn scaling_is_idempotent() {
        let a = random_sparse(40, 0.1, 3);
        let (k, _) = scale_symmetric(&a).unwrap();
        for d in k.diagonal() {
            assert!(d == 1.0 || d == -1.0 || d == 0.0);
        }
        let (k2, q2) = scale_symmetric(&k).unwrap();
        assert!(q2.is_identity());
        assert_eq!(k2, k);
    }

    #[test]
    fn spmv_examples() {
        let x = vec![1.5, -2.0, 3.0];
        assert_eq!(SparseMatrix::identity(3).spmv(&x).unwrap(), x);
        let ones = dense_from(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(ones.spmv(&[1.0, 1.0]).unwrap(), vec![2.0, 2.0]);
        assert!(ones.spmv(&[1.0]).is_err());
    }

    #[test]
    fn spmv_matches_dense_oracle() {
        let n = 50;
        let a = random_sparse(n, 0.2, 11);
        let d = a.to_dense();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = a.spmv(&x).unwrap();
        for i in 0..n {
            let mut exact = 0.0;
            let mut mag = 0.0;
            for j in 0..n {
                exact += d[(i, j)] * x[j];
                mag += (d[(i, j)] * x[j]).abs();
            }
            assert!((y[i] - exact).abs() <= 4.0 * n as f64 * f64::EPSILON * mag);
        }
    }

    #[test]
    fn spmm_examples() {
        let n = 50;
        let a = random_sparse(n, 0.2, 5);
        let m = 7;
        let eye = DenseMat::from_fn(n, m, |i, j| if i == j { 1.0 } else { 0.0 });
        let y = a.spmm(&eye).unwrap();
        let ad = a.to_dense();
        for i in 0..n {
            for j in 0..m {
                assert_eq!(y[(i, j)], ad[(i, j)]);
            }
        }
        assert_eq!(a.spmm(&DenseMat::zeros(n, m)).unwrap(), DenseMat::zeros(n, m));

        let x = DenseMat::from_fn(n, m, |i, j| ((i * m + j) as f64).cos());
        let y = a.spmm(&x).unwrap();
        for j in 0..m {
            let col = a.spmv(&x.column(j)).unwrap();
            for i in 0..n {
                assert!((y[(i, j)] - col[i]).abs() <= 8.0 * n as f64 * f64::EPSILON);
            }
        }
    }

    #[test]
    fn extract_blocks_examples() {
        let k = random_sparse(6, 0.5, 9);
        let id = Permutation::identity(6);
        let b = extract_blocks(&k, &id, 6).unwrap();
        assert_eq!(b.k11, k);
        assert_eq!((b.n2, b.k12.ncols(), b.k22.nrows()), (0, 0, 0));

        // 3x3, swap the last two indices, n1 = 2.
        let k = dense_from(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]]);
        let p = Permutation::from_order(vec![0, 2, 1]).unwrap();
        let b = extract_blocks(&k, &p, 2).unwrap();
        // dense oracle: permute rows and columns, then slice
        let pd = DenseMat::from_fn(3, 3, |i, j| k.to_dense()[(p.order()[i], p.order()[j])]);
        assert_eq!(b.k11.to_dense(), DenseMat::from_fn(2, 2, |i, j| pd[(i, j)]));
        assert_eq!(b.k12.to_dense(), DenseMat::from_fn(2, 1, |i, _| pd[(i, 2)]));
        assert_eq!(b.k21.to_dense(), DenseMat::from_fn(1, 2, |_, j| pd[(2, j)]));
        assert_eq!(b.k22.to_dense(), DenseMat::from_fn(1, 1, |_, _| pd[(2, 2)]));

        assert!(extract_blocks(&k, &Permutation::identity(2), 1).is_err());
        assert!(extract_blocks(&k, &p, 4).is_err());
    }

    #[test]
    fn large_trailing_block_stays_sparse() {
        let n = DENSE_BLOCK_LIMIT + 10;
        let k = SparseMatrix::<f64>::identity(n);
        let b = extract_blocks(&k, &Permutation::identity(n), 5).unwrap();
        assert!(matches!(b.k22, OffBlock::Sparse(_)));
        assert_eq!(b.reassemble(), k);
    }

    #[test]
    fn symmetry_detection() {
        let s = dense_from(&[&[1.0, 2.0], &[2.0, 3.0]]);
        assert_eq!(s.symmetry(), Symmetry::Symmetric);
        let g = dense_from(&[&[1.0, 2.0], &[-2.0, 3.0]]);
        assert_eq!(g.symmetry(), Symmetry::General);
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert_eq, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn blocks_reassemble_to_permuted_matrix(
                n in 1usize..25,
                seed in any::<u64>(),
                split in 0.0f64..1.0,
            ) {
                let k = random_sparse(n, 0.3, seed);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
                let mut order: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    order.swap(i, rng.gen_range(0..=i));
                }
                let p = Permutation::from_order(order).unwrap();
                let n1 = ((n as f64) * split) as usize;
                let b = extract_blocks(&k, &p, n1).unwrap();
                prop_assert_eq!(b.reassemble(), k.permute_symmetric(&p).unwrap());
            }
        }
    }
}
