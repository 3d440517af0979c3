use rayon::prelude::*;

use super::LowerFactor;
use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::krylov::Preconditioner;
use crate::precision::{truncate_into, PrecisionPair, Scalar};

/// Work (rows x pivots x columns) above which panel products go parallel.
const PAR_WORK: usize = 1 << 18;

/// Factors of one block, addressed by positions in the factorized set.
/// The pivots occupy the contiguous positions `start..start + k`; `rest`
/// lists the later positions the block couples to.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel<L> {
    pub start: usize,
    pub d: Vec<L>,
    pub rest: Vec<usize>,
    /// `k x k`, strictly lower part used.
    pub lpp: Vec<L>,
    /// `r x k`.
    pub lrp: Vec<L>,
    /// `k x k`, strictly upper part used.
    pub upp: Vec<L>,
    /// `k x r`.
    pub upr: Vec<L>,
}

impl<L: Scalar> Panel<L> {
    #[allow(clippy::too_many_arguments)]
    pub(super) fn from_raw(
        start: usize,
        kk: usize,
        front: &[usize],
        k: usize,
        d: &[L],
        l: &[L],
        u: &[L],
        pos1: &[usize],
    ) -> Self {
        let f = front.len();
        let rows: Vec<usize> = (kk..f).filter(|&a| pos1[front[a]] != usize::MAX).collect();
        let rest: Vec<usize> = rows.iter().map(|&a| pos1[front[a]]).collect();
        let r = rows.len();
        let mut lpp = vec![L::zero(); kk * kk];
        let mut upp = vec![L::zero(); kk * kk];
        for a in 0..kk {
            for s in 0..a {
                lpp[a * kk + s] = l[a * k + s];
                upp[s * kk + a] = u[s * f + a];
            }
        }
        let mut lrp = vec![L::zero(); r * kk];
        let mut upr = vec![L::zero(); kk * r];
        for (i, &a) in rows.iter().enumerate() {
            lrp[i * kk..(i + 1) * kk].copy_from_slice(&l[a * k..a * k + kk]);
            for s in 0..kk {
                upr[s * r + i] = u[s * f + a];
            }
        }
        Self { start, d: d[..kk].to_vec(), rest, lpp, lrp, upp, upr }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.d.len()
    }
}

/// `out[i] = sum_t a[i, t] * z[t]` for `a` of `rows x k` and `z` of `k x m`,
/// all row-major.
fn panel_product<L: Scalar>(a: &[L], rows: usize, k: usize, z: &[L], m: usize) -> Vec<L> {
    let mut out = vec![L::zero(); rows * m];
    let body = |(i, orow): (usize, &mut [L])| {
        for t in 0..k {
            let c = a[i * k + t];
            if c != L::zero() {
                for (o, &x) in orow.iter_mut().zip(&z[t * m..(t + 1) * m]) {
                    *o += c * x;
                }
            }
        }
    };
    if rows * k * m >= PAR_WORK {
        out.par_chunks_mut(m).enumerate().for_each(body);
    } else {
        out.chunks_mut(m).enumerate().for_each(body);
    }
    out
}

impl<P: PrecisionPair> LowerFactor<P> {
    /// Solves `L D U y = b` in place for the `N x M` row-major block `y`,
    /// entirely in lower precision.
    pub fn solve_in_place(&self, y: &mut DenseMat<P::Lower>) -> Result<()> {
        if y.nrows() != self.n {
            return Err(Error::Dimension(format!("preconditioner of size {} given {} rows", self.n, y.nrows())));
        }
        let m = y.ncols();
        if m == 0 {
            return Ok(());
        }
        let data = y.as_mut_slice();

        for p in &self.panels {
            let k = p.k();
            let (s0, s1) = (p.start * m, (p.start + k) * m);
            let piv = &mut data[s0..s1];
            for t in 0..k {
                let (done, todo) = piv.split_at_mut((t + 1) * m);
                let src = &done[t * m..];
                for s in t + 1..k {
                    let c = p.lpp[s * k + t];
                    if c != P::Lower::zero() {
                        for (x, &v) in todo[(s - t - 1) * m..(s - t) * m].iter_mut().zip(src) {
                            *x -= c * v;
                        }
                    }
                }
            }
            if !p.rest.is_empty() {
                let upd = panel_product(&p.lrp, p.rest.len(), k, &data[s0..s1], m);
                for (i, &row) in p.rest.iter().enumerate() {
                    for (x, &v) in data[row * m..(row + 1) * m].iter_mut().zip(&upd[i * m..(i + 1) * m]) {
                        *x -= v;
                    }
                }
            }
        }

        for p in &self.panels {
            for (s, &d) in p.d.iter().enumerate() {
                let row = p.start + s;
                for x in &mut data[row * m..(row + 1) * m] {
                    *x /= d;
                }
            }
        }

        for p in self.panels.iter().rev() {
            let k = p.k();
            let (s0, s1) = (p.start * m, (p.start + k) * m);
            if !p.rest.is_empty() {
                let r = p.rest.len();
                let mut g = Vec::with_capacity(r * m);
                for &row in &p.rest {
                    g.extend_from_slice(&data[row * m..(row + 1) * m]);
                }
                let upd = panel_product(&p.upr, k, r, &g, m);
                for (x, &v) in data[s0..s1].iter_mut().zip(&upd) {
                    *x -= v;
                }
            }
            let piv = &mut data[s0..s1];
            for s in (0..k).rev() {
                let (head, later) = piv.split_at_mut((s + 1) * m);
                let dst = &mut head[s * m..];
                for b in s + 1..k {
                    let c = p.upp[s * k + b];
                    if c != P::Lower::zero() {
                        for (x, &v) in dst.iter_mut().zip(&later[(b - s - 1) * m..(b - s) * m]) {
                            *x -= c * v;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Truncates `b` to lower precision, applies the factor solve and lifts
    /// the result back.
    pub fn precond_solve(&self, b: &DenseMat<P::Higher>) -> Result<DenseMat<P::Higher>> {
        if b.nrows() != self.n {
            return Err(Error::Dimension(format!("preconditioner of size {} given {} rows", self.n, b.nrows())));
        }
        let mut low = DenseMat::<P::Lower>::zeros(b.nrows(), b.ncols());
        let sat = truncate_into::<P>(b.as_slice(), low.as_mut_slice());
        self.record_saturations(sat);
        self.solve_in_place(&mut low)?;
        Ok(low.map(P::lift))
    }

    pub fn precond_solve_vec(&self, b: &[P::Higher]) -> Result<Vec<P::Higher>> {
        Ok(self.precond_solve(&DenseMat::from_column(b))?.into_vec())
    }

    /// Dense unit-lower `L`, diagonal `D` and unit-upper `U`, in elimination
    /// order.
    pub fn dense_factors(&self) -> (DenseMat<P::Lower>, Vec<P::Lower>, DenseMat<P::Lower>) {
        let n = self.n;
        let mut l = DenseMat::identity(n);
        let mut u = DenseMat::identity(n);
        for p in &self.panels {
            let k = p.k();
            for a in 0..k {
                for s in 0..a {
                    l[(p.start + a, p.start + s)] = p.lpp[a * k + s];
                    u[(p.start + s, p.start + a)] = p.upp[s * k + a];
                }
            }
            let r = p.rest.len();
            for (i, &row) in p.rest.iter().enumerate() {
                for s in 0..k {
                    l[(row, p.start + s)] = p.lrp[i * k + s];
                    u[(p.start + s, row)] = p.upr[s * r + i];
                }
            }
        }
        (l, self.diagonal(), u)
    }
}

impl<P: PrecisionPair> Preconditioner<P::Higher> for LowerFactor<P> {
    fn size(&self) -> usize {
        self.n
    }

    fn apply(&self, r: &DenseMat<P::Higher>) -> Result<DenseMat<P::Higher>> {
        self.precond_solve(r)
    }
}
