//! Lower-precision block LDU factorization with threshold postponing, and
//! the preconditioner solve built on it.
//!
//! Elimination follows the bisection tree in postorder with one dense front
//! per node (a multifrontal-lite scheme). A front holds the node's own
//! indices, indices postponed further down the tree, and the ancestor
//! indices it couples to. Only the node's own, non-forced indices are pivot
//! candidates; pivots are chosen by largest diagonal magnitude and the block
//! stops as soon as `|d_next / d_prev| < tau`; the first pivot of a block is
//! measured against the largest original diagonal entry among its
//! candidates. Whatever is left becomes the
//! update matrix extended-added into the parent front. The indices still
//! standing at the root form the postponed set, whose Schur complement is
//! factorized once more with the same rule.

mod solve;

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ordering::{BisectionTree, Permutation};
use crate::precision::{PrecisionPair, Scalar};
use crate::sparsemat::SparseMatrix;

pub use solve::Panel;

/// Rank-1 updates run row-parallel once the trailing block has this many
/// entries.
const PAR_UPDATE: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorOptions {
    /// Ratio threshold for consecutive pivots, in `(0, 1)`.
    pub tau: f64,
    /// Number of trailing pivots moved into the postponed set when anything
    /// was postponed.
    pub n_extra: usize,
    /// Indices that are never pivoted and go straight to the postponed set.
    pub forced_postpone: Vec<usize>,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self { tau: 0.05, n_extra: 4, forced_postpone: Vec::new() }
    }
}

impl FactorOptions {
    pub fn new(tau: f64, n_extra: usize) -> Self {
        Self { tau, n_extra, forced_postpone: Vec::new() }
    }

    pub fn with_forced(mut self, forced: Vec<usize>) -> Self {
        self.forced_postpone = forced;
        self
    }
}

/// One accepted pivot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PivotRecord {
    /// Position in the global elimination sequence.
    pub step: usize,
    /// Tree node id, or the node count for the pass over the postponed set.
    pub block: usize,
    /// Original index.
    pub index: usize,
    pub d: f64,
}

/// `Lambda = Lambda_1 (+) Lambda_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PostponedPartition {
    /// Factorized indices in elimination order (size N).
    pub lambda1: Vec<usize>,
    /// Postponed indices (size M): moved pivots first, then the indices the
    /// final pass could not eliminate.
    pub lambda2: Vec<usize>,
    /// `lambda1` followed by `lambda2`.
    pub permutation: Permutation,
    /// Natural postponements per block as `(block, count)`; only nonzero
    /// counts are listed.
    pub per_block_postponed: Vec<(usize, usize)>,
    /// Pivots moved into `lambda2` by the enlargement step.
    pub moved: usize,
    /// Forced indices, included in `lambda2`.
    pub forced: usize,
}

impl PostponedPartition {
    pub fn n1(&self) -> usize {
        self.lambda1.len()
    }

    pub fn n2(&self) -> usize {
        self.lambda2.len()
    }

    /// Total number of natural postponements across all blocks.
    pub fn postponed(&self) -> usize {
        self.per_block_postponed.iter().map(|&(_, c)| c).sum()
    }
}

/// Block LDU factors of `K11` in the pair's lower precision.
pub struct LowerFactor<P: PrecisionPair> {
    n: usize,
    panels: Vec<Panel<P::Lower>>,
    pivot_log: Vec<PivotRecord>,
    saturations: AtomicUsize,
}

impl<P: PrecisionPair> Clone for LowerFactor<P> {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            panels: self.panels.clone(),
            pivot_log: self.pivot_log.clone(),
            saturations: AtomicUsize::new(self.saturations.load(Ordering::Relaxed)),
        }
    }
}

impl<P: PrecisionPair> std::fmt::Debug for LowerFactor<P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LowerFactor")
            .field("n", &self.n)
            .field("panels", &self.panels.len())
            .field("pivots", &self.pivot_log.len())
            .finish()
    }
}

impl<P: PrecisionPair> LowerFactor<P> {
    /// Size N of the factorized block.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn panels(&self) -> &[Panel<P::Lower>] {
        &self.panels
    }

    /// Every accepted pivot, including those later moved by enlargement.
    pub fn pivot_log(&self) -> &[PivotRecord] {
        &self.pivot_log
    }

    /// Diagonal of D in elimination order.
    pub fn diagonal(&self) -> Vec<P::Lower> {
        self.panels.iter().flat_map(|p| p.d.iter().copied()).collect()
    }

    /// Entries clamped while narrowing right-hand sides so far.
    pub fn saturation_count(&self) -> usize {
        self.saturations.load(Ordering::Relaxed)
    }

    pub(crate) fn record_saturations(&self, n: usize) {
        if n > 0 {
            self.saturations.fetch_add(n, Ordering::Relaxed);
        }
    }
}

/// Raw result of eliminating one front.
struct RawPanel<L> {
    block: usize,
    /// Front indices, pivots first (global ids).
    front: Vec<usize>,
    k: usize,
    d: Vec<L>,
    /// `f x k`: column `s` holds the multipliers below pivot `s`.
    l: Vec<L>,
    /// `k x f`: row `s` holds the multipliers right of pivot `s`.
    u: Vec<L>,
}

struct Update<L> {
    indices: Vec<usize>,
    values: Vec<L>,
}

/// Factorizes the scaled matrix `k` along `tree`, postponing pivots that
/// fail the ratio test.
pub fn factor_with_postponing<P: PrecisionPair>(
    k: &SparseMatrix<P::Higher>,
    tree: &BisectionTree,
    opts: &FactorOptions,
) -> Result<(LowerFactor<P>, PostponedPartition)> {
    let n = k.nrows();
    if k.ncols() != n {
        return Err(Error::Dimension(format!("factorization needs a square matrix, got {}x{}", n, k.ncols())));
    }
    if !(opts.tau > 0.0 && opts.tau < 1.0) {
        return Err(Error::Config(format!("tau must lie in (0, 1), got {}", opts.tau)));
    }
    let owner = tree.owner(n);
    if owner.contains(&usize::MAX) {
        return Err(Error::Dimension("bisection tree does not cover the matrix".into()));
    }
    let mut forced = vec![false; n];
    for &i in &opts.forced_postpone {
        if i >= n {
            return Err(Error::Dimension(format!("forced index {i} out of range")));
        }
        forced[i] = true;
    }

    let kt = k.transpose();
    let adj = k.symmetric_adjacency();
    let tau = opts.tau;
    let nodes = tree.nodes();
    let mut updates: Vec<Option<Update<P::Lower>>> = (0..nodes.len()).map(|_| None).collect();
    let mut raw = Vec::with_capacity(nodes.len() + 1);
    let mut per_block = Vec::new();
    let mut local = vec![usize::MAX; n];

    for (id, node) in nodes.iter().enumerate() {
        let children: Vec<Update<P::Lower>> = match node.children {
            Some((l, r)) => vec![updates[l].take().unwrap(), updates[r].take().unwrap()],
            None => Vec::new(),
        };

        let mut cand: Vec<usize> = node.indices.iter().copied().filter(|&i| !forced[i]).collect();
        let mut pass: Vec<usize> = node.indices.iter().copied().filter(|&i| forced[i]).collect();
        let mut boundary = Vec::new();
        let mark = |g: usize, list: &mut Vec<usize>, local: &mut Vec<usize>| {
            if local[g] == usize::MAX {
                local[g] = 0;
                list.push(g);
            }
        };
        for &i in &node.indices {
            local[i] = 0;
        }
        for c in &children {
            for &g in &c.indices {
                if owner[g] < id {
                    mark(g, &mut pass, &mut local);
                } else if owner[g] > id {
                    mark(g, &mut boundary, &mut local);
                }
            }
        }
        for &i in &node.indices {
            for &j in &adj[i] {
                if owner[j] > id {
                    mark(j, &mut boundary, &mut local);
                }
            }
        }
        cand.sort_unstable();
        pass.sort_unstable();
        boundary.sort_unstable();
        let ncand = cand.len();
        let mut front = cand;
        front.extend(pass);
        front.extend(boundary);
        let f = front.len();
        for (p, &g) in front.iter().enumerate() {
            local[g] = p;
        }

        let mut mat = vec![P::Lower::zero(); f * f];
        for &i in &node.indices {
            let li = local[i];
            let (cols, vals) = k.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if owner[j] >= id {
                    mat[li * f + local[j]] += P::truncate(v).value;
                }
            }
            let (rows, vals) = kt.row(i);
            for (&j, &v) in rows.iter().zip(vals) {
                if owner[j] > id {
                    mat[local[j] * f + li] += P::truncate(v).value;
                }
            }
        }
        for c in &children {
            let m = c.indices.len();
            let loc: Vec<usize> = c.indices.iter().map(|&g| local[g]).collect();
            for a in 0..m {
                let row = &mut mat[loc[a] * f..(loc[a] + 1) * f];
                for b in 0..m {
                    row[loc[b]] += c.values[a * m + b];
                }
            }
        }
        drop(children);

        let yardstick = reference(k, &front[..ncand]);
        let kpiv = eliminate(&mut mat, &mut front, f, ncand, tau, yardstick);
        if kpiv < ncand {
            per_block.push((id, ncand - kpiv));
        }
        updates[id] = Some(Update { indices: front[kpiv..].to_vec(), values: trailing(&mat, f, kpiv) });
        raw.push(split_panel(id, mat, front, f, kpiv));
        for &g in &raw.last().unwrap().front {
            local[g] = usize::MAX;
        }
    }

    // Final pass over everything still standing at the root.
    let root = updates[tree.root()].take().unwrap();
    let block0 = nodes.len();
    let mut front = root.indices;
    let f = front.len();
    let mut perm: Vec<usize> = (0..f).collect();
    perm.sort_by_key(|&p| (forced[front[p]], front[p]));
    let mut mat = vec![P::Lower::zero(); f * f];
    for a in 0..f {
        for b in 0..f {
            mat[a * f + b] = root.values[perm[a] * f + perm[b]];
        }
    }
    front = perm.iter().map(|&p| front[p]).collect();
    let ncand = front.iter().filter(|&&g| !forced[g]).count();
    let yardstick = reference(k, &front[..ncand]);
    let kpiv = eliminate(&mut mat, &mut front, f, ncand, tau, yardstick);
    if kpiv < ncand {
        per_block.push((block0, ncand - kpiv));
    }
    raw.push(split_panel(block0, mat, front, f, kpiv));

    let naturally_postponed = per_block.iter().any(|&(b, _)| b != block0) || kpiv < ncand;
    let mut pivot_log = Vec::new();
    for p in &raw {
        for s in 0..p.k {
            pivot_log.push(PivotRecord { step: pivot_log.len(), block: p.block, index: p.front[s], d: p.d[s].to_f64() });
        }
    }
    let total = pivot_log.len();
    let moved = if naturally_postponed { opts.n_extra.min(total) } else { 0 };
    let keep = total - moved;

    let lambda1: Vec<usize> = pivot_log[..keep].iter().map(|r| r.index).collect();
    let mut lambda2: Vec<usize> = pivot_log[keep..].iter().map(|r| r.index).collect();
    let last = raw.last().unwrap();
    let mut rest: Vec<usize> = last.front[last.k..].to_vec();
    rest.sort_unstable();
    lambda2.extend(rest);
    let permutation = Permutation::from_order(lambda1.iter().chain(&lambda2).copied().collect())?;

    let mut pos1 = vec![usize::MAX; n];
    for (p, &g) in lambda1.iter().enumerate() {
        pos1[g] = p;
    }
    let mut panels = Vec::new();
    let mut start = 0;
    for p in raw {
        let k_keep = p.k.min(keep - start);
        if k_keep > 0 {
            panels.push(Panel::from_raw(start, k_keep, &p.front, p.k, &p.d, &p.l, &p.u, &pos1));
        }
        start += k_keep;
    }

    let factor = LowerFactor { n: keep, panels, pivot_log, saturations: AtomicUsize::new(0) };
    let partition = PostponedPartition {
        lambda1,
        lambda2,
        permutation,
        per_block_postponed: per_block,
        moved,
        forced: opts.forced_postpone.len(),
    };
    Ok((factor, partition))
}

/// Largest original diagonal magnitude among `cand`, the yardstick for a
/// block's first pivot.
fn reference<T: Scalar>(k: &SparseMatrix<T>, cand: &[usize]) -> f64 {
    cand.iter().map(|&i| k.get(i, i).abs().to_f64()).fold(0.0, f64::max)
}

/// Right-looking elimination of the first `ncand` positions of a dense
/// `f x f` front with symmetric max-diagonal pivoting. The first pivot is
/// compared with `reference`, every later one with its predecessor.
/// Returns the number of pivots taken; `front` is permuted along with the
/// matrix.
fn eliminate<L: Scalar>(mat: &mut [L], front: &mut [usize], f: usize, ncand: usize, tau: f64, reference: f64) -> usize {
    let mut prev = reference;
    for s in 0..ncand {
        let mut p = s;
        let mut best = mat[s * f + s].abs();
        for c in s + 1..ncand {
            let v = mat[c * f + c].abs();
            if v > best {
                best = v;
                p = c;
            }
        }
        let mag = best.to_f64();
        if !(mag > 0.0) || mag < tau * prev {
            return s;
        }
        if p != s {
            swap_sym(mat, front, f, s, p);
        }
        prev = mag;

        let d = mat[s * f + s];
        let (head, tail) = mat.split_at_mut((s + 1) * f);
        let prow = &head[s * f..];
        let update = |row: &mut [L]| {
            let l = row[s] / d;
            row[s] = l;
            if l != L::zero() {
                for (x, &u) in row[s + 1..].iter_mut().zip(&prow[s + 1..]) {
                    *x -= l * u;
                }
            }
        };
        if (f - s) * (f - s) >= PAR_UPDATE {
            tail.par_chunks_mut(f).for_each(update);
        } else {
            tail.chunks_mut(f).for_each(update);
        }
        for x in &mut head[s * f + s + 1..(s + 1) * f] {
            *x /= d;
        }
    }
    ncand
}

fn swap_sym<L: Copy>(mat: &mut [L], front: &mut [usize], f: usize, a: usize, b: usize) {
    front.swap(a, b);
    for r in 0..f {
        mat.swap(r * f + a, r * f + b);
    }
    let (lo, hi) = (a.min(b), a.max(b));
    let (x, y) = mat.split_at_mut(hi * f);
    x[lo * f..(lo + 1) * f].swap_with_slice(&mut y[..f]);
}

fn trailing<L: Scalar>(mat: &[L], f: usize, k: usize) -> Vec<L> {
    let m = f - k;
    let mut out = Vec::with_capacity(m * m);
    for a in k..f {
        out.extend_from_slice(&mat[a * f + k..(a + 1) * f]);
    }
    out
}

fn split_panel<L: Scalar>(block: usize, mat: Vec<L>, front: Vec<usize>, f: usize, k: usize) -> RawPanel<L> {
    let mut l = vec![L::zero(); f * k];
    let mut u = vec![L::zero(); k * f];
    let mut d = Vec::with_capacity(k);
    for s in 0..k {
        d.push(mat[s * f + s]);
        u[s * f + s + 1..(s + 1) * f].copy_from_slice(&mat[s * f + s + 1..(s + 1) * f]);
    }
    for a in 0..f {
        for s in 0..k.min(a) {
            l[a * k + s] = mat[a * f + s];
        }
    }
    RawPanel { block, front, k, d, l, u }
}

#[cfg(test)]
mod tests;
