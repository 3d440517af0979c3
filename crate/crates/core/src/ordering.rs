//! Symmetric permutations and the nested-dissection bisection tree that
//! drives block-wise factorization.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::precision::Scalar;
use crate::sparsemat::SparseMatrix;

/// Maximum tree depth chosen by [`default_levels`].
pub const MAX_DEFAULT_LEVELS: usize = 8;
/// Leaf size targeted by [`default_levels`].
pub const TARGET_LEAF_SIZE: usize = 512;

/// A bijection on `0..n`. `order[p]` is the original index placed at
/// position `p`; `position[i]` is where original index `i` went.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { order: (0..n).collect(), position: (0..n).collect() }
    }

    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut position = vec![usize::MAX; n];
        for (p, &i) in order.iter().enumerate() {
            if i >= n || position[i] != usize::MAX {
                return Err(Error::InvalidPermutation(format!("index {i} repeated or out of range")));
            }
            position[i] = p;
        }
        Ok(Self { order, position })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.order.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    #[inline]
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    #[inline]
    pub fn position(&self) -> &[usize] {
        &self.position
    }

    pub fn inverse(&self) -> Self {
        Self { order: self.position.clone(), position: self.order.clone() }
    }

    /// `out[p] = x[order[p]]`.
    pub fn gather<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.order.iter().map(|&i| x[i]).collect()
    }

    /// Inverse of [`gather`](Self::gather): `out[order[p]] = y[p]`.
    pub fn scatter<T: Copy + Default>(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); y.len()];
        for (p, &i) in self.order.iter().enumerate() {
            out[i] = y[p];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    /// Original indices owned by this node, ascending.
    pub indices: Vec<usize>,
    /// 1 for the root, `m` for the leaves.
    pub level: usize,
    pub parent: Option<usize>,
    pub children: Option<(usize, usize)>,
}

/// `2^m - 1` disjoint index sets stored in elimination order: every node
/// appears after both of its children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BisectionTree {
    levels: usize,
    requested_levels: usize,
    nodes: Vec<TreeNode>,
}

impl BisectionTree {
    /// A one-node tree owning all indices.
    pub fn single(n: usize) -> Self {
        Self {
            levels: 1,
            requested_levels: 1,
            nodes: vec![TreeNode { indices: (0..n).collect(), level: 1, parent: None, children: None }],
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// The level count asked for; larger than [`levels`](Self::levels) when
    /// the tree had to be clamped.
    pub fn requested_levels(&self) -> usize {
        self.requested_levels
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Node indices concatenated in elimination order.
    pub fn permutation(&self) -> Permutation {
        let order = self.nodes.iter().flat_map(|n| n.indices.iter().copied()).collect();
        Permutation::from_order(order).expect("tree node sets partition the index set")
    }

    /// Node id owning each index.
    pub fn owner(&self, n: usize) -> Vec<usize> {
        let mut owner = vec![usize::MAX; n];
        for (id, node) in self.nodes.iter().enumerate() {
            for &i in &node.indices {
                owner[i] = id;
            }
        }
        owner
    }
}

/// `clamp(ceil(log2(n / 512)) + 1, 1, 8)`.
pub fn default_levels(n: usize) -> usize {
    let mut m = 1;
    let mut cap = TARGET_LEAF_SIZE;
    while cap < n && m < MAX_DEFAULT_LEVELS {
        cap *= 2;
        m += 1;
    }
    m
}

/// Recursive level-set bisection of the graph of `K + K^T`. When some leaf
/// would be empty, `m` is lowered until every leaf is populated; the tree
/// records both values.
pub fn build_bisection_tree<T: Scalar>(k: &SparseMatrix<T>, m: usize) -> Result<(Permutation, BisectionTree)> {
    if k.nrows() != k.ncols() {
        return Err(Error::Dimension(format!("ordering needs a square matrix, got {}x{}", k.nrows(), k.ncols())));
    }
    if m == 0 {
        return Err(Error::Config("bisection tree needs at least one level".into()));
    }
    let n = k.nrows();
    let adj = k.symmetric_adjacency();
    let mut levels = m;
    loop {
        let mut b = Builder { adj: &adj, mark: vec![false; n], dist: vec![usize::MAX; n], nodes: Vec::new() };
        let ok = b.build((0..n).collect(), 1, levels);
        if ok || levels == 1 {
            let mut tree = BisectionTree { levels, requested_levels: m, nodes: b.nodes };
            for id in 0..tree.nodes.len() {
                if let Some((l, r)) = tree.nodes[id].children {
                    tree.nodes[l].parent = Some(id);
                    tree.nodes[r].parent = Some(id);
                }
            }
            let perm = tree.permutation();
            return Ok((perm, tree));
        }
        levels -= 1;
    }
}

struct Builder<'a> {
    adj: &'a [Vec<usize>],
    mark: Vec<bool>,
    dist: Vec<usize>,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    /// Appends the subtree for `set` in postorder; false if a leaf came out
    /// empty.
    fn build(&mut self, mut set: Vec<usize>, level: usize, m: usize) -> bool {
        set.sort_unstable();
        if level == m {
            let ok = !set.is_empty();
            self.nodes.push(TreeNode { indices: set, level, parent: None, children: None });
            return ok;
        }
        let (left, right, sep) = self.split(&set);
        let ok_l = self.build(left, level + 1, m);
        let l = self.nodes.len() - 1;
        let ok_r = self.build(right, level + 1, m);
        let r = self.nodes.len() - 1;
        let mut sep = sep;
        sep.sort_unstable();
        self.nodes.push(TreeNode { indices: sep, level, parent: None, children: Some((l, r)) });
        ok_l && ok_r
    }

    /// Splits `set` into (left, right, separator) with no edge between left
    /// and right inside the induced subgraph.
    fn split(&mut self, set: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        for &v in set {
            self.mark[v] = true;
        }
        let components = self.components(set);
        let (mut left, mut right, mut sep) = (Vec::new(), Vec::new(), Vec::new());
        for comp in components {
            if comp.len() < 3 {
                if left.len() <= right.len() {
                    left.extend(comp);
                } else {
                    right.extend(comp);
                }
                continue;
            }
            let (mut a, mut b, s) = self.split_connected(&comp);
            // keep the halves balanced across components
            if left.len() > right.len() {
                std::mem::swap(&mut a, &mut b);
            }
            left.extend(a);
            right.extend(b);
            sep.extend(s);
        }
        for &v in set {
            self.mark[v] = false;
        }
        (left, right, sep)
    }

    fn components(&mut self, set: &[usize]) -> Vec<Vec<usize>> {
        let mut seen: Vec<usize> = Vec::new();
        let mut comps = Vec::new();
        for &s in set {
            if self.dist[s] != usize::MAX {
                continue;
            }
            let comp = self.bfs(s).0;
            seen.extend(&comp);
            comps.push(comp);
        }
        for v in seen {
            self.dist[v] = usize::MAX;
        }
        comps
    }

    /// BFS over marked vertices; leaves `dist` set for the visited vertices.
    /// Returns the visit order and level boundaries (`starts[d]` is the
    /// first vertex at distance `d`).
    fn bfs(&mut self, root: usize) -> (Vec<usize>, Vec<usize>) {
        let mut order = vec![root];
        let mut starts = vec![0];
        self.dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            let d = self.dist[v];
            for &w in &self.adj[v] {
                if self.mark[w] && self.dist[w] == usize::MAX {
                    self.dist[w] = d + 1;
                    if starts.len() == d + 1 {
                        starts.push(order.len());
                    }
                    order.push(w);
                    queue.push_back(w);
                }
            }
        }
        (order, starts)
    }

    fn clear(&mut self, vs: &[usize]) {
        for &v in vs {
            self.dist[v] = usize::MAX;
        }
    }

    fn split_connected(&mut self, comp: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        // Pseudo-peripheral root: restart from the farthest vertex (smallest
        // index on ties) until the eccentricity stops growing.
        let (mut order, mut starts) = self.bfs(*comp.iter().min().unwrap());
        for _ in 0..8 {
            let cand = *order[*starts.last().unwrap()..].iter().min().unwrap();
            self.clear(&order);
            let (o, s) = self.bfs(cand);
            let grew = s.len() > starts.len();
            order = o;
            starts = s;
            if !grew {
                break;
            }
        }

        let half = comp.len().div_ceil(2);
        let nlev = starts.len();
        let level_end = |d: usize| if d + 1 < nlev { starts[d + 1] } else { order.len() };
        // smallest k with |L_0 .. L_{k-1}| >= half, keeping L_k nonempty
        let mut k = 1;
        while k < nlev - 1 && level_end(k - 1) < half {
            k += 1;
        }
        let boundary = k - 1;
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut sep = Vec::new();
        for &v in &order {
            let d = self.dist[v];
            if d < boundary {
                left.push(v);
            } else if d > boundary {
                right.push(v);
            } else if self.adj[v].iter().any(|&w| self.mark[w] && self.dist[w] == boundary + 1) {
                sep.push(v);
            } else {
                left.push(v);
            }
        }
        self.clear(&order);
        (left, right, sep)
    }
}
