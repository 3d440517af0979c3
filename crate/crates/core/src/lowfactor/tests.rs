use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dense::DenseMat;
use crate::ordering::build_bisection_tree;
use crate::precision::{DoubleQuad, Pure, SingleDouble};
use crate::sparsemat::scale_symmetric;

fn diag(d: &[f64]) -> SparseMatrix<f64> {
    SparseMatrix::from_triplets(d.len(), d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v))).unwrap()
}

/// Sparse, diagonally weighted, mildly nonsymmetric.
fn random_matrix(n: usize, seed: u64, symmetric: bool) -> SparseMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trip = Vec::new();
    for i in 0..n {
        trip.push((i, i, rng.gen_range(2.0..6.0) * if rng.gen_bool(0.2) { -1.0 } else { 1.0 }));
        for _ in 0..3 {
            let j = rng.gen_range(0..n);
            if j != i {
                let v = rng.gen_range(-1.0..1.0);
                trip.push((i, j, v));
                let w = if symmetric { v } else { v + rng.gen_range(-0.1..0.1) };
                trip.push((j, i, w));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, trip).unwrap()
}

fn spd_matrix(n: usize, seed: u64) -> SparseMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trip = Vec::new();
    let mut rowsum = vec![0.0; n];
    for i in 0..n {
        for _ in 0..3 {
            let j = rng.gen_range(0..n);
            if j != i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                trip.push((i, j, v));
                trip.push((j, i, v));
                rowsum[i] += v.abs();
                rowsum[j] += v.abs();
            }
        }
    }
    for (i, s) in rowsum.iter().enumerate() {
        trip.push((i, i, s + rng.gen_range(0.01..3.0)));
    }
    SparseMatrix::from_triplets(n, n, trip).unwrap()
}

fn factor<P: PrecisionPair>(
    k: &SparseMatrix<P::Higher>,
    levels: usize,
    opts: &FactorOptions,
) -> (LowerFactor<P>, PostponedPartition) {
    let (_, tree) = build_bisection_tree(k, levels).unwrap();
    factor_with_postponing::<P>(k, &tree, opts).unwrap()
}

fn k11(k: &SparseMatrix<f64>, part: &PostponedPartition) -> DenseMat<f64> {
    k.submatrix(&part.lambda1, &part.lambda1).to_dense()
}

#[test]
fn identity_has_nothing_to_postpone() {
    let k = SparseMatrix::<f64>::identity(6);
    let (f, part) = factor::<SingleDouble>(&k, 2, &FactorOptions::default());
    assert_eq!(part.n2(), 0);
    assert_eq!(part.moved, 0);
    assert_eq!(f.diagonal(), vec![1.0f32; 6]);
}

#[test]
fn tiny_trailing_pivot_is_postponed() {
    let k = diag(&[1.0, 0.9, 1e-9]);
    let tree = BisectionTree::single(3);
    let (f, part) = factor_with_postponing::<SingleDouble>(&k, &tree, &FactorOptions::new(0.05, 4)).unwrap();
    assert_eq!(part.per_block_postponed, vec![(0, 1)]);
    assert!(part.lambda2.contains(&2));
    let first: Vec<_> = f.pivot_log().iter().take(2).map(|r| (r.index, r.d)).collect();
    assert_eq!(first, vec![(0, 1.0), (1, 0.9f32 as f64)]);
}

#[test]
fn zero_first_pivot_postpones_whole_block() {
    let k = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
    let tree = BisectionTree::single(2);
    let (f, part) = factor_with_postponing::<SingleDouble>(&k, &tree, &FactorOptions::new(0.05, 0)).unwrap();
    assert_eq!(f.n(), 0);
    assert_eq!(part.n2(), 2);
    assert_eq!(part.postponed(), 4, "both the tree block and the final pass give up");
}

#[test]
fn tau_must_be_inside_unit_interval() {
    let k = SparseMatrix::<f64>::identity(2);
    let tree = BisectionTree::single(2);
    for tau in [0.0, 1.0, -0.5, f64::NAN] {
        let r = factor_with_postponing::<SingleDouble>(&k, &tree, &FactorOptions::new(tau, 4));
        assert!(matches!(r, Err(Error::Config(_))));
    }
}

#[test]
fn precond_solve_examples() {
    let k = SparseMatrix::<f64>::identity(3);
    let (f, _) = factor::<SingleDouble>(&k, 1, &FactorOptions::default());
    let b = vec![std::f64::consts::PI, 1.0 / 3.0, -2.5];
    let x = f.precond_solve_vec(&b).unwrap();
    let expect: Vec<f64> = b.iter().map(|&v| v as f32 as f64).collect();
    assert_eq!(x, expect);

    // right-hand sides are indexed in elimination order
    let k = diag(&[2.0, 4.0]);
    let (f, part) = factor::<SingleDouble>(&k, 1, &FactorOptions::default());
    let b = [2.0, 4.0];
    let b1: Vec<f64> = part.lambda1.iter().map(|&i| b[i]).collect();
    assert_eq!(f.precond_solve_vec(&b1).unwrap(), vec![1.0, 1.0]);
    assert!(f.precond_solve_vec(&[1.0]).is_err());
}

#[test]
fn precond_solve_small_residual() {
    for seed in 0..5 {
        let (k, _) = scale_symmetric(&spd_matrix(30, seed)).unwrap();
        let (f, part) = factor::<SingleDouble>(&k, 2, &FactorOptions::new(0.01, 4));
        let a = k.submatrix(&part.lambda1, &part.lambda1);
        let b: Vec<f64> = (0..a.nrows()).map(|i| ((i * 7 + 3) as f64).sin()).collect();
        let x = f.precond_solve_vec(&b).unwrap();
        let r: Vec<f64> = a.spmv(&x).unwrap().iter().zip(&b).map(|(ax, bi)| ax - bi).collect();
        let rel = crate::dense::norm2(&r) / crate::dense::norm2(&b);
        assert!(rel <= 100.0 * f32::EPSILON as f64, "seed {seed}: {rel:e}");
    }
}

#[test]
fn multi_column_solve_matches_single_columns() {
    let (k, _) = scale_symmetric(&random_matrix(120, 4, false)).unwrap();
    let (f, _) = factor::<SingleDouble>(&k, 3, &FactorOptions::new(0.01, 4));
    let n = f.n();
    let b = DenseMat::from_fn(n, 5, |i, j| ((i * 5 + j) as f64 * 0.37).cos());
    let x = f.precond_solve(&b).unwrap();
    for j in 0..5 {
        assert_eq!(x.column(j), f.precond_solve_vec(&b.column(j)).unwrap());
    }
}

fn reconstruction_error<P: PrecisionPair<Higher = f64>>(k: &SparseMatrix<f64>, levels: usize, opts: &FactorOptions) -> (f64, f64) {
    let (f, part) = factor::<P>(k, levels, opts);
    let a = k11(k, &part);
    let n = a.nrows();
    let (l, d, u) = f.dense_factors();
    let l = l.map(|v| v.to_f64());
    let u = u.map(|v| v.to_f64());
    let ld = DenseMat::from_fn(n, n, |i, j| l[(i, j)] * d[j].to_f64());
    let prod = ld.matmul(&u);
    let err = prod.sub(&a).max_abs();
    let norm = (0..n).map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    (err, 50.0 * n as f64 * P::Lower::eps() * norm)
}

#[test]
fn reconstruction_within_bound() {
    for seed in 0..10 {
        let n = 20 + 8 * seed as usize;
        let (k, _) = scale_symmetric(&random_matrix(n, seed, false)).unwrap();
        for levels in [1, 2, 3] {
            let (err, bound) = reconstruction_error::<SingleDouble>(&k, levels, &FactorOptions::new(0.05, 4));
            assert!(err <= bound, "seed {seed} levels {levels}: {err:e} > {bound:e}");
            let (err, bound) = reconstruction_error::<Pure<f64>>(&k, levels, &FactorOptions::new(0.05, 4));
            assert!(err <= bound, "pure double, seed {seed}: {err:e} > {bound:e}");
        }
    }
}

#[test]
fn ratio_guarantee_and_monotone_pivots() {
    for seed in 0..10 {
        let (k, _) = scale_symmetric(&spd_matrix(80, seed)).unwrap();
        let tau = 0.2;
        let (f, _) = factor::<SingleDouble>(&k, 3, &FactorOptions::new(tau, 4));
        let log = f.pivot_log();
        for w in log.windows(2) {
            if w[0].block == w[1].block {
                let ratio = (w[1].d / w[0].d).abs();
                assert!(ratio >= tau, "seed {seed}: ratio {ratio}");
                assert!(w[1].d.abs() <= w[0].d.abs(), "seed {seed}: pivots grow");
            }
        }
        assert!(f.diagonal().iter().all(|&d| d != 0.0));
    }
}

#[test]
fn ratio_guarantee_on_indefinite_matrices() {
    for seed in 0..10 {
        let (k, _) = scale_symmetric(&random_matrix(60, seed + 100, true)).unwrap();
        let tau = 0.3;
        let (f, _) = factor::<SingleDouble>(&k, 2, &FactorOptions::new(tau, 4));
        for w in f.pivot_log().windows(2) {
            if w[0].block == w[1].block {
                assert!((w[1].d / w[0].d).abs() >= tau);
            }
        }
    }
}

#[test]
fn raising_tau_never_shrinks_postponed_set() {
    for seed in 0..6 {
        let (k, _) = scale_symmetric(&random_matrix(70, seed + 40, true)).unwrap();
        let mut prev = 0;
        for tau in [0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.95] {
            let (_, part) = factor::<SingleDouble>(&k, 2, &FactorOptions::new(tau, 4));
            let count = part.postponed();
            assert!(count >= prev, "seed {seed} tau {tau}: {count} < {prev}");
            prev = count;
        }
    }
}

#[test]
fn pivot_logs_are_deterministic() {
    let (k, _) = scale_symmetric(&random_matrix(300, 9, false)).unwrap();
    let (a, pa) = factor::<SingleDouble>(&k, 3, &FactorOptions::new(0.1, 4));
    let (b, pb) = factor::<SingleDouble>(&k, 3, &FactorOptions::new(0.1, 4));
    assert_eq!(a.pivot_log(), b.pivot_log());
    assert_eq!(pa, pb);
}

#[test]
fn forced_indices_land_in_lambda2() {
    let (k, _) = scale_symmetric(&random_matrix(40, 2, false)).unwrap();
    let forced = vec![3, 17, 39];
    let (f, part) = factor::<SingleDouble>(&k, 2, &FactorOptions::new(0.01, 0).with_forced(forced.clone()));
    for i in &forced {
        assert!(part.lambda2.contains(i));
        assert!(f.pivot_log().iter().all(|r| r.index != *i));
    }
    assert_eq!(part.n1() + part.n2(), 40);
    let mut all: Vec<usize> = part.lambda1.iter().chain(&part.lambda2).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..40).collect::<Vec<_>>());
}

#[test]
fn enlargement_moves_trailing_pivots() {
    let k = diag(&[1.0, 0.8, 0.7, 0.6, 0.5, 1e-12]);
    let tree = BisectionTree::single(6);
    let (f, part) = factor_with_postponing::<SingleDouble>(&k, &tree, &FactorOptions::new(0.05, 2)).unwrap();
    // unscaled, so the final pass measures index 5 against its own diagonal
    // and accepts it; then the last two pivots move over
    assert_eq!(part.moved, 2);
    assert_eq!(part.lambda2, vec![4, 5]);
    assert_eq!(f.n(), 4);
}

#[test]
fn double_double_pair_factorizes() {
    let (k, _) = scale_symmetric(&spd_matrix(50, 1)).unwrap();
    let kd = k.cast::<crate::precision::DoubleDouble>();
    let (f, part) = factor::<DoubleQuad>(&kd, 2, &FactorOptions::new(0.01, 4));
    let a = kd.submatrix(&part.lambda1, &part.lambda1);
    let b: Vec<_> = (0..a.nrows()).map(|i| crate::precision::DoubleDouble::from_f64(i as f64 + 1.0)).collect();
    let x = f.precond_solve_vec(&b).unwrap();
    let r: Vec<f64> = a.spmv(&x).unwrap().iter().zip(&b).map(|(&ax, &bi)| (ax - bi).to_f64()).collect();
    let rel = crate::dense::norm2(&r) / crate::dense::norm2(&b.iter().map(|v| v.to_f64()).collect::<Vec<_>>());
    assert!(rel <= 100.0 * f64::EPSILON, "{rel:e}");
}
