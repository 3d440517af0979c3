use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::krylov::Method;
use crate::precision::{DoubleDouble, DoubleQuad, Pure, SingleDouble};

fn to_na(a: &DenseMat<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_na(a: &DMatrix<f64>) -> DenseMat<f64> {
    DenseMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn random_dense(n: usize, m: usize, seed: u64) -> DenseMat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMat::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))
}

fn rel_diff(a: &DenseMat<f64>, b: &DenseMat<f64>) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm()
}

/// Dense `K22 - K21 K11^{-1} K12` of the scaled matrix, computed from the
/// partition alone.
fn oracle_schur<P: PrecisionPair<Higher = f64>>(kbar: &SparseMatrix<f64>, f: &HybridFactorization<P>) -> DenseMat<f64> {
    let q = &f.scaling().q;
    let d = kbar.to_dense();
    let k = DenseMat::from_fn(d.nrows(), d.ncols(), |i, j| q[i] * d[(i, j)] * q[j]);
    let (l1, l2) = (&f.partition().lambda1, &f.partition().lambda2);
    let pick = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| k[(r[i], c[j])]);
    let k11 = pick(l1, l1);
    let s = pick(l2, l2) - pick(l2, l1) * k11.lu().solve(&pick(l1, l2)).unwrap();
    from_na(&s)
}

#[test]
fn diagonal_with_zero_has_unit_kernel() {
    let s = DenseMat::from_row_major(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let f = factor_schur(&s, default_kernel_tol_ratio::<f64>()).unwrap();
    assert_eq!(f.kernel_dim(), 1);
    assert_eq!(f.kernel_basis().column(0), vec![0.0, 1.0]);
    assert_eq!(f.kernel_residual(), 0.0);
}

#[test]
fn zero_diagonal_needs_two_by_two_pivot() {
    let s = DenseMat::from_row_major(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let f = factor_schur(&s, default_kernel_tol_ratio::<f64>()).unwrap();
    assert_eq!(f.pivots(), &[PivotBlock { start: 0, size: 2 }]);
    assert_eq!(f.kernel_dim(), 0);
    let (x, inc) = f.solve(&DenseMat::from_column(&[3.0, 5.0])).unwrap();
    assert_eq!(x.column(0), vec![5.0, 3.0]);
    assert_eq!(inc, vec![0.0]);
}

#[test]
fn constructed_rank_gives_kernel_of_six() {
    let b = random_dense(17, 11, 3);
    let s = b.matmul(&b.transpose());
    let f = factor_schur(&s, default_kernel_tol_ratio::<f64>()).unwrap();
    assert_eq!(f.kernel_dim(), 6);
    assert!(f.kernel_residual() <= 1e-10);
    let v = f.kernel_basis();
    let sv = s.matmul(v);
    for c in 0..6 {
        let vn = v.column(c).iter().map(|x| x * x).sum::<f64>().sqrt();
        let rn = sv.column(c).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(rn <= 1e-10 * vn, "column {c}: {rn:e}");
    }
    // the six vectors are independent and annihilated by B^T
    let bt_v = b.transpose().matmul(v);
    assert!(bt_v.max_abs() <= 1e-10 * v.max_abs());
    assert_eq!(to_na(v).rank(1e-8), 6);
}

#[test]
fn full_rank_symmetric_indefinite_solves() {
    let b = random_dense(12, 12, 4);
    let mut s = DenseMat::from_fn(12, 12, |i, j| b[(i, j)] + b[(j, i)]);
    for i in 0..12 {
        s[(i, i)] *= 0.1;
    }
    let f = factor_schur(&s, default_kernel_tol_ratio::<f64>()).unwrap();
    assert_eq!(f.kernel_dim(), 0);
    let y = random_dense(12, 2, 5);
    let (x, _) = f.solve(&y).unwrap();
    let expect = from_na(&to_na(&s).lu().solve(&to_na(&y)).unwrap());
    assert!(rel_diff(&x, &expect) <= 1e-12);
    // accepted 1x1 pivots are never small against their coupling
    for p in f.pivots() {
        assert!(p.size == 1 || p.size == 2);
    }
}

#[test]
fn zero_matrix_is_all_kernel() {
    let s = DenseMat::<f64>::zeros(3, 3);
    let f = factor_schur(&s, default_kernel_tol_ratio::<f64>()).unwrap();
    assert_eq!(f.kernel_dim(), 3);
    let (x, inc) = f.solve(&DenseMat::from_column(&[1.0, 0.0, 0.0])).unwrap();
    assert!(x.max_abs() == 0.0);
    assert!((inc[0] - 1.0).abs() < 1e-15);
}

#[test]
fn identity_has_empty_schur_part() {
    let k = SparseMatrix::<f64>::identity(10);
    let f = hybrid_factor::<SingleDouble>(&k, &HybridOptions::for_pair::<SingleDouble>()).unwrap();
    assert_eq!(f.postponed_count(), 0);
    assert_eq!(kernel_dimension(&f), 0);
    assert_eq!(f.x12().ncols(), 0);
    let b = DenseMat::from_fn(10, 1, |i, _| (i % 11) as f64);
    let sol = f.solve(&b).unwrap();
    assert_eq!(sol.x, b);
    assert!(!sol.inconsistent);
}

#[test]
fn forced_postponing_matches_dense_oracle() {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = DenseMat::from_fn(n, n, |i, j| if i == j { rng.gen_range(2.0..4.0) } else { rng.gen_range(-1.0..1.0) });
    let kbar = SparseMatrix::from_dense(&d);
    let opts = HybridOptions::for_pair::<SingleDouble>().with_levels(1).with_forced(vec![2, 5]);
    let f = hybrid_factor::<SingleDouble>(&kbar, &opts).unwrap();
    assert!(f.partition().lambda2.contains(&2) && f.partition().lambda2.contains(&5));
    let s = f.schur().s22();
    assert!(rel_diff(s, &oracle_schur(&kbar, &f)) <= 1e-12);

    let b = random_dense(n, 1, 12);
    let sol = f.solve(&b).unwrap();
    let expect = from_na(&to_na(&d).lu().solve(&to_na(&b)).unwrap());
    assert!(rel_diff(&sol.x, &expect) <= 1e-12);
    assert!(sol.history.unwrap().converged());
}

#[test]
fn random_instances_schur_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..10 {
        let n = rng.gen_range(20..60);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, rng.gen_range(1.0..3.0) * if rng.gen_bool(0.3) { -1.0 } else { 1.0 }));
            for _ in 0..4 {
                let j = rng.gen_range(0..n);
                if j != i {
                    let v = rng.gen_range(-1.0..1.0);
                    trip.push((i, j, v));
                    trip.push((j, i, v));
                }
            }
        }
        let kbar = SparseMatrix::from_triplets(n, n, trip).unwrap();
        let mut forced: Vec<usize> = (0..n).collect();
        for i in 0..n {
            forced.swap(i, rng.gen_range(i..n));
        }
        forced.truncate(rng.gen_range(2..=8));
        let opts = HybridOptions::for_pair::<SingleDouble>().with_levels(2).with_forced(forced);
        let f = hybrid_factor::<SingleDouble>(&kbar, &opts).unwrap();
        let s = f.schur().s22();
        let err = rel_diff(s, &oracle_schur(&kbar, &f));
        assert!(err <= 1e-10, "case {case}: {err:e}");
    }
}

/// Two copies of a 1D Laplacian with no Dirichlet rows, so each has a
/// constant null vector, joined by nothing.
fn floating_laplacian(n: usize, copies: usize) -> SparseMatrix<f64> {
    let mut trip = Vec::new();
    for c in 0..copies {
        let o = c * n;
        for i in 0..n {
            let deg = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            trip.push((o + i, o + i, deg));
            if i + 1 < n {
                trip.push((o + i, o + i + 1, -1.0));
                trip.push((o + i + 1, o + i, -1.0));
            }
        }
    }
    SparseMatrix::from_triplets(n * copies, n * copies, trip).unwrap()
}

#[test]
fn singular_laplacian_kernel_is_detected() {
    let k = floating_laplacian(40, 2);
    let opts = HybridOptions::for_pair::<SingleDouble>().with_levels(2);
    let f = hybrid_factor::<SingleDouble>(&k, &opts).unwrap();
    assert_eq!(f.kernel_dim(), 2);
    let v = f.full_kernel_basis();
    let kv = k.spmm(&v).unwrap();
    assert!(kv.max_abs() <= 1e-10 * v.max_abs());

    // a consistent right-hand side is solved on the image
    let xs = DenseMat::from_fn(80, 1, |i, _| (i % 11) as f64);
    let b = k.spmm(&xs).unwrap();
    let sol = f.solve(&b).unwrap();
    assert!(!sol.inconsistent);
    let r = b.sub(&k.spmm(&sol.x).unwrap());
    assert!(r.max_abs() <= 1e-12 * b.max_abs());

    // a constant load is not in the image
    let sol = f.solve(&DenseMat::from_fn(80, 1, |_, _| 1.0)).unwrap();
    assert!(sol.inconsistent);
}

#[test]
fn pure_pair_uses_direct_inner_solves() {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let d = DenseMat::from_fn(n, n, |i, j| if i == j { rng.gen_range(2.0..4.0) } else { rng.gen_range(-1.0..1.0) });
    let kbar = SparseMatrix::from_dense(&d);
    let opts = HybridOptions::for_pair::<Pure<f64>>().with_levels(1).with_forced(vec![0, 7]);
    let f = hybrid_factor::<Pure<f64>>(&kbar, &opts).unwrap();
    assert!(f.x12_history().is_none());
    let b = random_dense(n, 1, 32);
    let sol = f.solve(&b).unwrap();
    assert!(sol.history.is_none());
    let expect = from_na(&to_na(&d).lu().solve(&to_na(&b)).unwrap());
    assert!(rel_diff(&sol.x, &expect) <= 1e-13);
}

#[test]
fn double_quad_pair_reaches_quad_residual() {
    let k = floating_laplacian(30, 1);
    // pin one end so the system is nonsingular
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..30 {
        let (c, v) = k.row(i);
        trip.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, x)));
    }
    trip.push((0, 0, 1.0));
    let k = SparseMatrix::from_triplets(30, 30, trip).unwrap().cast::<DoubleDouble>();
    let opts = HybridOptions::for_pair::<DoubleQuad>().with_levels(1).with_forced(vec![29]);
    let f = hybrid_factor::<DoubleQuad>(&k, &opts).unwrap();
    let xs = DenseMat::from_fn(30, 1, |i, _| DoubleDouble::from_f64((i % 11) as f64));
    let b = k.spmm(&xs).unwrap();
    let sol = f.solve(&b).unwrap();
    let r = b.sub(&k.spmm(&sol.x).unwrap());
    assert!(r.max_abs().to_f64() <= 1e-28 * b.max_abs().to_f64());
}

#[test]
fn method_choice_is_honoured() {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let d = DenseMat::from_fn(n, n, |i, j| if i == j { rng.gen_range(2.0..4.0) } else { rng.gen_range(-1.0..1.0) });
    let kbar = SparseMatrix::from_dense(&d);
    let opts = HybridOptions::for_pair::<SingleDouble>().with_levels(1).with_forced(vec![1]);
    let f = hybrid_factor::<SingleDouble>(&kbar, &opts).unwrap();
    let b = random_dense(n, 1, 42);
    for m in [Method::IR, Method::GCR, Method::BlockGCR] {
        let cfg = SolverConfig::default_for::<f64>().with_method(m);
        let sol = hybrid_solve(&f, &b, &cfg).unwrap();
        assert_eq!(sol.history.unwrap().method, m);
    }
}
