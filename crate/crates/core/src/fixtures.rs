//! Synthetic test matrices: grid Laplacians with controlled kernels or
//! conditioning, and random instances with forced postponing.
//!
//! All generators are deterministic; the random ones take a seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sparsemat::SparseMatrix;

/// Appends the 5-point graph Laplacian of an `nx x ny` grid at offset `o`,
/// with edge weights from `weight(i, j)`. With `dirichlet` every boundary
/// node gets one extra unit of diagonal per missing neighbour, otherwise
/// the diagonal is the weighted degree and constants are in the kernel.
fn push_grid(
    trip: &mut Vec<(usize, usize, f64)>,
    o: usize,
    nx: usize,
    ny: usize,
    dirichlet: bool,
    weight: &mut dyn FnMut(usize, usize) -> f64,
) {
    let id = |x: usize, y: usize| o + y * nx + x;
    let mut diag = vec![0.0; nx * ny];
    for y in 0..ny {
        for x in 0..nx {
            let a = id(x, y);
            let mut link = |b: usize, diag: &mut Vec<f64>| {
                let w = weight(a, b);
                trip.push((a, b, -w));
                trip.push((b, a, -w));
                diag[a - o] += w;
                diag[b - o] += w;
            };
            if x + 1 < nx {
                link(id(x + 1, y), &mut diag);
            }
            if y + 1 < ny {
                link(id(x, y + 1), &mut diag);
            }
            if dirichlet {
                let missing = [x == 0, x + 1 == nx, y == 0, y + 1 == ny].iter().filter(|&&m| m).count();
                diag[a - o] += missing as f64;
            }
        }
    }
    for (p, d) in diag.into_iter().enumerate() {
        trip.push((o + p, o + p, d));
    }
}

/// Unit-weight 5-point Laplacian of an `nx x ny` grid. Without Dirichlet
/// rows it is singular with the constant vector as kernel. Entries are
/// small integers, exact in every kind.
pub fn grid_laplacian(nx: usize, ny: usize, dirichlet: bool) -> SparseMatrix<f64> {
    let mut trip = Vec::new();
    push_grid(&mut trip, 0, nx, ny, dirichlet, &mut |_, _| 1.0);
    SparseMatrix::from_triplets(nx * ny, nx * ny, trip).unwrap()
}

/// `count` decoupled floating `nx x ny` grids: a kernel of dimension
/// exactly `count`, one constant vector per subdomain.
pub fn floating_subdomains(count: usize, nx: usize, ny: usize) -> SparseMatrix<f64> {
    let n = nx * ny;
    let mut trip = Vec::new();
    for c in 0..count {
        push_grid(&mut trip, c * n, nx, ny, false, &mut |_, _| 1.0);
    }
    SparseMatrix::from_triplets(n * count, n * count, trip).unwrap()
}

/// Singular fixture with the given kernel dimension and roughly `size`
/// unknowns (at least 4x4 nodes per subdomain).
pub fn kernel_fixture(kernel_dim: usize, size: usize) -> SparseMatrix<f64> {
    if kernel_dim == 0 {
        let side = ((size as f64).sqrt().round() as usize).max(2);
        return grid_laplacian(side, side, true);
    }
    let per = (size / kernel_dim).max(16);
    let side = ((per as f64).sqrt().floor() as usize).max(4);
    floating_subdomains(kernel_dim, side, side)
}

/// Floating `nx x ny` grid whose first node is grounded by `4 * 2^-52`, the
/// smallest change of its diagonal that stays visible in double. The
/// smallest eigenvalue is about `4 * 2^-52 / (nx * ny)`, so for a few
/// hundred nodes the condition number is of order 1e18 to 1e19 while every
/// entry is exact in double.
pub fn nearly_singular_laplacian(nx: usize, ny: usize) -> SparseMatrix<f64> {
    let n = nx * ny;
    let mut trip = Vec::new();
    push_grid(&mut trip, 0, nx, ny, false, &mut |_, _| 1.0);
    let deg = if nx > 1 && ny > 1 { 2.0 } else { 1.0 };
    trip.push((0, 0, deg * 4.0 * f64::EPSILON));
    SparseMatrix::from_triplets(n, n, trip).unwrap()
}

/// Dirichlet grid Laplacian with edge weights `contrast^u`, `u` uniform in
/// `[-1, 1]`. A contrast of 1e3 gives a condition number near 1e6 on a
/// 40x50 grid.
pub fn variable_coefficient_laplacian(nx: usize, ny: usize, contrast: f64, seed: u64) -> SparseMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trip = Vec::new();
    push_grid(&mut trip, 0, nx, ny, true, &mut |_, _| contrast.powf(rng.gen_range(-1.0..1.0)));
    SparseMatrix::from_triplets(nx * ny, nx * ny, trip).unwrap()
}

/// Random sparse symmetric indefinite matrix with a dominant diagonal of
/// random sign, plus `forced` distinct indices to postpone.
pub fn random_forced_instance(n: usize, forced: usize, seed: u64) -> (SparseMatrix<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trip = Vec::new();
    for i in 0..n {
        let sign = if rng.gen_bool(0.3) { -1.0 } else { 1.0 };
        trip.push((i, i, sign * rng.gen_range(1.0..3.0)));
        for _ in 0..4 {
            let j = rng.gen_range(0..n);
            if j != i {
                let v = rng.gen_range(-1.0..1.0);
                trip.push((i, j, v));
                trip.push((j, i, v));
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..forced.min(n) {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(forced.min(n));
    (SparseMatrix::from_triplets(n, n, trip).unwrap(), idx)
}

/// `x_i = i mod 11` for `i = 1..=n`.
pub fn mod_eleven(n: usize) -> Vec<f64> {
    (1..=n).map(|i| (i % 11) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparsemat::Symmetry;

    #[test]
    fn laplacians_are_symmetric_with_zero_row_sums() {
        let k = floating_subdomains(3, 4, 5);
        assert_eq!(k.nrows(), 60);
        assert_eq!(k.symmetry(), Symmetry::Symmetric);
        let ones = vec![1.0; 60];
        assert!(k.spmv(&ones).unwrap().iter().all(|&v| v == 0.0));
        let d = grid_laplacian(3, 3, true);
        assert_eq!(d.get(4, 4), 4.0);
        assert_eq!(d.get(0, 0), 4.0);
    }

    #[test]
    fn kernel_fixture_sizes() {
        for (k, size) in [(1, 400), (2, 2000), (6, 2000)] {
            let m = kernel_fixture(k, size);
            assert!(m.nrows() <= size, "{k}: {}", m.nrows());
            let ones = vec![1.0; m.nrows()];
            assert!(m.spmv(&ones).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn grounding_is_representable() {
        let k = nearly_singular_laplacian(5, 5);
        assert_eq!(k.get(0, 0) - 2.0, 8.0 * f64::EPSILON);
    }

    #[test]
    fn random_instances_are_reproducible() {
        let (a, fa) = random_forced_instance(30, 5, 9);
        let (b, fb) = random_forced_instance(30, 5, 9);
        assert_eq!(a, b);
        assert_eq!(fa, fb);
        let mut s = fa.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 5);
    }

    #[test]
    fn mod_eleven_starts_at_one() {
        assert_eq!(mod_eleven(12)[..3], [1.0, 2.0, 3.0]);
        assert_eq!(mod_eleven(12)[10], 0.0);
    }
}
