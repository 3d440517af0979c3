//! Symmetric 1x1/2x2 pivoting of a dense Schur complement with kernel
//! detection.

use hybrid_ldu::dense::DenseMat;
use hybrid_ldu::hybrid::{default_kernel_tol_ratio, factor_schur};

fn main() -> hybrid_ldu::Result<()> {
    // saddle-point block [[A, B^T], [B, 0]] with a rank-deficient B
    let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
    let bm = [[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]];
    let s = DenseMat::from_fn(5, 5, |i, j| match (i < 3, j < 3) {
        (true, true) => a[i][j],
        (true, false) => bm[j - 3][i],
        (false, true) => bm[i - 3][j],
        (false, false) => 0.0,
    });
    let f = factor_schur(&s, default_kernel_tol_ratio::<f64>())?;
    println!("pivots {:?}", f.pivots());
    println!("pivot magnitudes {:?}", f.pivot_magnitudes());
    println!("rank {}, kernel dim {}, kernel residual {:.1e}", f.rank(), f.kernel_dim(), f.kernel_residual());
    println!("kernel basis {:?}", f.kernel_basis().column(0));

    let y = s.matmul(&DenseMat::from_column(&[1.0, 2.0, 3.0, 4.0, 0.0]));
    let (x, incons) = f.solve(&y)?;
    println!("solve of a consistent right-hand side: {:?}, cokernel part {:.1e}", x.column(0), incons[0]);
    Ok(())
}
