//! Hybrid factorization of singular matrices: the kernel dimension comes
//! from the Schur complement of the postponed part.

use hybrid_ldu::dense::DenseMat;
use hybrid_ldu::fixtures::kernel_fixture;
use hybrid_ldu::hybrid::{hybrid_factor, HybridOptions};
use hybrid_ldu::precision::{DoubleQuad, Pure, SingleDouble};

fn main() -> hybrid_ldu::Result<()> {
    for dim in [1, 2, 6] {
        let k = kernel_fixture(dim, 2000);
        let f = hybrid_factor::<SingleDouble>(&k, &HybridOptions::for_pair::<SingleDouble>())?;
        let basis = f.full_kernel_basis();
        let kv = k.spmm(&basis)?;
        let quad = hybrid_factor::<DoubleQuad>(&k.cast(), &HybridOptions::for_pair::<DoubleQuad>())?;
        let single = hybrid_factor::<Pure<f32>>(&k.cast(), &HybridOptions::for_pair::<Pure<f32>>())?;
        println!(
            "expected {dim}: mixed(double+single) {} (M = {}, max |K v| = {:.1e}), mixed(quadruple+double) {}, single {}",
            f.kernel_dim(),
            f.postponed_count(),
            kv.max_abs(),
            quad.kernel_dim(),
            single.kernel_dim()
        );
    }

    // a right-hand side with a component along the constants is flagged
    let k = kernel_fixture(1, 400);
    let f = hybrid_factor::<SingleDouble>(&k, &HybridOptions::for_pair::<SingleDouble>())?;
    let ones = DenseMat::from_fn(k.nrows(), 1, |_, _| 1.0);
    let sol = f.solve(&ones)?;
    println!("constant right-hand side: inconsistent = {}", sol.inconsistent);
    Ok(())
}
