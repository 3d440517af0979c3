//! IR, GCR and block GCR preconditioned by a single-precision factor on a
//! variable-coefficient Laplacian with 16 right-hand sides. Pass a directory
//! to write one history CSV per method.

use hybrid_ldu::dense::DenseMat;
use hybrid_ldu::fixtures::{mod_eleven, variable_coefficient_laplacian};
use hybrid_ldu::krylov::{solve, Method, SolverConfig};
use hybrid_ldu::lowfactor::{factor_with_postponing, FactorOptions};
use hybrid_ldu::ordering::{build_bisection_tree, default_levels};
use hybrid_ldu::precision::SingleDouble;
use hybrid_ldu::sparsemat::scale_symmetric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> hybrid_ldu::Result<()> {
    let out_dir = std::env::args().nth(1);
    let (k, _) = scale_symmetric(&variable_coefficient_laplacian(40, 50, 1e4, 7))?;
    let (_, tree) = build_bisection_tree(&k, default_levels(k.nrows()))?;
    let (lf, part) = factor_with_postponing::<SingleDouble>(&k, &tree, &FactorOptions::default())?;
    let k11 = k.submatrix(&part.lambda1, &part.lambda1);
    let n = k11.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let first = mod_eleven(n);
    let xs = DenseMat::from_fn(n, 16, |i, j| if j == 0 { first[i] } else { rng.gen_range(-1.0..1.0) });
    let b = k11.spmm(&xs)?;

    for method in [Method::IR, Method::GCR, Method::BlockGCR] {
        let cfg = SolverConfig::default_for::<f64>().with_method(method);
        let (x, h) = solve(&k11, &lf, &b, &cfg)?;
        let err = x.sub(&xs).max_abs() / xs.max_abs();
        println!("{method:>4}: {:?} iterations to tol, error {err:.2e}", h.iterations_to_tol());
        for (it, r) in h.column(0) {
            println!("      iter {it:2}  column 0  {r:.3e}");
        }
        if let Some(dir) = &out_dir {
            h.write_csv_file(format!("{dir}/{method}.csv"))?;
        }
    }
    Ok(())
}
