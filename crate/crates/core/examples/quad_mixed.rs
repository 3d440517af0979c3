//! Mixed double-double/double solve of a Laplacian with condition number
//! near 1e18, against pure double.

use hybrid_ldu::fixtures::nearly_singular_laplacian;
use hybrid_ldu::harness::{run_matrix, Mode, RunConfig};
use hybrid_ldu::precision::ScalarKind;

fn main() -> hybrid_ldu::Result<()> {
    let k = nearly_singular_laplacian(30, 30);
    for mode in [
        Mode::Pure(ScalarKind::Double),
        Mode::Mixed(ScalarKind::DoubleDouble),
        Mode::Pure(ScalarKind::DoubleDouble),
    ] {
        let mut cfg = RunConfig::new("nearly_singular");
        cfg.mode = mode;
        let r = run_matrix(&k, "nearly_singular", &cfg)?.report;
        println!(
            "{:<26} residual {:.2e}  error {:.2e}  kernel {}  M {}  factor {:.3}s  solve {:.3}s",
            r.precision,
            r.residual.unwrap_or(f64::NAN),
            r.error.unwrap_or(f64::NAN),
            r.kernel_dim,
            r.postponed,
            r.factor_seconds,
            r.solve_seconds
        );
    }
    Ok(())
}
