//! Threshold postponing in single precision on a scaled matrix whose
//! pivots include near-zeros.

use hybrid_ldu::fixtures::floating_subdomains;
use hybrid_ldu::lowfactor::{factor_with_postponing, FactorOptions};
use hybrid_ldu::ordering::build_bisection_tree;
use hybrid_ldu::precision::SingleDouble;
use hybrid_ldu::sparsemat::scale_symmetric;

fn main() -> hybrid_ldu::Result<()> {
    let (k, _) = scale_symmetric(&floating_subdomains(2, 12, 12))?;
    let (_, tree) = build_bisection_tree(&k, 3)?;
    for tau in [0.01, 0.05, 0.2] {
        let (f, part) = factor_with_postponing::<SingleDouble>(&k, &tree, &FactorOptions::new(tau, 4))?;
        println!(
            "tau {tau}: N = {}, M = {} ({} postponed naturally, {} moved), per block {:?}",
            part.n1(),
            part.n2(),
            part.postponed(),
            part.moved,
            part.per_block_postponed
        );
        let tail: Vec<String> = f.pivot_log().iter().rev().take(4).map(|p| format!("{:.2e}", p.d)).collect();
        println!("  last accepted pivots {}", tail.join(" "));
    }
    Ok(())
}
