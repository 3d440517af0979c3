//! Level-set nested dissection of a grid graph.

use hybrid_ldu::fixtures::grid_laplacian;
use hybrid_ldu::ordering::build_bisection_tree;

fn main() -> hybrid_ldu::Result<()> {
    let k = grid_laplacian(20, 20, true);
    for m in [1, 2, 3, 4] {
        let (perm, tree) = build_bisection_tree(&k, m)?;
        println!("requested {m} levels, built {}, {} nodes", tree.levels(), tree.nodes().len());
        for (id, node) in tree.nodes().iter().enumerate() {
            let kind = if node.children.is_some() { "separator" } else { "leaf" };
            println!("  node {id:2} level {} {kind:9} {} indices", node.level, node.indices.len());
        }
        assert_eq!(perm.len(), k.nrows());
    }
    Ok(())
}
