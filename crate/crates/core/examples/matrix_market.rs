//! Reads a Matrix Market file (or writes and rereads a small grid) and
//! prints its shape.
//!
//! cargo run --example matrix_market -- path/to/matrix.mtx

use std::io::Cursor;

use hybrid_ldu::fixtures::grid_laplacian;
use hybrid_ldu::sparsemat::{read_matrix_market, read_matrix_market_file, write_matrix_market};

fn main() -> hybrid_ldu::Result<()> {
    let k = match std::env::args().nth(1) {
        Some(path) => read_matrix_market_file(path)?,
        None => {
            let k = grid_laplacian(4, 3, true);
            let mut buf = Vec::new();
            write_matrix_market(&k, &mut buf)?;
            println!("{}", String::from_utf8_lossy(&buf).lines().take(6).collect::<Vec<_>>().join("\n"));
            println!("...");
            let back = read_matrix_market(Cursor::new(buf))?;
            assert_eq!(back, k);
            back
        }
    };
    println!("{} x {}, {} stored entries, {:?}", k.nrows(), k.ncols(), k.nnz(), k.symmetry());
    println!("max |a_ij| = {}", k.max_abs());
    Ok(())
}
