use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{SparseMatrix, Symmetry};
use crate::error::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads a coordinate-format Matrix Market stream. Symmetric files are
/// expanded to full storage; `real` and `integer` fields are accepted.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrix<f64>> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lineno, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(parse_err(1, "empty input")),
    };
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(lineno, "expected `%%MatrixMarket matrix ...` header"));
    }
    if fields[2] != "coordinate" {
        return Err(parse_err(lineno, format!("unsupported format `{}`", fields[2])));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(parse_err(lineno, format!("unsupported field `{}`", fields[3])));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(lineno, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut trip = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut parts = t.split_whitespace();
        match size {
            None => {
                let mut next = || -> Result<usize> {
                    parts
                        .next()
                        .ok_or_else(|| parse_err(lineno, "size line needs rows, cols, nnz"))?
                        .parse()
                        .map_err(|e| parse_err(lineno, format!("bad size: {e}")))
                };
                let (r, c, nnz) = (next()?, next()?, next()?);
                if symmetric && r != c {
                    return Err(parse_err(lineno, "symmetric matrix must be square"));
                }
                size = Some((r, c, nnz));
                trip.reserve(if symmetric { 2 * nnz } else { nnz });
            }
            Some((r, c, _)) => {
                let (Some(si), Some(sj), Some(sv)) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(parse_err(lineno, "entry needs row, column and value"));
                };
                let i: usize = si.parse().map_err(|e| parse_err(lineno, format!("bad row index: {e}")))?;
                let j: usize = sj.parse().map_err(|e| parse_err(lineno, format!("bad column index: {e}")))?;
                let v: f64 = sv.parse().map_err(|e| parse_err(lineno, format!("bad value: {e}")))?;
                if i == 0 || j == 0 || i > r || j > c {
                    return Err(parse_err(lineno, format!("index ({i}, {j}) out of bounds for {r}x{c}")));
                }
                trip.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    trip.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (r, c, nnz) = size.ok_or_else(|| parse_err(lineno, "missing size line"))?;
    let stored = if symmetric { trip.iter().filter(|e| e.0 >= e.1).count() } else { trip.len() };
    if stored != nnz {
        return Err(parse_err(lineno, format!("declared {nnz} entries, found {stored}")));
    }
    SparseMatrix::from_triplets(r, c, trip)
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<SparseMatrix<f64>> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

/// Writes `a` in coordinate format; exactly symmetric matrices are written
/// as `symmetric` with the lower triangle only.
pub fn write_matrix_market<W: Write>(a: &SparseMatrix<f64>, mut w: W) -> Result<()> {
    let sym = a.symmetry() == Symmetry::Symmetric;
    let kind = if sym { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    let entries: Vec<(usize, usize, f64)> = (0..a.nrows())
        .flat_map(|i| {
            let (c, v) = a.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
        .filter(|&(i, j, _)| !sym || i >= j)
        .collect();
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<SparseMatrix<f64>> {
        read_matrix_market(s.as_bytes())
    }

    #[test]
    fn identity() {
        let m = read("%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1\n2 2 1\n").unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.values(), &[1.0, 1.0]);
    }

    #[test]
    fn symmetric_expansion_matches_general_twin() {
        let sym = read("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 5\n2 2 3\n").unwrap();
        assert_eq!(sym.nnz(), 4);
        assert_eq!(sym.get(0, 1), 5.0);
        assert_eq!(sym.get(1, 0), 5.0);
        let off_only = read("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 5\n").unwrap();
        assert_eq!(off_only.nnz(), 2);

        let general =
            read("%%MatrixMarket matrix coordinate real general\n2 2 4\n1 1 2\n1 2 5\n2 1 5\n2 2 3\n").unwrap();
        assert_eq!(sym, general);
    }

    #[test]
    fn duplicates_are_summed() {
        let m = read("%%MatrixMarket matrix coordinate real general\n1 1 2\n1 1 2\n1 1 0.5\n").unwrap();
        assert_eq!(m.get(0, 0), 2.5);
    }

    #[test]
    fn errors_name_the_line() {
        let bad_field = read("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n");
        assert!(matches!(bad_field, Err(Error::Parse { line: 1, .. })));
        let oob = read("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n");
        assert!(matches!(oob, Err(Error::Parse { line: 3, .. })));
        let junk = read("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1\n");
        assert!(matches!(junk, Err(Error::Parse { line: 3, .. })));
        assert!(read("hello\n").is_err());
    }

    #[test]
    fn write_then_read_roundtrip() {
        let m = read("%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n1 1 2\n2 1 -1.25\n3 3 7\n3 2 0.1\n").unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&m, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).contains("symmetric"));
        assert_eq!(read_matrix_market(&buf[..]).unwrap(), m);
    }
}
