use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::Method;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Diverged,
    Breakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRecord {
    pub iter: usize,
    pub column: usize,
    pub relative_residual: f64,
    pub elapsed_seconds: f64,
}

/// Per-iteration, per-column relative residuals. Iteration 0 is the
/// residual of the starting guess.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceHistory {
    pub method: Method,
    pub columns: usize,
    pub records: Vec<HistoryRecord>,
    pub status: SolveStatus,
    /// First iteration at which each column met the tolerance.
    pub converged_at: Vec<Option<usize>>,
}

impl ConvergenceHistory {
    pub fn new(method: Method, columns: usize) -> Self {
        Self { method, columns, records: Vec::new(), status: SolveStatus::MaxIterations, converged_at: vec![None; columns] }
    }

    pub fn push(&mut self, iter: usize, residuals: &[f64], elapsed: f64, tol: f64) {
        for (column, &r) in residuals.iter().enumerate() {
            self.records.push(HistoryRecord { iter, column, relative_residual: r, elapsed_seconds: elapsed });
            if r <= tol && self.converged_at[column].is_none() {
                self.converged_at[column] = Some(iter);
            }
        }
    }

    /// Appends another history as the continuation of this one (iteration
    /// numbers are shifted so they keep increasing).
    pub fn append(&mut self, other: &ConvergenceHistory, column_map: &[usize], iter_offset: usize, time_offset: f64) {
        for r in other.records.iter().filter(|r| r.iter > 0) {
            let column = column_map[r.column];
            self.records.push(HistoryRecord {
                iter: r.iter + iter_offset,
                column,
                relative_residual: r.relative_residual,
                elapsed_seconds: r.elapsed_seconds + time_offset,
            });
        }
        for (c, at) in other.converged_at.iter().enumerate() {
            let column = column_map[c];
            if self.converged_at[column].is_none() {
                self.converged_at[column] = at.map(|i| i + iter_offset);
            }
        }
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Number of completed iterations.
    pub fn iterations(&self) -> usize {
        self.records.iter().map(|r| r.iter).max().unwrap_or(0)
    }

    /// Iterations until every column met the tolerance.
    pub fn iterations_to_tol(&self) -> Option<usize> {
        self.converged_at.iter().try_fold(0, |m, c| c.map(|c| m.max(c)))
    }

    /// Residuals of one column, in iteration order.
    pub fn column(&self, column: usize) -> Vec<(usize, f64)> {
        self.records.iter().filter(|r| r.column == column).map(|r| (r.iter, r.relative_residual)).collect()
    }

    /// Largest residual over the columns at each iteration.
    pub fn max_per_iteration(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for r in &self.records {
            match out.iter_mut().find(|(i, _)| *i == r.iter) {
                Some((_, m)) => *m = m.max(r.relative_residual),
                None => out.push((r.iter, r.relative_residual)),
            }
        }
        out
    }

    /// Last recorded residual of each column.
    pub fn final_residuals(&self) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.columns];
        for r in &self.records {
            out[r.column] = r.relative_residual;
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,column,relative_residual,elapsed_seconds,method")?;
        for r in &self.records {
            writeln!(w, "{},{},{:e},{:e},{}", r.iter, r.column, r.relative_residual, r.elapsed_seconds, self.method)?;
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut h = ConvergenceHistory::new(Method::GCR, 1);
        h.push(0, &[1e-20], 0.0, 1e-14);
        h.status = SolveStatus::Converged;
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "iter,column,relative_residual,elapsed_seconds,method");
        assert_eq!(lines[1], "0,0,1e-20,0e0,gcr");
        assert_eq!(h.iterations_to_tol(), Some(0));
    }

    #[test]
    fn iterations_to_tol_needs_every_column() {
        let mut h = ConvergenceHistory::new(Method::BlockGCR, 2);
        h.push(0, &[1.0, 1.0], 0.0, 1e-3);
        h.push(1, &[1e-4, 0.5], 0.0, 1e-3);
        assert_eq!(h.iterations_to_tol(), None);
        h.push(2, &[1e-5, 1e-4], 0.0, 1e-3);
        assert_eq!(h.iterations_to_tol(), Some(2));
        assert_eq!(h.max_per_iteration(), vec![(0, 1.0), (1, 0.5), (2, 1e-4)]);
        assert_eq!(h.final_residuals(), vec![1e-5, 1e-4]);
    }
}
