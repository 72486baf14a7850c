use std::fs::File;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One logged iteration. Column order is the CSV schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub alpha: f64,
    pub primal: f64,
    pub dual: Option<f64>,
    pub gap: Option<f64>,
    pub residual_m: f64,
    pub e_k: f64,
    pub err_sum: f64,
    pub ms: u64,
}

/// Collects rows in memory and streams every `stride`-th one to CSV.
pub struct TraceLog {
    rows: Vec<TraceRow>,
    pending: Option<TraceRow>,
    writer: Option<csv::Writer<File>>,
    stride: usize,
    clock: Option<Instant>,
}

impl TraceLog {
    pub fn new(path: Option<&Path>, stride: usize, wall_clock: bool) -> Result<Self> {
        let writer = path.map(csv::Writer::from_path).transpose()?;
        Ok(Self { rows: Vec::new(), pending: None, writer, stride: stride.max(1), clock: wall_clock.then(Instant::now) })
    }

    pub fn elapsed_ms(&self) -> u64 {
        self.clock.map_or(0, |c| c.elapsed().as_millis() as u64)
    }

    /// Record a row; `force` logs it regardless of the stride.
    pub fn push(&mut self, row: TraceRow, force: bool) -> Result<()> {
        if force || row.k % self.stride == 0 {
            self.pending = None;
            if let Some(w) = &mut self.writer {
                w.serialize(&row)?;
            }
            self.rows.push(row);
        } else {
            self.pending = Some(row);
        }
        Ok(())
    }

    /// Log the last row if the stride skipped it and flush the file.
    pub fn finish(&mut self) -> Result<()> {
        if let Some(row) = self.pending.take() {
            self.push(row, true)?;
        }
        if let Some(w) = &mut self.writer {
            w.flush()?;
        }
        Ok(())
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<TraceRow> {
        self.rows
    }
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize) -> TraceRow {
        TraceRow { k, alpha: 0.5, primal: 1.0, dual: None, gap: Some(0.25), residual_m: 0.0, e_k: 0.0, err_sum: 0.0, ms: 0 }
    }

    #[test]
    fn stride_keeps_last_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut log = TraceLog::new(Some(&path), 3, false).unwrap();
        for k in 0..8 {
            log.push(row(k), false).unwrap();
        }
        log.finish().unwrap();
        let ks: Vec<usize> = log.rows().iter().map(|r| r.k).collect();
        assert_eq!(ks, vec![0, 3, 6, 7]);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("k,alpha,primal,dual,gap,residual_m,e_k,err_sum,ms\n"));
        assert_eq!(read_trace(&path).unwrap(), log.rows());
    }
}
