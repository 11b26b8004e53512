//! CSV and JSON writers for the documented output schemas.
//!
//! | file            | columns                                   |
//! |-----------------|-------------------------------------------|
//! | edges           | `left,right,step,right_rank,left_rank`    |
//! | edges (ARW)     | the same plus `status`                    |
//! | censored stubs  | `vertex,direction,rank`                   |
//! | survival curve  | `n,survival`                              |
//! | truncated means | `metric,cutoff,truncated_mean`            |
//! | passage times   | `replication,tau_or_censored`             |

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::arw::RunStatus;
use crate::scalar::Scalar;
use crate::sprd::EdgeConfiguration;
use crate::stats::{Observation, SurvivalCurve};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| IoError::File {
            path: parent.display().to_string(),
            source,
        })?;
    }
    File::create(path).map(BufWriter::new).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Serialize)]
struct EdgeRow {
    left: i64,
    right: i64,
    step: u64,
    right_rank: u32,
    left_rank: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    status: Option<&'static str>,
}

/// Edge dump; `status` adds the ARW run-status column.
pub fn write_edges<W: Write>(out: W, edges: &EdgeConfiguration, status: Option<RunStatus>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    if edges.edges().is_empty() {
        let mut header = vec!["left", "right", "step", "right_rank", "left_rank"];
        if status.is_some() {
            header.push("status");
        }
        w.write_record(header)?;
    }
    for e in edges.edges() {
        w.serialize(EdgeRow {
            left: e.left,
            right: e.right,
            step: e.step,
            right_rank: e.right_rank,
            left_rank: e.left_rank,
            status: status.map(RunStatus::as_str),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_censored<W: Write>(out: W, edges: &EdgeConfiguration) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["vertex", "direction", "rank"])?;
    for c in edges.censored() {
        w.write_record([c.vertex.to_string(), c.direction.as_str().to_string(), c.rank.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_survival<W: Write, T: Scalar>(out: W, curve: &SurvivalCurve<T>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "survival"])?;
    for (n, s) in curve.points() {
        w.write_record([n.to_string(), s.as_f64().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `(metric, cutoff, truncated_mean)`.
pub fn write_truncated_means<W: Write>(out: W, rows: &[(String, u64, f64)]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "cutoff", "truncated_mean"])?;
    for (metric, cutoff, mean) in rows {
        w.write_record([metric.clone(), cutoff.to_string(), mean.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Passage times, `17` or `>17` for censored ones.
pub fn write_taus<W: Write>(out: W, taus: &[(usize, Observation)]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replication", "tau_or_censored"])?;
    for (rep, tau) in taus {
        w.write_record([rep.to_string(), tau.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON followed by a newline.
pub fn write_json<W: Write, S: Serialize + ?Sized>(mut out: W, value: &S) -> Result<(), IoError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
