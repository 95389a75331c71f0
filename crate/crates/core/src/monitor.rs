//! Phase II monitoring of a TBE series and the plain-text series format.
//!
//! A series file holds one positive value per line. Blank lines and lines
//! starting with `#` are skipped.

use serde::Serialize;

use crate::error::{ChartError, Result};
use crate::known::{ChartDesign, PointStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorRecord {
    /// 1-based position in the series.
    pub index: usize,
    pub tbe_value: f64,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    pub lcl: f64,
    pub ucl: f64,
    pub records: Vec<MonitorRecord>,
    pub first_signal: Option<usize>,
    pub signals: usize,
}

pub fn monitor(design: &ChartDesign, series: &[f64]) -> MonitorReport {
    let records: Vec<MonitorRecord> = series
        .iter()
        .enumerate()
        .map(|(i, &x)| MonitorRecord {
            index: i + 1,
            tbe_value: x,
            status: design.classify(x),
        })
        .collect();
    let first_signal = records.iter().find(|r| r.status.is_signal()).map(|r| r.index);
    let signals = records.iter().filter(|r| r.status.is_signal()).count();
    MonitorReport {
        lcl: design.lcl,
        ucl: design.ucl,
        records,
        first_signal,
        signals,
    }
}

/// Parses a series, failing on the first bad line with its 1-based number.
pub fn parse_series(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| ChartError::DataLine {
            line: i + 1,
            reason: format!("not a number: {line:?}"),
        })?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(ChartError::DataLine {
                line: i + 1,
                reason: format!("time between events must be positive, got {value}"),
            });
        }
        out.push(value);
    }
    Ok(out)
}
