//! JSON Lines and CSV output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SystoleError};
use crate::torus3::FreedomReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = SystoleError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(SystoleError::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

/// Fixed CSV header of freedom reports (schema version 1).
pub const FREEDOM_CSV_HEADER: [&str; 6] = ["j", "volume", "sys1_estimate", "sys2_lower", "ratio", "flags"];

/// Flat form of a [`FreedomReport`]; flags joined with `;`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreedomRow {
    pub j: u32,
    pub volume: f64,
    pub sys1_estimate: f64,
    pub sys2_lower: f64,
    pub ratio: f64,
    pub flags: String,
}

impl From<&FreedomReport> for FreedomRow {
    fn from(r: &FreedomReport) -> Self {
        FreedomRow {
            j: r.j,
            volume: r.volume,
            sys1_estimate: r.sys1_estimate,
            sys2_lower: r.sys2_lower,
            ratio: r.ratio,
            flags: r.flags.join(";"),
        }
    }
}

impl From<FreedomRow> for FreedomReport {
    fn from(r: FreedomRow) -> Self {
        FreedomReport {
            j: r.j,
            volume: r.volume,
            sys1_estimate: r.sys1_estimate,
            sys2_lower: r.sys2_lower,
            ratio: r.ratio,
            flags: r.flags.split(';').filter(|s| !s.is_empty()).map(String::from).collect(),
        }
    }
}

/// One JSON object per line.
pub fn write_json_lines<T: Serialize, W: Write>(records: &[T], mut w: W) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| SystoleError::Io(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// CSV with a header row; `T` must serialize to a flat record.
pub fn write_csv<T: Serialize, W: Write>(records: &[T], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r).map_err(|e| SystoleError::Io(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_freedom_reports<W: Write>(reports: &[FreedomReport], format: Format, w: W) -> Result<()> {
    match format {
        Format::Json => write_json_lines(reports, w),
        Format::Csv => {
            let rows: Vec<FreedomRow> = reports.iter().map(FreedomRow::from).collect();
            write_csv(&rows, w)
        }
    }
}

pub fn read_freedom_json(text: &str) -> Result<Vec<FreedomReport>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| SystoleError::Io(e.to_string())))
        .collect()
}

pub fn read_freedom_csv(text: &str) -> Result<Vec<FreedomReport>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| SystoleError::Io(e.to_string()))?.clone();
    if header.iter().ne(FREEDOM_CSV_HEADER) {
        return Err(SystoleError::Io(format!("unexpected header {header:?}")));
    }
    rdr.deserialize::<FreedomRow>()
        .map(|r| r.map(FreedomReport::from).map_err(|e| SystoleError::Io(e.to_string())))
        .collect()
}
