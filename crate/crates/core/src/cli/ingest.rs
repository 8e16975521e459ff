//! CSV ingestion of rectangle measurements.

use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Observation, ObservationSet};

/// Column layout of an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    /// `width,height`: full rectangle width, converted as `z = (width/2)²`.
    Width,
    /// `z,h`: squared half-width and height.
    Z,
}

impl Schema {
    fn columns(self) -> (&'static str, &'static str) {
        match self {
            Schema::Width => ("width", "height"),
            Schema::Z => ("z", "h"),
        }
    }

    fn to_z(self, first: f64) -> f64 {
        match self {
            Schema::Width => 0.25 * first * first,
            Schema::Z => first,
        }
    }
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "width" => Ok(Schema::Width),
            "z" => Ok(Schema::Z),
            other => Err(Error::Config(format!("unknown schema `{other}` (expected width or z)"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub rows: usize,
    /// 1-based file line numbers of rejected rows.
    pub rejected_lines: Vec<usize>,
}

impl IngestReport {
    pub fn accepted(&self) -> usize {
        self.rows - self.rejected_lines.len()
    }
}

pub fn ingest(path: &Path, schema: Schema) -> Result<(ObservationSet, IngestReport)> {
    ingest_reader(File::open(path)?, schema)
}

/// Reads a comma-separated table with a header row. Extra columns are
/// ignored; rows that fail to parse or hold non-positive values are
/// rejected and reported by line number.
pub fn ingest_reader<R: Read>(reader: R, schema: Schema) -> Result<(ObservationSet, IngestReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let (a, b) = schema.columns();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                Error::Schema(format!(
                    "missing column `{name}` for the {schema:?} schema (header: {})",
                    headers.iter().collect::<Vec<_>>().join(",")
                ))
            })
    };
    let (ia, ib) = (find(a)?, find(b)?);

    let mut report = IngestReport::default();
    let mut items = Vec::new();
    for record in rdr.records() {
        report.rows += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(report.rows + 1, |p| p.line() as usize);
                warn!("line {line}: {e}");
                report.rejected_lines.push(line);
                continue;
            }
        };
        let line = record.position().map_or(report.rows + 1, |p| p.line() as usize);
        let parsed = (|| {
            let first: f64 = record.get(ia)?.parse().ok()?;
            let h: f64 = record.get(ib)?.parse().ok()?;
            Observation::new(schema.to_z(first), h).ok()
        })();
        match parsed {
            Some(o) => items.push(o),
            None => {
                warn!("line {line}: rejected row {:?}", record.iter().collect::<Vec<_>>());
                report.rejected_lines.push(line);
            }
        }
    }
    if items.is_empty() {
        return Err(Error::EmptyObservationSet {
            rejected: report.rejected_lines.len(),
        });
    }
    if !report.rejected_lines.is_empty() {
        warn!(
            "rejected {} of {} rows (lines {:?})",
            report.rejected_lines.len(),
            report.rows,
            report.rejected_lines
        );
    }
    Ok((ObservationSet::new(items)?, report))
}
