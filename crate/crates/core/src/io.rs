//! CSV ingestion and export, and the JSON report envelope.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Version of the JSON report layout in `schema/report.schema.json`.
pub const SCHEMA_VERSION: u32 = 1;

/// Parsed CSV with the rows that survived listwise deletion.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    /// Standardized selected columns.
    pub data: DataMatrix,
    /// Rows dropped for a missing or non-numeric selected value.
    pub dropped_rows: usize,
}

/// Resolves a selector to a header index. Names win over indices, so a
/// column literally named `"2"` is found by name.
pub fn resolve_column(headers: &[String], selector: &str) -> Result<usize> {
    if let Some(i) = headers.iter().position(|h| h == selector) {
        return Ok(i);
    }
    match selector.parse::<usize>() {
        Ok(i) if i < headers.len() => Ok(i),
        _ => Err(Error::MissingColumn(selector.to_string())),
    }
}

/// Reads a headed CSV. `selectors` picks columns by name or 0-based index;
/// `None` keeps every column. Rows with an empty or non-numeric value in a
/// selected column are dropped and counted.
pub fn ingest_csv(path: &Path, selectors: Option<&[String]>) -> Result<Ingested> {
    let headers = read_headers(path)?;
    let cols: Vec<usize> = match selectors {
        Some(sel) => sel.iter().map(|s| resolve_column(&headers, s)).collect::<Result<_>>()?,
        None => (0..headers.len()).collect(),
    };
    ingest_csv_columns(path, &cols)
}

/// Header row of a CSV file, trimmed.
pub fn read_headers(path: &Path) -> Result<Vec<String>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.display().to_string()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.headers()?.iter().map(|h| h.trim().to_string()).collect())
}

/// Like [`ingest_csv`] with already-resolved 0-based column indices.
pub fn ingest_csv_columns(path: &Path, cols: &[usize]) -> Result<Ingested> {
    let headers = read_headers(path)?;
    if cols.is_empty() {
        return Err(Error::NoColumns);
    }
    if let Some(&c) = cols.iter().find(|&&c| c >= headers.len()) {
        return Err(Error::MissingColumn(c.to_string()));
    }
    let mut reader = csv::Reader::from_path(path)?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0;
    for record in reader.records() {
        let record = record?;
        let parsed: Option<Vec<f64>> = cols
            .iter()
            .map(|&c| {
                record
                    .get(c)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .filter(|v| v.is_finite())
            })
            .collect();
        match parsed {
            Some(r) => rows.push(r),
            None => dropped += 1,
        }
    }
    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    let values = DMatrix::from_fn(rows.len(), cols.len(), |i, j| rows[i][j]);
    let names = cols.iter().map(|&c| headers[c].clone()).collect();
    Ok(Ingested {
        data: DataMatrix::new(values, names)?.standardized(),
        dropped_rows: dropped,
    })
}

/// Sidecar path for an exported CSV: the same path with a `.json` extension.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes `data` as CSV (shortest round-trip float formatting) and `meta`
/// as pretty JSON next to it. Returns the sidecar path.
pub fn export_csv<M: Serialize>(csv_path: &Path, data: &DataMatrix, meta: &M) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(csv_path)?;
    w.write_record(data.column_names())?;
    let v = data.values();
    for i in 0..data.nrows() {
        w.write_record((0..data.ncols()).map(|j| v[(i, j)].to_string()))?;
    }
    w.flush()?;
    let side = sidecar_path(csv_path);
    write_json(&side, meta)?;
    Ok(side)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(to_json_string(value)?.as_bytes())?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Wall-clock timings; only emitted when asked for, since they break
/// byte-for-byte reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
}

/// Top-level JSON document written by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<C, R> {
    pub schema_version: u32,
    pub command: String,
    /// Echo of the effective configuration.
    pub config: C,
    pub result: R,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl<C, R> Envelope<C, R> {
    pub fn new(command: impl Into<String>, config: C, result: R) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config,
            result,
            timings: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_pnl, PnlCase, PnlConfig};
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "a,b\n1,2\n2,4\n3,7\n");
        let got = ingest_csv(&p, None).unwrap();
        assert_eq!(got.data.nrows(), 3);
        assert_eq!(got.dropped_rows, 0);
        assert!(got.data.is_standardized());
        assert_eq!(got.data.column(0), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn na_row_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "a,b,c\n1,2,x\n2,NA,x\n3,7,x\n4,1,x\n");
        let sel = vec!["a".to_string(), "1".to_string()];
        let got = ingest_csv(&p, Some(&sel)).unwrap();
        assert_eq!(got.data.nrows(), 3);
        assert_eq!(got.dropped_rows, 1);
        assert_eq!(got.data.column_names(), ["a", "b"]);
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = ingest_csv(&dir.path().join("nope.csv"), None).unwrap_err();
        let p = write(&dir, "a.csv", "a,b\n1,2\n3,4\n");
        let col = ingest_csv(&p, Some(&["zz".to_string()])).unwrap_err();
        let q = write(&dir, "b.csv", "a,b\nNA,2\n,4\n");
        let rows = ingest_csv(&q, None).unwrap_err();
        let codes = [missing.exit_code(), col.exit_code(), rows.exit_code()];
        assert!(matches!(missing, Error::MissingFile(_)));
        assert!(matches!(col, Error::MissingColumn(_)));
        assert!(matches!(rows, Error::NoRows));
        assert!(codes[0] != codes[1] && codes[1] != codes[2] && codes[0] != codes[2]);
    }

    #[test]
    fn names_preferred_over_indices() {
        let headers: Vec<String> = ["1", "x"].iter().map(|s| s.to_string()).collect();
        assert_eq!(resolve_column(&headers, "1").unwrap(), 0);
        assert_eq!(resolve_column(&headers, "0").unwrap(), 0);
        assert!(resolve_column(&headers, "2").is_err());
    }

    #[test]
    fn export_ingest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PnlConfig::new(PnlCase::AllEffective, true, 2, 120, 4);
        let data = gen_pnl(&cfg).unwrap();
        let p = dir.path().join("pnl.csv");
        let side = export_csv(&p, &data, &cfg).unwrap();
        let back: PnlConfig = serde_json::from_str(&fs::read_to_string(side).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let got = ingest_csv(&p, None).unwrap();
        let expect = data.standardized();
        assert_eq!(got.data.column_names(), expect.column_names());
        assert!((got.data.values() - expect.values()).amax() < 1e-9);
    }

    #[test]
    fn envelope_round_trips() {
        let mut e = Envelope::new("demo", vec![1, 2], "ok".to_string());
        let s = to_json_string(&e).unwrap();
        assert!(!s.contains("timings"));
        let back: Envelope<Vec<i32>, String> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        e.timings = Some(Timings { total_seconds: 0.5 });
        let back: Envelope<Vec<i32>, String> = serde_json::from_str(&to_json_string(&e).unwrap()).unwrap();
        assert_eq!(back, e);
    }
}
