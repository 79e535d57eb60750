use std::path::Path;

use crate::dynamics::OpinionState;
use crate::error::{HkError, Result};

/// Reads `agent,coord_0,...,coord_{d-1}` rows; agents must appear in order.
pub fn read_initial_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let d = headers.len().saturating_sub(1);
    let expected: Vec<String> =
        std::iter::once("agent".to_string()).chain((0..d).map(|k| format!("coord_{k}"))).collect();
    if d == 0 || headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(HkError::Parse { line: 1, message: format!("expected header {}", expected.join(",")) });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse = |s: &str| s.trim().parse::<f64>();
        let agent: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| HkError::Parse { line, message: format!("bad agent index {:?}", &record[0]) })?;
        if agent != rows.len() {
            return Err(HkError::Parse { line, message: format!("expected agent {}, found {agent}", rows.len()) });
        }
        let row = record
            .iter()
            .skip(1)
            .map(|s| parse(s).map_err(|_| HkError::Parse { line, message: format!("bad coordinate {s:?}") }))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(HkError::Parse { line: 2, message: "no agents".into() });
    }
    Ok(rows)
}

pub fn write_initial_csv(path: impl AsRef<Path>, state: &OpinionState) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["agent".to_string()];
    header.extend((0..state.d()).map(|k| format!("coord_{k}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (i, x) in state.opinions().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(x.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| HkError::io(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> HkError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HkError::io(path, io),
        kind => HkError::Parse { line, message: format!("{kind:?}") },
    }
}
