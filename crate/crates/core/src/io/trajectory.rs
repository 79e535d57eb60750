//! Trajectory persistence.
//!
//! The CSV layout is a block of `# key=value` header lines, a column header
//! `t,agent,x_0,...,x_{d-1},alpha`, then one row per agent per recorded state.
//! `alpha` is the stubbornness applied to leave that state, empty on the last
//! state. Floats use the shortest representation that parses back to the same
//! bits. Metrics, events, violations and the stop reason go to a JSON sidecar
//! next to the CSV.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::initial::csv_error;
use crate::dynamics::{
    OpinionState, Schedule, StopReason, Trajectory, TrajectoryHeader, Violation, FORMAT_VERSION,
};
use crate::error::{HkError, Result};
use crate::monitors::StepMetrics;
use crate::profile::MergeEvent;

const MAGIC: &str = "# mixed-hk trajectory";

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    metrics: Vec<StepMetrics>,
    events: Vec<MergeEvent>,
    violations: Vec<Violation>,
    stop: Option<StopReason>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Writes the CSV and its sidecar.
pub fn write_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let h = &traj.header;
    let mut out = Vec::new();
    let schedule = serde_json::to_string(&h.schedule)?;
    let first_t = traj.states.first().map_or(0, OpinionState::t);
    let header = format!(
        "{MAGIC}\n# format_version={}\n# n={}\n# d={}\n# epsilon={}\n# seed={}\n# consensus_tol={}\n# t0={first_t}\n# states={}\n# schedule={schedule}\n",
        h.format_version,
        h.n,
        h.d,
        fmt_f64(h.epsilon),
        h.seed,
        fmt_f64(h.consensus_tol),
        traj.states.len(),
    );
    out.extend_from_slice(header.as_bytes());
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let mut cols = vec!["t".to_string(), "agent".to_string()];
        cols.extend((0..h.d).map(|k| format!("x_{k}")));
        cols.push("alpha".into());
        w.write_record(&cols).map_err(|e| csv_error(path, e))?;
        for (k, state) in traj.states.iter().enumerate() {
            for i in 0..state.n() {
                let mut rec = vec![state.t().to_string(), i.to_string()];
                rec.extend(state.opinion(i).iter().map(|&v| fmt_f64(v)));
                rec.push(traj.alphas.get(k).map_or(String::new(), |a| fmt_f64(a[i])));
                w.write_record(&rec).map_err(|e| csv_error(path, e))?;
            }
        }
        w.flush().map_err(|e| HkError::io(path, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| HkError::io(path, e))?;
    f.write_all(&out).map_err(|e| HkError::io(path, e))?;
    let side = Sidecar {
        format_version: h.format_version,
        metrics: traj.metrics.clone(),
        events: traj.events.clone(),
        violations: traj.violations.clone(),
        stop: traj.stop,
    };
    let side_path = sidecar_path(path);
    fs::write(&side_path, serde_json::to_vec(&side)?).map_err(|e| HkError::io(&side_path, e))
}

struct RawHeader {
    version: u32,
    n: usize,
    d: usize,
    epsilon: f64,
    seed: u64,
    consensus_tol: f64,
    t0: u64,
    states: usize,
    schedule: Schedule,
}

fn parse_header(path: &Path, lines: &[&str]) -> Result<RawHeader> {
    let bad = |m: String| HkError::integrity(path, m);
    if lines.first() != Some(&MAGIC) {
        return Err(bad("missing trajectory magic line".into()));
    }
    let get = |key: &str| -> Result<&str> {
        let prefix = format!("# {key}=");
        lines
            .iter()
            .find_map(|l| l.strip_prefix(prefix.as_str()))
            .ok_or_else(|| bad(format!("header lacks `{key}`")))
    };
    fn num<T: std::str::FromStr>(path: &Path, key: &str, v: &str) -> Result<T> {
        v.trim().parse().map_err(|_| HkError::integrity(path, format!("header `{key}` has bad value {v:?}")))
    }
    let version: u32 = num(path, "format_version", get("format_version")?)?;
    if version != FORMAT_VERSION {
        return Err(bad(format!("format version {version} is not supported (expected {FORMAT_VERSION})")));
    }
    Ok(RawHeader {
        version,
        n: num(path, "n", get("n")?)?,
        d: num(path, "d", get("d")?)?,
        epsilon: num(path, "epsilon", get("epsilon")?)?,
        seed: num(path, "seed", get("seed")?)?,
        consensus_tol: num(path, "consensus_tol", get("consensus_tol")?)?,
        t0: num(path, "t0", get("t0")?)?,
        states: num(path, "states", get("states")?)?,
        schedule: serde_json::from_str(get("schedule")?)
            .map_err(|e| bad(format!("header `schedule` is not valid: {e}")))?,
    })
}

/// Reads a CSV written by [`write_trajectory`], plus its sidecar when present.
pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HkError::io(path, e))?;
    let header_lines: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    let h = parse_header(path, &header_lines)?;
    let body_start: usize = header_lines.iter().map(|l| l.len() + 1).sum();
    let first_data_line = header_lines.len() + 2;

    let mut reader = csv::ReaderBuilder::new().from_reader(&text.as_bytes()[body_start.min(text.len())..]);
    let cols = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut expected = vec!["t".to_string(), "agent".to_string()];
    expected.extend((0..h.d).map(|k| format!("x_{k}")));
    expected.push("alpha".into());
    if cols.iter().ne(expected.iter().map(String::as_str)) {
        return Err(HkError::integrity(path, format!("column header should be {}", expected.join(","))));
    }

    let mut states = Vec::with_capacity(h.states);
    let mut alphas = Vec::new();
    let mut coords = Vec::with_capacity(h.n * h.d);
    let mut alpha = Vec::with_capacity(h.n);
    for (row, record) in reader.records().enumerate() {
        let line = first_data_line + row;
        let corrupt = |m: String| HkError::integrity(path, format!("row {line}: {m}"));
        let record = record.map_err(|e| corrupt(e.to_string()))?;
        let (k, i) = (row / h.n.max(1), row % h.n.max(1));
        if k >= h.states {
            return Err(corrupt(format!("more rows than the {} declared states", h.states)));
        }
        let want_t = h.t0 + k as u64;
        if record.get(0).and_then(|s| s.parse::<u64>().ok()) != Some(want_t)
            || record.get(1).and_then(|s| s.parse::<usize>().ok()) != Some(i)
        {
            return Err(corrupt(format!("expected t = {want_t}, agent = {i}")));
        }
        for c in 0..h.d {
            let field = &record[2 + c];
            coords.push(field.parse::<f64>().map_err(|_| corrupt(format!("bad coordinate {field:?}")))?);
        }
        let a = &record[2 + h.d];
        let last = k + 1 == h.states;
        match (a.is_empty(), last) {
            (true, true) => {}
            (false, false) => alpha.push(a.parse::<f64>().map_err(|_| corrupt(format!("bad alpha {a:?}")))?),
            (true, false) => return Err(corrupt("missing alpha".into())),
            (false, true) => return Err(corrupt("alpha on the final state".into())),
        }
        if i + 1 == h.n {
            let x = std::mem::replace(&mut coords, Vec::with_capacity(h.n * h.d));
            states.push(OpinionState::new(want_t, h.d, h.epsilon, x).map_err(|e| corrupt(e.to_string()))?);
            if !last {
                alphas.push(std::mem::replace(&mut alpha, Vec::with_capacity(h.n)));
            }
        }
    }
    if states.len() != h.states || !coords.is_empty() {
        return Err(HkError::integrity(
            path,
            format!("truncated: {} of {} declared states present", states.len(), h.states),
        ));
    }

    let side_path = sidecar_path(path);
    let side: Sidecar = match fs::read(&side_path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map_err(|e| HkError::integrity(&side_path, format!("sidecar is not valid: {e}")))?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Sidecar { format_version: h.version, ..Default::default() },
        Err(e) => return Err(HkError::io(&side_path, e)),
    };
    if side.format_version != h.version {
        return Err(HkError::integrity(&side_path, "sidecar format version differs from the CSV"));
    }
    Ok(Trajectory {
        header: TrajectoryHeader {
            format_version: h.version,
            n: h.n,
            d: h.d,
            epsilon: h.epsilon,
            seed: h.seed,
            consensus_tol: h.consensus_tol,
            schedule: h.schedule,
        },
        states,
        alphas,
        metrics: side.metrics,
        events: side.events,
        violations: side.violations,
        stop: side.stop,
    })
}

pub fn write_trajectory_json(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, serde_json::to_vec(traj)?).map_err(|e| HkError::io(path, e))
}

pub fn read_trajectory_json(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| HkError::io(path, e))?;
    let traj: Trajectory =
        serde_json::from_slice(&bytes).map_err(|e| HkError::integrity(path, format!("not a trajectory: {e}")))?;
    if traj.header.format_version != FORMAT_VERSION {
        return Err(HkError::integrity(path, format!("format version {} is not supported", traj.header.format_version)));
    }
    if traj.alphas.len() + 1 != traj.states.len() && !(traj.states.is_empty() && traj.alphas.is_empty()) {
        return Err(HkError::integrity(path, "alpha rows do not match the state count"));
    }
    Ok(traj)
}

/// Dispatches on the extension: `.json` is the single-file JSON form, anything
/// else is CSV plus sidecar.
pub fn read_any(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "json") {
        read_trajectory_json(path)
    } else {
        read_trajectory(path)
    }
}
