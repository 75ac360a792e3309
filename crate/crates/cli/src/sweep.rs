//! One-parameter sweeps over a dotted path into the resolved configuration.

use rayon::prelude::*;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::run::Protocol;

/// Parses a comma-separated list; each entry is read as JSON, falling back to a bare string.
pub fn parse_values(raw: &str) -> Vec<Value> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string())))
        .collect()
}

fn slot<'a>(root: &'a mut Value, path: &str) -> Option<&'a mut Value> {
    path.split('.').try_fold(root, |node, key| node.as_object_mut()?.get_mut(key))
}

/// Fails unless `path` names an existing field of the resolved configuration.
pub fn check_path(base: &RunConfig, path: &str) -> Result<(), CliError> {
    let mut v = serde_json::to_value(base).map_err(|e| CliError::Config(e.to_string()))?;
    slot(&mut v, path)
        .map(|_| ())
        .ok_or_else(|| CliError::Config(format!("sweep parameter '{path}' does not resolve in the configuration")))
}

pub fn with_value(base: &RunConfig, path: &str, value: &Value) -> Result<RunConfig, CliError> {
    let mut v = serde_json::to_value(base).map_err(|e| CliError::Config(e.to_string()))?;
    let target = slot(&mut v, path)
        .ok_or_else(|| CliError::Config(format!("sweep parameter '{path}' does not resolve in the configuration")))?;
    *target = value.clone();
    serde_json::from_value(v).map_err(|e| CliError::Config(format!("{path} = {value}: {e}")))
}

pub fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub struct SweepPoint {
    pub value: Value,
    pub result: Result<Vec<Vec<String>>, CliError>,
}

/// Runs every point concurrently; points come back ordered by value when all
/// values are numeric, otherwise in input order.
pub fn run_sweep(base: &RunConfig, protocol: Protocol, path: &str, values: &[Value]) -> Result<Vec<SweepPoint>, CliError> {
    check_path(base, path)?;
    let mut points: Vec<SweepPoint> = values
        .par_iter()
        .map(|value| {
            let result = with_value(base, path, value).and_then(|cfg| protocol.run(&cfg)).map(|o| o.summary);
            SweepPoint { value: value.clone(), result }
        })
        .collect();
    if points.iter().all(|p| p.value.is_number()) {
        points.sort_by(|a, b| a.value.as_f64().unwrap().total_cmp(&b.value.as_f64().unwrap()));
    }
    Ok(points)
}

/// Merged CSV: `value`, `status`, then the protocol's summary columns.
pub fn sweep_csv(protocol: Protocol, points: &[SweepPoint]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        let header = protocol.summary_header();
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(["value", "status"].iter().chain(header.iter())).map_err(io)?;
        for p in points {
            let label = value_label(&p.value);
            match &p.result {
                Ok(rows) => {
                    for row in rows {
                        w.write_record([label.as_str(), "ok"].into_iter().chain(row.iter().map(String::as_str))).map_err(io)?;
                    }
                }
                Err(e) => {
                    let status = format!("error: {e}");
                    let blanks = std::iter::repeat_n("", header.len());
                    w.write_record([label.as_str(), status.as_str()].into_iter().chain(blanks)).map_err(io)?;
                }
            }
        }
        w.flush()?;
    }
    Ok(buf)
}
