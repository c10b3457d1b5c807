use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PlannerError, Result};

/// One control step. Column order is the serialized field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub px: f64,
    pub py: f64,
    pub heading: f64,
    pub yaw_rate: f64,
    pub speed: f64,
    pub ax: f64,
    pub ay: f64,
    pub jx: f64,
    pub jy: f64,
    pub maneuver: i8,
    pub target_lane: usize,
    pub lane: usize,
    /// Center distance to the nearest vehicle ahead in the ego lane.
    pub headway: Option<f64>,
    pub headway_id: Option<u32>,
    pub min_barrier: Option<f64>,
    /// `id:h` pairs for every perceived vehicle, `;` separated.
    pub barriers: String,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub fault: bool,
    pub collision: bool,
}

impl TraceRow {
    pub fn barrier_of(&self, id: u32) -> Option<f64> {
        self.barriers.split(';').filter(|s| !s.is_empty()).find_map(|pair| {
            let (i, h) = pair.split_once(':')?;
            (i.parse::<u32>().ok()? == id).then(|| h.parse().ok()).flatten()
        })
    }
}

pub fn format_barriers(values: &[(u32, f64)]) -> String {
    values.iter().map(|(id, h)| format!("{id}:{h:.6}")).collect::<Vec<_>>().join(";")
}

pub fn trace_to_string(rows: &[TraceRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(TRACE_COLUMNS).map_err(|e| PlannerError::Config(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| PlannerError::Config(format!("trace serialization: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| PlannerError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub const TRACE_COLUMNS: [&str; 23] = [
    "step", "time", "px", "py", "heading", "yaw_rate", "speed", "ax", "ay", "jx", "jy", "maneuver", "target_lane", "lane",
    "headway", "headway_id", "min_barrier", "barriers", "iterations", "converged", "residual", "fault", "collision",
];

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let text = trace_to_string(rows)?;
    std::fs::write(path, text).map_err(|source| PlannerError::Io { path: path.display().to_string(), source })
}

pub fn parse_trace(text: &str, origin: &str) -> Result<Vec<TraceRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| PlannerError::Parse { path: origin.into(), line: 1, msg: e.to_string() })?
        .clone();
    if headers.iter().ne(TRACE_COLUMNS.iter().copied()) {
        return Err(PlannerError::Parse { path: origin.into(), line: 1, msg: "not a trace file (unexpected header)".into() });
    }
    reader
        .deserialize()
        .map(|r| {
            r.map_err(|e: csv::Error| PlannerError::Parse {
                path: origin.into(),
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })
        })
        .collect()
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| PlannerError::Io { path: path.display().to_string(), source })?;
    parse_trace(&text, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub v_mean: f64,
    pub j_mean: f64,
    pub j_max: f64,
    pub p_d: f64,
    pub min_headway: Option<f64>,
    /// Jerk of the executed motion, from differences of the recorded acceleration.
    pub realized_j_mean: f64,
    pub realized_j_max: f64,
    pub collisions: usize,
    pub faults: usize,
    pub steps: usize,
}

/// Summary of a trace. `dt` is the control period.
pub fn compute_metrics(rows: &[TraceRow], dt: f64) -> Metrics {
    let n = rows.len();
    let mean = |f: &dyn Fn(&TraceRow) -> f64| if n == 0 { 0.0 } else { rows.iter().map(f).sum::<f64>() / n as f64 };
    let switches = rows.windows(2).filter(|w| w[0].target_lane != w[1].target_lane).count();
    let realized: Vec<f64> = rows.windows(2).map(|w| ((w[1].ax - w[0].ax) / dt).abs()).collect();
    Metrics {
        v_mean: mean(&|r| r.speed),
        j_mean: mean(&|r| r.jx.abs()),
        j_max: rows.iter().map(|r| r.jx.abs()).fold(0.0, f64::max),
        p_d: if n > 1 { 100.0 * switches as f64 / (n - 1) as f64 } else { 0.0 },
        min_headway: rows.iter().filter_map(|r| r.headway).reduce(f64::min),
        realized_j_mean: if realized.is_empty() { 0.0 } else { realized.iter().sum::<f64>() / realized.len() as f64 },
        realized_j_max: realized.iter().copied().fold(0.0, f64::max),
        collisions: rows.iter().filter(|r| r.collision).count(),
        faults: rows.iter().filter(|r| r.fault).count(),
        steps: n,
    }
}

/// Control period recovered from the time column (`time = (step + 1) * dt`).
pub fn trace_period(rows: &[TraceRow]) -> Option<f64> {
    rows.first().map(|r| r.time / (r.step + 1) as f64)
}
