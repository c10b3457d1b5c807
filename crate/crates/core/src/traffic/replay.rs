use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{nearest_lane, HvState};
use crate::error::{PlannerError, Result};

const COLUMNS: [&str; 5] = ["vehicle_id", "frame", "x_m", "y_m", "speed_mps"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordedSample {
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
}

/// Time-indexed samples of one recorded vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedTrack {
    pub id: u32,
    pub samples: Vec<RecordedSample>,
}

impl RecordedTrack {
    pub fn start(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.time)
    }

    pub fn end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.time)
    }

    /// Linear interpolation of position and velocity at `t`; `None` outside the recorded span.
    pub fn at(&self, t: f64) -> Option<(f64, f64, f64, f64)> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].time - 1e-9 || t > s[s.len() - 1].time + 1e-9 {
            return None;
        }
        if s.len() == 1 {
            return Some((s[0].x, s[0].y, s[0].speed, 0.0));
        }
        let i = s.partition_point(|p| p.time <= t).clamp(1, s.len() - 1);
        let (a, b) = (&s[i - 1], &s[i]);
        let span = b.time - a.time;
        let w = ((t - a.time) / span).clamp(0.0, 1.0);
        let x = a.x + w * (b.x - a.x);
        let y = a.y + w * (b.y - a.y);
        Some((x, y, (b.x - a.x) / span, (b.y - a.y) / span))
    }

    /// Resample onto a uniform grid with period `dt` starting at the first sample.
    pub fn resample(&self, dt: f64) -> RecordedTrack {
        let mut samples = Vec::new();
        let mut k = 0usize;
        loop {
            let t = self.start() + k as f64 * dt;
            if t > self.end() + 1e-9 {
                break;
            }
            let (x, y, vx, vy) = self.at(t).expect("inside span");
            let speed = if self.samples.len() == 1 { self.samples[0].speed } else { vx.hypot(vy) };
            samples.push(RecordedSample { time: t, x, y, speed });
            k += 1;
        }
        RecordedTrack { id: self.id, samples }
    }
}

pub fn load_recorded_csv(path: &Path, frame_period: f64) -> Result<Vec<RecordedTrack>> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| PlannerError::Io { path: path.display().to_string(), source })?;
    parse_recorded_csv(&text, frame_period, &path.display().to_string())
}

/// Parse recorded tracks; `origin` names the source in errors.
pub fn parse_recorded_csv(text: &str, frame_period: f64, origin: &str) -> Result<Vec<RecordedTrack>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let err = |line: u64, msg: String| PlannerError::Parse { path: origin.to_string(), line, msg };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let mut index = [0usize; 5];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| err(1, format!("missing column `{name}`")))?;
    }

    let mut tracks: BTreeMap<u32, (i64, Vec<RecordedSample>)> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<&str> {
            record.get(index[i]).ok_or_else(|| err(line, format!("missing value for `{}`", COLUMNS[i])))
        };
        let num = |i: usize| -> Result<f64> {
            let raw = field(i)?;
            let v: f64 = raw.parse().map_err(|_| err(line, format!("`{}` is not a number: {raw:?}", COLUMNS[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(line, format!("`{}` is not finite", COLUMNS[i])))
            }
        };
        let id: u32 = field(0)?.parse().map_err(|_| err(line, "`vehicle_id` is not an integer".into()))?;
        let frame: i64 = field(1)?.parse().map_err(|_| err(line, "`frame` is not an integer".into()))?;
        let sample = RecordedSample { time: frame as f64 * frame_period, x: num(2)?, y: num(3)?, speed: num(4)? };
        let entry = tracks.entry(id).or_insert((i64::MIN, Vec::new()));
        if frame <= entry.0 {
            return Err(err(line, format!("frame {frame} of vehicle {id} is not after frame {}", entry.0)));
        }
        entry.0 = frame;
        entry.1.push(sample);
    }
    Ok(tracks.into_iter().map(|(id, (_, samples))| RecordedTrack { id, samples }).collect())
}

/// Write tracks in the recorded-traffic schema, frames counted in `frame_period` units.
pub fn write_recorded_csv(tracks: &[RecordedTrack], frame_period: f64) -> String {
    let mut out = String::from("vehicle_id,frame,x_m,y_m,speed_mps\n");
    for t in tracks {
        for s in &t.samples {
            let frame = (s.time / frame_period).round() as i64;
            out.push_str(&format!("{},{},{},{},{}\n", t.id, frame, s.x, s.y, s.speed));
        }
    }
    out
}

/// Open-loop playback of recorded tracks.
#[derive(Debug, Clone)]
pub struct ReplayWorld {
    pub tracks: Vec<RecordedTrack>,
    pub lane_centers: Vec<f64>,
    pub time: f64,
}

impl ReplayWorld {
    pub fn new(tracks: Vec<RecordedTrack>, lane_centers: Vec<f64>, start_time: f64) -> Self {
        Self { tracks, lane_centers, time: start_time }
    }

    pub fn states(&self) -> Vec<HvState> {
        self.tracks
            .iter()
            .filter_map(|tr| {
                tr.at(self.time).map(|(x, y, vx, vy)| {
                    let mut hv = HvState::new(tr.id, x, y, 0.0, nearest_lane(y, &self.lane_centers));
                    hv.vx = vx;
                    hv.vy = vy;
                    hv
                })
            })
            .collect()
    }

    pub fn step(&mut self, dt: f64) {
        self.time += dt;
    }
}
