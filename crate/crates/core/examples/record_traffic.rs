//! Regenerates `scenarios/recorded_traffic.csv`: car-following traffic on five
//! 4 m lanes, sampled every 0.1 s in the recorded-traffic schema.
//!
//! cargo run --example record_traffic -- crates/core/scenarios/recorded_traffic.csv

use barrier_planner::traffic::{write_recorded_csv, IdmParams, IdmSpawn, IdmWorld, RecordedSample, RecordedTrack};
use std::collections::BTreeMap;

fn main() -> std::io::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "recorded_traffic.csv".into());
    let period = 0.1;
    let frames = 300;
    let spawn = IdmSpawn {
        count: 40,
        window: (-40.0, 480.0),
        initial_speed: (9.0, 15.0),
        desired_speed: (10.0, 17.0),
        lanes: vec![0, 1, 2, 3, 4],
        min_spacing: 22.0,
        ego_clearance: 15.0,
        recycle: false,
        base: IdmParams::default(),
    };
    let mut world = IdmWorld::populate(vec![-8.0, -4.0, 0.0, 4.0, 8.0], 4.0, spawn, 2024, (0.0, 0.0));
    let mut tracks: BTreeMap<u32, Vec<RecordedSample>> = BTreeMap::new();
    for frame in 0..=frames {
        for hv in world.states() {
            let s = RecordedSample { time: frame as f64 * period, x: round(hv.x), y: round(hv.y), speed: round(hv.speed()) };
            tracks.entry(hv.id).or_default().push(s);
        }
        world.step(period, None);
    }
    let tracks: Vec<RecordedTrack> = tracks.into_iter().map(|(id, samples)| RecordedTrack { id, samples }).collect();
    std::fs::write(&path, write_recorded_csv(&tracks, period))?;
    println!("{} vehicles, {} frames -> {path}", tracks.len(), frames + 1);
    Ok(())
}

fn round(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}
