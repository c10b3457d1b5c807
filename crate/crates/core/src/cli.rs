//! Command-line front end: `run`, `metrics` and `export-plots`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::{PlannerError, Result};
use crate::sim::{compute_metrics, offsets_for, read_trace, run_closed_loop, trace_period, write_trace, Metrics, ScenarioConfig, TraceRow};

#[derive(Debug, Parser)]
#[command(name = "barrier-planner", version, about = "Closed-loop parallel trajectory planner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write trace.csv, metrics.json and solver_stats.json.
    Run(RunManifest),
    /// Summarize one or more traces.
    Metrics {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write plot-ready CSV files (headway, jerk, path) for one trace.
    ExportPlots {
        trace: PathBuf,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunManifest {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of candidate trajectories.
    #[arg(long)]
    pub nc: Option<usize>,
    /// Horizon length in steps.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long = "duration-s")]
    pub duration_s: Option<f64>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub relaxation: Option<f64>,
    /// Sets all five penalty weights.
    #[arg(long)]
    pub penalty: Option<f64>,
}

impl RunManifest {
    /// Load the scenario and apply overrides; errors here are configuration errors.
    pub fn scenario_config(&self) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::resolve(&self.scenario).map_err(|e| match e {
            PlannerError::Io { path, source } => PlannerError::Config(format!("cannot read scenario {path}: {source}")),
            other => other,
        })?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(nc) = self.nc {
            if nc == 0 {
                return Err(PlannerError::Config("--nc must be at least 1".into()));
            }
            cfg.planner.delta_y = offsets_for(nc);
        }
        if let Some(n) = self.horizon {
            cfg.planner.steps = n;
        }
        if let Some(d) = self.duration_s {
            cfg.duration_s = d;
        }
        if let Some(a) = self.alpha0 {
            cfg.planner.alpha0 = a;
        }
        if let Some(r) = self.relaxation {
            cfg.planner.solver.relaxation = r;
        }
        if let Some(p) = self.penalty {
            let pen = &mut cfg.planner.solver.penalties;
            (pen.theta, pen.x, pen.y, pen.obs_x, pen.obs_y) = (p, p, p, p, p);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> PlannerError + '_ {
    move |source| PlannerError::Io { path: path.display().to_string(), source }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| PlannerError::Config(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

/// Outcome of a command: exit code plus the message printed on failure.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<PlannerError> for Failure {
    fn from(e: PlannerError) -> Self {
        let code = match e {
            PlannerError::Config(_) | PlannerError::Parse { .. } | PlannerError::Io { .. } => 2,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

pub fn cmd_run(manifest: &RunManifest) -> std::result::Result<Metrics, Failure> {
    let cfg = manifest.scenario_config()?;
    let out = run_closed_loop(&cfg)?;
    std::fs::create_dir_all(&manifest.out).map_err(io_err(&manifest.out)).map_err(Failure::from)?;
    write_trace(&manifest.out.join("trace.csv"), &out.trace)?;
    write_json(&manifest.out.join("metrics.json"), &out.metrics)?;
    write_json(&manifest.out.join("solver_stats.json"), &out.stats)?;
    if out.stats.fault_rate > cfg.max_fault_rate {
        return Err(Failure {
            code: 1,
            message: format!(
                "solver fault rate {:.1}% exceeds the allowed {:.1}%",
                100.0 * out.stats.fault_rate,
                100.0 * cfg.max_fault_rate
            ),
        });
    }
    Ok(out.metrics)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub trace: String,
    #[serde(flatten)]
    pub metrics: Metrics,
}

pub fn metrics_for(path: &Path) -> Result<Metrics> {
    let rows = read_trace(path)?;
    Ok(compute_metrics(&rows, trace_period(&rows).unwrap_or(1.0)))
}

pub fn cmd_metrics(traces: &[PathBuf]) -> Result<Vec<MetricsRow>> {
    traces
        .iter()
        .map(|p| Ok(MetricsRow { trace: p.display().to_string(), metrics: metrics_for(p)? }))
        .collect()
}

pub fn metrics_table(rows: &[MetricsRow]) -> String {
    let mut out = format!("{:<40} {:>8} {:>8} {:>8} {:>8}\n", "trace", "V_mean", "J_mean", "J_max", "P_d");
    for r in rows {
        let m = &r.metrics;
        out.push_str(&format!("{:<40} {:>8.2} {:>8.2} {:>8.2} {:>8.2}\n", r.trace, m.v_mean, m.j_mean, m.j_max, m.p_d));
    }
    out
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| PlannerError::Config(format!("{}: {e}", path.display())))?;
    let wrap = |e: csv::Error| PlannerError::Config(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `headway.csv`, `jerk.csv` and `path.csv` into `out`.
pub fn cmd_export_plots(trace: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let rows: Vec<TraceRow> = read_trace(trace)?;
    let dt = trace_period(&rows).unwrap_or(1.0);
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let files = [out.join("headway.csv"), out.join("jerk.csv"), out.join("path.csv")];
    write_csv(
        &files[0],
        &["time", "headway", "headway_id", "min_barrier"],
        rows.iter().map(|r| {
            vec![r.time.to_string(), opt(r.headway), r.headway_id.map(|i| i.to_string()).unwrap_or_default(), opt(r.min_barrier)]
        }),
    )?;
    write_csv(
        &files[1],
        &["time", "jx", "jy", "realized_jx"],
        rows.iter().enumerate().map(|(i, r)| {
            let realized = if i == 0 { None } else { Some((r.ax - rows[i - 1].ax) / dt) };
            vec![r.time.to_string(), r.jx.to_string(), r.jy.to_string(), opt(realized)]
        }),
    )?;
    write_csv(
        &files[2],
        &["time", "px", "py", "speed", "lane"],
        rows.iter().map(|r| vec![r.time.to_string(), r.px.to_string(), r.py.to_string(), r.speed.to_string(), r.lane.to_string()]),
    )?;
    Ok(files.to_vec())
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("PLANNER_LOG", "warn")).init();
    let cli = Cli::parse();
    let result: std::result::Result<(), Failure> = match &cli.command {
        Command::Run(m) => cmd_run(m).map(|metrics| {
            println!(
                "V_mean {:.2} m/s  J_mean {:.3}  J_max {:.3}  P_d {:.2}%  collisions {}  faults {}",
                metrics.v_mean, metrics.j_mean, metrics.j_max, metrics.p_d, metrics.collisions, metrics.faults
            );
            println!("outputs in {}", m.out.display());
        }),
        Command::Metrics { traces, json } => (|| -> Result<()> {
            let rows = cmd_metrics(traces)?;
            print!("{}", metrics_table(&rows));
            if let Some(path) = json {
                write_json(path, &rows)?;
            }
            Ok(())
        })()
        .map_err(Failure::from),
        Command::ExportPlots { trace, out } => cmd_export_plots(trace, out).map(|files| {
            for f in files {
                println!("{}", f.display());
            }
        }).map_err(Failure::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
