//! Step-response metrics, the evaluation-trial protocol and its reports.

mod response;
mod stats;
mod trials;

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::QuadrotorState;
use crate::env::{EpisodeStatus, StepRecord};
use crate::{Error, Result};

pub use response::{overshoot, settling_time, steady_state_error};
pub use stats::{describe, quantile, BoxStats};
pub use trials::{
    evaluate_checkpoint, run_trial, run_trials, ChannelMetrics, Controller, HoverController,
    PolicyController, RandomController, Trial, TrialOptions, TrialReport, CHANNELS, DEGENERATE_STEP,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryOptions {
    /// Settling time assigned to trials that never settle, s.
    pub horizon: f64,
    /// Steady-state acceptance band, percent of step magnitude.
    pub steady_state_band: f64,
    /// Overshoot at or below this many percent counts as none.
    pub zero_overshoot_tolerance: f64,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            steady_state_band: 2.0,
            zero_overshoot_tolerance: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub channel: String,
    pub settling_time: BoxStats,
    pub overshoot: BoxStats,
    pub steady_state_error: BoxStats,
    /// Trials whose response never settled (counted at the horizon above).
    pub unsettled: usize,
    pub degenerate: usize,
    pub within_band_fraction: f64,
    pub zero_overshoot_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub trials: usize,
    pub success_fraction: f64,
    pub options: SummaryOptions,
    pub channels: Vec<ChannelSummary>,
}

impl BatchSummary {
    pub fn channel(&self, name: &str) -> Option<&ChannelSummary> {
        self.channels.iter().find(|c| c.channel == name)
    }
}

pub fn summarize(reports: &[TrialReport], options: &SummaryOptions) -> Result<BatchSummary> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("summarize needs at least one report".into()));
    }
    let n = reports.len() as f64;
    let mut channels = Vec::with_capacity(4);
    for name in CHANNELS {
        let metrics: Vec<&ChannelMetrics> = reports.iter().map(|r| r.channel(name)).collect();
        let settling: Vec<f64> = metrics
            .iter()
            .map(|m| m.settling_time.unwrap_or(options.horizon))
            .collect();
        let over: Vec<f64> = metrics.iter().map(|m| m.overshoot).collect();
        let sse: Vec<f64> = metrics.iter().map(|m| m.steady_state_error).collect();
        channels.push(ChannelSummary {
            channel: name.to_string(),
            settling_time: describe(&settling)?,
            overshoot: describe(&over)?,
            steady_state_error: describe(&sse)?,
            unsettled: metrics.iter().filter(|m| m.settling_time.is_none()).count(),
            degenerate: metrics.iter().filter(|m| m.degenerate).count(),
            within_band_fraction: sse.iter().filter(|e| **e <= options.steady_state_band).count() as f64 / n,
            zero_overshoot_fraction: over
                .iter()
                .filter(|o| **o <= options.zero_overshoot_tolerance)
                .count() as f64
                / n,
        });
    }
    Ok(BatchSummary {
        trials: reports.len(),
        success_fraction: reports.iter().filter(|r| r.success).count() as f64 / n,
        options: options.clone(),
        channels,
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// One row per channel and metric, mirroring the three boxplot panels.
pub fn write_summary_csv(path: &Path, summary: &BatchSummary) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "channel", "metric", "min", "q1", "median", "q3", "max", "outliers", "unsettled",
        "within_band_fraction", "zero_overshoot_fraction",
    ])?;
    for c in &summary.channels {
        for (metric, s) in [
            ("settling_time_s", &c.settling_time),
            ("overshoot_pct", &c.overshoot),
            ("steady_state_error_pct", &c.steady_state_error),
        ] {
            w.write_record([
                c.channel.clone(),
                metric.to_string(),
                s.min.to_string(),
                s.q1.to_string(),
                s.median.to_string(),
                s.q3.to_string(),
                s.max.to_string(),
                s.outliers.len().to_string(),
                c.unsettled.to_string(),
                c.within_band_fraction.to_string(),
                c.zero_overshoot_fraction.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per trial and channel.
pub fn write_trials_csv(path: &Path, reports: &[TrialReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "trial", "seed", "status", "channel", "initial", "target", "step_magnitude",
        "settling_time_s", "overshoot_pct", "steady_state_error_pct", "steady_state_error_abs",
        "degenerate",
    ])?;
    for r in reports {
        for (name, c) in r.channels() {
            w.write_record([
                r.trial.to_string(),
                r.seed.to_string(),
                r.status.to_string(),
                name.to_string(),
                c.initial.to_string(),
                c.target.to_string(),
                c.step_magnitude.to_string(),
                c.settling_time.map(|t| t.to_string()).unwrap_or_default(),
                c.overshoot.to_string(),
                c.steady_state_error.to_string(),
                c.steady_state_error_abs.to_string(),
                c.degenerate.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const TRAJECTORY_HEADER: [&str; 27] = [
    "t", "x", "y", "z", "roll", "pitch", "yaw", "vx", "vy", "vz", "wx", "wy", "wz", "qx", "qy",
    "qz", "qw", "q_norm", "a1", "a2", "a3", "a4", "rpm1", "rpm2", "rpm3", "rpm4", "reward",
];

fn trajectory_row(t: f64, s: &QuadrotorState, action: &[f64; 4], rpm: &[f64; 4], reward: f64) -> Vec<f64> {
    let (roll, pitch, yaw) = s.attitude.to_euler();
    let q = s.attitude;
    let mut row = vec![
        t,
        s.position.x,
        s.position.y,
        s.position.z,
        roll,
        pitch,
        yaw,
        s.velocity.x,
        s.velocity.y,
        s.velocity.z,
        s.angular_velocity.x,
        s.angular_velocity.y,
        s.angular_velocity.z,
        q.x,
        q.y,
        q.z,
        q.w,
        q.norm(),
    ];
    row.extend_from_slice(action);
    row.extend_from_slice(rpm);
    row.push(reward);
    row
}

/// Trajectory CSV: the start state at `t = 0` (zero action and reward)
/// followed by one row per control step. `footer` adds a final
/// `# status: …` comment line.
pub fn write_trajectory_csv(
    path: &Path,
    start: Option<&QuadrotorState>,
    records: &[StepRecord],
    footer: Option<EpisodeStatus>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(TRAJECTORY_HEADER)?;
    if let Some(s) = start {
        let row = trajectory_row(0.0, s, &[0.0; 4], &[0.0; 4], 0.0);
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    for r in records {
        let row = trajectory_row(r.time, &r.state, &r.action, &r.rpm, r.reward);
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    if let Some(status) = footer {
        writeln!(inner, "# status: {status}").map_err(|e| Error::io(path, e))?;
    }
    inner.flush().map_err(|e| Error::io(path, e))
}
