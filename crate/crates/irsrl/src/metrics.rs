//! `metrics.csv`: one row per (seed, episode).

use std::path::Path;

use irsrl_core::agent::EpisodeStats;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const HEADER: [&str; 7] = [
    "seed",
    "episode",
    "mean_snr_db",
    "critic_loss",
    "actor_obj",
    "sigma",
    "wall_s",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub episode: usize,
    pub mean_snr_db: f64,
    pub critic_loss: f64,
    pub actor_obj: f64,
    pub sigma: f64,
    pub wall_s: f64,
}

impl MetricsRow {
    /// A diverged episode keeps its row; its loss and objective columns
    /// are written as NaN to mark it.
    pub fn from_stats(seed: u64, e: &EpisodeStats, wall_s: f64) -> Self {
        let (critic_loss, actor_obj) = if e.diverged {
            (f64::NAN, f64::NAN)
        } else {
            (e.critic_loss, e.actor_objective)
        };
        Self {
            seed,
            episode: e.episode,
            mean_snr_db: e.mean_snr_db,
            critic_loss,
            actor_obj,
            sigma: e.sigma,
            wall_s: (wall_s * 1000.0).round() / 1000.0,
        }
    }
}

pub fn to_csv_string(rows: &[MetricsRow]) -> Result<String, HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(HEADER).map_err(|e| HarnessError::Metrics(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Metrics(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Metrics(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<(), HarnessError> {
    crate::checkpoint::write_atomic(path, to_csv_string(rows)?.as_bytes())
}

pub fn parse_metrics(text: &str) -> Result<Vec<MetricsRow>, HarnessError> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| HarnessError::Metrics(e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(HarnessError::Metrics(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let rows = r
        .deserialize()
        .collect::<Result<Vec<MetricsRow>, _>>()
        .map_err(|e| HarnessError::Metrics(e.to_string()))?;
    if rows.is_empty() {
        return Err(HarnessError::Metrics("no data rows".into()));
    }
    Ok(rows)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_metrics(&text).map_err(|e| HarnessError::Metrics(format!("{}: {e}", path.display())))
}

/// The CSV text with the wall-clock column removed, for determinism
/// comparisons.
pub fn without_wall_clock(text: &str) -> String {
    text.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}
