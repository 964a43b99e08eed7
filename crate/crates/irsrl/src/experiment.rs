//! Multi-seed training runs and their on-disk artifacts.
//!
//! Layout under `out_dir`:
//!
//! ```text
//! metrics.csv              one row per (seed, episode), seeds ascending
//! manifest.json            resolved config, artifact version, per-seed status
//! seed-<s>/checkpoint.irsrl
//! ```

use std::path::{Path, PathBuf};
use std::time::Instant;

use irsrl_core::agent::{train, EpisodeStats, TrainOptions};
use rayon::prelude::*;
use serde::Serialize;

use crate::checkpoint;
use crate::config::ExperimentConfig;
use crate::metrics::{write_metrics, MetricsRow};
use crate::{HarnessError, ARTIFACT_VERSION};

/// Episodes averaged by the final-performance statistic.
pub const FINAL_EPISODES: usize = 10;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Test hook: `(seed, episode)` pairs at which a critic weight is
    /// poisoned with NaN.
    pub inject_nan: Vec<(u64, usize)>,
    /// Write nothing to disk.
    pub dry_run: bool,
}

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub episodes: Vec<EpisodeStats>,
    pub rows: Vec<MetricsRow>,
    pub diverged: bool,
    pub divergence: Option<String>,
    /// Set when the run could not complete for a reason other than
    /// divergence.
    pub error: Option<String>,
    pub checkpoint: Option<Vec<u8>>,
}

impl SeedOutcome {
    /// Mean SNR (dB) over the last `FINAL_EPISODES` recorded episodes.
    pub fn final_snr_db(&self) -> f64 {
        tail_mean(self.episodes.iter().map(|e| e.mean_snr_db))
    }

    /// The same statistic for the per-slot closed-form/bound optimum.
    pub fn final_oracle_snr_db(&self) -> f64 {
        tail_mean(self.episodes.iter().map(|e| e.mean_oracle_snr_db))
    }

    pub fn status(&self) -> &'static str {
        match (&self.error, self.diverged) {
            (Some(_), _) => "failed",
            (None, true) => "diverged",
            (None, false) => "completed",
        }
    }
}

fn tail_mean(xs: impl DoubleEndedIterator<Item = f64> + ExactSizeIterator) -> f64 {
    let n = xs.len().min(FINAL_EPISODES);
    if n == 0 {
        return f64::NAN;
    }
    xs.rev().take(n).sum::<f64>() / n as f64
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedOutcome>,
    pub out_dir: PathBuf,
}

impl ExperimentSummary {
    /// Final-performance statistic: the last-10-episode mean SNR averaged
    /// over the seeds that produced rows.
    pub fn final_snr_db(&self) -> f64 {
        let v: Vec<f64> = self
            .seeds
            .iter()
            .filter(|s| s.error.is_none())
            .map(SeedOutcome::final_snr_db)
            .collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }

    pub fn rows(&self) -> Vec<MetricsRow> {
        self.seeds.iter().flat_map(|s| s.rows.iter().cloned()).collect()
    }

    pub fn diverged_seeds(&self) -> usize {
        self.seeds.iter().filter(|s| s.diverged).count()
    }
}

#[derive(Serialize)]
struct SeedManifest<'a> {
    seed: u64,
    status: &'a str,
    episodes: usize,
    final_snr_db: Option<f64>,
    divergence: Option<&'a str>,
    error: Option<&'a str>,
    checkpoint: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    artifact_version: &'a str,
    config: &'a ExperimentConfig,
    seeds: Vec<SeedManifest<'a>>,
}

pub fn checkpoint_path(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("seed-{seed}")).join("checkpoint.irsrl")
}

/// Trains a single seed. Never fails: errors are recorded in the outcome.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64, inject_nan_at_episode: Option<usize>) -> SeedOutcome {
    let env = cfg.env_config();
    let agent = cfg.agent_config();
    let opts = TrainOptions {
        inject_nan_at_episode,
        ..TrainOptions::new(seed, cfg.episodes)
    };
    let start = Instant::now();
    let mut rows = Vec::with_capacity(cfg.episodes);
    let result = train(&env, &agent, &opts, &mut |e| {
        rows.push(MetricsRow::from_stats(seed, e, start.elapsed().as_secs_f64()));
    });
    match result {
        Ok(out) => SeedOutcome {
            seed,
            episodes: out.stats.episodes,
            rows,
            diverged: out.stats.diverged,
            divergence: out.stats.divergence,
            error: None,
            checkpoint: Some(out.checkpoint),
        },
        Err(e) => SeedOutcome {
            seed,
            episodes: Vec::new(),
            rows,
            diverged: false,
            divergence: None,
            error: Some(e.to_string()),
            checkpoint: None,
        },
    }
}

/// Trains every seed of `cfg` (in parallel) and writes the artifacts.
///
/// A seed that diverges keeps its rows and last good checkpoint. The call
/// fails only if the config is invalid, an artifact cannot be written, or
/// every seed failed.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentSummary, HarnessError> {
    cfg.validate()?;
    let mut seeds: Vec<SeedOutcome> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let inject = opts.inject_nan.iter().find(|(s, _)| *s == seed).map(|&(_, e)| e);
            run_seed(cfg, seed, inject)
        })
        .collect();
    seeds.sort_by_key(|s| s.seed);
    let summary = ExperimentSummary {
        config: cfg.clone(),
        seeds,
        out_dir: PathBuf::from(&cfg.out_dir),
    };
    if !opts.dry_run {
        write_artifacts(&summary)?;
    }
    if summary.seeds.iter().all(|s| s.error.is_some()) {
        return Err(HarnessError::AllSeedsFailed(summary.seeds.len()));
    }
    Ok(summary)
}

fn write_artifacts(summary: &ExperimentSummary) -> Result<(), HarnessError> {
    let out = &summary.out_dir;
    let mut manifest_seeds = Vec::new();
    for s in &summary.seeds {
        let ckpt = match &s.checkpoint {
            Some(bytes) => {
                let path = checkpoint_path(out, s.seed);
                checkpoint::save(&path, bytes)?;
                Some(path.strip_prefix(out).unwrap_or(&path).display().to_string())
            }
            None => None,
        };
        let final_snr = s.final_snr_db();
        manifest_seeds.push(SeedManifest {
            seed: s.seed,
            status: s.status(),
            episodes: s.rows.len(),
            final_snr_db: final_snr.is_finite().then_some(final_snr),
            divergence: s.divergence.as_deref(),
            error: s.error.as_deref(),
            checkpoint: ckpt,
        });
    }
    if summary.seeds.iter().any(|s| !s.rows.is_empty()) {
        write_metrics(&out.join("metrics.csv"), &summary.rows())?;
    }
    let manifest = Manifest {
        artifact_version: ARTIFACT_VERSION,
        config: &summary.config,
        seeds: manifest_seeds,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    checkpoint::write_atomic(&out.join("manifest.json"), text.as_bytes())
}
