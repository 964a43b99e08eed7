//! Sweeps over one axis (variant, window or IRS size) with a summary table
//! and a plot.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::{ExperimentConfig, Variant};
use crate::experiment::{run_experiment, ExperimentSummary, RunOptions};
use crate::plot::{aggregate, render_svg, render_svg_with_x, Curve, CurvePoint};
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Variant,
    Window,
    IrsSize,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Variant => "variant",
            SweepAxis::Window => "window",
            SweepAxis::IrsSize => "irs-size",
        }
    }

    /// Default values for the numeric axes.
    pub fn default_values(self) -> Vec<usize> {
        match self {
            SweepAxis::Variant => Vec::new(),
            SweepAxis::Window => vec![1, 3, 5],
            SweepAxis::IrsSize => vec![5, 10, 15, 20, 25, 30],
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [SweepAxis::Variant, SweepAxis::Window, SweepAxis::IrsSize]
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown sweep {s:?} (expected variant, window or irs-size)"))
    }
}

#[derive(Debug, Clone)]
pub struct Setting {
    pub label: String,
    /// Numeric axis value; `None` on the variant axis.
    pub value: Option<usize>,
    pub config: ExperimentConfig,
}

/// One config per setting, each writing under `<out_dir>/<label>`.
pub fn sweep_settings(base: &ExperimentConfig, axis: SweepAxis, values: Option<&[usize]>) -> Vec<Setting> {
    let out = Path::new(&base.out_dir);
    let with_out = |label: &str, c: ExperimentConfig| ExperimentConfig {
        out_dir: out.join(label).display().to_string(),
        ..c
    };
    match axis {
        SweepAxis::Variant => Variant::ALL
            .into_iter()
            .map(|v| Setting {
                label: v.to_string(),
                value: None,
                config: with_out(v.as_str(), ExperimentConfig { variant: v, ..base.clone() }),
            })
            .collect(),
        SweepAxis::Window | SweepAxis::IrsSize => {
            let vals = values.map(<[usize]>::to_vec).unwrap_or_else(|| axis.default_values());
            vals.into_iter()
                .map(|v| {
                    let (label, cfg) = match axis {
                        SweepAxis::Window => (format!("W={v}"), ExperimentConfig { window: v, ..base.clone() }),
                        _ => (format!("M={v}"), ExperimentConfig { irs_elements: v, ..base.clone() }),
                    };
                    Setting {
                        config: with_out(&label, cfg),
                        label,
                        value: Some(v),
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub label: String,
    pub value: Option<usize>,
    pub final_snr_db: f64,
    pub per_seed: Vec<(u64, f64)>,
    pub diverged_seeds: usize,
    pub failed_seeds: usize,
}

impl SummaryRow {
    pub fn from_summary(label: &str, value: Option<usize>, s: &ExperimentSummary) -> Self {
        Self {
            label: label.to_string(),
            value,
            final_snr_db: s.final_snr_db(),
            per_seed: s
                .seeds
                .iter()
                .filter(|o| o.error.is_none())
                .map(|o| (o.seed, o.final_snr_db()))
                .collect(),
            diverged_seeds: s.diverged_seeds(),
            failed_seeds: s.seeds.iter().filter(|o| o.error.is_some()).count(),
        }
    }

    /// Min and max of the per-seed statistic.
    pub fn seed_range(&self) -> (f64, f64) {
        self.per_seed.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| {
            (lo.min(v), hi.max(v))
        })
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub axis: SweepAxis,
    pub rows: Vec<SummaryRow>,
    pub summaries: Vec<ExperimentSummary>,
}

impl Comparison {
    pub fn row(&self, label: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["setting", "final_snr_db", "seed_min", "seed_max", "seeds", "diverged", "failed"])
            .expect("in-memory write");
        for r in &self.rows {
            let (lo, hi) = r.seed_range();
            w.write_record([
                r.label.clone(),
                r.final_snr_db.to_string(),
                lo.to_string(),
                hi.to_string(),
                r.per_seed.len().to_string(),
                r.diverged_seeds.to_string(),
                r.failed_seeds.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "sweep {}: mean SNR over the last {} episodes, averaged over seeds\n",
            self.axis,
            crate::experiment::FINAL_EPISODES
        );
        let _ = writeln!(s, "{:<12} {:>10} {:>18} {:>9}", "setting", "final dB", "seed range", "diverged");
        for r in &self.rows {
            let (lo, hi) = r.seed_range();
            let _ = writeln!(
                s,
                "{:<12} {:>10.3} {:>8.3} .. {:<7.3} {:>9}",
                r.label, r.final_snr_db, lo, hi, r.diverged_seeds
            );
        }
        s
    }

    /// Learning curves per setting, or final performance against M for the
    /// IRS-size sweep.
    pub fn to_svg(&self) -> Result<String, HarnessError> {
        match self.axis {
            SweepAxis::IrsSize => {
                let points = self
                    .rows
                    .iter()
                    .filter(|r| r.final_snr_db.is_finite())
                    .map(|r| {
                        let (min, max) = r.seed_range();
                        CurvePoint {
                            episode: r.value.unwrap_or(0),
                            mean: r.final_snr_db,
                            min,
                            max,
                        }
                    })
                    .collect();
                let curve = Curve {
                    label: self.summaries.first().map_or("run".into(), |s| s.config.variant.to_string()),
                    points,
                };
                render_svg_with_x("final mean SNR vs IRS size (min–max over seeds)", "IRS elements M", &[curve])
            }
            _ => {
                let curves: Vec<Curve> = self
                    .rows
                    .iter()
                    .zip(&self.summaries)
                    .map(|(r, s)| aggregate(&r.label, &s.rows()))
                    .collect();
                render_svg(&format!("mean SNR per episode by {}", self.axis), &curves)
            }
        }
    }
}

/// Runs every setting, then writes `summary.csv`, `summary.txt` and
/// `<axis>.svg` under the base `out_dir`.
pub fn compare_variants(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: Option<&[usize]>,
    opts: &RunOptions,
) -> Result<Comparison, HarnessError> {
    base.validate()?;
    let settings = sweep_settings(base, axis, values);
    if settings.is_empty() {
        return Err(HarnessError::invalid(axis.as_str(), "sweep has no settings"));
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for s in &settings {
        let summary = run_experiment(&s.config, opts)?;
        rows.push(SummaryRow::from_summary(&s.label, s.value, &summary));
        summaries.push(summary);
    }
    let cmp = Comparison { axis, rows, summaries };
    if !opts.dry_run {
        let out = PathBuf::from(&base.out_dir);
        crate::checkpoint::write_atomic(&out.join("summary.csv"), cmp.to_csv().as_bytes())?;
        crate::checkpoint::write_atomic(&out.join("summary.txt"), cmp.to_text().as_bytes())?;
        crate::checkpoint::write_atomic(&out.join(format!("{axis}.svg")), cmp.to_svg()?.as_bytes())?;
    }
    Ok(cmp)
}
