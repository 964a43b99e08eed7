//! The signal-model oracle suite behind `oracle-check`.
//!
//! Every property is checked on freshly sampled random channels; the
//! report has one line per property.

use std::f64::consts::PI;
use std::fmt;

use irsrl_core::rng::{normal, substream, uniform, SimRng, Stream};
use irsrl_core::signal::{
    composite_channel, exhaustive_phase_search, optimal_beamformer, phase_oracle_single_antenna, snr,
    snr_upper_bound, ComplexMatrix,
};
use irsrl_core::C64;

use crate::HarnessError;

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub seed: u64,
    /// Random instances per property.
    pub instances: usize,
    /// Feasible beamformers sampled per instance.
    pub beamformer_samples: usize,
    /// Largest M used by the exhaustive-grid properties.
    pub max_grid_elements: usize,
    pub grid_levels: usize,
    /// Shape of the beamformer-optimality instances.
    pub irs_elements: usize,
    pub antennas: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 1000,
            beamformer_samples: 1000,
            max_grid_elements: 4,
            grid_levels: 16,
            irs_elements: 20,
            antennas: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct OracleReport {
    pub checks: Vec<Check>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

const P_MAX: f64 = 1.0;
const NOISE: f64 = 1.0;

fn cn(rng: &mut SimRng) -> C64 {
    C64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

/// Random channel with per-entry log-normal amplitude spread.
fn random_instance(rng: &mut SimRng, m: usize, n: usize) -> (Vec<C64>, ComplexMatrix) {
    let h = (0..m).map(|_| cn(rng) * 10f64.powf(normal(rng) / 20.0)).collect();
    let g = (0..m * n).map(|_| cn(rng)).collect();
    (h, ComplexMatrix::from_rows(m, n, g).expect("shape matches"))
}

fn random_theta(rng: &mut SimRng, m: usize) -> Vec<f64> {
    (0..m).map(|_| uniform(rng, -PI, PI)).collect()
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn beamformer_optimality(o: &OracleOptions, rng: &mut SimRng) -> Result<Check, HarnessError> {
    let (m, n) = (o.irs_elements, o.antennas);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..o.instances {
        let (h, g) = random_instance(rng, m, n);
        let c = composite_channel(&h, &random_theta(rng, m), &g)?;
        let b = optimal_beamformer(&c, P_MAX)?;
        let gain = |b: &[C64]| c.iter().zip(b).map(|(x, y)| x * y).sum::<C64>().norm_sqr().sqrt();
        let best = gain(b.as_slice());
        for _ in 0..o.beamformer_samples {
            let mut w: Vec<C64> = (0..n).map(|_| cn(rng)).collect();
            let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            w.iter_mut().for_each(|x| *x *= P_MAX.sqrt() / norm);
            worst = worst.max((gain(&w) - best) / best);
        }
    }
    Ok(Check {
        name: "beamformer optimality",
        passed: worst <= 1e-12,
        detail: format!(
            "{} instances x {} feasible beamformers, max relative excess {worst:.3e}",
            o.instances, o.beamformer_samples
        ),
    })
}

fn closed_form(o: &OracleOptions, rng: &mut SimRng) -> Result<Check, HarnessError> {
    let mut max_rel = 0.0f64;
    let mut grid_excess = f64::NEG_INFINITY;
    for i in 0..o.instances {
        let m = 1 + i % o.max_grid_elements;
        let (h, g) = random_instance(rng, m, 1);
        let col: Vec<C64> = g.as_slice().to_vec();
        let (theta, best) = phase_oracle_single_antenna(&h, &col, P_MAX, NOISE)?;
        let bound = snr_upper_bound(&h, &g, P_MAX, NOISE)?;
        let achieved = snr(&h, theta.as_slice(), &g, P_MAX, NOISE)?;
        max_rel = max_rel.max(rel_diff(best, bound)).max(rel_diff(achieved, bound));
        let (_, grid) = exhaustive_phase_search(&h, &g, o.grid_levels, P_MAX, NOISE)?;
        grid_excess = grid_excess.max((grid - best) / best);
    }
    Ok(Check {
        name: "single-antenna closed form",
        passed: max_rel <= 1e-9 && grid_excess <= 1e-9,
        detail: format!(
            "M<={}, {} instances: max relative gap to bound {max_rel:.3e}, \
             max relative excess of {}-level grid {grid_excess:.3e}",
            o.max_grid_elements, o.instances, o.grid_levels
        ),
    })
}

fn bound_chain(o: &OracleOptions, rng: &mut SimRng) -> Result<Check, HarnessError> {
    let mut violations = 0usize;
    let mut n1_rel = 0.0f64;
    for i in 0..o.instances {
        let m = 1 + i % o.max_grid_elements;
        let n = 1 + (i / o.max_grid_elements) % 3;
        let (h, g) = random_instance(rng, m, n);
        let bound = snr_upper_bound(&h, &g, P_MAX, NOISE)?;
        let (_, grid) = exhaustive_phase_search(&h, &g, o.grid_levels, P_MAX, NOISE)?;
        let any = snr(&h, &random_theta(rng, m), &g, P_MAX, NOISE)?;
        if grid > bound * (1.0 + 1e-12) || any > bound * (1.0 + 1e-12) {
            violations += 1;
        }
        if n == 1 {
            let (_, best) = phase_oracle_single_antenna(&h, g.as_slice(), P_MAX, NOISE)?;
            n1_rel = n1_rel.max(rel_diff(best, bound));
        }
    }
    Ok(Check {
        name: "bound chain",
        passed: violations == 0 && n1_rel <= 1e-9,
        detail: format!(
            "{} instances: {violations} violations of grid optimum <= bound and snr(θ) <= bound, \
             N=1 closed form vs bound {n1_rel:.3e}",
            o.instances
        ),
    })
}

fn single_element_invariance(o: &OracleOptions, rng: &mut SimRng) -> Result<Check, HarnessError> {
    let mut max_rel = 0.0f64;
    for i in 0..o.instances.min(100) {
        let (h, g) = random_instance(rng, 1, 1 + i % 3);
        let reference = snr(&h, &[-PI], &g, P_MAX, NOISE)?;
        for k in 0..o.grid_levels {
            let t = -PI + 2.0 * PI * k as f64 / o.grid_levels as f64;
            max_rel = max_rel.max(rel_diff(snr(&h, &[t], &g, P_MAX, NOISE)?, reference));
        }
    }
    Ok(Check {
        name: "single-element phase invariance",
        passed: max_rel <= 1e-9,
        detail: format!("max relative spread over the grid {max_rel:.3e}"),
    })
}

/// Runs every property; errors only on malformed options.
pub fn run_oracle_suite(o: &OracleOptions) -> Result<OracleReport, HarnessError> {
    if o.max_grid_elements == 0 || o.max_grid_elements > 4 {
        return Err(HarnessError::invalid("irs_elements", "exhaustive mode needs 1..=4 elements"));
    }
    if o.instances == 0 {
        return Err(HarnessError::invalid("instances", "must be >= 1"));
    }
    let mut rng = substream(o.seed, Stream::Channel);
    let checks = vec![
        beamformer_optimality(o, &mut rng)?,
        closed_form(o, &mut rng)?,
        bound_chain(o, &mut rng)?,
        single_element_invariance(o, &mut rng)?,
    ];
    Ok(OracleReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> OracleOptions {
        OracleOptions {
            instances: 50,
            beamformer_samples: 50,
            irs_elements: 4,
            antennas: 2,
            ..OracleOptions::default()
        }
    }

    #[test]
    fn suite_passes_on_correct_model() {
        let r = run_oracle_suite(&small()).unwrap();
        assert_eq!(r.checks.len(), 4);
        assert!(r.all_passed(), "{r}");
        assert_eq!(r.to_string().lines().filter(|l| l.starts_with("PASS")).count(), 4);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = run_oracle_suite(&small()).unwrap().to_string();
        let b = run_oracle_suite(&small()).unwrap().to_string();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_large_grid_mode() {
        let o = OracleOptions {
            max_grid_elements: 5,
            ..small()
        };
        assert_eq!(run_oracle_suite(&o).unwrap_err().key(), Some("irs_elements"));
    }
}
