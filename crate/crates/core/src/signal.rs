//! Received-signal model of the IRS-aided MISO link.
//!
//! With phase shifts `θ` the destination sees the composite row vector
//! `c = hᴴ Φ G`, `Φ = diag(e^{jθ})`. For a fixed `Φ` the power-limited
//! beamformer that maximizes the received SNR is maximum-ratio
//! transmission, `b* = √P · cᴴ / ‖c‖`, which gives `SNR = P ‖c‖² / σ²`.
//!
//! Alongside the model itself this module carries the closed-form and
//! brute-force phase designs used as baselines and as test oracles.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Only exactly rounded operations (sqrt, floor) come from `Float`;
// transcendentals use `libm` directly. Unused with std, where inherent
// methods shadow it.
#[allow(unused_imports)]
use num_traits::Float;


use crate::math::{abs, arg, cis};
use crate::{Error, Result, C64};

/// Dense row-major complex matrix (`rows × cols`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "complex matrix data",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [C64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }
}

/// Wraps an angle into `(−π, π]`; `π` itself maps to `π`.
pub fn wrap_to_pi(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = x - two_pi * ((x + PI) / two_pi).floor();
    if r <= -PI {
        r = PI;
    }
    r
}

/// IRS configuration: one phase per element, each in `[−π, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftVector(Vec<f64>);

impl PhaseShiftVector {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(bad) = theta.iter().find(|t| !(t.abs() <= PI)) {
            return Err(Error::invalid(
                "theta",
                alloc::format!("phase {bad} outside [-pi, pi]"),
            ));
        }
        Ok(Self(theta))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Transmit precoder `b` (length `N`).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights(Vec<C64>);

impl BeamformerWeights {
    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn power(&self) -> f64 {
        self.0.iter().map(|b| b.norm_sqr()).sum()
    }
}

fn check_dims(h: &[C64], theta: &[f64], g: &ComplexMatrix) -> Result<()> {
    if theta.len() != h.len() {
        return Err(Error::DimensionMismatch {
            what: "theta vs h",
            expected: h.len(),
            got: theta.len(),
        });
    }
    if g.rows() != h.len() {
        return Err(Error::DimensionMismatch {
            what: "G rows vs h",
            expected: h.len(),
            got: g.rows(),
        });
    }
    Ok(())
}

/// `c = hᴴ Φ G`, i.e. `c_n = Σ_m conj(h_m) e^{jθ_m} G_{m,n}`.
pub fn composite_channel(h: &[C64], theta: &[f64], g: &ComplexMatrix) -> Result<Vec<C64>> {
    check_dims(h, theta, g)?;
    let mut c = vec![C64::new(0.0, 0.0); g.cols()];
    for (m, (hm, &t)) in h.iter().zip(theta).enumerate() {
        let w = hm.conj() * cis(t);
        for (cn, gmn) in c.iter_mut().zip(g.row(m)) {
            *cn += w * gmn;
        }
    }
    Ok(c)
}

/// Maximum-ratio beamformer `b = √P · cᴴ / ‖c‖` for composite channel `c`.
pub fn optimal_beamformer(c: &[C64], p_max: f64) -> Result<BeamformerWeights> {
    let norm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateChannel);
    }
    let scale = p_max.sqrt() / norm;
    Ok(BeamformerWeights(
        c.iter().map(|x| x.conj() * scale).collect(),
    ))
}

fn validate_power(p_max: f64, noise_var: f64) -> Result<()> {
    if !(p_max >= 0.0) || !p_max.is_finite() {
        return Err(Error::invalid("p_max", "must be finite and nonnegative"));
    }
    if !(noise_var > 0.0) || !noise_var.is_finite() {
        return Err(Error::invalid("noise_var", "must be finite and positive"));
    }
    Ok(())
}

/// Linear destination SNR with the optimal beamformer: `P ‖hᴴ Φ G‖² / σ²`.
pub fn snr(h: &[C64], theta: &[f64], g: &ComplexMatrix, p_max: f64, noise_var: f64) -> Result<f64> {
    validate_power(p_max, noise_var)?;
    let c = composite_channel(h, theta, g)?;
    Ok(p_max * c.iter().map(|x| x.norm_sqr()).sum::<f64>() / noise_var)
}

pub fn snr_db(linear: f64) -> Result<f64> {
    if !(linear > 0.0) {
        return Err(Error::invalid("snr", "dB conversion needs a positive value"));
    }
    Ok(10.0 * libm::log10(linear))
}

/// Closed-form optimum for a single-antenna source (`N = 1`): every term
/// `conj(h_m) e^{jθ_m} g_m` is rotated onto the real axis, so
/// `|c| = Σ |h_m||g_m|`. Returns `(θ*, SNR*)`.
pub fn phase_oracle_single_antenna(
    h: &[C64],
    g: &[C64],
    p_max: f64,
    noise_var: f64,
) -> Result<(PhaseShiftVector, f64)> {
    validate_power(p_max, noise_var)?;
    if g.len() != h.len() {
        return Err(Error::DimensionMismatch {
            what: "g vs h",
            expected: h.len(),
            got: g.len(),
        });
    }
    let theta = h
        .iter()
        .zip(g)
        .map(|(hm, gm)| wrap_to_pi(-arg(hm.conj() * gm)))
        .collect();
    let amp: f64 = h.iter().zip(g).map(|(hm, gm)| abs(*hm) * abs(*gm)).sum();
    Ok((PhaseShiftVector(theta), p_max * amp * amp / noise_var))
}

/// Triangle-inequality bound `P (Σ_m |h_m| ‖G_m,:‖)² / σ²`, valid for every `θ`
/// and tight when `N = 1`.
pub fn snr_upper_bound(h: &[C64], g: &ComplexMatrix, p_max: f64, noise_var: f64) -> Result<f64> {
    validate_power(p_max, noise_var)?;
    if g.rows() != h.len() {
        return Err(Error::DimensionMismatch {
            what: "G rows vs h",
            expected: h.len(),
            got: g.rows(),
        });
    }
    let amp: f64 = h
        .iter()
        .enumerate()
        .map(|(m, hm)| abs(*hm) * g.row(m).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
        .sum();
    Ok(p_max * amp * amp / noise_var)
}

const SEARCH_GUARD: f64 = 1e8;

/// Brute-force search over the uniform grid `{−π + 2πk/levels}^M`.
///
/// Ties resolve to the lexicographically smallest grid index; a candidate
/// must beat the incumbent by more than 1e-12 relative to replace it.
pub fn exhaustive_phase_search(
    h: &[C64],
    g: &ComplexMatrix,
    levels: usize,
    p_max: f64,
    noise_var: f64,
) -> Result<(PhaseShiftVector, f64)> {
    validate_power(p_max, noise_var)?;
    if levels < 2 {
        return Err(Error::invalid("levels", "need at least 2 grid levels"));
    }
    let m = h.len();
    if (levels as f64).powi(m as i32) > SEARCH_GUARD {
        return Err(Error::SearchTooLarge {
            levels,
            elements: m,
        });
    }
    if g.rows() != m {
        return Err(Error::DimensionMismatch {
            what: "G rows vs h",
            expected: m,
            got: g.rows(),
        });
    }
    let grid: Vec<f64> = (0..levels)
        .map(|k| -PI + 2.0 * PI * k as f64 / levels as f64)
        .collect();
    // Precompute every rotated row conj(h_m) e^{jθ} G_m for each grid level.
    let n = g.cols();
    let mut rotated = vec![C64::new(0.0, 0.0); m * levels * n];
    for mi in 0..m {
        for (k, &t) in grid.iter().enumerate() {
            let w = h[mi].conj() * cis(t);
            let base = (mi * levels + k) * n;
            for (slot, gmn) in rotated[base..base + n].iter_mut().zip(g.row(mi)) {
                *slot = w * gmn;
            }
        }
    }

    let mut index = vec![0usize; m];
    let mut best_index = index.clone();
    let mut best = f64::NEG_INFINITY;
    let mut c = vec![C64::new(0.0, 0.0); n];
    loop {
        c.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        for (mi, &k) in index.iter().enumerate() {
            let base = (mi * levels + k) * n;
            for (cn, r) in c.iter_mut().zip(&rotated[base..base + n]) {
                *cn += r;
            }
        }
        let power: f64 = c.iter().map(|x| x.norm_sqr()).sum();
        if power > best * (1.0 + 1e-12) || best == f64::NEG_INFINITY {
            best = power;
            best_index.copy_from_slice(&index);
        }
        // Odometer with the last element fastest: lexicographic order.
        let mut pos = m;
        loop {
            if pos == 0 {
                let theta = best_index.iter().map(|&k| grid[k]).collect();
                return Ok((PhaseShiftVector(theta), p_max * best / noise_var));
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < levels {
                break;
            }
            index[pos] = 0;
        }
    }
}
