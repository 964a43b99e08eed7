//! Spatiotemporally correlated channel simulator.
//!
//! The log-magnitude of every channel coefficient is the sum of three
//! terms (all in dB): distance pathloss `−10 l log10 d`, a shadowing term
//! that is Gaussian and correlated across space and time, and an i.i.d.
//! Gaussian multipath perturbation. Shadowing follows the separable
//! exponential covariance
//!
//! ```text
//! C((x,t),(x',t')) = η² · exp(−‖x − x'‖ / c1) · exp(−|t − t'| / c2)
//! ```
//!
//! realized as a spatially correlated AR(1) process with coefficient
//! `ρ = exp(−1/c2)` over the candidate destination cells. The source→IRS
//! link carries its own scalar AR(1) shadowing term.
//!
//! Channel phases are a per-run map over (cell, element) plus a wrapped
//! Gaussian random-walk drift that restarts from the map on every episode.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Only exactly rounded operations (sqrt, floor) come from `Float`;
// transcendentals use `libm` directly. Unused with std, where inherent
// methods shadow it.
#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{normal, uniform};
use crate::signal::ComplexMatrix;
use crate::{Error, Result, C64};

/// Distance floor for the pathloss law, meters.
pub const PATHLOSS_MIN_DISTANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Pathloss exponent `l`.
    pub pathloss_exponent: f64,
    /// Multipath log-magnitude standard deviation, dB.
    pub multipath_std_db: f64,
    /// Shadowing power `η²`, dB².
    pub shadow_power_db2: f64,
    /// Correlation distance `c1`, meters.
    pub corr_distance: f64,
    /// Correlation time `c2`, slots.
    pub corr_time: f64,
    /// Phase random-walk step standard deviation, radians per slot.
    pub phase_drift: f64,
    /// Receiver noise variance, linear (mW).
    pub noise_var: f64,
    /// Source transmit power, dBm.
    pub tx_power_dbm: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            pathloss_exponent: 2.3,
            multipath_std_db: 0.6,
            shadow_power_db2: 6.0,
            corr_distance: 1.2,
            corr_time: 5.0,
            phase_drift: 0.02,
            noise_var: 0.5,
            tx_power_dbm: 65.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, bool, &str); 8] = [
            ("pathloss_exponent", self.pathloss_exponent > 0.0, "must be > 0"),
            ("multipath_std_db", self.multipath_std_db >= 0.0, "must be >= 0"),
            ("shadow_power_db2", self.shadow_power_db2 >= 0.0, "must be >= 0"),
            ("corr_distance", self.corr_distance > 0.0, "must be > 0"),
            ("corr_time", self.corr_time > 0.0, "must be > 0"),
            ("phase_drift", self.phase_drift >= 0.0, "must be >= 0"),
            ("noise_var", self.noise_var > 0.0, "must be > 0"),
            ("tx_power_dbm", self.tx_power_dbm.is_finite(), "must be finite"),
        ];
        for (name, ok, reason) in checks {
            if !ok {
                return Err(Error::invalid(name, reason));
            }
        }
        for (name, v) in [
            ("pathloss_exponent", self.pathloss_exponent),
            ("multipath_std_db", self.multipath_std_db),
            ("shadow_power_db2", self.shadow_power_db2),
            ("corr_distance", self.corr_distance),
            ("phase_drift", self.phase_drift),
            ("noise_var", self.noise_var),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Transmit power in linear milliwatts.
    pub fn tx_power_mw(&self) -> f64 {
        libm::pow(10.0, self.tx_power_dbm / 10.0)
    }

    /// AR(1) coefficient `ρ = exp(−1/c2)`.
    pub fn ar_coeff(&self) -> f64 {
        libm::exp(-1.0 / self.corr_time)
    }
}

pub type Position = [f64; 3];

fn distance(a: &Position, b: &Position) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    s.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub source_pos: Position,
    pub irs_pos: Position,
    /// Centers of the cells the destination may occupy.
    pub dest_cells: Vec<Position>,
    pub cube_side: f64,
    pub cell_side: f64,
}

impl Default for Geometry {
    /// A 20 m cube with 1 m cells; the source and the IRS sit on two walls
    /// and the destination roams a 2×2×1 block of cells.
    fn default() -> Self {
        Self {
            source_pos: [0.5, 0.5, 5.0],
            irs_pos: [10.0, 0.5, 5.0],
            dest_cells: vec![
                [9.5, 4.5, 1.5],
                [10.5, 4.5, 1.5],
                [9.5, 5.5, 1.5],
                [10.5, 5.5, 1.5],
            ],
            cube_side: 20.0,
            cell_side: 1.0,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.cube_side > 0.0) || !self.cube_side.is_finite() {
            return Err(Error::invalid("cube_side", "must be finite and > 0"));
        }
        if !(self.cell_side > 0.0) || self.cell_side > self.cube_side {
            return Err(Error::invalid("cell_side", "must be in (0, cube_side]"));
        }
        if self.dest_cells.is_empty() {
            return Err(Error::invalid("dest_cells", "need at least one cell"));
        }
        let inside = |p: &Position| p.iter().all(|c| *c >= 0.0 && *c <= self.cube_side);
        if !inside(&self.source_pos) {
            return Err(Error::invalid("source_pos", "outside the cube"));
        }
        if !inside(&self.irs_pos) {
            return Err(Error::invalid("irs_pos", "outside the cube"));
        }
        if !self.dest_cells.iter().all(inside) {
            return Err(Error::invalid("dest_cells", "cell outside the cube"));
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.dest_cells.len()
    }
}

/// `−10 l log10(max(d, d_min))` in dB.
pub fn pathloss_db(d: f64, exponent: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::invalid("distance", "must be finite and > 0"));
    }
    Ok(-10.0 * exponent * libm::log10(d.max(PATHLOSS_MIN_DISTANCE)))
}

/// Row-major symmetric matrix over the candidate cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Exponential spatial kernel `K_ij = η² exp(−‖x_i − x_j‖ / c1)`.
pub fn spatial_covariance(cells: &[Position], params: &ChannelParams) -> SquareMatrix {
    let n = cells.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] =
                params.shadow_power_db2 * libm::exp(-distance(&cells[i], &cells[j]) / params.corr_distance);
        }
    }
    SquareMatrix { n, data }
}

/// Lower-triangular Cholesky factor.
pub fn cholesky(k: &SquareMatrix) -> Result<SquareMatrix> {
    let n = k.n;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = k.get(i, j);
            for p in 0..j {
                sum -= l[i * n + p] * l[j * n + p];
            }
            if i == j {
                if !(sum > 0.0) {
                    return Err(Error::Cholesky { pivot: i });
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(SquareMatrix { n, data: l })
}

/// Shadowing of both links at one slot, in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowingState {
    /// IRS→destination shadowing for each candidate cell.
    pub dest_values: Vec<f64>,
    /// Source→IRS shadowing.
    pub src_irs_value: f64,
    pub spatial_chol: SquareMatrix,
    pub ar_coeff: f64,
}

fn correlated_draw<R: Rng + ?Sized>(chol: &SquareMatrix, rng: &mut R) -> Vec<f64> {
    let n = chol.n;
    let eps: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    (0..n)
        .map(|i| (0..=i).map(|j| chol.get(i, j) * eps[j]).sum())
        .collect()
}

/// Draws the stationary shadowing field: cells jointly from `N(0, K)`,
/// the source→IRS term from `N(0, η²)`.
pub fn init_shadowing<R: Rng + ?Sized>(
    geometry: &Geometry,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<ShadowingState> {
    let n = geometry.num_cells();
    let spatial_chol = if params.shadow_power_db2 == 0.0 {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    } else {
        let mut k = spatial_covariance(&geometry.dest_cells, params);
        let jitter = 1e-10 * params.shadow_power_db2;
        for i in 0..n {
            k.data[i * n + i] += jitter;
        }
        cholesky(&k)?
    };
    let dest_values = correlated_draw(&spatial_chol, rng);
    let src_irs_value = params.shadow_power_db2.sqrt() * normal(rng);
    Ok(ShadowingState {
        dest_values,
        src_irs_value,
        spatial_chol,
        ar_coeff: params.ar_coeff(),
    })
}

impl ShadowingState {
    /// One AR(1) step: `v ← ρ v + √(1−ρ²) · L ε`. Preserves the stationary
    /// marginal `N(0, K)`.
    pub fn step<R: Rng + ?Sized>(&mut self, params: &ChannelParams, rng: &mut R) {
        let rho = self.ar_coeff;
        let innov = (1.0 - rho * rho).max(0.0).sqrt();
        let fresh = correlated_draw(&self.spatial_chol, rng);
        for (v, f) in self.dest_values.iter_mut().zip(fresh) {
            *v = rho * *v + innov * f;
        }
        let e = normal(rng);
        self.src_irs_value = rho * self.src_irs_value + innov * params.shadow_power_db2.sqrt() * e;
    }
}

/// Wraps into `[0, 2π)`.
pub fn wrap_to_2pi(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = x - two_pi * (x / two_pi).floor();
    if r >= two_pi || r < 0.0 {
        0.0
    } else {
        r
    }
}

/// Channel phases for every candidate cell (IRS→destination) and for the
/// source→IRS matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    /// `num_cells × M`, row-major.
    pub h_phases: Vec<f64>,
    /// `M × N`, row-major.
    pub g_phases: Vec<f64>,
    pub m: usize,
    pub n: usize,
}

impl PhaseState {
    /// Independent uniform phases in `[0, 2π)`.
    pub fn uniform<R: Rng + ?Sized>(num_cells: usize, m: usize, n: usize, rng: &mut R) -> Self {
        let two_pi = 2.0 * PI;
        let h_phases = (0..num_cells * m).map(|_| wrap_to_2pi(uniform(rng, 0.0, two_pi))).collect();
        let g_phases = (0..m * n).map(|_| wrap_to_2pi(uniform(rng, 0.0, two_pi))).collect();
        Self {
            h_phases,
            g_phases,
            m,
            n,
        }
    }

    pub fn h_row(&self, cell: usize) -> &[f64] {
        &self.h_phases[cell * self.m..(cell + 1) * self.m]
    }

    /// Wrapped random walk: every phase moves by `κ ε`, `ε ~ N(0, 1)`.
    pub fn step<R: Rng + ?Sized>(&mut self, params: &ChannelParams, rng: &mut R) {
        let kappa = params.phase_drift;
        for p in self.h_phases.iter_mut().chain(self.g_phases.iter_mut()) {
            let e = normal(rng);
            *p = wrap_to_2pi(*p + kappa * e);
        }
    }
}

/// Channels at one slot: `h` (length `M`) and `G` (`M × N`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSnapshot {
    pub h: Vec<C64>,
    pub g: ComplexMatrix,
    pub t: usize,
}

fn db_to_amplitude(db: f64) -> f64 {
    libm::pow(10.0, db / 20.0)
}

/// Samples `h` at `dest_cell` and `G` for slot `t`. Multipath is drawn
/// fresh per element (and per `G` entry) on every call.
pub fn sample_channels<R: Rng + ?Sized>(
    t: usize,
    dest_cell: usize,
    shadowing: &ShadowingState,
    phases: &PhaseState,
    geometry: &Geometry,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<ChannelSnapshot> {
    let cells = geometry.num_cells();
    if dest_cell >= cells {
        return Err(Error::InvalidCell {
            index: dest_cell,
            cells,
        });
    }
    let (m, n) = (phases.m, phases.n);
    let sigma = params.multipath_std_db;
    let pl_h = pathloss_db(
        distance(&geometry.irs_pos, &geometry.dest_cells[dest_cell]),
        params.pathloss_exponent,
    )?;
    let pl_g = pathloss_db(
        distance(&geometry.source_pos, &geometry.irs_pos),
        params.pathloss_exponent,
    )?;
    let h_shadow = shadowing.dest_values[dest_cell];
    let h = phases
        .h_row(dest_cell)
        .iter()
        .map(|&phi| {
            let level = pl_h + h_shadow + sigma * normal(rng);
            crate::math::polar(db_to_amplitude(level), phi)
        })
        .collect();
    let g = phases
        .g_phases
        .iter()
        .map(|&phi| {
            let level = pl_g + shadowing.src_irs_value + sigma * normal(rng);
            crate::math::polar(db_to_amplitude(level), phi)
        })
        .collect();
    Ok(ChannelSnapshot {
        h,
        g: ComplexMatrix::from_rows(m, n, g)?,
        t,
    })
}

/// Channel processes for one link, advanced slot by slot.
///
/// The per-run phase map is drawn once at construction. `reset` draws a
/// fresh stationary shadowing field and restarts the phase drift from the
/// map, so episodes are i.i.d. in shadowing while the phase structure the
/// learner can exploit persists across episodes.
#[derive(Debug, Clone)]
pub struct ChannelSim {
    params: ChannelParams,
    geometry: Geometry,
    base_phases: PhaseState,
    shadowing: ShadowingState,
    phases: PhaseState,
}

impl ChannelSim {
    pub fn new<R: Rng + ?Sized>(
        params: ChannelParams,
        geometry: Geometry,
        m: usize,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        params.validate()?;
        geometry.validate()?;
        if m == 0 {
            return Err(Error::invalid("irs_elements", "must be >= 1"));
        }
        if n == 0 {
            return Err(Error::invalid("antennas", "must be >= 1"));
        }
        let base_phases = PhaseState::uniform(geometry.num_cells(), m, n, rng);
        let shadowing = init_shadowing(&geometry, &params, rng)?;
        Ok(Self {
            phases: base_phases.clone(),
            base_phases,
            shadowing,
            params,
            geometry,
        })
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.shadowing = init_shadowing(&self.geometry, &self.params, rng)?;
        self.phases = self.base_phases.clone();
        Ok(())
    }

    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.shadowing.step(&self.params, rng);
        self.phases.step(&self.params, rng);
    }

    pub fn sample<R: Rng + ?Sized>(&self, t: usize, dest_cell: usize, rng: &mut R) -> Result<ChannelSnapshot> {
        sample_channels(
            t,
            dest_cell,
            &self.shadowing,
            &self.phases,
            &self.geometry,
            &self.params,
            rng,
        )
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn shadowing(&self) -> &ShadowingState {
        &self.shadowing
    }

    pub fn phases(&self) -> &PhaseState {
        &self.phases
    }
}
