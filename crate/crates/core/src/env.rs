//! The phase-control MDP.
//!
//! State at slot `t` (base variant) is
//! `[x_t, x_{t−1}, θ^{t−1}, …, x_{t−W}, θ^{t−W}]`: the current destination
//! position followed by `W` (position, phase vector) pairs, newest first.
//! Positions are in meters unless `position_units` says otherwise. The
//! action is the vector of phase increments, applied with saturation at
//! `±π`. The reward is the destination SNR. The SNR-state variant appends
//! the previous slot's SNR.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, ChannelSim, ChannelSnapshot, Geometry, Position};
use crate::rng::SimRng;
use crate::signal::{self, phase_oracle_single_antenna, snr_upper_bound};
use crate::{Error, Result};

/// Scale applied to the SNR (dB) feature of the SNR-state variant.
pub const SNR_FEATURE_SCALE: f64 = 0.01;

/// Linear SNR floor before dB conversion (−120 dB).
const SNR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateVariant {
    Base,
    SnrState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardUnits {
    Db,
    Linear,
}

/// How destination positions are encoded in the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionUnits {
    /// Coordinates divided by the cube side, so every axis lies in `[0, 1]`.
    CubeFraction,
    /// Coordinates in meters.
    Meters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    /// IRS elements `M`.
    pub irs_elements: usize,
    /// Source antennas `N`.
    pub antennas: usize,
    /// History window `W`, slots.
    pub window: usize,
    pub episode_len: usize,
    pub variant: StateVariant,
    pub reward_units: RewardUnits,
    pub position_units: PositionUnits,
    pub channel: ChannelParams,
    pub geometry: Geometry,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            irs_elements: 20,
            antennas: 5,
            window: 5,
            episode_len: 300,
            variant: StateVariant::Base,
            reward_units: RewardUnits::Db,
            position_units: PositionUnits::Meters,
            channel: ChannelParams::default(),
            geometry: Geometry::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.irs_elements == 0 {
            return Err(Error::invalid("irs_elements", "must be >= 1"));
        }
        if self.antennas == 0 {
            return Err(Error::invalid("antennas", "must be >= 1"));
        }
        if self.window == 0 {
            return Err(Error::invalid("window", "must be >= 1"));
        }
        if self.episode_len == 0 {
            return Err(Error::invalid("episode_len", "must be >= 1"));
        }
        self.channel.validate()?;
        self.geometry.validate()
    }
}

/// Length of the state vector: `3 + W(3 + M)`, plus one for the SNR-state variant.
pub fn state_dim(config: &EnvConfig) -> usize {
    let base = 3 + config.window * (3 + config.irs_elements);
    match config.variant {
        StateVariant::Base => base,
        StateVariant::SnrState => base + 1,
    }
}

/// `θ_i = clamp(θ_prev,i + δ_i, −π, π)`.
pub fn apply_action(theta_prev: &[f64], delta: &[f64]) -> Result<Vec<f64>> {
    if theta_prev.len() != delta.len() {
        return Err(Error::DimensionMismatch {
            what: "action vs phase vector",
            expected: theta_prev.len(),
            got: delta.len(),
        });
    }
    Ok(theta_prev
        .iter()
        .zip(delta)
        .map(|(t, d)| (t + d).clamp(-PI, PI))
        .collect())
}

/// Edge-adjacency (6-neighborhood) graph over the destination cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionGraph {
    /// For each cell: itself first, then its neighbors in index order.
    moves: Vec<Vec<usize>>,
}

impl MotionGraph {
    pub fn new(cells: &[Position], cell_side: f64) -> Self {
        let tol = 1e-6 * cell_side;
        let adjacent = |a: &Position, b: &Position| {
            let mut stepped = 0;
            for k in 0..3 {
                let d = (a[k] - b[k]).abs();
                if (d - cell_side).abs() <= tol {
                    stepped += 1;
                } else if d > tol {
                    return false;
                }
            }
            stepped == 1
        };
        let moves = (0..cells.len())
            .map(|i| {
                let mut v = vec![i];
                v.extend((0..cells.len()).filter(|&j| j != i && adjacent(&cells[i], &cells[j])));
                v
            })
            .collect();
        Self { moves }
    }

    pub fn options(&self, cell: usize) -> &[usize] {
        &self.moves[cell]
    }

    /// Uniform choice among staying and moving to an adjacent cell.
    pub fn move_destination<R: Rng + ?Sized>(&self, cell: usize, rng: &mut R) -> usize {
        let opts = &self.moves[cell];
        opts[rng.random_range(0..opts.len())]
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub snr_db: f64,
    /// Best achievable SNR (dB) for this slot's channels: the closed-form
    /// optimum when `N = 1`, otherwise the triangle-inequality bound.
    pub oracle_snr_db: f64,
}

/// Single-link IRS environment with its own channel and motion streams.
#[derive(Debug, Clone)]
pub struct IrsEnv {
    config: EnvConfig,
    sim: ChannelSim,
    motion: MotionGraph,
    channel_rng: SimRng,
    motion_rng: SimRng,
    t: usize,
    cell: usize,
    theta: Vec<f64>,
    /// `(encoded position, phases)`, newest first.
    history: VecDeque<(Position, Vec<f64>)>,
    last_snr_db: f64,
    snapshot: Option<ChannelSnapshot>,
    started: bool,
}

impl IrsEnv {
    pub fn new(config: EnvConfig, mut channel_rng: SimRng, motion_rng: SimRng) -> Result<Self> {
        config.validate()?;
        let sim = ChannelSim::new(
            config.channel.clone(),
            config.geometry.clone(),
            config.irs_elements,
            config.antennas,
            &mut channel_rng,
        )?;
        let motion = MotionGraph::new(&config.geometry.dest_cells, config.geometry.cell_side);
        let m = config.irs_elements;
        Ok(Self {
            config,
            sim,
            motion,
            channel_rng,
            motion_rng,
            t: 0,
            cell: 0,
            theta: vec![0.0; m],
            history: VecDeque::new(),
            last_snr_db: 0.0,
            snapshot: None,
            started: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state_dim(&self) -> usize {
        state_dim(&self.config)
    }

    pub fn action_dim(&self) -> usize {
        self.config.irs_elements
    }

    pub fn motion(&self) -> &MotionGraph {
        &self.motion
    }

    pub fn channel(&self) -> &ChannelSim {
        &self.sim
    }

    /// Phases applied in the most recent slot.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn cell(&self) -> usize {
        self.cell
    }

    /// Snapshot used for the most recent reward (or the reset slot).
    pub fn snapshot(&self) -> Option<&ChannelSnapshot> {
        self.snapshot.as_ref()
    }

    pub fn slot(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        !self.started || self.t >= self.config.episode_len
    }

    fn encoded(&self, cell: usize) -> Position {
        let p = self.config.geometry.dest_cells[cell];
        let s = match self.config.position_units {
            PositionUnits::CubeFraction => self.config.geometry.cube_side,
            PositionUnits::Meters => 1.0,
        };
        [p[0] / s, p[1] / s, p[2] / s]
    }

    fn linear_snr(&self, snap: &ChannelSnapshot, theta: &[f64]) -> Result<f64> {
        signal::snr(
            &snap.h,
            theta,
            &snap.g,
            self.config.channel.tx_power_mw(),
            self.config.channel.noise_var,
        )
    }

    fn assemble(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.state_dim());
        s.extend_from_slice(&self.encoded(self.cell));
        for (pos, theta) in &self.history {
            s.extend_from_slice(pos);
            s.extend_from_slice(theta);
        }
        if self.config.variant == StateVariant::SnrState {
            s.push(self.last_snr_db * SNR_FEATURE_SCALE);
        }
        s
    }

    /// Starts an episode: fresh shadowing, zero phases, random start cell,
    /// window filled with the start position and zero phases.
    pub fn reset(&mut self) -> Result<Vec<f64>> {
        self.sim.reset(&mut self.channel_rng)?;
        let cells = self.config.geometry.num_cells();
        self.cell = self.motion_rng.random_range(0..cells);
        self.theta = vec![0.0; self.config.irs_elements];
        self.t = 0;
        let start = self.encoded(self.cell);
        self.history = (0..self.config.window)
            .map(|_| (start, self.theta.clone()))
            .collect();
        // The reset slot is sampled for every variant so that all variants
        // consume the channel stream identically.
        let snap = self.sim.sample(0, self.cell, &mut self.channel_rng)?;
        self.last_snr_db = to_db(self.linear_snr(&snap, &self.theta)?);
        self.snapshot = Some(snap);
        self.started = true;
        Ok(self.assemble())
    }

    /// Advances one slot with phase increments `action`.
    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if self.is_done() {
            return Err(Error::EpisodeFinished);
        }
        if action.len() != self.config.irs_elements {
            return Err(Error::DimensionMismatch {
                what: "action",
                expected: self.config.irs_elements,
                got: action.len(),
            });
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("action"));
        }
        self.sim.advance(&mut self.channel_rng);
        self.theta = apply_action(&self.theta, action)?;
        self.t += 1;
        let snap = self.sim.sample(self.t, self.cell, &mut self.channel_rng)?;
        let linear = self.linear_snr(&snap, &self.theta)?;
        let snr_db = to_db(linear);
        let oracle_snr_db = to_db(self.oracle_linear(&snap)?);
        let reward = match self.config.reward_units {
            RewardUnits::Db => snr_db,
            RewardUnits::Linear => linear,
        };
        self.snapshot = Some(snap);

        let here = self.encoded(self.cell);
        self.cell = self.motion.move_destination(self.cell, &mut self.motion_rng);
        self.history.pop_back();
        self.history.push_front((here, self.theta.clone()));
        self.last_snr_db = snr_db;

        Ok(StepOutcome {
            next_state: self.assemble(),
            reward,
            snr_db,
            oracle_snr_db,
        })
    }

    fn oracle_linear(&self, snap: &ChannelSnapshot) -> Result<f64> {
        let p = self.config.channel.tx_power_mw();
        let s2 = self.config.channel.noise_var;
        if snap.g.cols() == 1 {
            let g: Vec<_> = (0..snap.g.rows()).map(|m| snap.g.get(m, 0)).collect();
            Ok(phase_oracle_single_antenna(&snap.h, &g, p, s2)?.1)
        } else {
            snr_upper_bound(&snap.h, &snap.g, p, s2)
        }
    }
}

fn to_db(linear: f64) -> f64 {
    10.0 * libm::log10(linear.max(SNR_FLOOR))
}
