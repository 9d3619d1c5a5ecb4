//! Single-UAV uplink data-collection environment.
//!
//! A rotary-wing UAV flies at fixed altitude from `start` to `dest` over
//! `horizon` slots while splitting the uplink bandwidth among ground devices.
//! Each slot the environment charges propulsion energy against a virtual
//! energy queue and rewards the negated drift-plus-penalty, where the
//! penalty is the negated sum rate in Mbps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::lyapunov::{
    drift_plus_penalty, lyapunov_drift, lyapunov_value, reward_from_dpp, DppWeights,
    VirtualQueueBank,
};

/// Rotary-wing propulsion constants.
pub mod propulsion {
    /// Blade profile power in hover (W).
    pub const P0: f64 = 79.8563;
    /// Induced power in hover (W).
    pub const PI: f64 = 88.6279;
    /// Rotor blade tip speed (m/s).
    pub const U_TIP: f64 = 120.0;
    /// Mean rotor induced velocity in hover (m/s).
    pub const V0: f64 = 4.03;
    /// Fuselage drag ratio.
    pub const D0: f64 = 0.6;
    /// Air density (kg/m³).
    pub const RHO: f64 = 1.225;
    /// Rotor solidity.
    pub const SOLIDITY: f64 = 0.05;
    /// Rotor disc area (m²).
    pub const DISC_AREA: f64 = 0.503;
}

const LOG_GAIN_LO: f64 = -12.0;
const LOG_GAIN_HI: f64 = -8.0;

/// Scenario parameters. Defaults reproduce the three-device case study.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub area_x: f64,
    pub area_y: f64,
    pub start: Vec2,
    pub dest: Vec2,
    /// Flight altitude h (m).
    pub altitude: f64,
    pub v_max: f64,
    /// Number of slots T.
    pub horizon: usize,
    /// Slot length (s).
    pub dt: f64,
    /// Total uplink bandwidth B (Hz).
    pub bandwidth: f64,
    /// Device transmit power (W).
    pub tx_power: f64,
    /// Per-slot propulsion energy budget Ē (J).
    pub energy_budget: f64,
    pub devices: Vec<Vec2>,
    /// Channel power gain at 1 m.
    pub beta0: f64,
    /// Noise power spectral density (W/Hz).
    pub noise_psd: f64,
    /// Drift-plus-penalty weight V.
    pub v_weight: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            area_x: 600.0,
            area_y: 450.0,
            start: Vec2::new(0.0, 0.0),
            dest: Vec2::new(600.0, 0.0),
            altitude: 100.0,
            v_max: 25.0,
            horizon: 100,
            dt: 1.0,
            bandwidth: 1e6,
            tx_power: 0.1,
            energy_budget: 140.0,
            devices: vec![
                Vec2::new(100.0, 150.0),
                Vec2::new(300.0, 350.0),
                Vec2::new(500.0, 100.0),
            ],
            beta0: 1e-5,
            noise_psd: 1e-20,
            v_weight: 0.5,
        }
    }
}

impl EnvConfig {
    /// Replaces the device list with `n` uniform draws over the area.
    pub fn with_random_devices(mut self, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.devices = (0..n)
            .map(|_| {
                Vec2::new(
                    rng.random_range(0.0..=self.area_x),
                    rng.random_range(0.0..=self.area_y),
                )
            })
            .collect();
        self
    }

    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    /// Raw policy output length: two velocity logits plus one bandwidth
    /// logit per device.
    pub fn action_dim(&self) -> usize {
        2 + self.devices.len()
    }

    pub fn obs_dim(&self) -> usize {
        2 + 1 + 1 + self.devices.len() + 1
    }

    pub fn diagonal(&self) -> f64 {
        self.area_x.hypot(self.area_y)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.is_finite() && (0.0..=self.area_x).contains(&p.x) && (0.0..=self.area_y).contains(&p.y)
    }

    pub fn clip_to_area(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(0.0, self.area_x), p.y.clamp(0.0, self.area_y))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive and finite, got {v}")))
            }
        };
        positive("env.area_x", self.area_x)?;
        positive("env.area_y", self.area_y)?;
        positive("env.altitude", self.altitude)?;
        positive("env.v_max", self.v_max)?;
        positive("env.dt", self.dt)?;
        positive("env.bandwidth", self.bandwidth)?;
        positive("env.tx_power", self.tx_power)?;
        positive("env.energy_budget", self.energy_budget)?;
        positive("env.beta0", self.beta0)?;
        positive("env.noise_psd", self.noise_psd)?;
        if !(self.v_weight.is_finite() && self.v_weight >= 0.0) {
            return Err(Error::config("env.v", format!("must be non-negative, got {}", self.v_weight)));
        }
        if self.horizon == 0 {
            return Err(Error::config("env.horizon", "must be at least 1"));
        }
        if self.devices.is_empty() {
            return Err(Error::config("env.devices", "at least one device is required"));
        }
        if !self.contains(self.start) {
            return Err(Error::config("env.start", "outside the area"));
        }
        if !self.contains(self.dest) {
            return Err(Error::config("env.dest", "outside the area"));
        }
        if let Some(d) = self.devices.iter().find(|d| !self.contains(**d)) {
            return Err(Error::config(
                "env.devices",
                format!("device ({}, {}) outside the area", d.x, d.y),
            ));
        }
        let reach = self.horizon as f64 * self.dt * self.v_max;
        if self.start.distance(self.dest) > reach {
            return Err(Error::config(
                "env.dest",
                format!("unreachable: {} m away but at most {reach} m can be flown", self.start.distance(self.dest)),
            ));
        }
        Ok(())
    }
}

/// Per-slot environment state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub position: Vec2,
    pub t: usize,
    pub queue: VirtualQueueBank,
    pub done: bool,
}

/// Physical action: horizontal velocity and bandwidth split.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub velocity: Vec2,
    pub bandwidth_ratios: Vec<f64>,
}

impl Action {
    /// Checks the feasibility invariants against `cfg`.
    pub fn is_feasible(&self, cfg: &EnvConfig) -> bool {
        let sum: f64 = self.bandwidth_ratios.iter().sum();
        self.velocity.is_finite()
            && self.velocity.norm() <= cfg.v_max + 1e-9
            && self.bandwidth_ratios.len() == cfg.num_devices()
            && self.bandwidth_ratios.iter().all(|&b| b >= 0.0 && b.is_finite())
            && (sum - 1.0).abs() <= 1e-9
    }
}

/// Feature vector fed to actor and critic networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One replay-buffer entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action_raw: Vec<f64>,
    pub reward: f64,
    pub obs_next: Vec<f64>,
    pub done: bool,
}

/// Everything that happened during one slot, for logging and baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotInfo {
    /// Slot index the action was applied in.
    pub t: usize,
    /// Position at the end of the slot.
    pub position: Vec2,
    /// Velocity actually flown, after the reachability clamp.
    pub velocity: Vec2,
    pub bandwidth_ratios: Vec<f64>,
    pub rates_mbps: Vec<f64>,
    pub sum_rate_mbps: f64,
    pub energy_j: f64,
    /// Queue value after the update.
    pub queue: f64,
    pub drift: f64,
    pub penalty: f64,
    pub dpp: f64,
    pub reward: f64,
}

/// Result of one environment transition.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: EnvState,
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: SlotInfo,
}

/// Free-space line-of-sight power gain `β0 / (‖Δxy‖² + h²)`.
pub fn channel_gain(uav: Vec2, device: Vec2, cfg: &EnvConfig) -> f64 {
    cfg.beta0 / ((uav - device).norm_sq() + cfg.altitude * cfg.altitude)
}

/// Shannon rate of each device on its allocated sub-band (bit/s).
pub fn uplink_rates(uav: Vec2, cfg: &EnvConfig, ratios: &[f64]) -> Vec<f64> {
    cfg.devices
        .iter()
        .zip(ratios)
        .map(|(&dev, &b)| {
            if b <= 0.0 {
                return 0.0;
            }
            let sub_band = b * cfg.bandwidth;
            let snr = cfg.tx_power * channel_gain(uav, dev, cfg) / (sub_band * cfg.noise_psd);
            sub_band * snr.ln_1p() / std::f64::consts::LN_2
        })
        .collect()
}

/// Rotary-wing propulsion power at horizontal `speed` (W).
pub fn propulsion_power(speed: f64) -> Result<f64> {
    use propulsion::*;
    if !(speed.is_finite() && speed >= 0.0) {
        return Err(Error::Domain(format!("speed must be non-negative, got {speed}")));
    }
    let v2 = speed * speed;
    let v0_2 = V0 * V0;
    let blade = P0 * (1.0 + 3.0 * v2 / (U_TIP * U_TIP));
    let induced_ratio = (1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)).sqrt() - v2 / (2.0 * v0_2);
    // The difference loses precision at high speed but stays non-negative.
    let induced = PI * induced_ratio.max(0.0).sqrt();
    let parasite = 0.5 * D0 * RHO * SOLIDITY * DISC_AREA * v2 * speed;
    Ok(blade + induced + parasite)
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Maps a raw policy output onto the feasible action set: tanh-scaled
/// velocity clamped to the speed disc, softmax bandwidth split.
pub fn squash_raw_action(raw: &[f64], cfg: &EnvConfig) -> Action {
    debug_assert_eq!(raw.len(), cfg.action_dim());
    let mut velocity = Vec2::new(raw[0].tanh(), raw[1].tanh()) * cfg.v_max;
    let speed = velocity.norm();
    if speed > cfg.v_max {
        velocity = velocity * (cfg.v_max / speed);
    }
    Action {
        velocity,
        bandwidth_ratios: softmax(&raw[2..]),
    }
}

/// Squashed action as a dimensionless feature vector
/// `[vx/v_max, vy/v_max, b_1..b_N]`.
pub fn squash_features(raw: &[f64]) -> Vec<f64> {
    let (u, w) = (raw[0].tanh(), raw[1].tanh());
    let s = u.hypot(w);
    let scale = if s > 1.0 { 1.0 / s } else { 1.0 };
    let mut out = Vec::with_capacity(raw.len());
    out.push(u * scale);
    out.push(w * scale);
    out.extend(softmax(&raw[2..]));
    out
}

/// Vector-Jacobian product of [`squash_features`]: maps a gradient with
/// respect to the features back onto the raw output.
pub fn squash_features_backward(raw: &[f64], grad: &[f64]) -> Vec<f64> {
    let (u, w) = (raw[0].tanh(), raw[1].tanh());
    let s = u.hypot(w);
    let (gu, gw) = if s > 1.0 {
        let dot = grad[0] * u + grad[1] * w;
        let s3 = s * s * s;
        (grad[0] / s - u * dot / s3, grad[1] / s - w * dot / s3)
    } else {
        (grad[0], grad[1])
    };
    let mut out = Vec::with_capacity(raw.len());
    out.push(gu * (1.0 - u * u));
    out.push(gw * (1.0 - w * w));
    let p = softmax(&raw[2..]);
    let gp: f64 = p.iter().zip(&grad[2..]).map(|(p, g)| p * g).sum();
    out.extend(p.iter().zip(&grad[2..]).map(|(p, g)| p * (g - gp)));
    out
}

/// Overrides `velocity` with a direct flight toward `dest` whenever the
/// proposed move would leave the destination unreachable in the remaining
/// slots. The forced hop never overshoots.
pub fn reachability_clamp(pos: Vec2, velocity: Vec2, t: usize, cfg: &EnvConfig) -> Vec2 {
    let remaining = cfg.horizon.saturating_sub(t + 1) as f64 * cfg.v_max * cfg.dt;
    let proposed = cfg.clip_to_area(pos + velocity * cfg.dt);
    if proposed.distance(cfg.dest) <= remaining {
        return velocity;
    }
    let to_dest = cfg.dest - pos;
    let speed = cfg.v_max.min(to_dest.norm() / cfg.dt);
    to_dest.unit() * speed
}

fn normalized_log_gain(g: f64) -> f64 {
    let mid = 0.5 * (LOG_GAIN_LO + LOG_GAIN_HI);
    let half = 0.5 * (LOG_GAIN_HI - LOG_GAIN_LO);
    ((g.log10() - mid) / half).clamp(-1.0, 1.0)
}

/// Feature layout: `[x/area_x, y/area_y, t/T, queue, g̃_1..g̃_N, ‖dest−pos‖/diag]`.
pub fn build_observation(state: &EnvState, cfg: &EnvConfig) -> Observation {
    let mut f = Vec::with_capacity(cfg.obs_dim());
    f.push(state.position.x / cfg.area_x);
    f.push(state.position.y / cfg.area_y);
    f.push(state.t as f64 / cfg.horizon as f64);
    f.push(state.queue.queues()[0]);
    f.extend(
        cfg.devices
            .iter()
            .map(|&d| normalized_log_gain(channel_gain(state.position, d, cfg))),
    );
    f.push(cfg.dest.distance(state.position) / cfg.diagonal());
    Observation(f)
}

/// The data-collection environment over a validated configuration.
#[derive(Debug, Clone)]
pub struct Env {
    cfg: EnvConfig,
    weights: DppWeights,
}

impl Env {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let weights = DppWeights::new(cfg.v_weight)?;
        Ok(Self { cfg, weights })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn reset(&self) -> (EnvState, Observation) {
        let state = EnvState {
            position: self.cfg.start,
            t: 0,
            queue: VirtualQueueBank::new(vec![self.cfg.energy_budget])
                .expect("validated budget"),
            done: false,
        };
        let obs = build_observation(&state, &self.cfg);
        (state, obs)
    }

    pub fn observe(&self, state: &EnvState) -> Observation {
        build_observation(state, &self.cfg)
    }

    /// Applies a raw policy output.
    pub fn step(&self, state: &EnvState, raw_action: &[f64]) -> Result<StepOutcome> {
        if raw_action.len() != self.cfg.action_dim() {
            return Err(Error::Usage(format!(
                "raw action has {} entries, expected {}",
                raw_action.len(),
                self.cfg.action_dim()
            )));
        }
        if raw_action.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("raw action is not finite".into()));
        }
        let action = squash_raw_action(raw_action, &self.cfg);
        self.step_action(state, &action)
    }

    /// Applies an already-feasible physical action.
    pub fn step_action(&self, state: &EnvState, action: &Action) -> Result<StepOutcome> {
        if state.done {
            return Err(Error::Usage("cannot step a finished episode".into()));
        }
        if action.bandwidth_ratios.len() != self.cfg.num_devices() {
            return Err(Error::Usage("bandwidth split length does not match device count".into()));
        }
        let cfg = &self.cfg;
        let velocity = reachability_clamp(state.position, action.velocity, state.t, cfg);
        let position = cfg.clip_to_area(state.position + velocity * cfg.dt);

        let rates_mbps: Vec<f64> = uplink_rates(position, cfg, &action.bandwidth_ratios)
            .into_iter()
            .map(|r| r / 1e6)
            .collect();
        let sum_rate_mbps: f64 = rates_mbps.iter().sum();
        let energy_j = propulsion_power(velocity.norm())? * cfg.dt;

        let queue = state.queue.update(&[energy_j])?;
        let drift = lyapunov_drift(lyapunov_value(&queue), lyapunov_value(&state.queue));
        let penalty = -sum_rate_mbps;
        let dpp = drift_plus_penalty(drift, penalty, self.weights);
        let reward = reward_from_dpp(dpp);

        let t = state.t + 1;
        let done = t == cfg.horizon;
        let next = EnvState {
            position,
            t,
            queue,
            done,
        };
        let info = SlotInfo {
            t: state.t,
            position,
            velocity,
            bandwidth_ratios: action.bandwidth_ratios.clone(),
            rates_mbps,
            sum_rate_mbps,
            energy_j,
            queue: next.queue.queues()[0],
            drift,
            penalty,
            dpp,
            reward,
        };
        let observation = build_observation(&next, cfg);
        Ok(StepOutcome {
            state: next,
            observation,
            reward,
            done,
            info,
        })
    }
}
