//! WebAssembly bindings for the static demo page in `www/`.
//!
//! The exported functions are thin wrappers over plain Rust functions so
//! the logic also runs (and is tested) natively.

use lyapgdm_core::baselines::ActionGrid;
use lyapgdm_core::diffusion::NoiseSchedule;
use lyapgdm_core::env::{propulsion_power, Env, EnvConfig};
use lyapgdm_core::policy::{run_episode, MyopicPolicy, Policy, RandomPolicy, StaticPolicy};
use lyapgdm_core::{Error, Result};
use wasm_bindgen::prelude::*;

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Propulsion power (W) at `samples` evenly spaced speeds in `[0, v_max]`.
pub fn power_curve(v_max: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::Usage("need at least two samples".into()));
    }
    (0..samples)
        .map(|i| propulsion_power(v_max * i as f64 / (samples - 1) as f64))
        .collect()
}

#[wasm_bindgen]
pub fn propulsion_curve(v_max: f64, samples: usize) -> std::result::Result<Vec<f64>, JsError> {
    power_curve(v_max, samples).map_err(js)
}

/// One simulated episode, flattened for JavaScript.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Flight {
    xs: Vec<f64>,
    ys: Vec<f64>,
    energy: Vec<f64>,
    queue: Vec<f64>,
    rate: Vec<f64>,
    devices: Vec<f64>,
}

#[wasm_bindgen]
impl Flight {
    /// Positions include the start point, so they have `T + 1` entries.
    pub fn xs(&self) -> Vec<f64> {
        self.xs.clone()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.ys.clone()
    }

    pub fn energy(&self) -> Vec<f64> {
        self.energy.clone()
    }

    pub fn queue(&self) -> Vec<f64> {
        self.queue.clone()
    }

    pub fn rate(&self) -> Vec<f64> {
        self.rate.clone()
    }

    /// Device coordinates as `[x1, y1, x2, y2, ...]`.
    pub fn devices(&self) -> Vec<f64> {
        self.devices.clone()
    }

    pub fn mean_rate(&self) -> f64 {
        mean(&self.rate)
    }

    pub fn mean_energy(&self) -> f64 {
        mean(&self.energy)
    }

    pub fn final_queue(&self) -> f64 {
        self.queue.last().copied().unwrap_or(0.0)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Flies the default scenario with a baseline policy.
pub fn simulate(policy: &str, bandwidth_mhz: f64, v_weight: f64, seed: u64) -> Result<Flight> {
    let cfg = EnvConfig {
        bandwidth: bandwidth_mhz * 1e6,
        v_weight,
        ..EnvConfig::default()
    };
    let env = Env::new(cfg)?;
    let mut policy: Box<dyn Policy> = match policy {
        "myopic" => Box::new(MyopicPolicy {
            grid: ActionGrid::default_for(env.config())?,
        }),
        "static" => Box::new(StaticPolicy),
        "random" => Box::new(RandomPolicy::new(seed)),
        other => return Err(Error::Usage(format!("unknown policy {other:?}"))),
    };
    let slots = run_episode(&env, policy.as_mut())?;
    let cfg = env.config();
    let mut flight = Flight {
        xs: vec![cfg.start.x],
        ys: vec![cfg.start.y],
        energy: Vec::with_capacity(slots.len()),
        queue: Vec::with_capacity(slots.len()),
        rate: Vec::with_capacity(slots.len()),
        devices: cfg.devices.iter().flat_map(|d| [d.x, d.y]).collect(),
    };
    for s in &slots {
        flight.xs.push(s.position.x);
        flight.ys.push(s.position.y);
        flight.energy.push(s.energy_j);
        flight.queue.push(s.queue);
        flight.rate.push(s.sum_rate_mbps);
    }
    Ok(flight)
}

#[wasm_bindgen]
pub fn fly(policy: &str, bandwidth_mhz: f64, v_weight: f64, seed: u64) -> std::result::Result<Flight, JsError> {
    simulate(policy, bandwidth_mhz, v_weight, seed).map_err(js)
}

/// `[ᾱ_1, ..., ᾱ_K]` of the exponential noise schedule.
pub fn alpha_bars(steps: usize, beta_min: f64, beta_max: f64) -> Result<Vec<f64>> {
    Ok(NoiseSchedule::new(steps, beta_min, beta_max)?.alpha_bars().to_vec())
}

#[wasm_bindgen]
pub fn noise_schedule(steps: usize, beta_min: f64, beta_max: f64) -> std::result::Result<Vec<f64>, JsError> {
    alpha_bars(steps, beta_min, beta_max).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_curve_endpoints() {
        let p = power_curve(25.0, 26).unwrap();
        assert_eq!(p.len(), 26);
        assert!((p[0] - 168.4842).abs() < 1e-3);
        assert!((p[10] - propulsion_power(10.0).unwrap()).abs() < 1e-12);
        assert!(power_curve(25.0, 1).is_err());
    }

    #[test]
    fn flights_reach_the_destination() {
        for policy in ["myopic", "static", "random"] {
            let f = simulate(policy, 1.0, 0.5, 3).unwrap();
            assert_eq!(f.xs().len(), 101);
            assert_eq!(f.energy().len(), 100);
            assert!((f.xs()[100] - 600.0).hypot(f.ys()[100]) <= 25.0 + 1e-9);
            assert_eq!(f.devices().len(), 6);
            assert!(f.mean_rate() > 0.0 && f.mean_energy() > 0.0);
        }
        assert!(simulate("teleport", 1.0, 0.5, 0).is_err());
        assert!(simulate("static", -1.0, 0.5, 0).is_err());
    }

    #[test]
    fn schedule_decays() {
        let ab = alpha_bars(5, 0.1, 10.0).unwrap();
        assert_eq!(ab.len(), 5);
        assert!(ab.windows(2).all(|w| w[1] < w[0]));
        assert!(ab[4] < 0.05);
        assert!(alpha_bars(0, 0.1, 10.0).is_err());
    }
}
