//! Closed-loop simulation of the observer-based controller and a PID
//! baseline on the exact sampled plant.
//!
//! The true plant is advanced with the exact zero-order-hold map and the
//! intersample disturbance integral; the observer only sees sampled states
//! and its own nominal model.

mod metrics;
mod profile;

pub use metrics::{regulation_metrics, RegulationMetrics};
pub use profile::{DisturbanceProfile, ReferenceProfile};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};
use crate::loops::FeedbackGains;
use crate::observer::{ObserverConfig, ObserverState};
use crate::plant::{lumped_disturbance, ContinuousPlant, DiscretePlant};

/// Runs are aborted once `|q|` exceeds this.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

/// Default horizon of the regulation scenario, seconds.
pub const DEFAULT_HORIZON: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub t: f64,
    pub q: f64,
    pub qdot: f64,
    pub q_ref: f64,
    pub u: f64,
    pub tau_d: f64,
    pub tau_dn: f64,
    pub tau_hat: Option<f64>,
    pub e_z: Option<f64>,
    pub z_hat: Option<f64>,
}

impl TraceRecord {
    pub fn state(&self) -> Vector2<f64> {
        Vector2::new(self.q, self.qdot)
    }

    pub fn error(&self) -> f64 {
        self.q_ref - self.q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    DisturbanceObserver,
    Pid,
    /// Observer running alongside an uncompensated plant.
    OpenLoopObserver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub controller: Controller,
    pub sample_time: f64,
    pub records: Vec<TraceRecord>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidConfig {
    #[serde(alias = "K_p")]
    pub kp: f64,
    #[serde(alias = "K_i")]
    pub ki: f64,
    #[serde(alias = "K_d")]
    pub kd: f64,
}

impl Default for PidConfig {
    fn default() -> Self {
        Self {
            kp: 500.0,
            ki: 2500.0,
            kd: 25.0,
        }
    }
}

impl PidConfig {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Result<Self> {
        Ok(Self {
            kp: non_negative("PID proportional gain", kp)?,
            ki: non_negative("PID integral gain", ki)?,
            kd: non_negative("PID derivative gain", kd)?,
        })
    }
}

/// Number of samples covering `horizon` seconds.
pub fn steps_for(horizon: f64, sample_time: f64) -> Result<usize> {
    let horizon = positive("horizon", horizon)?;
    let sample_time = positive("sampling period", sample_time)?;
    Ok((horizon / sample_time).round().max(1.0) as usize)
}

fn check_steps(steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "step count",
            requirement: "at least 1",
            value: 0.0,
        });
    }
    Ok(())
}

fn advance(
    plant: &DiscretePlant,
    x: &Vector2<f64>,
    u: f64,
    t: f64,
    dist: &DisturbanceProfile,
    k: usize,
) -> Result<Vector2<f64>> {
    let pi = plant.disturbance_integral(t, |s| dist.value(s));
    let next = plant.step(x, u, &pi);
    let magnitude = next[0].abs();
    if !next[0].is_finite() || !next[1].is_finite() || magnitude > DIVERGENCE_LIMIT {
        return Err(Error::Diverged { step: k + 1, magnitude });
    }
    Ok(next)
}

/// Observer-based controller: `u_p = K_p q_ref - K_p q - K_v q'` and
/// `u = u_p + tau_hat`. Starts at rest with `tau_hat(0) = 0`.
pub fn simulate_dob(
    plant: &ContinuousPlant,
    cfg: &ObserverConfig,
    gains: &FeedbackGains,
    dist: &DisturbanceProfile,
    reference: &ReferenceProfile,
    steps: usize,
) -> Result<SimTrace> {
    check_steps(steps)?;
    let nominal = cfg.nominal();
    let sample_time = nominal.sample_time();
    let true_plant = plant.discretize(sample_time)?;
    dist.validate(sample_time)?;
    reference.validate(sample_time)?;

    let mut x = Vector2::zeros();
    let mut obs = ObserverState::initial(&x, cfg);
    let mut records = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = k as f64 * sample_time;
        let q_ref = reference.value(t);
        let tau_d = dist.value(t);
        let tau_hat = obs.estimate(&x, cfg);
        let u_p = gains.kp * q_ref - gains.kp * x[0] - gains.kv * x[1];
        let u = u_p + tau_hat;
        let tau_dn = lumped_disturbance(&x, u, tau_d, plant, nominal.source())?.value();
        records.push(TraceRecord {
            k,
            t,
            q: x[0],
            qdot: x[1],
            q_ref,
            u,
            tau_d,
            tau_dn,
            tau_hat: Some(tau_hat),
            e_z: Some(tau_dn - tau_hat),
            z_hat: Some(obs.z_hat),
        });
        obs = obs.step(&x, u, cfg);
        x = advance(&true_plant, &x, u, t, dist, k)?;
    }
    Ok(SimTrace {
        controller: Controller::DisturbanceObserver,
        sample_time,
        records,
    })
}

/// PID baseline `u = K_p e + K_i I - K_d q'` with `e = q_ref - q` and the
/// forward-Euler integral `I(k+1) = I(k) + T e(k)`.
pub fn simulate_pid(
    plant: &ContinuousPlant,
    pid: &PidConfig,
    sample_time: f64,
    dist: &DisturbanceProfile,
    reference: &ReferenceProfile,
    steps: usize,
) -> Result<SimTrace> {
    check_steps(steps)?;
    let pid = PidConfig::new(pid.kp, pid.ki, pid.kd)?;
    let true_plant = plant.discretize(sample_time)?;
    dist.validate(sample_time)?;
    reference.validate(sample_time)?;

    let mut x = Vector2::zeros();
    let mut integral = 0.0;
    let mut records = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = k as f64 * sample_time;
        let q_ref = reference.value(t);
        let tau_d = dist.value(t);
        let e = q_ref - x[0];
        let u = pid.kp * e + pid.ki * integral - pid.kd * x[1];
        records.push(TraceRecord {
            k,
            t,
            q: x[0],
            qdot: x[1],
            q_ref,
            u,
            tau_d,
            tau_dn: tau_d,
            tau_hat: None,
            e_z: None,
            z_hat: None,
        });
        integral += sample_time * e;
        x = advance(&true_plant, &x, u, t, dist, k)?;
    }
    Ok(SimTrace {
        controller: Controller::Pid,
        sample_time,
        records,
    })
}

/// Stand-alone observer: the plant is driven by `input(t)` alone and the
/// estimate is never fed back. Never aborts; `e_z` may grow without bound.
pub fn simulate_observer<F>(
    plant: &ContinuousPlant,
    cfg: &ObserverConfig,
    dist: &DisturbanceProfile,
    input: F,
    steps: usize,
) -> Result<SimTrace>
where
    F: Fn(f64) -> f64,
{
    check_steps(steps)?;
    let nominal = cfg.nominal();
    let sample_time = nominal.sample_time();
    let true_plant = plant.discretize(sample_time)?;
    dist.validate(sample_time)?;

    let mut x = Vector2::zeros();
    let mut obs = ObserverState::initial(&x, cfg);
    let mut records = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = k as f64 * sample_time;
        let tau_d = dist.value(t);
        let u = input(t);
        let tau_hat = obs.estimate(&x, cfg);
        let tau_dn = lumped_disturbance(&x, u, tau_d, plant, nominal.source())?.value();
        records.push(TraceRecord {
            k,
            t,
            q: x[0],
            qdot: x[1],
            q_ref: 0.0,
            u,
            tau_d,
            tau_dn,
            tau_hat: Some(tau_hat),
            e_z: Some(tau_dn - tau_hat),
            z_hat: Some(obs.z_hat),
        });
        obs = obs.step(&x, u, cfg);
        let pi = true_plant.disturbance_integral(t, |s| dist.value(s));
        x = true_plant.step(&x, u, &pi);
    }
    Ok(SimTrace {
        controller: Controller::OpenLoopObserver,
        sample_time,
        records,
    })
}
