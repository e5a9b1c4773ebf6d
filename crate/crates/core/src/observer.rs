//! Auxiliary-variable disturbance observer.
//!
//! With `z = tau_dn + L^T x`, the nominal discrete model gives
//!
//! ```text
//! z_hat(k+1) = (1 - L^T D_Dn) z_hat(k) + L^T (A_Dn + D_Dn L^T - I) x(k) + L^T B_Dn u(k)
//! tau_hat(k) = z_hat(k) - L^T x(k)
//! ```
//!
//! and the estimation error `e_z = z - z_hat` obeys
//! `e_z(k+1) = (1 - L^T D_Dn) e_z(k) + delta_tau_dn(k)`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::analysis::Stability;
use crate::error::{finite, positive, Error, Result};
use crate::plant::DiscretePlant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverConfig {
    gain_vector: Vector2<f64>,
    nominal: DiscretePlant,
}

impl ObserverConfig {
    /// Observer with `L = gain * [1, 1]`.
    pub fn new(nominal: DiscretePlant, gain: f64) -> Result<Self> {
        let gain = positive("observer gain", gain)?;
        Ok(Self {
            gain_vector: Vector2::new(gain, gain),
            nominal,
        })
    }

    /// Observer whose normalized gain `L^T D_Dn` equals `normalized`.
    pub fn from_normalized_gain(nominal: DiscretePlant, normalized: f64) -> Result<Self> {
        let normalized = positive("normalized observer gain", normalized)?;
        let norm = disturbance_input_norm(&nominal)?;
        Self::new(nominal, normalized / norm)
    }

    /// Arbitrary gain vector. The closed-form constraints of this crate are
    /// stated for the uniform shape `g [1, 1]`.
    pub fn with_gain_vector(nominal: DiscretePlant, gain_vector: Vector2<f64>) -> Result<Self> {
        finite("gain vector component", gain_vector[0])?;
        finite("gain vector component", gain_vector[1])?;
        Ok(Self { gain_vector, nominal })
    }

    pub fn gain_vector(&self) -> Vector2<f64> {
        self.gain_vector
    }

    /// The scalar `g_D` when `L = g_D [1, 1]`.
    pub fn gain(&self) -> Option<f64> {
        (self.gain_vector[0] == self.gain_vector[1]).then_some(self.gain_vector[0])
    }

    pub fn nominal(&self) -> &DiscretePlant {
        &self.nominal
    }

    /// `L^T D_Dn`; equals `g_D ||D_Dn||_1` for the uniform shape.
    pub fn normalized_gain(&self) -> f64 {
        self.gain_vector.dot(&self.nominal.d)
    }

    /// `1 - L^T D_Dn`, the per-step factor of the estimation error.
    pub fn contraction_factor(&self) -> f64 {
        1.0 - self.normalized_gain()
    }

    /// Stand-alone observer stability from `|1 - L^T D_Dn|`.
    pub fn stability(&self) -> Stability {
        Stability::from_radius(self.contraction_factor().abs())
    }

    /// Limit of `e_z` when the lumped disturbance grows by `increment` every
    /// sample: the fixed point `increment / (1 - factor)`.
    pub fn ramp_error_limit(&self, increment: f64) -> f64 {
        increment / (1.0 - self.contraction_factor())
    }

    /// Auxiliary variable `z = tau_dn + L^T x`.
    pub fn auxiliary(&self, tau_dn: f64, x: &Vector2<f64>) -> f64 {
        tau_dn + self.gain_vector.dot(x)
    }

    pub(crate) fn state_coupling(&self) -> Vector2<f64> {
        let n = &self.nominal;
        // L^T (A_Dn + D_Dn L^T - I) as a column vector
        let m: Matrix2<f64> = n.a + n.d * self.gain_vector.transpose() - Matrix2::identity();
        m.transpose() * self.gain_vector
    }
}

/// `||D_Dn||_1`.
pub fn disturbance_input_norm(nominal: &DiscretePlant) -> Result<f64> {
    let norm = nominal.d.lp_norm(1);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateDisturbanceInput);
    }
    Ok(norm)
}

/// Upper end of the stand-alone stable gain range `0 < g_D < 2 / ||D_Dn||_1`.
pub fn gain_upper_bound(nominal: &DiscretePlant) -> Result<f64> {
    Ok(2.0 / disturbance_input_norm(nominal)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverState {
    pub z_hat: f64,
}

impl ObserverState {
    /// Start with `z_hat = L^T x(0)`, i.e. a zero disturbance estimate.
    pub fn initial(x0: &Vector2<f64>, cfg: &ObserverConfig) -> Self {
        Self {
            z_hat: cfg.gain_vector.dot(x0),
        }
    }

    pub fn step(&self, x: &Vector2<f64>, u: f64, cfg: &ObserverConfig) -> Self {
        let gain = cfg.gain_vector;
        Self {
            z_hat: cfg.contraction_factor() * self.z_hat
                + cfg.state_coupling().dot(x)
                + gain.dot(&cfg.nominal.b) * u,
        }
    }

    /// `tau_hat = z_hat - L^T x`.
    pub fn estimate(&self, x: &Vector2<f64>, cfg: &ObserverConfig) -> f64 {
        self.z_hat - cfg.gain_vector.dot(x)
    }
}

pub fn observer_step(state: &ObserverState, x: &Vector2<f64>, u: f64, cfg: &ObserverConfig) -> ObserverState {
    state.step(x, u, cfg)
}

pub fn disturbance_estimate(state: &ObserverState, x: &Vector2<f64>, cfg: &ObserverConfig) -> f64 {
    state.estimate(x, cfg)
}
