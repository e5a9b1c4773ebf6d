use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{inertia_ratio, FeedbackGains};
use crate::error::{Error, Result};
use crate::observer::ObserverConfig;
use crate::plant::DiscretePlant;
use crate::transfer::{Cancellation, RationalTf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopTransfer {
    /// Full third-order form with the state-space poles.
    pub assembled: RationalTf,
    pub reduced: RationalTf,
    pub cancelled: Vec<Cancellation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenLoopTransfer {
    pub open: RationalTf,
    /// `L / (1 + L)` with all common factors kept.
    pub closed: RationalTf,
    pub open_reduced: RationalTf,
    pub cancelled: Vec<Cancellation>,
    compensator_zero: f64,
    compensator_pole: f64,
}

impl OpenLoopTransfer {
    /// Zero and pole of the lead/lag factor `(z - (1 - g)) / (z - (1 - alpha g))`.
    pub fn compensator(&self) -> (f64, f64) {
        (self.compensator_zero, self.compensator_pole)
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn require_frictionless(plant: &DiscretePlant, cfg: &ObserverConfig) -> Result<()> {
    plant.check_same_period(cfg.nominal())?;
    let (p, n) = (plant.source(), cfg.nominal().source());
    if !p.is_frictionless() || !n.is_frictionless() {
        return Err(Error::FrictionNotNeglected {
            plant: p.friction(),
            nominal: n.friction(),
        });
    }
    Ok(())
}

/// Velocity response of the inner loop,
/// `(T/J) (z - 1 + g) / ((z - 1)(z - 1 + alpha g))` after cancelling the
/// common factor `z - 1`.
pub fn inner_tf(plant: &DiscretePlant, cfg: &ObserverConfig) -> Result<LoopTransfer> {
    require_frictionless(plant, cfg)?;
    let t = plant.sample_time();
    let j = plant.source().inertia();
    let g = cfg.normalized_gain();
    let alpha = inertia_ratio(plant, cfg);
    let assembled = RationalTf::from_zpk(
        t / j,
        vec![real(1.0), real(1.0 - g)],
        vec![real(1.0), real(1.0), real(1.0 - alpha * g)],
    )?;
    let red = assembled.reduce()?;
    Ok(LoopTransfer {
        assembled,
        reduced: red.tf,
        cancelled: red.cancelled,
    })
}

/// Open loop from the position reference through state feedback,
/// `(T/(2J)) (z - (1 - g))/(z - (1 - alpha g)) (2 K_v (z - 1) + K_p T (z + 1)) / (z - 1)^2`.
pub fn open_loop_tf(plant: &DiscretePlant, cfg: &ObserverConfig, gains: &FeedbackGains) -> Result<OpenLoopTransfer> {
    require_frictionless(plant, cfg)?;
    let t = plant.sample_time();
    let j = plant.source().inertia();
    let g = cfg.normalized_gain();
    let alpha = inertia_ratio(plant, cfg);
    let lead = 2.0 * gains.kv + gains.kp * t;
    let pd_zero = (2.0 * gains.kv - gains.kp * t) / lead;
    let zeros = if lead > 0.0 { vec![real(1.0 - g), real(pd_zero)] } else { Vec::new() };
    let open = RationalTf::from_zpk(
        t / (2.0 * j) * lead,
        zeros,
        vec![real(1.0), real(1.0), real(1.0 - alpha * g)],
    )?;
    let closed = open.unity_feedback()?;
    let red = open.reduce()?;
    Ok(OpenLoopTransfer {
        open,
        closed,
        open_reduced: red.tf,
        cancelled: red.cancelled,
        compensator_zero: 1.0 - g,
        compensator_pole: 1.0 - alpha * g,
    })
}
