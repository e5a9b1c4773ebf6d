//! Inner (disturbance-compensated) and outer (state-feedback) loops on the
//! augmented state `x_a = [q, q', z_hat]`, their transfer functions and the
//! Jordan-form view of the inner loop.
//!
//! Throughout, `alpha = J_n / J` and `g` is the normalized observer gain
//! `L^T D_Dn`. With zero friction the inner loop has eigenvalues
//! `{1, 1, 1 - alpha g}`.

mod jordan;
mod tf;

pub use jordan::{jordan_decompose, outer_spectrum_factored, FactoredSpectrum, JordanForm};
pub use tf::{inner_tf, open_loop_tf, LoopTransfer, OpenLoopTransfer};

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::analysis::Stability;
use crate::error::{non_negative, positive, Result};
use crate::observer::ObserverConfig;
use crate::plant::DiscretePlant;

/// Position and velocity feedback gains, `K = [K_p, K_v, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackGains {
    #[serde(alias = "K_p")]
    pub kp: f64,
    #[serde(alias = "K_v", alias = "kd", alias = "K_d")]
    pub kv: f64,
}

impl FeedbackGains {
    pub fn new(kp: f64, kv: f64) -> Result<Self> {
        Ok(Self {
            kp: non_negative("position gain", kp)?,
            kv: non_negative("velocity gain", kv)?,
        })
    }

    pub fn zero() -> Self {
        Self { kp: 0.0, kv: 0.0 }
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.kp, self.kv, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    Inner,
    /// `u_p = q_ref - K^T x_a` on the measured augmented state.
    Outer,
    /// Feedback on the Jordan coordinates of the inner loop with zero weight
    /// on the observer mode.
    OuterModal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSystem {
    pub a: Matrix3<f64>,
    pub b: Vector3<f64>,
    pub c: Vector3<f64>,
    pub kind: LoopKind,
}

/// `J_n / J`.
pub fn inertia_ratio(plant: &DiscretePlant, cfg: &ObserverConfig) -> f64 {
    cfg.nominal().source().inertia() / plant.source().inertia()
}

/// Inner loop with the disturbance estimate fed back, `u = u_p + tau_hat`:
///
/// ```text
/// A_Di = [[A_D - B_D L^T, B_D], [L^T (A_Dn - I), 1]],  B_Di = [B_D; L^T B_Dn],  C_Di = [0, 1, 0]
/// ```
pub fn build_inner_loop(plant: &DiscretePlant, cfg: &ObserverConfig) -> Result<AugmentedSystem> {
    let nominal = cfg.nominal();
    plant.check_same_period(nominal)?;
    let l = cfg.gain_vector();
    let top = plant.a - plant.b * l.transpose();
    let bottom = (nominal.a - Matrix2::identity()).transpose() * l;
    let a = Matrix3::new(
        top[(0, 0)], top[(0, 1)], plant.b[0],
        top[(1, 0)], top[(1, 1)], plant.b[1],
        bottom[0], bottom[1], 1.0,
    );
    let b = Vector3::new(plant.b[0], plant.b[1], l.dot(&nominal.b));
    Ok(AugmentedSystem {
        a,
        b,
        c: Vector3::new(0.0, 1.0, 0.0),
        kind: LoopKind::Inner,
    })
}

/// Outer loop `A_Do = A_Di - B_Di K^T`, `B_Do = B_Di`, `C_Do = K`.
pub fn build_outer_loop(
    plant: &DiscretePlant,
    cfg: &ObserverConfig,
    gains: &FeedbackGains,
) -> Result<AugmentedSystem> {
    let inner = build_inner_loop(plant, cfg)?;
    let k = gains.vector();
    Ok(AugmentedSystem {
        a: inner.a - inner.b * k.transpose(),
        b: inner.b,
        c: k,
        kind: LoopKind::Outer,
    })
}

/// Outer loop whose feedback acts on the Jordan coordinates of the inner
/// loop: `u_p = q_ref - K^T P x_a`, where `P` projects onto the generalized
/// eigenspace of the double eigenvalue along the observer eigenvector. The
/// observer eigenvalue `1 - alpha g` is then untouched by `K`.
pub fn build_modal_outer_loop(
    inner: &AugmentedSystem,
    jordan: &JordanForm,
    gains: &FeedbackGains,
) -> AugmentedSystem {
    let k = gains.vector();
    let feedback = jordan.modal_projector().transpose() * k;
    AugmentedSystem {
        a: inner.a - inner.b * feedback.transpose(),
        b: inner.b,
        c: k,
        kind: LoopKind::OuterModal,
    }
}

/// Inner-loop constraint `0 < alpha g < 2`, i.e. `|1 - alpha g| < 1`.
pub fn inner_constraint(alpha: f64, normalized_gain: f64) -> Result<Stability> {
    let alpha = positive("inertia ratio", alpha)?;
    let g = positive("normalized observer gain", normalized_gain)?;
    Ok(Stability::from_radius((1.0 - alpha * g).abs()))
}
