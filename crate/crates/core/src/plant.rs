//! Single-axis servo model and its zero-order-hold discretization.
//!
//! The continuous model is
//!
//! ```text
//! x' = A_C x + B_C u - D_C tau_d,   x = [q, q']
//! A_C = [[0, 1], [0, -b/J]],   B_C = D_C = [0, 1/J]
//! ```
//!
//! Friction enters with a negative sign (dissipative). The same type is used
//! for the nominal model the observer is designed against.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{finite, non_negative, positive, Error, Result};

/// Inertia and viscous friction of a servo axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousPlant {
    inertia: f64,
    friction: f64,
}

/// The nominal model has exactly the same shape as the physical one.
pub type NominalPlant = ContinuousPlant;

impl ContinuousPlant {
    /// `inertia` in kg·m², `friction` in N·m·s/rad.
    pub fn new(inertia: f64, friction: f64) -> Result<Self> {
        Ok(Self {
            inertia: positive("inertia", inertia)?,
            friction: non_negative("viscous friction", friction)?,
        })
    }

    /// Frictionless axis.
    pub fn rigid(inertia: f64) -> Result<Self> {
        Self::new(inertia, 0.0)
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn friction(&self) -> f64 {
        self.friction
    }

    /// Friction-to-inertia ratio `b/J` (the decay rate of velocity).
    pub fn decay_rate(&self) -> f64 {
        self.friction / self.inertia
    }

    pub fn is_frictionless(&self) -> bool {
        self.friction == 0.0
    }

    pub fn continuous_matrices(&self) -> (Matrix2<f64>, Vector2<f64>, Vector2<f64>) {
        continuous_matrices(self)
    }

    pub fn discretize(&self, sample_time: f64) -> Result<DiscretePlant> {
        zoh_discretize(self, sample_time)
    }
}

/// Returns `(A_C, B_C, D_C)`.
pub fn continuous_matrices(plant: &ContinuousPlant) -> (Matrix2<f64>, Vector2<f64>, Vector2<f64>) {
    let a = Matrix2::new(0.0, 1.0, 0.0, -plant.decay_rate());
    let b = Vector2::new(0.0, 1.0 / plant.inertia);
    (a, b, b)
}

/// `(e^x - 1) / x`, exact at the origin.
pub(crate) fn phi1(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// `(e^x - 1 - x) / x^2`. The direct formula cancels badly for small `|x|`,
/// so the Taylor series is used there.
pub(crate) fn phi2(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let mut term: f64 = 0.5;
        let mut sum: f64 = 0.5;
        let mut k = 2.0;
        while term.abs() > 1e-18 * sum.abs() {
            k += 1.0;
            term *= x / k;
            sum += term;
        }
        sum
    } else {
        (x.exp_m1() - x) / (x * x)
    }
}

/// Exact ZOH model `x(k+1) = A_D x(k) + B_D u(k) - Pi_D(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretePlant {
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub d: Vector2<f64>,
    sample_time: f64,
    source: ContinuousPlant,
}

/// Discretizes with closed forms for this 2x2 family:
/// `A_D = [[1, T phi1(-aT)], [0, e^{-aT}]]`, `B_D = D_D = [T^2 phi2(-aT), T phi1(-aT)] / J`.
pub fn zoh_discretize(plant: &ContinuousPlant, sample_time: f64) -> Result<DiscretePlant> {
    if !(sample_time.is_finite() && sample_time > 0.0) {
        return Err(Error::InvalidSampleTime(sample_time));
    }
    let t = sample_time;
    let x = -plant.decay_rate() * t;
    let p1 = phi1(x);
    let p2 = phi2(x);
    let a = Matrix2::new(1.0, t * p1, 0.0, x.exp());
    let b = Vector2::new(t * t * p2, t * p1) / plant.inertia();
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("zoh_discretize"));
    }
    Ok(DiscretePlant {
        a,
        b,
        d: b,
        sample_time,
        source: *plant,
    })
}

// 4-point Gauss-Legendre on [-1, 1].
const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Panels used by [`DiscretePlant::disturbance_integral`]; 4 nodes each.
pub const DISTURBANCE_PANELS: usize = 16;

impl DiscretePlant {
    pub fn sample_time(&self) -> f64 {
        self.sample_time
    }

    /// The continuous plant this model was built from.
    pub fn source(&self) -> &ContinuousPlant {
        &self.source
    }

    /// `e^{A_C tau} D_C`.
    pub fn disturbance_kernel(&self, tau: f64) -> Vector2<f64> {
        let x = -self.source.decay_rate() * tau;
        Vector2::new(tau * phi1(x), x.exp()) / self.source.inertia()
    }

    /// Intersample disturbance vector
    /// `Pi_D(k) = int_0^T e^{A_C tau} D_C tau_d(t_{k+1} - tau) dtau`,
    /// where `t_{k+1} = start + T`. Uses composite Gauss-Legendre, so only
    /// interior points of the sampling interval are evaluated.
    pub fn disturbance_integral<F>(&self, start: f64, disturbance: F) -> Vector2<f64>
    where
        F: Fn(f64) -> f64,
    {
        self.disturbance_integral_with(start, disturbance, DISTURBANCE_PANELS)
    }

    pub fn disturbance_integral_with<F>(&self, start: f64, disturbance: F, panels: usize) -> Vector2<f64>
    where
        F: Fn(f64) -> f64,
    {
        let panels = panels.max(1);
        let t = self.sample_time;
        let end = start + t;
        let h = t / panels as f64;
        let mut acc = Vector2::zeros();
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (node, weight) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
                let tau = mid + 0.5 * h * node;
                acc += self.disturbance_kernel(tau) * (0.5 * h * weight * disturbance(end - tau));
            }
        }
        acc
    }

    /// One step with an explicit intersample disturbance vector.
    pub fn step(&self, x: &Vector2<f64>, u: f64, pi: &Vector2<f64>) -> Vector2<f64> {
        self.a * x + self.b * u - pi
    }

    /// One step assuming the disturbance is constant over the sampling period.
    pub fn step_held(&self, x: &Vector2<f64>, u: f64, disturbance: f64) -> Vector2<f64> {
        self.a * x + self.b * u - self.d * disturbance
    }

    pub(crate) fn check_same_period(&self, other: &DiscretePlant) -> Result<()> {
        let (p, n) = (self.sample_time, other.sample_time);
        if (p - n).abs() > 1e-12 * p.max(n) {
            return Err(Error::SampleTimeMismatch { plant: p, nominal: n });
        }
        Ok(())
    }
}

/// Lumped disturbance referred to the nominal model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LumpedDisturbance(pub f64);

impl LumpedDisturbance {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Disturbance that makes the nominal model reproduce the physical one:
/// the mismatch `(A_Cn - A_C) x + (B_Cn - B_C) u + D_C tau_d` projected onto
/// `D_Cn`. The mismatch always lies in the span of `D_Cn` for this family, so
/// the projection is exact.
pub fn lumped_disturbance(
    x: &Vector2<f64>,
    u: f64,
    tau_d: f64,
    plant: &ContinuousPlant,
    nominal: &NominalPlant,
) -> Result<LumpedDisturbance> {
    finite("input", u)?;
    finite("disturbance", tau_d)?;
    if !(x[0].is_finite() && x[1].is_finite()) {
        return Err(Error::NonFinite("lumped_disturbance state"));
    }
    let (a, b, d) = continuous_matrices(plant);
    let (an, bn, dn) = continuous_matrices(nominal);
    let mismatch = (an - a) * x + (bn - b) * u + d * tau_d;
    Ok(LumpedDisturbance(dn.dot(&mismatch) / dn.dot(&dn)))
}
