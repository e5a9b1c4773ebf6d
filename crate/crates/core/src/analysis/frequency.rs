use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::transfer::RationalTf;

const UNIT_CIRCLE_TOL: f64 = 1e-9;

/// Log-spaced angular frequencies. `hi = None` means `0.999 pi / T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub lo: f64,
    pub hi: Option<f64>,
    pub points: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self {
            lo: 1e-2,
            hi: None,
            points: 400,
        }
    }
}

impl FrequencyGrid {
    pub fn values(&self, sample_time: f64) -> Result<Vec<f64>> {
        let nyquist = PI / sample_time;
        let hi = self.hi.unwrap_or(0.999 * nyquist);
        if self.points < 2 {
            return Err(Error::InvalidSweep(format!("frequency grid needs at least 2 points, got {}", self.points)));
        }
        if !(self.lo > 0.0 && hi > self.lo && hi < nyquist) {
            return Err(Error::InvalidSweep(format!(
                "frequency range must satisfy 0 < lo < hi < pi/T, got {}..{hi}",
                self.lo
            )));
        }
        let (a, b) = (self.lo.ln(), hi.ln());
        let n = self.points - 1;
        Ok((0..=n)
            .map(|i| match i {
                0 => self.lo,
                _ if i == n => hi,
                _ => (a + (b - a) * i as f64 / n as f64).exp(),
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "frequencies")]
pub enum CrossoverStatus {
    Unique,
    None,
    Multiple(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    pub sample_time: f64,
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub magnitude_db: Vec<f64>,
    /// Unwrapped phase in degrees.
    pub phase_deg: Vec<f64>,
    pub crossover: CrossoverStatus,
    pub gain_crossover: Option<f64>,
    pub phase_margin: Option<f64>,
}

fn eval_at(tf: &RationalTf, omega: f64, sample_time: f64) -> Complex64 {
    tf.eval(Complex64::from_polar(1.0, omega * sample_time))
}

fn nearest_branch(phase: f64, target: f64) -> f64 {
    phase + 360.0 * ((target - phase) / 360.0).round()
}

/// `tf(e^{j w T})` on the grid, with the gain crossover located by bisection
/// on `|L| = 1` and the phase margin `180 + arg L` at that frequency.
pub fn frequency_response(tf: &RationalTf, sample_time: f64, grid: &FrequencyGrid) -> Result<FrequencyResponse> {
    let sample_time = positive("sampling period", sample_time)?;
    let omegas = grid.values(sample_time)?;
    let values: Vec<Complex64> = omegas.iter().map(|&w| eval_at(tf, w, sample_time)).collect();
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("frequency response (pole on the unit circle inside the band)"));
    }

    let integrators = tf.poles().iter().filter(|p| (*p - 1.0).norm() <= UNIT_CIRCLE_TOL).count() as f64
        - tf.zeros().iter().filter(|z| (*z - 1.0).norm() <= UNIT_CIRCLE_TOL).count() as f64;
    let mut phase_deg = Vec::with_capacity(values.len());
    let mut prev = -90.0 * integrators;
    for v in &values {
        let p = nearest_branch(v.arg().to_degrees(), prev);
        phase_deg.push(p);
        prev = p;
    }
    let magnitude_db: Vec<f64> = values.iter().map(|v| 20.0 * v.norm().log10()).collect();

    let mut crossings = Vec::new();
    for i in 0..omegas.len() - 1 {
        let (a, b) = (values[i].norm() - 1.0, values[i + 1].norm() - 1.0);
        if a == 0.0 || (a.signum() != b.signum() && b != 0.0) {
            let (mut lo, mut hi) = (omegas[i], omegas[i + 1]);
            for _ in 0..200 {
                if hi - lo <= 1e-14 * hi {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if (eval_at(tf, mid, sample_time).norm() - 1.0).signum() == a.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let w = 0.5 * (lo + hi);
            let phase = nearest_branch(eval_at(tf, w, sample_time).arg().to_degrees(), phase_deg[i]);
            crossings.push((w, phase));
        }
    }
    let (crossover, gain_crossover, phase_margin) = match crossings.as_slice() {
        [] => (CrossoverStatus::None, None, None),
        [(w, phase)] => (CrossoverStatus::Unique, Some(*w), Some(180.0 + phase)),
        many => (CrossoverStatus::Multiple(many.iter().map(|c| c.0).collect()), None, None),
    };
    Ok(FrequencyResponse {
        sample_time,
        grid: omegas,
        values,
        magnitude_db,
        phase_deg,
        crossover,
        gain_crossover,
        phase_margin,
    })
}
