use serde::{Deserialize, Serialize};

use super::SimTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegulationMetrics {
    /// `max |q_ref - q|`.
    pub peak_error: f64,
    /// Time after which `|q_ref - q|` stays within 2% of the reference
    /// amplitude (or of the peak error when the reference is zero). `None`
    /// if the last sample is outside the band.
    pub settling_time: Option<f64>,
    /// Mean `|q_ref - q|` over the final 10% of the run.
    pub steady_state_error: f64,
    /// `sum |u| T`.
    pub control_effort: f64,
}

pub fn regulation_metrics(trace: &SimTrace) -> RegulationMetrics {
    let recs = &trace.records;
    let errors: Vec<f64> = recs.iter().map(|r| r.error().abs()).collect();
    let peak_error = errors.iter().copied().fold(0.0, f64::max);
    let amplitude = recs.iter().map(|r| r.q_ref.abs()).fold(0.0, f64::max);
    let band = 0.02 * if amplitude > 0.0 { amplitude } else { peak_error };

    let settling_time = match errors.iter().rposition(|&e| e > band) {
        None => Some(recs.first().map_or(0.0, |r| r.t)),
        Some(i) if i + 1 < recs.len() => Some(recs[i + 1].t),
        Some(_) => None,
    };
    let tail = (recs.len() / 10).max(1).min(recs.len());
    let steady_state_error = if tail == 0 {
        0.0
    } else {
        errors[errors.len() - tail..].iter().sum::<f64>() / tail as f64
    };
    let control_effort = recs.iter().map(|r| r.u.abs()).sum::<f64>() * trace.sample_time;
    RegulationMetrics {
        peak_error,
        settling_time,
        steady_state_error,
        control_effort,
    }
}
