use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigen::{eigenvalues, permute, spectral_radius};
use super::stability::{Stability, MARGINAL_BAND};
use crate::error::{Error, Result};
use crate::loops::{build_inner_loop, build_modal_outer_loop, build_outer_loop, jordan_decompose, FeedbackGains};
use crate::observer::{disturbance_input_norm, ObserverConfig};
use crate::plant::{ContinuousPlant, DiscretePlant};

const BISECTION_RTOL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Raw observer gain `g_D`.
    Gain,
    /// Normalized observer gain `L^T D_Dn`.
    NormalizedGain,
    /// `J_n / J` at fixed normalized gain.
    InertiaRatio,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Gain => "gain",
            SweepParameter::NormalizedGain => "normalized_gain",
            SweepParameter::InertiaRatio => "alpha",
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g_D" | "gD" | "gain" => Ok(SweepParameter::Gain),
            "g" | "normalized_gain" => Ok(SweepParameter::NormalizedGain),
            "alpha" | "inertia_ratio" => Ok(SweepParameter::InertiaRatio),
            other => Err(Error::InvalidSweep(format!(
                "unknown parameter '{other}' (expected g_D, normalized_gain or alpha)"
            ))),
        }
    }
}

/// Linearly spaced samples `lo, ..., hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Sweep {
    pub fn new(parameter: SweepParameter, lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidSweep(format!("sample count must be at least 2, got {count}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
            return Err(Error::InvalidSweep(format!(
                "range must satisfy 0 < lo < hi, got {lo}..{hi}"
            )));
        }
        Ok(Self { parameter, lo, hi, count })
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocusSample {
    pub value: f64,
    /// Sorted eigenvalue multiset.
    pub eigenvalues: Vec<Complex64>,
    pub spectral_radius: f64,
    pub classification: Stability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingDirection {
    /// Spectral radius rises above 1 with increasing parameter.
    Destabilizing,
    Stabilizing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub value: f64,
    pub direction: CrossingDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootLocusTrace {
    pub parameter: SweepParameter,
    pub samples: Vec<LocusSample>,
    /// `branches[i][k]` is branch `k` at sample `i`, paired by minimal
    /// displacement between neighbouring samples.
    pub branches: Vec<Vec<Complex64>>,
    pub crossings: Vec<Crossing>,
    /// First parameter value where the spectral radius crosses 1.
    pub boundary: Option<f64>,
}

impl RootLocusTrace {
    /// Smallest swept value at which the loop is unstable.
    pub fn min_destabilizing(&self) -> Option<f64> {
        let first = self.samples.first()?;
        if first.classification == Stability::Unstable {
            return Some(first.value);
        }
        self.crossings
            .iter()
            .find(|c| c.direction == CrossingDirection::Destabilizing)
            .map(|c| c.value)
    }
}

fn is_unstable(radius: f64) -> bool {
    !radius.is_finite() || radius > 1.0 + MARGINAL_BAND
}

fn radius_at<F>(builder: &F, value: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<DMatrix<f64>>,
{
    Ok(spectral_radius(&eigenvalues(&builder(value)?)?))
}

fn bisect<F>(builder: &F, mut lo: f64, mut hi: f64, lo_unstable: bool) -> Result<f64>
where
    F: Fn(f64) -> Result<DMatrix<f64>>,
{
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= BISECTION_RTOL * hi.abs().max(lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if is_unstable(radius_at(builder, mid)?) == lo_unstable {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn pair_branches(samples: &[LocusSample]) -> Vec<Vec<Complex64>> {
    let mut branches: Vec<Vec<Complex64>> = Vec::with_capacity(samples.len());
    for s in samples {
        let next = match branches.last() {
            None => s.eigenvalues.clone(),
            Some(prev) if prev.len() == s.eigenvalues.len() && prev.len() <= 8 => {
                let mut best = (f64::INFINITY, Vec::new());
                let mut perm: Vec<usize> = (0..prev.len()).collect();
                permute(&mut perm, 0, &mut |p| {
                    let cost: f64 = p.iter().enumerate().map(|(k, &j)| (prev[k] - s.eigenvalues[j]).norm()).sum();
                    if cost < best.0 {
                        best = (cost, p.to_vec());
                    }
                });
                best.1.iter().map(|&j| s.eigenvalues[j]).collect()
            }
            Some(_) => s.eigenvalues.clone(),
        };
        branches.push(next);
    }
    branches
}

/// Eigenvalues of `builder(p)` over the sweep, with stability crossings
/// refined by bisection on the spectral radius.
pub fn root_locus<F>(builder: F, sweep: &Sweep) -> Result<RootLocusTrace>
where
    F: Fn(f64) -> Result<DMatrix<f64>> + Sync,
{
    let values = sweep.values();
    let samples = values
        .par_iter()
        .map(|&value| {
            let eigenvalues = eigenvalues(&builder(value)?)?;
            let spectral_radius = spectral_radius(&eigenvalues);
            Ok(LocusSample {
                value,
                classification: Stability::from_radius(spectral_radius),
                eigenvalues,
                spectral_radius,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut crossings = Vec::new();
    for w in samples.windows(2) {
        let (a, b) = (is_unstable(w[0].spectral_radius), is_unstable(w[1].spectral_radius));
        if a != b {
            let value = bisect(&builder, w[0].value, w[1].value, a)?;
            let direction = if a { CrossingDirection::Stabilizing } else { CrossingDirection::Destabilizing };
            crossings.push(Crossing { value, direction });
        }
    }
    Ok(RootLocusTrace {
        parameter: sweep.parameter,
        branches: pair_branches(&samples),
        boundary: crossings.first().map(|c| c.value),
        samples,
        crossings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverGain {
    Raw(f64),
    Normalized(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    /// Inner loop only (no state feedback).
    Inner,
    /// State feedback on the measured augmented state.
    Measured,
    /// State feedback on the Jordan coordinates of the inner loop.
    #[default]
    Modal,
}

/// A complete loop description that can be re-parameterized for sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopSetup {
    pub plant: ContinuousPlant,
    pub nominal: ContinuousPlant,
    pub sample_time: f64,
    pub observer: ObserverGain,
    pub gains: FeedbackGains,
    pub feedback: Feedback,
}

impl LoopSetup {
    pub fn discretize(&self) -> Result<(DiscretePlant, ObserverConfig)> {
        let plant = self.plant.discretize(self.sample_time)?;
        let nominal = self.nominal.discretize(self.sample_time)?;
        let cfg = match self.observer {
            ObserverGain::Raw(g) => ObserverConfig::new(nominal, g)?,
            ObserverGain::Normalized(g) => ObserverConfig::from_normalized_gain(nominal, g)?,
        };
        Ok((plant, cfg))
    }

    pub fn matrix(&self) -> Result<Matrix3<f64>> {
        let (plant, cfg) = self.discretize()?;
        let inner = build_inner_loop(&plant, &cfg)?;
        Ok(match self.feedback {
            Feedback::Inner => inner.a,
            Feedback::Measured => build_outer_loop(&plant, &cfg, &self.gains)?.a,
            Feedback::Modal => build_modal_outer_loop(&inner, &jordan_decompose(&inner)?, &self.gains).a,
        })
    }

    /// Copy with one parameter replaced. Sweeping the inertia ratio keeps
    /// the normalized observer gain fixed.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<Self> {
        let mut next = *self;
        match parameter {
            SweepParameter::Gain => next.observer = ObserverGain::Raw(value),
            SweepParameter::NormalizedGain => next.observer = ObserverGain::Normalized(value),
            SweepParameter::InertiaRatio => {
                let normalized = match self.observer {
                    ObserverGain::Normalized(g) => g,
                    ObserverGain::Raw(g) => {
                        g * disturbance_input_norm(&self.nominal.discretize(self.sample_time)?)?
                    }
                };
                next.observer = ObserverGain::Normalized(normalized);
                next.nominal = ContinuousPlant::new(value * self.plant.inertia(), self.nominal.friction())?;
            }
        }
        Ok(next)
    }

    pub fn builder(&self, parameter: SweepParameter) -> impl Fn(f64) -> Result<DMatrix<f64>> + Sync + '_ {
        move |value| {
            let m = self.with_parameter(parameter, value)?.matrix()?;
            Ok(DMatrix::from_column_slice(3, 3, m.as_slice()))
        }
    }

    pub fn root_locus(&self, sweep: &Sweep) -> Result<RootLocusTrace> {
        root_locus(self.builder(sweep.parameter), sweep)
    }
}
