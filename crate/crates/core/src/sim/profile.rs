use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// External torque `tau_d(t)` in N·m. Frequencies are in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceProfile {
    Constant {
        value: f64,
    },
    Step {
        time: f64,
        amplitude: f64,
    },
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    Ramp {
        slope: f64,
        #[serde(default)]
        start: f64,
    },
    Composite {
        parts: Vec<DisturbanceProfile>,
    },
    /// `profile` sampled every `period` seconds and held in between.
    Held {
        period: f64,
        profile: Box<DisturbanceProfile>,
    },
}

impl Default for DisturbanceProfile {
    /// 5 N·m step at 2 s plus a 1 N·m, 2 Hz sinusoid.
    fn default() -> Self {
        DisturbanceProfile::Composite {
            parts: vec![
                DisturbanceProfile::Step {
                    time: 2.0,
                    amplitude: 5.0,
                },
                DisturbanceProfile::Sine {
                    amplitude: 1.0,
                    frequency: 2.0,
                    phase: 0.0,
                },
            ],
        }
    }
}

fn check_finite(what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidProfile(format!("{what} must be finite, got {v}")))
    }
}

fn check_frequency(frequency: f64, sample_time: f64) -> Result<()> {
    check_finite("frequency", frequency)?;
    if frequency < 0.0 || TAU * frequency >= PI / sample_time {
        return Err(Error::InvalidProfile(format!(
            "frequency {frequency} Hz must be non-negative and below the Nyquist frequency {} Hz",
            0.5 / sample_time
        )));
    }
    Ok(())
}

impl DisturbanceProfile {
    pub fn none() -> Self {
        DisturbanceProfile::Constant { value: 0.0 }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            DisturbanceProfile::Constant { value } => *value,
            DisturbanceProfile::Step { time, amplitude } => {
                if t >= *time {
                    *amplitude
                } else {
                    0.0
                }
            }
            DisturbanceProfile::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (TAU * frequency * t + phase).sin(),
            DisturbanceProfile::Ramp { slope, start } => slope * (t - start).max(0.0),
            DisturbanceProfile::Composite { parts } => parts.iter().map(|p| p.value(t)).sum(),
            DisturbanceProfile::Held { period, profile } => profile.value((t / period).floor() * period),
        }
    }

    pub fn validate(&self, sample_time: f64) -> Result<()> {
        match self {
            DisturbanceProfile::Constant { value } => check_finite("disturbance value", *value),
            DisturbanceProfile::Step { time, amplitude } => {
                check_finite("step amplitude", *amplitude)?;
                if !(time.is_finite() && *time >= 0.0) {
                    return Err(Error::InvalidProfile(format!("step time must be non-negative, got {time}")));
                }
                Ok(())
            }
            DisturbanceProfile::Sine {
                amplitude,
                frequency,
                phase,
            } => {
                check_finite("sine amplitude", *amplitude)?;
                check_finite("sine phase", *phase)?;
                check_frequency(*frequency, sample_time)
            }
            DisturbanceProfile::Ramp { slope, start } => {
                check_finite("ramp slope", *slope)?;
                check_finite("ramp start", *start)
            }
            DisturbanceProfile::Composite { parts } => parts.iter().try_for_each(|p| p.validate(sample_time)),
            DisturbanceProfile::Held { period, profile } => {
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::InvalidProfile(format!("hold period must be positive, got {period}")));
                }
                profile.validate(sample_time)
            }
        }
    }
}

/// Position reference `q_ref(t)` in rad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceProfile {
    Step {
        amplitude: f64,
        #[serde(default)]
        time: f64,
    },
    Sinusoid {
        amplitude: f64,
        frequency: f64,
    },
    /// Rise from 0 to `amplitude`, hold, and return to 0, starting at `start`.
    Trapezoid {
        amplitude: f64,
        start: f64,
        rise: f64,
        hold: f64,
        fall: f64,
    },
}

impl Default for ReferenceProfile {
    fn default() -> Self {
        Self::regulation()
    }
}

impl ReferenceProfile {
    /// Unit step at `t = 0`.
    pub fn regulation() -> Self {
        ReferenceProfile::Step {
            amplitude: 1.0,
            time: 0.0,
        }
    }

    /// 0.5 rad, 0.5 Hz sinusoid.
    pub fn tracking() -> Self {
        ReferenceProfile::Sinusoid {
            amplitude: 0.5,
            frequency: 0.5,
        }
    }

    pub fn zero() -> Self {
        ReferenceProfile::Step {
            amplitude: 0.0,
            time: 0.0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            ReferenceProfile::Step { amplitude, time } => {
                if t >= *time {
                    *amplitude
                } else {
                    0.0
                }
            }
            ReferenceProfile::Sinusoid { amplitude, frequency } => amplitude * (TAU * frequency * t).sin(),
            ReferenceProfile::Trapezoid {
                amplitude,
                start,
                rise,
                hold,
                fall,
            } => {
                let s = t - start;
                if s <= 0.0 {
                    0.0
                } else if s < *rise {
                    amplitude * s / rise
                } else if s <= rise + hold {
                    *amplitude
                } else if s < rise + hold + fall {
                    amplitude * (1.0 - (s - rise - hold) / fall)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self, sample_time: f64) -> Result<()> {
        match self {
            ReferenceProfile::Step { amplitude, time } => {
                check_finite("reference amplitude", *amplitude)?;
                if !(time.is_finite() && *time >= 0.0) {
                    return Err(Error::InvalidProfile(format!("step time must be non-negative, got {time}")));
                }
                Ok(())
            }
            ReferenceProfile::Sinusoid { amplitude, frequency } => {
                check_finite("reference amplitude", *amplitude)?;
                check_frequency(*frequency, sample_time)
            }
            ReferenceProfile::Trapezoid {
                amplitude,
                start,
                rise,
                hold,
                fall,
            } => {
                check_finite("reference amplitude", *amplitude)?;
                check_finite("trapezoid start", *start)?;
                for (name, v) in [("rise", rise), ("hold", hold), ("fall", fall)] {
                    if !(v.is_finite() && *v >= 0.0) {
                        return Err(Error::InvalidProfile(format!("trapezoid {name} must be non-negative, got {v}")));
                    }
                }
                if *rise == 0.0 || *fall == 0.0 {
                    return Err(Error::InvalidProfile("trapezoid rise and fall must be positive".into()));
                }
                Ok(())
            }
        }
    }
}
