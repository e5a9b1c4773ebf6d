//! The run configuration: a single JSON document whose defaults reproduce
//! the reference scenario (J = 0.1 kg m^2, T = 1 ms, K_p = 500, K_v = 25).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dobstab::analysis::{Feedback, FrequencyGrid, LoopSetup, ObserverGain, Sweep, SweepParameter};
use dobstab::sim::{steps_for, DisturbanceProfile, PidConfig, ReferenceProfile};
use dobstab::{ContinuousPlant, FeedbackGains, ObserverConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    #[serde(alias = "J", alias = "J_m", alias = "J_n", alias = "J_mn")]
    pub inertia: f64,
    #[serde(alias = "b", alias = "b_m", alias = "b_n", alias = "b_mn")]
    pub friction: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            inertia: 0.1,
            friction: 0.0,
        }
    }
}

/// Exactly one of the two gains; neither means `gain = 50`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverParams {
    #[serde(alias = "g_D", skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(alias = "g", skip_serializing_if = "Option::is_none")]
    pub normalized_gain: Option<f64>,
}

pub const DEFAULT_OBSERVER_GAIN: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainParams {
    #[serde(alias = "K_p")]
    pub kp: f64,
    #[serde(alias = "K_v", alias = "K_d", alias = "kd")]
    pub kv: f64,
}

impl Default for GainParams {
    fn default() -> Self {
        Self { kp: 500.0, kv: 25.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidParams {
    #[serde(alias = "K_p")]
    pub kp: f64,
    #[serde(alias = "K_i")]
    pub ki: f64,
    #[serde(alias = "K_d")]
    pub kd: f64,
}

impl Default for PidParams {
    fn default() -> Self {
        let pid = PidConfig::default();
        Self {
            kp: pid.kp,
            ki: pid.ki,
            kd: pid.kd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub disturbance: DisturbanceProfile,
    pub reference: ReferenceProfile,
    /// Seconds.
    pub horizon: f64,
    pub pid_baseline: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            disturbance: DisturbanceProfile::default(),
            reference: ReferenceProfile::regulation(),
            horizon: dobstab::sim::DEFAULT_HORIZON,
            pid_baseline: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transfer {
    #[default]
    Open,
    Closed,
    Inner,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    pub feedback: Feedback,
    pub transfer: Transfer,
    pub frequency: FrequencyGrid,
    /// `param:lo:hi:count`, overridden by `--sweep`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantParams,
    pub nominal: PlantParams,
    #[serde(alias = "T_s")]
    pub sample_time: f64,
    pub observer: ObserverParams,
    pub gains: GainParams,
    pub pid: PidParams,
    pub scenario: Scenario,
    pub analysis: AnalysisParams,
    pub output: OutputParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            plant: PlantParams::default(),
            nominal: PlantParams::default(),
            sample_time: 1e-3,
            observer: ObserverParams::default(),
            gains: GainParams::default(),
            pid: PidParams::default(),
            scenario: Scenario::default(),
            analysis: AnalysisParams::default(),
            output: OutputParams::default(),
        }
    }
}

/// Where the configuration came from, kept for line-referenced messages.
#[derive(Debug, Clone)]
pub struct Source {
    name: String,
    text: Option<String>,
}

impl Source {
    pub fn defaults() -> Self {
        Self {
            name: "<defaults>".into(),
            text: None,
        }
    }

    /// Line of the value at `path`, where each path segment lists the
    /// accepted spellings of one key. Falls back to the deepest segment
    /// found.
    pub fn line_of(&self, path: &[&[&str]]) -> Option<usize> {
        let text = self.text.as_deref()?;
        let mut offset = 0;
        let mut line = None;
        for names in path {
            let hit = names.iter().filter_map(|n| find_key(text, offset, n)).min();
            match hit {
                Some(pos) => {
                    offset = pos;
                    line = Some(text[..pos].matches('\n').count() + 1);
                }
                None => break,
            }
        }
        line
    }

    pub fn message(&self, path: &[&[&str]], msg: impl fmt::Display) -> String {
        match self.line_of(path) {
            Some(line) => format!("{}:{line}: {msg}", self.name),
            None => format!("{}: {msg}", self.name),
        }
    }

    fn error(&self, path: &[&[&str]], msg: impl fmt::Display) -> CliError {
        CliError::Input(self.message(path, msg))
    }
}

fn find_key(text: &str, from: usize, name: &str) -> Option<usize> {
    let quoted = format!("\"{name}\"");
    let mut start = from;
    while let Some(rel) = text[start..].find(&quoted) {
        let pos = start + rel;
        let rest = text[pos + quoted.len()..].trim_start();
        if rest.starts_with(':') {
            return Some(pos);
        }
        start = pos + quoted.len();
    }
    None
}

pub fn load(path: Option<&Path>) -> Result<(RunConfig, Source), CliError> {
    let Some(path) = path else {
        return Ok((RunConfig::default(), Source::defaults()));
    };
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{name}: cannot read config: {e}")))?;
    let config = parse(&text, &name)?;
    Ok((config, Source { name, text: Some(text) }))
}

pub fn parse(text: &str, name: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| {
        let mut msg = e.to_string();
        if let Some(i) = msg.rfind(" at line ") {
            msg.truncate(i);
        }
        CliError::input(format!("{name}:{}:{}: {msg}", e.line(), e.column()))
    })
}

/// A configuration that passed every physical check, with the library
/// objects built from it.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub plant: ContinuousPlant,
    pub nominal: ContinuousPlant,
    pub observer: ObserverGain,
    pub gains: FeedbackGains,
    pub pid: PidConfig,
    pub steps: usize,
    pub sweep: Option<Sweep>,
}

const PLANT: &[&str] = &["plant"];
const NOMINAL: &[&str] = &["nominal"];
const INERTIA: &[&str] = &["inertia", "J", "J_m", "J_n", "J_mn"];
const FRICTION: &[&str] = &["friction", "b", "b_m", "b_n", "b_mn"];

fn positive(source: &Source, path: &[&[&str]], what: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(source.error(path, format!("{what} must be positive, got {v}")))
    }
}

fn non_negative(source: &Source, path: &[&[&str]], what: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(source.error(path, format!("{what} must be non-negative, got {v}")))
    }
}

fn physical(source: &Source, section: &[&str], label: &str, p: PlantParams) -> Result<ContinuousPlant, CliError> {
    let j = positive(source, &[section, INERTIA], &format!("{label} inertia"), p.inertia)?;
    let b = non_negative(source, &[section, FRICTION], &format!("{label} friction"), p.friction)?;
    ContinuousPlant::new(j, b).map_err(|e| source.error(&[section], e))
}

pub fn parse_sweep(spec: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [param, lo, hi, count] = parts.as_slice() else {
        return Err(format!("expected param:lo:hi:count, got '{spec}'"));
    };
    let parameter: SweepParameter = param.parse().map_err(|e: dobstab::Error| e.to_string())?;
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("'{s}' is not a number"));
    let count: usize = count
        .trim()
        .parse()
        .map_err(|_| format!("count '{count}' is not a non-negative integer"))?;
    if count < 2 {
        return Err(format!("count must be at least 2, got {count}"));
    }
    Sweep::new(parameter, number(lo)?, number(hi)?, count).map_err(|e| e.to_string())
}

impl RunConfig {
    /// Validates every field and builds the library objects. Errors point at
    /// the offending line of `source`.
    pub fn resolve(mut self, source: &Source) -> Result<Resolved, CliError> {
        let sample_time = self.sample_time;
        if !(sample_time.is_finite() && sample_time > 0.0) {
            return Err(source.error(
                &[&["sample_time", "T_s"]],
                format!("sampling period must be positive, got {sample_time}"),
            ));
        }

        let plant = physical(source, PLANT, "plant", self.plant)?;
        let nominal = physical(source, NOMINAL, "nominal", self.nominal)?;

        let observer_path: &[&[&str]] = &[&["observer"]];
        let observer = match (self.observer.gain, self.observer.normalized_gain) {
            (Some(_), Some(_)) => {
                return Err(source.error(observer_path, "observer takes either gain or normalized_gain, not both"))
            }
            (Some(g), None) => ObserverGain::Raw(positive(source, &[&["observer"], &["gain", "g_D"]], "observer gain", g)?),
            (None, Some(g)) => ObserverGain::Normalized(positive(
                source,
                &[&["observer"], &["normalized_gain", "g"]],
                "normalized observer gain",
                g,
            )?),
            (None, None) => {
                self.observer.gain = Some(DEFAULT_OBSERVER_GAIN);
                ObserverGain::Raw(DEFAULT_OBSERVER_GAIN)
            }
        };

        let g = self.gains;
        let kp = non_negative(source, &[&["gains"], &["kp", "K_p"]], "position gain", g.kp)?;
        let kv = non_negative(source, &[&["gains"], &["kv", "K_v", "K_d", "kd"]], "velocity gain", g.kv)?;
        let gains = FeedbackGains::new(kp, kv).map_err(|e| source.error(&[&["gains"]], e))?;

        let p = self.pid;
        let pid = PidConfig::new(
            non_negative(source, &[&["pid"], &["kp", "K_p"]], "PID proportional gain", p.kp)?,
            non_negative(source, &[&["pid"], &["ki", "K_i"]], "PID integral gain", p.ki)?,
            non_negative(source, &[&["pid"], &["kd", "K_d"]], "PID derivative gain", p.kd)?,
        )
        .map_err(|e| source.error(&[&["pid"]], e))?;

        let scenario = &self.scenario;
        let horizon = positive(source, &[&["scenario"], &["horizon"]], "horizon", scenario.horizon)?;
        let steps = steps_for(horizon, sample_time).map_err(|e| source.error(&[&["scenario"], &["horizon"]], e))?;
        scenario
            .disturbance
            .validate(sample_time)
            .map_err(|e| source.error(&[&["scenario"], &["disturbance"]], e))?;
        scenario
            .reference
            .validate(sample_time)
            .map_err(|e| source.error(&[&["scenario"], &["reference"]], e))?;
        self.analysis
            .frequency
            .values(sample_time)
            .map_err(|e| source.error(&[&["analysis"], &["frequency"]], e))?;

        let sweep = match &self.analysis.sweep {
            Some(spec) => Some(parse_sweep(spec).map_err(|e| source.error(&[&["analysis"], &["sweep"]], e))?),
            None => None,
        };

        // Building the observer checks the nominal discretization as well.
        let resolved = Resolved {
            config: self,
            plant,
            nominal,
            observer,
            gains,
            pid,
            steps,
            sweep,
        };
        resolved.observer_config().map_err(|e| source.error(observer_path, e))?;
        Ok(resolved)
    }
}

impl Resolved {
    pub fn sample_time(&self) -> f64 {
        self.config.sample_time
    }

    pub fn loop_setup(&self) -> LoopSetup {
        LoopSetup {
            plant: self.plant,
            nominal: self.nominal,
            sample_time: self.sample_time(),
            observer: self.observer,
            gains: self.gains,
            feedback: self.config.analysis.feedback,
        }
    }

    pub fn observer_config(&self) -> dobstab::Result<ObserverConfig> {
        self.loop_setup().discretize().map(|(_, cfg)| cfg)
    }
}
