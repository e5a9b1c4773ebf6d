use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use dobstab::analysis::{
    constraint_checks, spectrum, frequency_response, ConstraintCheck, CrossoverStatus, Crossing, Feedback, LocusSample,
    StabilityReport, Sweep,
};
use dobstab::loops::{build_inner_loop, build_modal_outer_loop, build_outer_loop, inertia_ratio, inner_tf, jordan_decompose, open_loop_tf};
use dobstab::observer::{disturbance_input_norm, gain_upper_bound};
use dobstab::sim::{regulation_metrics, simulate_dob, simulate_pid, RegulationMetrics, SimTrace, TraceRecord};
use dobstab::{AugmentedSystem, DiscretePlant, Error};

use crate::config::{Format, Resolved, RunConfig, Source, Transfer};
use crate::error::CliError;
use crate::output::{emit, number, optional, to_json, Csv};

pub const TRACE_COLUMNS: [&str; 10] = ["k", "t", "q", "qdot", "q_ref", "u", "tau_d", "tau_dn", "tau_hat", "e_z"];

fn json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    to_json(value).map_err(CliError::internal)
}


fn classify(sys: &AugmentedSystem) -> dobstab::Result<StabilityReport> {
    spectrum(&sys.a).map(StabilityReport::from_eigenvalues)
}

#[derive(Serialize)]
struct MatrixSet {
    sample_time: f64,
    a: [[f64; 2]; 2],
    b: [f64; 2],
    d: [f64; 2],
}

impl From<&DiscretePlant> for MatrixSet {
    fn from(p: &DiscretePlant) -> Self {
        Self {
            sample_time: p.sample_time(),
            a: [[p.a[(0, 0)], p.a[(0, 1)]], [p.a[(1, 0)], p.a[(1, 1)]]],
            b: [p.b[0], p.b[1]],
            d: [p.d[0], p.d[1]],
        }
    }
}

#[derive(Serialize)]
struct DiscretizeReport<'a> {
    config: &'a RunConfig,
    plant: MatrixSet,
    nominal: MatrixSet,
    disturbance_input_norm: f64,
    gain_upper_bound: f64,
}

pub fn discretize(r: &Resolved, source: &Source) -> Result<(), CliError> {
    let core = |e| CliError::from_core(e, source);
    let plant = r.plant.discretize(r.sample_time()).map_err(core)?;
    let nominal = r.nominal.discretize(r.sample_time()).map_err(core)?;
    let report = DiscretizeReport {
        config: &r.config,
        plant: MatrixSet::from(&plant),
        nominal: MatrixSet::from(&nominal),
        disturbance_input_norm: disturbance_input_norm(&nominal).map_err(core)?,
        gain_upper_bound: gain_upper_bound(&nominal).map_err(core)?,
    };
    let text = match r.config.output.format.unwrap_or(Format::Json) {
        Format::Json => json(&report)?,
        Format::Csv => {
            let mut csv = Csv::new(&["quantity", "value"]);
            for (label, m) in [("plant", &report.plant), ("nominal", &report.nominal)] {
                let entries = [
                    ("a11", m.a[0][0]),
                    ("a12", m.a[0][1]),
                    ("a21", m.a[1][0]),
                    ("a22", m.a[1][1]),
                    ("b1", m.b[0]),
                    ("b2", m.b[1]),
                    ("d1", m.d[0]),
                    ("d2", m.d[1]),
                ];
                for (name, v) in entries {
                    csv.row([format!("{label}.{name}"), number(v)]);
                }
            }
            csv.row(["disturbance_input_norm".to_string(), number(report.disturbance_input_norm)]);
            csv.row(["gain_upper_bound".to_string(), number(report.gain_upper_bound)]);
            csv.finish()
        }
    };
    emit(&text, r.config.output.path.as_deref()).map_err(CliError::from)
}

#[derive(Serialize)]
struct ConstraintsReport<'a> {
    config: &'a RunConfig,
    inertia_ratio: f64,
    normalized_gain: f64,
    gain_upper_bound: f64,
    checks: Vec<ConstraintCheck>,
    constraints_satisfied: bool,
    inner: StabilityReport,
    outer: StabilityReport,
    modal_outer: Option<StabilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    modal_outer_unavailable: Option<String>,
    /// Classification of the loop selected by `analysis.feedback`.
    selected: Feedback,
    stable: Option<bool>,
}

pub fn constraints(r: &Resolved, source: &Source) -> Result<(), CliError> {
    let core = |e| CliError::from_core(e, source);
    let (plant, cfg) = r.loop_setup().discretize().map_err(core)?;
    let checks = constraint_checks(&plant, &cfg).map_err(core)?;
    let inner = build_inner_loop(&plant, &cfg).map_err(core)?;
    let outer = build_outer_loop(&plant, &cfg, &r.gains).map_err(core)?;
    let modal = jordan_decompose(&inner).map(|j| build_modal_outer_loop(&inner, &j, &r.gains));

    let inner_report = classify(&inner).map_err(core)?;
    let outer_report = classify(&outer).map_err(core)?;
    let (modal_report, modal_unavailable) = match modal {
        Ok(m) => (Some(classify(&m).map_err(core)?), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let selected = r.config.analysis.feedback;
    let stable = match selected {
        Feedback::Inner => Some(inner_report.classification.is_stable()),
        Feedback::Measured => Some(outer_report.classification.is_stable()),
        Feedback::Modal => modal_report.as_ref().map(|m| m.classification.is_stable()),
    };
    let report = ConstraintsReport {
        config: &r.config,
        inertia_ratio: inertia_ratio(&plant, &cfg),
        normalized_gain: cfg.normalized_gain(),
        gain_upper_bound: gain_upper_bound(cfg.nominal()).map_err(core)?,
        constraints_satisfied: checks.iter().all(|c| c.satisfied),
        checks,
        inner: inner_report,
        outer: outer_report,
        modal_outer: modal_report,
        modal_outer_unavailable: modal_unavailable,
        selected,
        stable,
    };

    eprint!("{}", constraints_summary(&report));
    let text = match r.config.output.format.unwrap_or(Format::Json) {
        Format::Json => json(&report)?,
        Format::Csv => {
            let mut csv = Csv::new(&["name", "satisfied", "value", "bound"]);
            for c in &report.checks {
                csv.row([c.name.clone(), c.satisfied.to_string(), number(c.value), number(c.bound)]);
            }
            let loops = [
                ("inner_loop", Some(&report.inner)),
                ("outer_loop", Some(&report.outer)),
                ("modal_outer_loop", report.modal_outer.as_ref()),
            ];
            for (name, rep) in loops.into_iter().filter_map(|(n, r)| r.map(|r| (n, r))) {
                csv.row([
                    format!("{name}_spectral_radius"),
                    rep.classification.is_stable().to_string(),
                    number(rep.spectral_radius),
                    number(1.0),
                ]);
            }
            csv.finish()
        }
    };
    emit(&text, r.config.output.path.as_deref()).map_err(CliError::from)
}

fn constraints_summary(report: &ConstraintsReport) -> String {
    let mut out = String::new();
    for c in &report.checks {
        let verdict = if c.satisfied { "satisfied" } else { "VIOLATED" };
        out += &format!("{}: {verdict} (value {}, bound {})\n", c.name, number(c.value), number(c.bound));
    }
    let mut line = |name: &str, rep: &StabilityReport| {
        out += &format!("{name}: {} (spectral radius {})\n", rep.classification, number(rep.spectral_radius));
    };
    line("inner loop", &report.inner);
    line("outer loop, measured feedback", &report.outer);
    match (&report.modal_outer, &report.modal_outer_unavailable) {
        (Some(rep), _) => line("outer loop, modal feedback", rep),
        (None, Some(why)) => out += &format!("outer loop, modal feedback: unavailable ({why})\n"),
        (None, None) => {}
    }
    out
}

#[derive(Serialize)]
struct LocusReport<'a> {
    config: &'a RunConfig,
    sweep: &'a Sweep,
    boundary: Option<f64>,
    min_destabilizing: Option<f64>,
    crossings: &'a [Crossing],
    samples: &'a [LocusSample],
    /// Eigenvalues paired into continuous branches, one row per sample.
    branches: &'a [Vec<Complex64>],
}

pub fn rootlocus(r: &Resolved, source: &Source) -> Result<(), CliError> {
    let sweep = r
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::input("rootlocus needs --sweep param:lo:hi:count"))?;
    let trace = r.loop_setup().root_locus(sweep).map_err(|e| CliError::from_core(e, source))?;
    let text = match r.config.output.format.unwrap_or(Format::Csv) {
        Format::Json => json(&LocusReport {
            config: &r.config,
            sweep,
            boundary: trace.boundary,
            min_destabilizing: trace.min_destabilizing(),
            crossings: &trace.crossings,
            samples: &trace.samples,
            branches: &trace.branches,
        })?,
        Format::Csv => {
            let width = trace.branches.first().map_or(3, Vec::len);
            let mut header = vec!["param".to_string()];
            for k in 1..=width {
                header.push(format!("lambda{k}_re"));
                header.push(format!("lambda{k}_im"));
            }
            header.extend(["spectral_radius", "classification", "boundary"].map(String::from));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut csv = Csv::new(&header);
            for (sample, branch) in trace.samples.iter().zip(&trace.branches) {
                let mut row = vec![number(sample.value)];
                for z in branch {
                    row.push(number(z.re));
                    row.push(number(z.im));
                }
                row.push(number(sample.spectral_radius));
                row.push(sample.classification.to_string());
                row.push(optional(trace.boundary));
                csv.row(row);
            }
            csv.finish()
        }
    };
    if let Some(b) = trace.boundary {
        eprintln!("stability boundary at {} = {}", sweep.parameter.as_str(), number(b));
    } else {
        eprintln!("no stability boundary inside the sweep");
    }
    emit(&text, r.config.output.path.as_deref()).map_err(CliError::from)
}

#[derive(Serialize)]
struct ResponsePoint {
    omega: f64,
    re: f64,
    im: f64,
    magnitude_db: f64,
    phase_deg: f64,
}

#[derive(Serialize)]
struct BodeReport<'a> {
    config: &'a RunConfig,
    transfer: Transfer,
    gain: f64,
    zeros: &'a [Complex64],
    poles: &'a [Complex64],
    /// Zero and pole of the lead/lag factor introduced by the inner loop.
    compensator: Option<[f64; 2]>,
    crossover: &'a CrossoverStatus,
    gain_crossover: Option<f64>,
    phase_margin: Option<f64>,
    response: Vec<ResponsePoint>,
}

pub fn bode(r: &Resolved, source: &Source) -> Result<(), CliError> {
    let core = |e| CliError::from_core(e, source);
    let (plant, cfg) = r.loop_setup().discretize().map_err(core)?;
    let transfer = r.config.analysis.transfer;
    let (tf, compensator) = match transfer {
        Transfer::Inner => (inner_tf(&plant, &cfg).map_err(core)?.reduced, None),
        Transfer::Open | Transfer::Closed => {
            let open = open_loop_tf(&plant, &cfg, &r.gains).map_err(core)?;
            let (zero, pole) = open.compensator();
            let tf = if transfer == Transfer::Open { open.open_reduced } else { open.closed };
            (tf, Some([zero, pole]))
        }
    };
    let resp = frequency_response(&tf, r.sample_time(), &r.config.analysis.frequency).map_err(core)?;
    let points: Vec<ResponsePoint> = (0..resp.grid.len())
        .map(|i| ResponsePoint {
            omega: resp.grid[i],
            re: resp.values[i].re,
            im: resp.values[i].im,
            magnitude_db: resp.magnitude_db[i],
            phase_deg: resp.phase_deg[i],
        })
        .collect();

    match (resp.gain_crossover, resp.phase_margin) {
        (Some(w), Some(pm)) => eprintln!("gain crossover {} rad/s, phase margin {} deg", number(w), number(pm)),
        _ => eprintln!("gain crossover: {:?}", resp.crossover),
    }
    let text = match r.config.output.format.unwrap_or(Format::Csv) {
        Format::Json => json(&BodeReport {
            config: &r.config,
            transfer,
            gain: tf.gain(),
            zeros: tf.zeros(),
            poles: tf.poles(),
            compensator,
            crossover: &resp.crossover,
            gain_crossover: resp.gain_crossover,
            phase_margin: resp.phase_margin,
            response: points,
        })?,
        Format::Csv => {
            let mut csv = Csv::new(&["omega", "re", "im", "magnitude_db", "phase_deg"]);
            for p in &points {
                csv.row([p.omega, p.re, p.im, p.magnitude_db, p.phase_deg].map(number));
            }
            csv.finish()
        }
    };
    emit(&text, r.config.output.path.as_deref()).map_err(CliError::from)
}

#[derive(Serialize)]
struct TraceRow {
    k: usize,
    t: f64,
    q: f64,
    qdot: f64,
    q_ref: f64,
    u: f64,
    tau_d: f64,
    tau_dn: f64,
    tau_hat: Option<f64>,
    e_z: Option<f64>,
}

impl From<&TraceRecord> for TraceRow {
    fn from(r: &TraceRecord) -> Self {
        Self {
            k: r.k,
            t: r.t,
            q: r.q,
            qdot: r.qdot,
            q_ref: r.q_ref,
            u: r.u,
            tau_d: r.tau_d,
            tau_dn: r.tau_dn,
            tau_hat: r.tau_hat,
            e_z: r.e_z,
        }
    }
}

/// A finished run, or the step at which it blew up.
enum Outcome {
    Finished(SimTrace),
    Diverged { step: usize },
}

impl Outcome {
    fn from_result(result: dobstab::Result<SimTrace>, source: &Source) -> Result<Self, CliError> {
        match result {
            Ok(trace) => Ok(Outcome::Finished(trace)),
            Err(Error::Diverged { step, .. }) => Ok(Outcome::Diverged { step }),
            Err(e) => Err(CliError::from_core(e, source)),
        }
    }

    fn records(&self) -> &[TraceRecord] {
        match self {
            Outcome::Finished(t) => &t.records,
            Outcome::Diverged { .. } => &[],
        }
    }

    fn metrics(&self) -> ControllerMetrics {
        match self {
            Outcome::Finished(trace) => {
                let tail = (trace.len() / 10).max(1);
                let errors: Vec<f64> = trace.records[trace.len() - tail..]
                    .iter()
                    .filter_map(|r| r.e_z.map(f64::abs))
                    .collect();
                ControllerMetrics {
                    diverged: false,
                    diverged_at_step: None,
                    regulation: Some(regulation_metrics(trace)),
                    estimate_error_tail: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
                }
            }
            Outcome::Diverged { step } => ControllerMetrics {
                diverged: true,
                diverged_at_step: Some(*step),
                regulation: None,
                estimate_error_tail: None,
            },
        }
    }
}

#[derive(Serialize)]
struct ControllerMetrics {
    diverged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    diverged_at_step: Option<usize>,
    #[serde(flatten)]
    regulation: Option<RegulationMetrics>,
    /// Mean `|e_z|` over the final 10% of the run (observer runs only).
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate_error_tail: Option<f64>,
}

#[derive(Serialize)]
struct SimulationMetrics {
    diverged: bool,
    dob: ControllerMetrics,
    pid: Option<ControllerMetrics>,
    /// Observer steady-state error over PID steady-state error.
    steady_state_ratio: Option<f64>,
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    config: &'a RunConfig,
    metrics: &'a SimulationMetrics,
    dob_trace: Vec<TraceRow>,
    pid_trace: Option<Vec<TraceRow>>,
}

fn trace_csv(records: &[TraceRecord]) -> String {
    let mut csv = Csv::new(&TRACE_COLUMNS);
    for r in records {
        csv.row([
            r.k.to_string(),
            number(r.t),
            number(r.q),
            number(r.qdot),
            number(r.q_ref),
            number(r.u),
            number(r.tau_d),
            number(r.tau_dn),
            optional(r.tau_hat),
            optional(r.e_z),
        ]);
    }
    csv.finish()
}

fn trace_rows(records: &[TraceRecord]) -> Vec<TraceRow> {
    records.iter().map(TraceRow::from).collect()
}

pub fn simulate(r: &Resolved, source: &Source) -> Result<(), CliError> {
    if let Some(sweep) = &r.sweep {
        return simulate_sweep(r, source, sweep);
    }
    let cfg = r.observer_config().map_err(|e| CliError::from_core(e, source))?;
    let scenario = &r.config.scenario;
    let (dob, pid) = rayon::join(
        || simulate_dob(&r.plant, &cfg, &r.gains, &scenario.disturbance, &scenario.reference, r.steps),
        || {
            scenario.pid_baseline.then(|| {
                simulate_pid(&r.plant, &r.pid, r.sample_time(), &scenario.disturbance, &scenario.reference, r.steps)
            })
        },
    );
    let dob = Outcome::from_result(dob, source)?;
    let pid = pid.map(|p| Outcome::from_result(p, source)).transpose()?;

    let dob_metrics = dob.metrics();
    let pid_metrics = pid.as_ref().map(Outcome::metrics);
    let steady_state_ratio = match (&dob_metrics.regulation, pid_metrics.as_ref().and_then(|m| m.regulation.as_ref())) {
        (Some(d), Some(p)) if p.steady_state_error > 0.0 => Some(d.steady_state_error / p.steady_state_error),
        _ => None,
    };
    let metrics = SimulationMetrics {
        diverged: dob_metrics.diverged || pid_metrics.as_ref().is_some_and(|m| m.diverged),
        dob: dob_metrics,
        pid: pid_metrics,
        steady_state_ratio,
    };
    if metrics.diverged {
        eprintln!("warning: simulation diverged (reported in metrics)");
    }

    let format = r.config.output.format.unwrap_or(Format::Csv);
    match r.config.output.path.as_deref() {
        Some(dir) => write_simulation_dir(dir, format, r, &metrics, &dob, pid.as_ref()),
        None => match format {
            Format::Csv => {
                eprint!("{}", json(&metrics)?);
                emit(&trace_csv(dob.records()), None).map_err(CliError::from)
            }
            Format::Json => {
                let report = SimulationReport {
                    config: &r.config,
                    metrics: &metrics,
                    dob_trace: trace_rows(dob.records()),
                    pid_trace: pid.as_ref().map(|p| trace_rows(p.records())),
                };
                emit(&json(&report)?, None).map_err(CliError::from)
            }
        },
    }
}

fn write_simulation_dir(
    dir: &Path,
    format: Format,
    r: &Resolved,
    metrics: &SimulationMetrics,
    dob: &Outcome,
    pid: Option<&Outcome>,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    emit(&json(&r.config)?, Some(&dir.join("config.json")))?;
    emit(&json(metrics)?, Some(&dir.join("metrics.json")))?;
    let runs = [("dob_trace", Some(dob)), ("pid_trace", pid)];
    for (name, outcome) in runs.into_iter().filter_map(|(n, o)| o.map(|o| (n, o))) {
        match format {
            Format::Csv => emit(&trace_csv(outcome.records()), Some(&dir.join(format!("{name}.csv"))))?,
            Format::Json => emit(&json(&trace_rows(outcome.records()))?, Some(&dir.join(format!("{name}.json"))))?,
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepSample {
    param: f64,
    #[serde(flatten)]
    metrics: ControllerMetrics,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    config: &'a RunConfig,
    sweep: &'a Sweep,
    samples: Vec<SweepSample>,
}

/// Observer runs over a parameter range, one metrics row per value.
fn simulate_sweep(r: &Resolved, source: &Source, sweep: &Sweep) -> Result<(), CliError> {
    let base = r.loop_setup();
    let scenario = &r.config.scenario;
    let samples: Vec<SweepSample> = sweep
        .values()
        .into_par_iter()
        .map(|value| {
            let setup = base.with_parameter(sweep.parameter, value)?;
            let (_, cfg) = setup.discretize()?;
            let run = simulate_dob(&setup.plant, &cfg, &r.gains, &scenario.disturbance, &scenario.reference, r.steps);
            Ok((value, run))
        })
        .collect::<dobstab::Result<Vec<_>>>()
        .map_err(|e| CliError::from_core(e, source))?
        .into_iter()
        .map(|(param, run)| {
            Outcome::from_result(run, source).map(|o| SweepSample {
                param,
                metrics: o.metrics(),
            })
        })
        .collect::<Result<_, _>>()?;

    let text = match r.config.output.format.unwrap_or(Format::Csv) {
        Format::Json => json(&SweepReport {
            config: &r.config,
            sweep,
            samples,
        })?,
        Format::Csv => {
            let mut csv = Csv::new(&[
                "param",
                "diverged",
                "peak_error",
                "settling_time",
                "steady_state_error",
                "control_effort",
            ]);
            for s in &samples {
                let m = s.metrics.regulation.as_ref();
                csv.row([
                    number(s.param),
                    s.metrics.diverged.to_string(),
                    optional(m.map(|m| m.peak_error)),
                    optional(m.and_then(|m| m.settling_time)),
                    optional(m.map(|m| m.steady_state_error)),
                    optional(m.map(|m| m.control_effort)),
                ]);
            }
            csv.finish()
        }
    };
    emit(&text, r.config.output.path.as_deref()).map_err(CliError::from)
}
