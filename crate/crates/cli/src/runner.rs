//! Command orchestration: build the physics objects from a resolved config,
//! run the requested experiment, and write bit-stable outputs.
//!
//! File outputs are deterministic for a fixed config: no randomness enters
//! the pipeline, concurrent jobs are collected in input order, and floats
//! are printed with 17 significant digits.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use shadowflow::dynamics::{
    default_sample_interval, integrate_extended, ExtendedState, IntegratorConfig, Termination,
    Trajectory,
};
use shadowflow::error::CoreError;
use shadowflow::geometry::{
    DerivativeMode, MetricField, PolyTerm, ScalarField, SymplecticStructure,
};
use shadowflow::guiding_center::{run_adiabatic_sweep, SweepConfig};
use shadowflow::oscillator::{
    bound_radial_period, classify, exact_r_squared, fit_phase, integrals_of_motion,
    oscillator_initial_state, quadrature_time, zeta_of_r_squared, BranchSign, OscillatorParams,
    RegimeClass,
};
use shadowflow::quantum::{magnetic_spectrum_with_gauge, GridSpec, LatticeGauge};

use crate::config::{ConfigError, ExperimentConfig, SystemKind};
use crate::provenance::{csv_header, Envelope};

/// The five experiment commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Oracle,
    Sweep,
    Spectrum,
    Fig1,
}

impl Command {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "simulate" => Some(Command::Simulate),
            "oracle" => Some(Command::Oracle),
            "sweep" => Some(Command::Sweep),
            "spectrum" => Some(Command::Spectrum),
            "fig1" => Some(Command::Fig1),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Oracle => "oracle",
            Command::Sweep => "sweep",
            Command::Spectrum => "spectrum",
            Command::Fig1 => "fig1",
        }
    }
}

/// Anything that stops a run. Config problems exit 1; numerical problems
/// exit 2 after writing an error report (partial outputs stay on disk).
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(String),
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// What a run produced; `numerical_notes` nonempty means exit status 2
/// (meaningful partial output such as a fall onto the origin).
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub numerical_notes: Vec<String>,
}

fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

fn worker_count(jobs: usize) -> usize {
    let cap = std::env::var("SHADOWFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1);
    let hw = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    cap.unwrap_or(hw).min(jobs.max(1))
}

fn build_field(cfg: &ExperimentConfig) -> Result<ScalarField, CliError> {
    let field = match cfg.system.kind {
        SystemKind::Harmonic => ScalarField::harmonic(1),
        SystemKind::ShiftedHarmonic => ScalarField::shifted_harmonic(1, cfg.system.offset),
        SystemKind::Pendulum => ScalarField::pendulum_offset(cfg.system.offset),
        SystemKind::Constant => ScalarField::constant(1, cfg.system.strength),
        SystemKind::Polynomial => {
            let terms = cfg
                .system
                .terms
                .iter()
                .map(|(e, c)| PolyTerm {
                    exponents: e.clone(),
                    coefficient: *c,
                })
                .collect();
            ScalarField::polynomial(1, terms).map_err(|e| CliError::Numerical(e.to_string()))?
        }
    };
    let mode = if cfg.system.analytic_derivatives {
        DerivativeMode::Analytic
    } else {
        DerivativeMode::FiniteDifference {
            step: cfg.system.fd_step,
        }
    };
    Ok(field.with_mode(mode))
}

fn build_metric(cfg: &ExperimentConfig, field: ScalarField) -> Result<MetricField, CliError> {
    let metric = match &cfg.metric.gamma {
        None => MetricField::conformal(field),
        Some(rows) => {
            let gamma =
                DMatrix::from_row_slice(2, 2, &[rows[0][0], rows[0][1], rows[1][0], rows[1][1]]);
            MetricField::with_gamma(field, gamma).map_err(|e| {
                CliError::Config(ConfigError::Validation {
                    field: "metric.gamma".into(),
                    message: e.to_string(),
                })
            })?
        }
    };
    Ok(metric.with_h_min(cfg.metric.h_min))
}

fn build_initial(cfg: &ExperimentConfig) -> Result<ExtendedState, CliError> {
    use shadowflow::geometry::PhaseSpacePoint;
    let [q, p] = cfg.initial.position;
    if let Some([vq, vp]) = cfg.initial.velocity {
        let pos =
            PhaseSpacePoint::new(vec![q, p]).map_err(|e| CliError::Numerical(e.to_string()))?;
        return ExtendedState::new(pos, vec![vq, vp])
            .map_err(|e| CliError::Numerical(e.to_string()));
    }
    if (q, p) != (1.0, 0.0) {
        return Err(CliError::Config(ConfigError::Validation {
            field: "initial.velocity".into(),
            message: "required unless position is [1, 0] (where the oscillator integrals fix it)"
                .into(),
        }));
    }
    oscillator_initial_state(
        cfg.integrator.mu,
        cfg.initial.energy,
        cfg.initial.angular_momentum,
        cfg.initial.radial_sign,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))
}

fn integrator_config(
    cfg: &ExperimentConfig,
    field: &ScalarField,
    init: &ExtendedState,
) -> IntegratorConfig {
    let sample = if cfg.integrator.sample_interval > 0.0 {
        cfg.integrator.sample_interval
    } else {
        default_sample_interval(cfg.integrator.mu, field.value(&init.position))
    }
    .min(cfg.integrator.horizon);
    IntegratorConfig {
        mu: cfg.integrator.mu,
        rel_tol: cfg.integrator.rel_tol,
        abs_tol: cfg.integrator.abs_tol,
        max_step: cfg.integrator.max_step,
        horizon: cfg.integrator.horizon,
        sample_interval: sample,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn write_trajectory_csv(path: &Path, traj: &Trajectory, hash: &str) -> Result<(), CliError> {
    let mut s = csv_header(hash);
    s.push_str("t,xi_1,xi_2,v_1,v_2,Pi_1,Pi_2,X_1,X_2,J,E_ext\n");
    for smp in &traj.samples {
        let x = smp.state.position.coords();
        let v = &smp.state.velocity;
        let d = &smp.decomposition;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            f17(smp.t),
            f17(x[0]),
            f17(x[1]),
            f17(v[0]),
            f17(v[1]),
            f17(d.pi[0]),
            f17(d.pi[1]),
            f17(d.x[0]),
            f17(d.x[1]),
            f17(d.j),
            f17(d.e_ext)
        ));
    }
    write_file(path, &s)
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    termination: String,
    samples: usize,
    final_time: f64,
    energy_drift: f64,
    angular_momentum_drift: Option<f64>,
    oscillator_energy_drift: Option<f64>,
    trajectory_file: String,
}

#[derive(Debug, Serialize)]
struct OracleReport {
    regime: String,
    p_param: f64,
    mu: f64,
    fitted_t0: f64,
    branch_sign: i8,
    max_rel_error: f64,
    quadrature_residual: f64,
    angular_momentum_drift: f64,
    energy_drift: f64,
    termination: String,
    csv_file: String,
}

#[derive(Debug, Serialize)]
struct Fig1Run {
    p: f64,
    mu: f64,
    regime: String,
    termination: String,
    fitted_t0: f64,
    branch_sign: i8,
    max_rel_error: f64,
    file: String,
}

#[derive(Debug, Serialize)]
struct Fig1Index {
    energy: f64,
    angular_momentum: f64,
    horizon: f64,
    runs: Vec<Fig1Run>,
}

#[derive(Debug, Serialize)]
struct ErrorReport {
    error: String,
    notes: Vec<String>,
}

fn regime_name(r: RegimeClass) -> &'static str {
    match r {
        RegimeClass::UnboundExponential => "unbound-exponential",
        RegimeClass::UnboundPowerLaw => "unbound-power-law",
        RegimeClass::Bound => "bound",
    }
}

fn drift_stats(traj: &Trajectory, mu: f64, harmonic: bool) -> (f64, Option<f64>, Option<f64>) {
    let e0 = traj.samples[0].decomposition.e_ext;
    let mut e_drift: f64 = 0.0;
    for s in &traj.samples {
        e_drift = e_drift.max(((s.decomposition.e_ext - e0) / e0).abs());
    }
    if !harmonic {
        return (e_drift, None, None);
    }
    let (l0, en0) = match integrals_of_motion(mu, &traj.samples[0].state) {
        Ok(v) => v,
        Err(_) => return (e_drift, None, None),
    };
    let mut l_drift: f64 = 0.0;
    let mut en_drift: f64 = 0.0;
    for s in &traj.samples {
        if let Ok((l, en)) = integrals_of_motion(mu, &s.state) {
            l_drift = l_drift.max(((l - l0) / l0).abs());
            en_drift = en_drift.max(((en - en0) / en0).abs());
        }
    }
    (e_drift, Some(l_drift), Some(en_drift))
}

/// Fit the closed-form phase constants to a trajectory and report the
/// worst relative mismatch of r^2.
fn closed_form_comparison(
    mu: f64,
    energy: f64,
    l: f64,
    traj: &Trajectory,
) -> Result<(OscillatorParams, f64), CoreError> {
    let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    let values: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| s.state.position.coords().norm_squared())
        .collect();
    let params = fit_phase(mu, energy, l, &times, &values)?;
    let mut worst: f64 = 0.0;
    for (&t, &v) in times.iter().zip(&values) {
        let w = exact_r_squared(&params, t);
        worst = worst.max(((w - v) / v.abs().max(1e-300)).abs());
    }
    Ok((params, worst))
}

/// Consistency of the quadrature against the closed form on a monotone
/// window of the fitted branch: |quadrature time - elapsed time|.
fn quadrature_consistency(params: &OscillatorParams) -> Result<f64, CoreError> {
    let p = params.p_param();
    let l = params.angular_momentum.abs();
    let mu = params.mu;
    let (ta, tb) = if p < 1.0 - 1e-9 {
        let period = bound_radial_period(params)?;
        // zeta increases on (t0 + T/4, t0 + 3T/4).
        (params.t0 + 0.30 * period, params.t0 + 0.45 * period)
    } else if p > 1.0 + 1e-9 {
        let a = l * (p - 1.0).sqrt() / mu;
        let t_peak = params.t0 + params.sign.as_f64() * p.ln() / (4.0 * a);
        (t_peak + 0.2 / a, t_peak + 0.8 / a)
    } else {
        let scale = mu / (2.0 * l);
        (params.t0 + 0.5 * scale, params.t0 + 1.5 * scale)
    };
    let za = zeta_of_r_squared(params, exact_r_squared(params, ta));
    let zb = zeta_of_r_squared(params, exact_r_squared(params, tb));
    let dt = quadrature_time(params, za, zb)?;
    Ok((dt.abs() - (tb - ta)).abs())
}

fn run_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome, CliError> {
    let field = build_field(cfg)?;
    let metric = build_metric(cfg, field.clone())?;
    let s = SymplecticStructure::new(1).map_err(|e| CliError::Numerical(e.to_string()))?;
    let init = build_initial(cfg)?;
    let icfg = integrator_config(cfg, &field, &init);
    let traj = integrate_extended(&metric, &s, &icfg, &init)
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let hash = cfg.hash();
    let csv_path = out.join("trajectory.csv");
    write_trajectory_csv(&csv_path, &traj, &hash)?;

    let harmonic = cfg.system.kind == SystemKind::Harmonic && cfg.metric.gamma.is_none();
    let (e_drift, l_drift, en_drift) = drift_stats(&traj, icfg.mu, harmonic);
    let report = SimulateReport {
        termination: traj.termination.label(),
        samples: traj.samples.len(),
        final_time: traj.final_time(),
        energy_drift: e_drift,
        angular_momentum_drift: l_drift,
        oscillator_energy_drift: en_drift,
        trajectory_file: "trajectory.csv".into(),
    };
    let json_path = out.join("simulate.json");
    write_file(
        &json_path,
        &Envelope::new("simulate", hash, cfg.canonical_text(), report).to_json(),
    )?;

    let mut outcome = RunOutcome {
        files: vec![csv_path, json_path],
        numerical_notes: vec![],
    };
    if !matches!(traj.termination, Termination::Completed) {
        outcome.numerical_notes.push(format!(
            "trajectory truncated before the horizon: {}",
            traj.termination.label()
        ));
    }
    Ok(outcome)
}

fn run_oracle(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome, CliError> {
    if cfg.system.kind != SystemKind::Harmonic || cfg.metric.gamma.is_some() {
        return Err(CliError::Config(ConfigError::Validation {
            field: "system.kind".into(),
            message:
                "the closed-form oracle is defined for the harmonic system with identity gamma"
                    .into(),
        }));
    }
    let field = build_field(cfg)?;
    let metric = build_metric(cfg, field.clone())?;
    let s = SymplecticStructure::new(1).map_err(|e| CliError::Numerical(e.to_string()))?;
    let init = build_initial(cfg)?;
    let icfg = integrator_config(cfg, &field, &init);
    let mu = icfg.mu;
    let (l, energy) =
        integrals_of_motion(mu, &init).map_err(|e| CliError::Numerical(e.to_string()))?;
    let traj = integrate_extended(&metric, &s, &icfg, &init)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let (params, max_rel_error) = closed_form_comparison(mu, energy, l, &traj)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let quadrature_residual =
        quadrature_consistency(&params).map_err(|e| CliError::Numerical(e.to_string()))?;
    let (_, l_drift, en_drift) = drift_stats(&traj, mu, true);

    let hash = cfg.hash();
    let mut csv = csv_header(&hash);
    csv.push_str("t,q,p,r,r2_numeric,r2_exact,rel_error\n");
    for smp in &traj.samples {
        let x = smp.state.position.coords();
        let r2 = x.norm_squared();
        let exact = exact_r_squared(&params, smp.t);
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            f17(smp.t),
            f17(x[0]),
            f17(x[1]),
            f17(r2.sqrt()),
            f17(r2),
            f17(exact),
            f17(((exact - r2) / r2.abs().max(1e-300)).abs())
        ));
    }
    let csv_path = out.join("oracle.csv");
    write_file(&csv_path, &csv)?;

    let report = OracleReport {
        regime: regime_name(classify(&params)).into(),
        p_param: params.p_param(),
        mu,
        fitted_t0: params.t0,
        branch_sign: if params.sign == BranchSign::Plus {
            1
        } else {
            -1
        },
        max_rel_error,
        quadrature_residual,
        angular_momentum_drift: l_drift.unwrap_or(f64::NAN),
        energy_drift: en_drift.unwrap_or(f64::NAN),
        termination: traj.termination.label(),
        csv_file: "oracle.csv".into(),
    };
    let json_path = out.join("oracle.json");
    write_file(
        &json_path,
        &Envelope::new("oracle", hash, cfg.canonical_text(), report).to_json(),
    )?;
    let mut outcome = RunOutcome {
        files: vec![csv_path, json_path],
        numerical_notes: vec![],
    };
    if !matches!(traj.termination, Termination::Completed) {
        outcome.numerical_notes.push(format!(
            "oracle run truncated: {}",
            traj.termination.label()
        ));
    }
    Ok(outcome)
}

fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome, CliError> {
    if cfg.system.kind != SystemKind::Harmonic {
        return Err(CliError::Config(ConfigError::Validation {
            field: "system.kind".into(),
            message: "the adiabatic sweep is defined for the harmonic system".into(),
        }));
    }
    let sweep_cfg = SweepConfig {
        mu_values: cfg.sweep.mu_values.clone(),
        energy: cfg.sweep.energy,
        angular_momentum: cfg.sweep.angular_momentum,
        horizon: cfg.sweep.horizon,
        rel_tol: cfg.integrator.rel_tol,
        abs_tol: cfg.integrator.abs_tol,
        threads: worker_count(cfg.sweep.mu_values.len()),
    };
    let report = run_adiabatic_sweep(&sweep_cfg).map_err(|e| CliError::Numerical(e.to_string()))?;
    let json_path = out.join("sweep.json");
    write_file(
        &json_path,
        &Envelope::new("sweep", cfg.hash(), cfg.canonical_text(), &report).to_json(),
    )?;
    Ok(RunOutcome {
        files: vec![json_path],
        numerical_notes: vec![],
    })
}

fn run_spectrum(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome, CliError> {
    let field = build_field(cfg)?;
    let grid = GridSpec::new(
        cfg.spectrum.half_width,
        cfg.spectrum.points,
        cfg.spectrum.hbar,
    )
    .map_err(|e| {
        CliError::Config(ConfigError::Validation {
            field: "spectrum".into(),
            message: e.to_string(),
        })
    })?;
    let gauge = if cfg.spectrum.gauge == "landau" {
        LatticeGauge::Landau
    } else {
        LatticeGauge::Symmetric
    };
    let report = magnetic_spectrum_with_gauge(&field, &grid, cfg.spectrum.eigenvalues, gauge)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let json_path = out.join("spectrum.json");
    write_file(
        &json_path,
        &Envelope::new("spectrum", cfg.hash(), cfg.canonical_text(), &report).to_json(),
    )?;
    Ok(RunOutcome {
        files: vec![json_path],
        numerical_notes: vec![],
    })
}

fn run_fig1(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome, CliError> {
    let energy = cfg.fig1.energy;
    let l = cfg.fig1.angular_momentum;
    let jobs = cfg.fig1.p_values.len();
    let threads = worker_count(jobs);

    type JobResult = Result<(Trajectory, OscillatorParams, f64, f64), CoreError>;
    let mut results: Vec<Option<JobResult>> = (0..jobs).map(|_| None).collect();
    let p_values = &cfg.fig1.p_values;
    let rel_tol = cfg.integrator.rel_tol;
    let abs_tol = cfg.integrator.abs_tol;
    let horizon = cfg.fig1.horizon;

    std::thread::scope(|scope| {
        let chunk_size = jobs.div_ceil(threads);
        for (chunk_idx, chunk) in results.chunks_mut(chunk_size).enumerate() {
            let offset = chunk_idx * chunk_size;
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let p = p_values[offset + i];
                    *slot = Some((|| {
                        let mu = p * l * l / energy;
                        let field = ScalarField::harmonic(1);
                        let metric = MetricField::conformal(field.clone());
                        let s = SymplecticStructure::new(1)?;
                        let init = oscillator_initial_state(mu, energy, l, 1.0)?;
                        let icfg = IntegratorConfig {
                            mu,
                            rel_tol,
                            abs_tol,
                            max_step: 0.0,
                            horizon,
                            sample_interval: default_sample_interval(
                                mu,
                                field.value(&init.position),
                            )
                            .min(horizon),
                        };
                        let traj = integrate_extended(&metric, &s, &icfg, &init)?;
                        let (params, worst) = closed_form_comparison(mu, energy, l, &traj)?;
                        Ok((traj, params, worst, mu))
                    })());
                }
            });
        }
    });

    let hash = cfg.hash();
    let mut files = Vec::new();
    let mut runs = Vec::new();
    let mut notes = Vec::new();
    for (i, slot) in results.into_iter().enumerate() {
        let p = cfg.fig1.p_values[i];
        let (traj, params, worst, mu) = slot
            .expect("slot filled")
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let name = format!("fig1_p{p}.csv");
        let mut csv = csv_header(&hash);
        csv.push_str("t,q,p,r,r2_exact\n");
        for smp in &traj.samples {
            let x = smp.state.position.coords();
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                f17(smp.t),
                f17(x[0]),
                f17(x[1]),
                f17(x.norm()),
                f17(exact_r_squared(&params, smp.t))
            ));
        }
        let path = out.join(&name);
        write_file(&path, &csv)?;
        files.push(path);
        if !matches!(traj.termination, Termination::Completed) {
            notes.push(format!("fig1 p = {p}: {}", traj.termination.label()));
        }
        runs.push(Fig1Run {
            p,
            mu,
            regime: regime_name(classify(&params)).into(),
            termination: traj.termination.label(),
            fitted_t0: params.t0,
            branch_sign: if params.sign == BranchSign::Plus {
                1
            } else {
                -1
            },
            max_rel_error: worst,
            file: name,
        });
    }
    let index = Fig1Index {
        energy,
        angular_momentum: l,
        horizon,
        runs,
    };
    let json_path = out.join("fig1_index.json");
    write_file(
        &json_path,
        &Envelope::new("fig1", hash, cfg.canonical_text(), index).to_json(),
    )?;
    files.push(json_path);
    Ok(RunOutcome {
        files,
        numerical_notes: notes,
    })
}

/// Run one command against a resolved config, writing outputs under
/// `out_dir` (falling back to the config's own output directory).
pub fn run(
    cfg: &ExperimentConfig,
    command: Command,
    out_dir: Option<&Path>,
) -> Result<RunOutcome, CliError> {
    let out = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    fs::create_dir_all(&out)?;
    let result = match command {
        Command::Simulate => run_simulate(cfg, &out),
        Command::Oracle => run_oracle(cfg, &out),
        Command::Sweep => run_sweep(cfg, &out),
        Command::Spectrum => run_spectrum(cfg, &out),
        Command::Fig1 => run_fig1(cfg, &out),
    };
    match result {
        Ok(outcome) => {
            if !outcome.numerical_notes.is_empty() {
                // Meaningful partial result: record why alongside the data.
                let report = ErrorReport {
                    error: "run ended on a numerical boundary".into(),
                    notes: outcome.numerical_notes.clone(),
                };
                write_file(
                    &out.join("error.json"),
                    &Envelope::new(command.name(), cfg.hash(), cfg.canonical_text(), report)
                        .to_json(),
                )?;
            }
            Ok(outcome)
        }
        Err(CliError::Numerical(message)) => {
            let report = ErrorReport {
                error: message.clone(),
                notes: vec![],
            };
            write_file(
                &out.join("error.json"),
                &Envelope::new(command.name(), cfg.hash(), cfg.canonical_text(), report).to_json(),
            )?;
            Err(CliError::Numerical(message))
        }
        Err(e) => Err(e),
    }
}
