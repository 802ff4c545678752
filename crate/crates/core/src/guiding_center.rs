//! Fast/slow splitting of extended trajectories.
//!
//! Kinematical momenta `Pi_i = mu^(1/2) g_ij xi'^j` carry the fast gyration;
//! guiding-center coordinates `X^i = xi^i + mu^(1/2) omegabar^{ij} Pi_j`
//! carry the slow drift that shadows the reference Hamiltonian flow. The
//! adiabatic invariant is `J = |Pi|^2 / 2` (identity gamma, so the unit-bein
//! factors are trivial). This module also measures how fast X converges to
//! the reference flow as mu shrinks.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    default_sample_interval, integrate_extended, integrate_reference, ExtendedState,
    IntegratorConfig, ReferenceTrajectory, Trajectory,
};
use crate::error::CoreError;
use crate::geometry::{MetricField, ScalarField, SymplecticStructure};

/// Derived fast/slow quantities at one trajectory sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidingDecomposition {
    /// Kinematical momenta Pi (covector, 2n entries, action^(1/2)).
    pub pi: DVector<f64>,
    /// Guiding-center coordinates X (2n entries, action^(1/2)).
    pub x: DVector<f64>,
    /// Adiabatic invariant J = |Pi|^2 / 2 (action).
    pub j: f64,
    /// Extended energy, equal to g^{ij} Pi_i Pi_j / 2.
    pub e_ext: f64,
}

/// Split one extended state into (Pi, X, J, E_ext).
pub fn decompose(
    m: &MetricField,
    s: &SymplecticStructure,
    mu: f64,
    state: &ExtendedState,
) -> Result<GuidingDecomposition, CoreError> {
    let at = m.metric_at(&state.position)?;
    let sqrt_mu = mu.sqrt();
    let pi = sqrt_mu * (&at.g * &state.velocity);
    let x = state.position.coords() + sqrt_mu * s.apply_omega_bar(&pi);
    let j = 0.5 * pi.norm_squared();
    let e_ext = 0.5 * (pi.transpose() * &at.g_inv * &pi)[(0, 0)];
    Ok(GuidingDecomposition { pi, x, j, e_ext })
}

/// Fast-rotation period estimate from one state: 2 pi mu divided by the
/// local field strength E_ext / J. Exact for a homogeneous field.
pub fn gyro_period_estimate(
    m: &MetricField,
    s: &SymplecticStructure,
    mu: f64,
    state: &ExtendedState,
) -> Result<f64, CoreError> {
    let dec = decompose(m, s, mu, state)?;
    if dec.j < 1e-14 {
        return Err(CoreError::DegenerateFastMotion { j: dec.j });
    }
    Ok(2.0 * std::f64::consts::PI * mu * (2.0 * dec.j) / (2.0 * dec.e_ext))
}

/// Trajectory-level period estimate: average the local field strength
/// E_ext / J over the samples, then invert. Averaging the field rather than
/// the period makes the estimate exact for the bound oscillator regimes.
pub fn mean_field_gyro_period(traj: &Trajectory) -> Result<f64, CoreError> {
    if traj.samples.is_empty() {
        return Err(CoreError::InsufficientData("empty trajectory".into()));
    }
    let mut acc = 0.0;
    for s in &traj.samples {
        if s.decomposition.j < 1e-14 {
            return Err(CoreError::DegenerateFastMotion {
                j: s.decomposition.j,
            });
        }
        acc += s.decomposition.e_ext / s.decomposition.j;
    }
    let mean_field = acc / traj.samples.len() as f64;
    Ok(2.0 * std::f64::consts::PI * traj.config.mu / mean_field)
}

/// Deviation metrics of one extended trajectory against the reference flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    /// sup over the common grid of |X(t) - xi_ref(t)|.
    pub sup_x_error: f64,
    /// sup over the common grid of |xi(t) - xi_ref(t)|.
    pub sup_xi_error: f64,
    /// max over the common grid of |J(t)/J(0) - 1| (raw, un-averaged J).
    pub j_relative_variation: f64,
}

fn interp_columns(times: &[f64], values: &[DVector<f64>], t: f64) -> DVector<f64> {
    // times strictly increasing; t inside [first, last] by construction.
    let idx = match times.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
        Ok(i) => return values[i].clone(),
        Err(i) => i,
    };
    let (i0, i1) = (idx - 1, idx);
    let f = (t - times[i0]) / (times[i1] - times[i0]);
    &values[i0] * (1.0 - f) + &values[i1] * f
}

fn interp_scalar(times: &[f64], values: &[f64], t: f64) -> f64 {
    let idx = match times.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
        Ok(i) => return values[i],
        Err(i) => i,
    };
    let (i0, i1) = (idx - 1, idx);
    let f = (t - times[i0]) / (times[i1] - times[i0]);
    values[i0] * (1.0 - f) + values[i1] * f
}

/// Piecewise-linear comparison on the union time grid of the overlap.
pub fn deviation_from_reference(
    traj: &Trajectory,
    reference: &ReferenceTrajectory,
) -> Result<DeviationReport, CoreError> {
    if traj.samples.len() < 2 || reference.times.len() < 2 {
        return Err(CoreError::EmptyOverlap);
    }
    let t_lo = traj.samples[0].t.max(reference.times[0]);
    let t_hi = traj
        .samples
        .last()
        .unwrap()
        .t
        .min(*reference.times.last().unwrap());
    if t_hi <= t_lo {
        return Err(CoreError::EmptyOverlap);
    }

    let traj_times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    let traj_x: Vec<DVector<f64>> = traj
        .samples
        .iter()
        .map(|s| s.decomposition.x.clone())
        .collect();
    let traj_xi: Vec<DVector<f64>> = traj
        .samples
        .iter()
        .map(|s| s.state.position.coords().clone())
        .collect();
    let traj_j: Vec<f64> = traj.samples.iter().map(|s| s.decomposition.j).collect();
    let j0 = traj_j[0];

    let mut grid: Vec<f64> = traj_times
        .iter()
        .chain(reference.times.iter())
        .copied()
        .filter(|&t| t >= t_lo && t <= t_hi)
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

    let mut sup_x: f64 = 0.0;
    let mut sup_xi: f64 = 0.0;
    let mut j_var: f64 = 0.0;
    for &t in &grid {
        let xr = interp_columns(&reference.times, &reference.states, t);
        let xg = interp_columns(&traj_times, &traj_x, t);
        let xi = interp_columns(&traj_times, &traj_xi, t);
        sup_x = sup_x.max((&xg - &xr).norm());
        sup_xi = sup_xi.max((&xi - &xr).norm());
        let j = interp_scalar(&traj_times, &traj_j, t);
        j_var = j_var.max((j / j0 - 1.0).abs());
    }
    Ok(DeviationReport {
        sup_x_error: sup_x,
        sup_xi_error: sup_xi,
        j_relative_variation: j_var,
    })
}

/// Least-squares power-law fit in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    /// Fitted exponent of error ~ C mu^slope.
    pub slope: f64,
    /// Root-mean-square residual of log10(error) about the fit.
    pub residual_rms: f64,
}

/// Fit log(error) against log(mu). Requires at least 4 points spanning at
/// least 1.5 decades, all errors positive.
pub fn fit_log_log(mu: &[f64], err: &[f64]) -> Result<LogLogFit, CoreError> {
    if mu.len() != err.len() {
        return Err(CoreError::InvalidInput("mu/error length mismatch".into()));
    }
    if mu.len() < 4 {
        return Err(CoreError::InsufficientData(format!(
            "{} points, need at least 4",
            mu.len()
        )));
    }
    let mu_max = mu.iter().cloned().fold(f64::MIN, f64::max);
    let mu_min = mu.iter().cloned().fold(f64::MAX, f64::min);
    if mu_min.is_nan() || mu_min <= 0.0 || mu_max / mu_min < 10f64.powf(1.5) {
        return Err(CoreError::InsufficientData(
            "mu range must span at least 1.5 decades".into(),
        ));
    }
    if err.iter().any(|&e| e.is_nan() || e <= 0.0) {
        return Err(CoreError::InsufficientData(
            "errors must be positive for a log fit".into(),
        ));
    }
    let xs: Vec<f64> = mu.iter().map(|m| m.log10()).collect();
    let ys: Vec<f64> = err.iter().map(|e| e.log10()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(LogLogFit {
        slope,
        residual_rms: (ss / n).sqrt(),
    })
}

/// Which sweep error column a convergence-order fit should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    SupXError,
    JVariation,
}

/// Fit the convergence order of one sweep metric: least-squares slope of
/// log(error) against log(mu), plus the fit residual.
pub fn convergence_order(
    report: &SweepReport,
    metric: SweepMetric,
) -> Result<LogLogFit, CoreError> {
    let errors = match metric {
        SweepMetric::SupXError => &report.sup_x_error,
        SweepMetric::JVariation => &report.j_variation,
    };
    fit_log_log(&report.mu, errors)
}

/// Fitted slopes (or the reason a fit was impossible).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepFits {
    #[serde(rename = "sup_X_error")]
    pub sup_x_error: Option<f64>,
    #[serde(rename = "J_variation")]
    pub j_variation: Option<f64>,
}

/// Per-mu error metrics of the adiabatic-limit sweep plus fitted orders.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub mu: Vec<f64>,
    #[serde(rename = "sup_X_error")]
    pub sup_x_error: Vec<f64>,
    #[serde(rename = "sup_xi_error")]
    pub sup_xi_error: Vec<f64>,
    #[serde(rename = "J_variation")]
    pub j_variation: Vec<f64>,
    /// Window-averaged J drift (gyro ripple removed); diagnostic only.
    #[serde(rename = "J_variation_secular")]
    pub j_variation_secular: Vec<f64>,
    /// Half-width of the band |X(t)| sweeps around its central circle.
    #[serde(rename = "X_band_width")]
    pub x_band_width: Vec<f64>,
    /// max_t |E_ext / (h(X) J) - 1|: residual of the separated form.
    pub separation_residual: Vec<f64>,
    pub terminations: Vec<String>,
    pub slopes: SweepFits,
    pub residuals: SweepFits,
    /// Fitted order of the |X| band width (None when the fit is impossible).
    #[serde(rename = "X_band_slope")]
    pub x_band_slope: Option<f64>,
    pub separation_slope: Option<f64>,
}

impl SweepReport {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !self.mu.windows(2).all(|w| w[0] > w[1]) {
            return Err(CoreError::InvalidInput(
                "mu values must be strictly decreasing".into(),
            ));
        }
        if self.sup_x_error.iter().any(|&e| e < 0.0) || self.j_variation.iter().any(|&e| e < 0.0) {
            return Err(CoreError::InvalidInput("errors must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Sweep controls: the oscillator initial data (energy, angular momentum)
/// stay fixed while mu shrinks.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub mu_values: Vec<f64>,
    pub energy: f64,
    pub angular_momentum: f64,
    pub horizon: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub threads: usize,
}

impl SweepConfig {
    pub fn new(mu_values: Vec<f64>) -> Self {
        Self {
            mu_values,
            energy: 1.0,
            angular_momentum: 0.25,
            horizon: 2.0 * std::f64::consts::PI,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            threads: 1,
        }
    }
}

struct SweepPoint {
    deviation: DeviationReport,
    j_secular: f64,
    x_band_width: f64,
    separation_residual: f64,
    termination: String,
}

fn sweep_point(cfg: &SweepConfig, mu: f64) -> Result<SweepPoint, CoreError> {
    let field = ScalarField::harmonic(1);
    let m = MetricField::conformal(field.clone());
    let s = SymplecticStructure::new(1)?;
    let init =
        crate::oscillator::oscillator_initial_state(mu, cfg.energy, cfg.angular_momentum, 1.0)?;
    let h_scale = field.value(&init.position);
    let icfg = IntegratorConfig {
        mu,
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        max_step: 0.0,
        horizon: cfg.horizon,
        sample_interval: default_sample_interval(mu, h_scale).min(cfg.horizon),
    };
    let traj = integrate_extended(&m, &s, &icfg, &init)?;
    let reference = integrate_reference(&field, &s, &icfg, &init.position)?;
    let deviation = deviation_from_reference(&traj, &reference)?;
    let j_secular = secular_j_variation(&traj)?;

    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut separation: f64 = 0.0;
    for smp in &traj.samples {
        let x_norm = smp.decomposition.x.norm();
        x_lo = x_lo.min(x_norm);
        x_hi = x_hi.max(x_norm);
        let hx = field.value(&crate::geometry::PhaseSpacePoint::from_vector(
            smp.decomposition.x.clone(),
        )?);
        if smp.decomposition.j > 1e-14 && hx > 0.0 {
            separation =
                separation.max((smp.decomposition.e_ext / (hx * smp.decomposition.j) - 1.0).abs());
        }
    }
    Ok(SweepPoint {
        deviation,
        j_secular,
        x_band_width: 0.5 * (x_hi - x_lo),
        separation_residual: separation,
        termination: traj.termination.label(),
    })
}

/// Window-averaged J drift: average J over consecutive gyro-period windows
/// and report the worst relative deviation from the first window.
fn secular_j_variation(traj: &Trajectory) -> Result<f64, CoreError> {
    let period = mean_field_gyro_period(traj)?;
    let t_end = traj.final_time();
    let mut window_means = Vec::new();
    let mut w_start = 0.0;
    while w_start + period <= t_end + 1e-12 {
        let mut acc = 0.0;
        let mut cnt = 0usize;
        for s in &traj.samples {
            if s.t >= w_start && s.t < w_start + period {
                acc += s.decomposition.j;
                cnt += 1;
            }
        }
        if cnt > 0 {
            window_means.push(acc / cnt as f64);
        }
        w_start += period;
    }
    if window_means.len() < 2 {
        return Ok(0.0);
    }
    let first = window_means[0];
    Ok(window_means
        .iter()
        .map(|m| (m / first - 1.0).abs())
        .fold(0.0, f64::max))
}

/// Run the adiabatic-limit sweep: for each mu integrate the extended system
/// and the reference flow from the same initial point, measure deviations,
/// and fit log-log convergence orders. Points run concurrently; results are
/// collected in input order, so output is deterministic.
pub fn run_adiabatic_sweep(cfg: &SweepConfig) -> Result<SweepReport, CoreError> {
    if cfg.mu_values.is_empty() {
        return Err(CoreError::InvalidInput("empty mu list".into()));
    }
    if !cfg.mu_values.windows(2).all(|w| w[0] > w[1]) {
        return Err(CoreError::InvalidInput(
            "mu values must be strictly decreasing".into(),
        ));
    }
    let threads = cfg.threads.max(1).min(cfg.mu_values.len());
    let mut results: Vec<Option<Result<SweepPoint, CoreError>>> =
        (0..cfg.mu_values.len()).map(|_| None).collect();

    std::thread::scope(|scope| {
        let chunks = results.chunks_mut(cfg.mu_values.len().div_ceil(threads));
        for (chunk_idx, chunk) in chunks.enumerate() {
            let offset = chunk_idx * cfg.mu_values.len().div_ceil(threads);
            let mu_values = &cfg.mu_values;
            let cfg_ref = &*cfg;
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let mu = mu_values[offset + i];
                    *slot = Some(sweep_point(cfg_ref, mu));
                }
            });
        }
    });

    let mut sup_x = Vec::new();
    let mut sup_xi = Vec::new();
    let mut j_var = Vec::new();
    let mut j_sec = Vec::new();
    let mut band = Vec::new();
    let mut separation = Vec::new();
    let mut terminations = Vec::new();
    for slot in results {
        let point = slot.expect("every slot filled")?;
        sup_x.push(point.deviation.sup_x_error);
        sup_xi.push(point.deviation.sup_xi_error);
        j_var.push(point.deviation.j_relative_variation);
        j_sec.push(point.j_secular);
        band.push(point.x_band_width);
        separation.push(point.separation_residual);
        terminations.push(point.termination);
    }

    let fit_x = fit_log_log(&cfg.mu_values, &sup_x).ok();
    let fit_j = fit_log_log(&cfg.mu_values, &j_var).ok();
    let fit_band = fit_log_log(&cfg.mu_values, &band).ok();
    let fit_sep = fit_log_log(&cfg.mu_values, &separation).ok();
    Ok(SweepReport {
        mu: cfg.mu_values.clone(),
        sup_x_error: sup_x,
        sup_xi_error: sup_xi,
        j_variation: j_var,
        j_variation_secular: j_sec,
        x_band_width: band,
        separation_residual: separation,
        terminations,
        slopes: SweepFits {
            sup_x_error: fit_x.map(|f| f.slope),
            j_variation: fit_j.map(|f| f.slope),
        },
        residuals: SweepFits {
            sup_x_error: fit_x.map(|f| f.residual_rms),
            j_variation: fit_j.map(|f| f.residual_rms),
        },
        x_band_slope: fit_band.map(|f| f.slope),
        separation_slope: fit_sep.map(|f| f.slope),
    })
}
