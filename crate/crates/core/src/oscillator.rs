//! Closed-form ground truth for the conformal harmonic oscillator.
//!
//! With h = (q^2 + p^2)/2 and metric 2 delta / (q^2 + p^2), the phase plane
//! becomes a cylinder with the origin inaccessible. In cylindrical
//! coordinates q = mu^(1/2) e^(-rho) sin(phi), p = mu^(1/2) e^(-rho)
//! cos(phi) the motion has two integrals, the angular-momentum analogue
//! `mu phi' + r^2/4 = l` and the energy `mu (r'^2/r^2 + phi'^2) = E`, and
//! reduces to a quadrature in zeta = r^2/(4l) - 1. The regime parameter
//! p = mu E / l^2 selects exponential fall (p > 1), power-law fall (p = 1)
//! or bound oscillation (p < 1).
//!
//! The p > 1 amplitude is written here as 8l(p-1); that normalization (not
//! any other) makes the branch satisfy the radial energy equation and invert
//! the quadrature, which `quadrature_time` cross-checks numerically, and it
//! pins the turning point at r^2 = 4l(1 + sqrt(p)) shared with the other
//! branches.

use crate::dynamics::ExtendedState;
use crate::error::CoreError;
use crate::geometry::PhaseSpacePoint;

/// Which sign of the phase branch the closed form uses; `Minus` is the same
/// family reflected in t - t0 (for p < 1, shifted by half a period).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchSign {
    Plus,
    Minus,
}

impl BranchSign {
    pub fn as_f64(self) -> f64 {
        match self {
            BranchSign::Plus => 1.0,
            BranchSign::Minus => -1.0,
        }
    }
}

/// Parameters of the closed-form solution r^2(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub mu: f64,
    pub energy: f64,
    pub angular_momentum: f64,
    pub t0: f64,
    pub sign: BranchSign,
}

impl OscillatorParams {
    pub fn new(
        mu: f64,
        energy: f64,
        angular_momentum: f64,
        t0: f64,
        sign: BranchSign,
    ) -> Result<Self, CoreError> {
        if !(mu > 0.0 && energy > 0.0) {
            return Err(CoreError::InvalidInput(
                "mu and energy must be positive".into(),
            ));
        }
        if angular_momentum == 0.0 || !angular_momentum.is_finite() {
            return Err(CoreError::InvalidInput(
                "angular momentum must be finite and nonzero".into(),
            ));
        }
        if !t0.is_finite() {
            return Err(CoreError::InvalidInput("t0 must be finite".into()));
        }
        Ok(Self {
            mu,
            energy,
            angular_momentum,
            t0,
            sign,
        })
    }

    /// Regime parameter p = mu E / l^2.
    pub fn p_param(&self) -> f64 {
        self.mu * self.energy / (self.angular_momentum * self.angular_momentum)
    }

    /// r^2(t) depends on l only through |l| (flipping l mirrors the
    /// rotation sense without changing the radius).
    fn l_abs(&self) -> f64 {
        self.angular_momentum.abs()
    }
}

/// The three dynamical regimes of the radial (Morse-potential) motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeClass {
    /// p > 1: falls onto the origin exponentially.
    UnboundExponential,
    /// p = 1 (within 1e-12): falls with r ~ 1/t.
    UnboundPowerLaw,
    /// p < 1: bounded oscillation, never reaches the origin.
    Bound,
}

/// Classify by the regime parameter, boundary tolerance 1e-12.
pub fn classify(params: &OscillatorParams) -> RegimeClass {
    let p = params.p_param();
    if (p - 1.0).abs() <= 1e-12 {
        RegimeClass::UnboundPowerLaw
    } else if p > 1.0 {
        RegimeClass::UnboundExponential
    } else {
        RegimeClass::Bound
    }
}

/// The two integrals of motion (l, E) from a Cartesian extended state:
/// `l = mu phi' + r^2/4`, `E = mu (r'^2/r^2 + phi'^2)`, with
/// `r r' = q q' + p p'` and `r^2 phi' = q' p - q p'` in the frozen
/// orientation (q = r sin phi, p = r cos phi).
pub fn integrals_of_motion(mu: f64, state: &ExtendedState) -> Result<(f64, f64), CoreError> {
    if state.dim() != 2 {
        return Err(CoreError::UnsupportedDimension { n: state.dim() / 2 });
    }
    let q = state.position.q(0);
    let p = state.position.p(0);
    let (vq, vp) = (state.velocity[0], state.velocity[1]);
    let r2 = q * q + p * p;
    if r2.is_nan() || r2 <= 0.0 {
        return Err(CoreError::OriginSingular { r_squared: r2 });
    }
    let r_rdot = q * vq + p * vp;
    let phi_dot = (vq * p - q * vp) / r2;
    let l = mu * phi_dot + 0.25 * r2;
    let energy = mu * (r_rdot * r_rdot / (r2 * r2) + phi_dot * phi_dot);
    Ok((l, energy))
}

/// Initial extended state at the conventional starting point (1, 0) with
/// prescribed integrals (l, E). The angular rate is forced by l; the radial
/// rate magnitude by E, its sign by `radial_sign`.
pub fn oscillator_initial_state(
    mu: f64,
    energy: f64,
    angular_momentum: f64,
    radial_sign: f64,
) -> Result<ExtendedState, CoreError> {
    if !(mu > 0.0 && energy > 0.0) {
        return Err(CoreError::InvalidInput(
            "mu and energy must be positive".into(),
        ));
    }
    let r2 = 1.0;
    let phi_dot = (angular_momentum - 0.25 * r2) / mu;
    let rdot_sq = r2 * (energy / mu - phi_dot * phi_dot);
    if rdot_sq < 0.0 {
        return Err(CoreError::InvalidInput(format!(
            "no real radial velocity: E/mu = {} < phi_dot^2 = {}",
            energy / mu,
            phi_dot * phi_dot
        )));
    }
    let rdot = radial_sign.signum() * rdot_sq.sqrt();
    // At (q, p) = (1, 0): phi = pi/2, so q' = r' and p' = -phi'.
    ExtendedState::new(PhaseSpacePoint::qp(1.0, 0.0), vec![rdot, -phi_dot])
}

/// Closed-form r^2(t), dispatching on the regime of the parameters.
pub fn exact_r_squared(params: &OscillatorParams, t: f64) -> f64 {
    let p = params.p_param();
    if (p - 1.0).abs() <= 1e-9 {
        r_squared_power_law(params, t).expect("branch guard holds")
    } else if p > 1.0 {
        r_squared_exponential(params, t)
    } else {
        r_squared_bound(params, t)
    }
}

/// p > 1 branch: 8l(p-1) / (e^{+2l sqrt(p-1) tau / mu} + p e^{-...} - 2);
/// the branch sign reflects tau.
pub fn r_squared_exponential(params: &OscillatorParams, t: f64) -> f64 {
    let l = params.l_abs();
    let p = params.p_param();
    let tau = (t - params.t0) * params.sign.as_f64();
    let a = l * (p - 1.0).sqrt() / params.mu;
    let e_plus = (2.0 * a * tau).exp();
    8.0 * l * (p - 1.0) / (e_plus + p / e_plus - 2.0)
}

/// p = 1 branch: 8l / (1 + 4 l^2 tau^2 / mu^2). Only valid within 1e-9 of
/// the boundary; it is an isolated parabolic case.
pub fn r_squared_power_law(params: &OscillatorParams, t: f64) -> Result<f64, CoreError> {
    let p = params.p_param();
    let deviation = (p - 1.0).abs();
    if deviation > 1e-9 {
        return Err(CoreError::BranchMismatch { deviation });
    }
    let l = params.l_abs();
    let tau = t - params.t0;
    Ok(8.0 * l / (1.0 + 4.0 * l * l * tau * tau / (params.mu * params.mu)))
}

/// p < 1 branch: 4l(1-p) / (1 + sign sqrt(p) sin(2 l sqrt(1-p) tau / mu)).
pub fn r_squared_bound(params: &OscillatorParams, t: f64) -> f64 {
    let l = params.l_abs();
    let p = params.p_param();
    let tau = t - params.t0;
    let omega = 2.0 * l * (1.0 - p).sqrt() / params.mu;
    4.0 * l * (1.0 - p) / (1.0 + params.sign.as_f64() * p.sqrt() * (omega * tau).sin())
}

/// Gyro (radial oscillation) period of the bound branch,
/// pi mu / (l sqrt(1 - p)).
pub fn bound_radial_period(params: &OscillatorParams) -> Result<f64, CoreError> {
    let p = params.p_param();
    if p >= 1.0 {
        return Err(CoreError::InvalidInput(format!(
            "no bound period for p = {p}"
        )));
    }
    Ok(std::f64::consts::PI * params.mu / (params.l_abs() * (1.0 - p).sqrt()))
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Elapsed time along the quadrature
/// `t - t0 = (mu / 2l) Int dzeta / ((zeta + 1) sqrt(p - zeta^2))`,
/// signed by the integration orientation (odd under endpoint swap). The
/// substitution zeta = sqrt(p) sin(chi) removes the turning-point
/// singularities before the adaptive rule sees the integrand.
pub fn quadrature_time(
    params: &OscillatorParams,
    zeta0: f64,
    zeta1: f64,
) -> Result<f64, CoreError> {
    let p = params.p_param();
    let sqrt_p = p.sqrt();
    for (name, z) in [("zeta0", zeta0), ("zeta1", zeta1)] {
        if z.is_nan() || z.abs() >= sqrt_p {
            return Err(CoreError::DomainError(format!(
                "{name} = {z} outside (-sqrt(p), sqrt(p)) = (+-{sqrt_p})"
            )));
        }
        if z <= -1.0 {
            return Err(CoreError::DomainError(format!(
                "{name} = {z} on the unphysical side of zeta = -1"
            )));
        }
    }
    if zeta0 == zeta1 {
        return Ok(0.0);
    }
    let chi0 = (zeta0 / sqrt_p).asin();
    let chi1 = (zeta1 / sqrt_p).asin();
    let integrand = move |chi: f64| 1.0 / (1.0 + sqrt_p * chi.sin());
    let value = integrate(integrand, chi0, chi1, 1e-12);
    Ok(params.mu / (2.0 * params.l_abs()) * value)
}

/// zeta corresponding to a squared radius.
pub fn zeta_of_r_squared(params: &OscillatorParams, r_squared: f64) -> f64 {
    r_squared / (4.0 * params.l_abs()) - 1.0
}

/// Non-canonical cylindrical coordinates of a phase-plane point:
/// rho = -ln(r^2/mu)/2, phi = atan2(q, p).
pub fn cylindrical_map(mu: f64, x: &PhaseSpacePoint) -> Result<(f64, f64), CoreError> {
    if x.dim() != 2 {
        return Err(CoreError::UnsupportedDimension { n: x.dof() });
    }
    let (q, p) = (x.q(0), x.p(0));
    let r2 = q * q + p * p;
    if r2.is_nan() || r2 <= 0.0 {
        return Err(CoreError::OriginSingular { r_squared: r2 });
    }
    Ok((-0.5 * (r2 / mu).ln(), q.atan2(p)))
}

/// Inverse of [`cylindrical_map`]: q = mu^(1/2) e^(-rho) sin(phi),
/// p = mu^(1/2) e^(-rho) cos(phi).
pub fn cylindrical_inverse(mu: f64, rho: f64, phi: f64) -> PhaseSpacePoint {
    let r = mu.sqrt() * (-rho).exp();
    PhaseSpacePoint::qp(r * phi.sin(), r * phi.cos())
}

/// Fit the phase constants (t0, branch sign) of the closed form to sampled
/// r^2(t) data: locate the first interior extremum for the initial guess,
/// then polish by least squares. The closed-form family fixes (t0, sign)
/// only through the initial conditions; fitting them from the trajectory
/// avoids re-deriving that map.
pub fn fit_phase(
    mu: f64,
    energy: f64,
    angular_momentum: f64,
    times: &[f64],
    r_squared: &[f64],
) -> Result<OscillatorParams, CoreError> {
    if times.len() != r_squared.len() || times.len() < 8 {
        return Err(CoreError::InsufficientData(format!(
            "{} samples, need at least 8 matching pairs",
            times.len()
        )));
    }
    let base = OscillatorParams::new(mu, energy, angular_momentum, 0.0, BranchSign::Plus)?;
    let p = base.p_param();

    let objective = |t0: f64, sign: BranchSign| -> f64 {
        let params = OscillatorParams { t0, sign, ..base };
        times
            .iter()
            .zip(r_squared)
            .map(|(&t, &r2)| {
                let d = exact_r_squared(&params, t) - r2;
                d * d
            })
            .sum()
    };

    // Candidate t0 values from the first interior extremum of the samples.
    let mut extremum: Option<(f64, bool)> = None;
    for i in 1..times.len() - 1 {
        if r_squared[i] > r_squared[i - 1] && r_squared[i] > r_squared[i + 1] {
            extremum = Some((times[i], true));
            break;
        }
        if r_squared[i] < r_squared[i - 1] && r_squared[i] < r_squared[i + 1] {
            extremum = Some((times[i], false));
            break;
        }
    }

    let golden = |mut lo: f64, mut hi: f64, sign: BranchSign| -> f64 {
        let inv_phi = 0.618_033_988_749_894_9;
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let mut fc = objective(c, sign);
        let mut fd = objective(d, sign);
        for _ in 0..120 {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = objective(c, sign);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = objective(d, sign);
            }
        }
        0.5 * (lo + hi)
    };

    let l = angular_momentum.abs();
    let mut best: Option<(f64, f64, BranchSign)> = None;
    let mut consider = |t0: f64, sign: BranchSign| {
        let f = objective(t0, sign);
        if best.map(|(bf, _, _)| f < bf).unwrap_or(true) {
            best = Some((f, t0, sign));
        }
    };

    if p < 1.0 - 1e-9 {
        // Periodic phase: coarse scan over one radial period, then refine.
        // The two branch signs are the same family shifted by half a period,
        // so Plus alone covers it.
        let period = std::f64::consts::PI * mu / (l * (1.0 - p).sqrt());
        let coarse = 512;
        let mut best_t0 = 0.0;
        let mut best_f = f64::INFINITY;
        for i in 0..coarse {
            let t0 = times[0] + period * i as f64 / coarse as f64;
            let f = objective(t0, BranchSign::Plus);
            if f < best_f {
                best_f = f;
                best_t0 = t0;
            }
        }
        let half = period / coarse as f64;
        consider(
            golden(best_t0 - half, best_t0 + half, BranchSign::Plus),
            BranchSign::Plus,
        );
    } else {
        // Falling regimes: anchor on the peak when the window has one,
        // otherwise scan; polish both orientations.
        let a = l * (p - 1.0).abs().sqrt().max(1e-12) / mu;
        let spread = if p > 1.0 + 1e-9 {
            (p.ln() / (4.0 * a)).max(0.5 / a)
        } else {
            (times[times.len() - 1] - times[0]).max(mu / l)
        };
        let anchors: Vec<f64> = match extremum {
            Some((t_peak, true)) => vec![t_peak],
            _ => (0..32)
                .map(|i| times[0] - spread + 2.0 * spread * i as f64 / 31.0)
                .collect(),
        };
        for sign in [BranchSign::Plus, BranchSign::Minus] {
            for &anchor in &anchors {
                let t0_guess = if p > 1.0 + 1e-9 {
                    anchor - sign.as_f64() * p.ln() / (4.0 * a)
                } else {
                    anchor
                };
                consider(golden(t0_guess - spread, t0_guess + spread, sign), sign);
            }
        }
    }

    let (_, t0, sign) = best.expect("at least one candidate considered");
    OscillatorParams::new(mu, energy, angular_momentum, t0, sign)
}
