//! Symplectic and metric structure of phase space.
//!
//! Sign conventions, frozen once for the whole crate: in canonical
//! coordinates `xi = (q^1..q^n, p_1..p_n)` the symplectic form is the block
//! matrix `omega = [[0, -I], [I, 0]]`, its inverse two-tensor is fixed by
//! `omega_ik omegabar^{jk} = delta_i^j`, and Poisson brackets read
//! `{xi^i, xi^j} = omegabar^{ji}`. In this frame `omegabar` carries the same
//! numerical entries as `omega`. Every flow, bracket, and gauge computation
//! in the crate routes through [`SymplecticStructure`] so a sign can only be
//! wrong in one place.
//!
//! The metric is conformal: `g_ij = gamma_ij / h` with a constant symmetric
//! `gamma` of unit determinant, which forces `det g = h^(-2n)`.

use nalgebra::{DMatrix, DVector};

use crate::error::CoreError;

/// A point `xi` of the 2n-dimensional phase space, canonical coordinates
/// `(q^1..q^n, p_1..p_n)`, entries in units of action^(1/2).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpacePoint {
    coords: DVector<f64>,
    dof: usize,
}

impl PhaseSpacePoint {
    /// Build from a flat coordinate vector of even length 2n.
    pub fn new(coords: Vec<f64>) -> Result<Self, CoreError> {
        if coords.is_empty() || !coords.len().is_multiple_of(2) {
            return Err(CoreError::InvalidInput(format!(
                "phase-space point needs 2n coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(CoreError::InvalidInput(
                "phase-space point has non-finite coordinate".into(),
            ));
        }
        let dof = coords.len() / 2;
        Ok(Self {
            coords: DVector::from_vec(coords),
            dof,
        })
    }

    /// Convenience constructor for one degree of freedom.
    pub fn qp(q: f64, p: f64) -> Self {
        Self::new(vec![q, p]).expect("finite (q, p)")
    }

    pub fn from_vector(coords: DVector<f64>) -> Result<Self, CoreError> {
        Self::new(coords.iter().copied().collect())
    }

    /// Degrees of freedom n.
    pub fn dof(&self) -> usize {
        self.dof
    }

    /// Phase-space dimension 2n.
    pub fn dim(&self) -> usize {
        2 * self.dof
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// Coordinate q^mu, mu in 0..n.
    pub fn q(&self, mu: usize) -> f64 {
        self.coords[mu]
    }

    /// Coordinate p_mu, mu in 0..n.
    pub fn p(&self, mu: usize) -> f64 {
        self.coords[self.dof + mu]
    }
}

/// The canonical symplectic form in its Darboux block form, together with
/// the crate's bracket conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticStructure {
    dof: usize,
}

impl SymplecticStructure {
    pub fn new(dof: usize) -> Result<Self, CoreError> {
        if dof == 0 {
            return Err(CoreError::InvalidInput(
                "need at least one degree of freedom".into(),
            ));
        }
        Ok(Self { dof })
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn dim(&self) -> usize {
        2 * self.dof
    }

    /// Lower-index components omega_ij as a matrix: [[0, -I], [I, 0]].
    pub fn omega_lower(&self) -> DMatrix<f64> {
        let n = self.dof;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for mu in 0..n {
            m[(mu, n + mu)] = -1.0;
            m[(n + mu, mu)] = 1.0;
        }
        m
    }

    /// Upper-index components omegabar^{ij}; numerically equal to
    /// `omega_lower` in the canonical frame.
    pub fn omega_bar_upper(&self) -> DMatrix<f64> {
        self.omega_lower()
    }

    /// (omega v)_i = omega_ij v^j.
    pub fn apply_omega(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = self.dof;
        let mut out = DVector::zeros(2 * n);
        for mu in 0..n {
            out[mu] = -v[n + mu];
            out[n + mu] = v[mu];
        }
        out
    }

    /// (omegabar w)^i = omegabar^{ij} w_j. Same block action as `apply_omega`.
    pub fn apply_omega_bar(&self, w: &DVector<f64>) -> DVector<f64> {
        self.apply_omega(w)
    }

    /// Hamiltonian vector field of a gradient: v^i = omegabar^{ji} d_j h.
    /// The transposed index order comes from {xi^i, xi^j} = omegabar^{ji};
    /// with the antisymmetry this is -omegabar grad.
    pub fn hamiltonian_vector(&self, grad: &DVector<f64>) -> DVector<f64> {
        -self.apply_omega_bar(grad)
    }
}

/// Which local potential theta (d theta = omega) to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeChoice {
    /// theta = (p_1..p_n, 0..0).
    Standard,
    /// theta_i = -omega_ij xi^j / 2.
    Symmetric,
}

/// The canonical one-form at a point in the requested gauge. Both gauges
/// satisfy d_i theta_j - d_j theta_i = omega_ij identically.
pub fn canonical_one_form_at(
    s: &SymplecticStructure,
    x: &PhaseSpacePoint,
    gauge: GaugeChoice,
) -> DVector<f64> {
    let n = s.dof();
    match gauge {
        GaugeChoice::Standard => {
            let mut theta = DVector::zeros(2 * n);
            for mu in 0..n {
                theta[mu] = x.p(mu);
            }
            theta
        }
        GaugeChoice::Symmetric => -0.5 * s.apply_omega(x.coords()),
    }
}

/// How a [`ScalarField`] produces derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    /// 4th-order central differences with the given base step; the actual
    /// step is scaled by max(1, |x|_inf).
    FiniteDifference {
        step: f64,
    },
}

/// Default finite-difference base step. Christoffel symbols need second
/// derivatives of h, so the step must keep FD noise below the integrator
/// tolerance.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// One monomial of a polynomial Hamiltonian: coefficient times
/// prod_i xi_i^exponents[i].
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum FieldKind {
    /// h = |xi|^2 / 2.
    Harmonic,
    /// h = |xi|^2 / 2 + offset; keeps the phase-plane origin accessible.
    ShiftedHarmonic { offset: f64 },
    /// h = p^2/2 + (1 - cos q) + offset, one degree of freedom.
    PendulumOffset { offset: f64 },
    /// Coefficient table over the 2n coordinates.
    Polynomial { terms: Vec<PolyTerm> },
    /// h = value everywhere.
    Constant { value: f64 },
}

/// A scalar Hamiltonian h(xi) with value, gradient, Hessian and Laplacian
/// evaluation. Built-ins carry analytic derivatives; any field can be forced
/// through the finite-difference path instead.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    kind: FieldKind,
    dof: usize,
    mode: DerivativeMode,
}

impl ScalarField {
    pub fn harmonic(dof: usize) -> Self {
        Self {
            kind: FieldKind::Harmonic,
            dof,
            mode: DerivativeMode::Analytic,
        }
    }

    pub fn shifted_harmonic(dof: usize, offset: f64) -> Self {
        Self {
            kind: FieldKind::ShiftedHarmonic { offset },
            dof,
            mode: DerivativeMode::Analytic,
        }
    }

    pub fn pendulum_offset(offset: f64) -> Self {
        Self {
            kind: FieldKind::PendulumOffset { offset },
            dof: 1,
            mode: DerivativeMode::Analytic,
        }
    }

    pub fn constant(dof: usize, value: f64) -> Self {
        Self {
            kind: FieldKind::Constant { value },
            dof,
            mode: DerivativeMode::Analytic,
        }
    }

    /// Polynomial tables default to finite differences so the table path is
    /// exercised exactly as configured runs use it.
    pub fn polynomial(dof: usize, terms: Vec<PolyTerm>) -> Result<Self, CoreError> {
        for t in &terms {
            if t.exponents.len() != 2 * dof {
                return Err(CoreError::InvalidInput(format!(
                    "polynomial term has {} exponents, expected {}",
                    t.exponents.len(),
                    2 * dof
                )));
            }
            if !t.coefficient.is_finite() {
                return Err(CoreError::InvalidInput(
                    "non-finite polynomial coefficient".into(),
                ));
            }
        }
        Ok(Self {
            kind: FieldKind::Polynomial { terms },
            dof,
            mode: DerivativeMode::FiniteDifference {
                step: DEFAULT_FD_STEP,
            },
        })
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn dim(&self) -> usize {
        2 * self.dof
    }

    pub fn value(&self, x: &PhaseSpacePoint) -> f64 {
        self.value_raw(x.coords())
    }

    fn value_raw(&self, c: &DVector<f64>) -> f64 {
        match &self.kind {
            FieldKind::Harmonic => 0.5 * c.norm_squared(),
            FieldKind::ShiftedHarmonic { offset } => 0.5 * c.norm_squared() + offset,
            FieldKind::PendulumOffset { offset } => 0.5 * c[1] * c[1] + (1.0 - c[0].cos()) + offset,
            FieldKind::Polynomial { terms } => terms
                .iter()
                .map(|t| {
                    t.coefficient
                        * t.exponents
                            .iter()
                            .enumerate()
                            .map(|(i, &e)| c[i].powi(e as i32))
                            .product::<f64>()
                })
                .sum(),
            FieldKind::Constant { value } => *value,
        }
    }

    pub fn gradient(&self, x: &PhaseSpacePoint) -> DVector<f64> {
        match self.mode {
            DerivativeMode::Analytic => self.gradient_analytic(x.coords()),
            DerivativeMode::FiniteDifference { step } => self.gradient_fd(x.coords(), step),
        }
    }

    pub fn hessian(&self, x: &PhaseSpacePoint) -> DMatrix<f64> {
        match self.mode {
            DerivativeMode::Analytic => self.hessian_analytic(x.coords()),
            DerivativeMode::FiniteDifference { step } => self.hessian_fd(x.coords(), step),
        }
    }

    /// Flat-metric Laplacian, trace of the Hessian.
    pub fn laplacian(&self, x: &PhaseSpacePoint) -> f64 {
        self.hessian(x).trace()
    }

    /// Analytic gradient regardless of the configured mode (the symbolic
    /// route; tests compare it against the FD route).
    pub fn gradient_analytic_at(&self, x: &PhaseSpacePoint) -> DVector<f64> {
        self.gradient_analytic(x.coords())
    }

    /// Finite-difference gradient regardless of the configured mode.
    pub fn gradient_fd_at(&self, x: &PhaseSpacePoint, step: f64) -> DVector<f64> {
        self.gradient_fd(x.coords(), step)
    }

    pub fn hessian_analytic_at(&self, x: &PhaseSpacePoint) -> DMatrix<f64> {
        self.hessian_analytic(x.coords())
    }

    pub fn hessian_fd_at(&self, x: &PhaseSpacePoint, step: f64) -> DMatrix<f64> {
        self.hessian_fd(x.coords(), step)
    }

    fn gradient_analytic(&self, c: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            FieldKind::Harmonic | FieldKind::ShiftedHarmonic { .. } => c.clone(),
            FieldKind::PendulumOffset { .. } => DVector::from_vec(vec![c[0].sin(), c[1]]),
            FieldKind::Polynomial { terms } => {
                let d = c.len();
                let mut g = DVector::zeros(d);
                for t in terms {
                    for i in 0..d {
                        let e = t.exponents[i];
                        if e == 0 {
                            continue;
                        }
                        let mut v = t.coefficient * e as f64;
                        for (j, &ej) in t.exponents.iter().enumerate() {
                            let pow = if j == i { ej - 1 } else { ej };
                            v *= c[j].powi(pow as i32);
                        }
                        g[i] += v;
                    }
                }
                g
            }
            FieldKind::Constant { .. } => DVector::zeros(c.len()),
        }
    }

    fn hessian_analytic(&self, c: &DVector<f64>) -> DMatrix<f64> {
        let d = c.len();
        match &self.kind {
            FieldKind::Harmonic | FieldKind::ShiftedHarmonic { .. } => DMatrix::identity(d, d),
            FieldKind::PendulumOffset { .. } => {
                DMatrix::from_diagonal(&DVector::from_vec(vec![c[0].cos(), 1.0]))
            }
            FieldKind::Polynomial { terms } => {
                let mut hess = DMatrix::zeros(d, d);
                for t in terms {
                    for i in 0..d {
                        for j in i..d {
                            let (ei, ej) = (t.exponents[i], t.exponents[j]);
                            let factor = if i == j {
                                if ei < 2 {
                                    continue;
                                }
                                (ei * (ei - 1)) as f64
                            } else {
                                if ei == 0 || ej == 0 {
                                    continue;
                                }
                                (ei * ej) as f64
                            };
                            let mut v = t.coefficient * factor;
                            for (k, &ek) in t.exponents.iter().enumerate() {
                                let mut pow = ek;
                                if k == i {
                                    pow -= 1;
                                }
                                if k == j {
                                    pow -= 1;
                                }
                                v *= c[k].powi(pow as i32);
                            }
                            hess[(i, j)] += v;
                            if i != j {
                                hess[(j, i)] += v;
                            }
                        }
                    }
                }
                hess
            }
            FieldKind::Constant { .. } => DMatrix::zeros(d, d),
        }
    }

    fn fd_scale(c: &DVector<f64>, step: f64) -> f64 {
        step * c.iter().fold(1.0_f64, |m, &v| m.max(v.abs()))
    }

    fn gradient_fd(&self, c: &DVector<f64>, step: f64) -> DVector<f64> {
        let d = c.len();
        let h = Self::fd_scale(c, step);
        let mut g = DVector::zeros(d);
        let mut probe = c.clone();
        for i in 0..d {
            let base = c[i];
            let mut f_at = |offset: f64| {
                probe[i] = base + offset;
                let v = self.value_raw(&probe);
                probe[i] = base;
                v
            };
            g[i] = (-f_at(2.0 * h) + 8.0 * f_at(h) - 8.0 * f_at(-h) + f_at(-2.0 * h)) / (12.0 * h);
        }
        g
    }

    fn hessian_fd(&self, c: &DVector<f64>, step: f64) -> DMatrix<f64> {
        let d = c.len();
        // Second derivatives trade truncation against roundoff at a larger
        // step than first derivatives.
        let h = 30.0 * Self::fd_scale(c, step);
        let mut hess = DMatrix::zeros(d, d);
        let mut probe = c.clone();
        for i in 0..d {
            let bi = c[i];
            // Diagonal: 4th-order second-derivative stencil.
            let mut f_i = |offset: f64| {
                probe[i] = bi + offset;
                let v = self.value_raw(&probe);
                probe[i] = bi;
                v
            };
            hess[(i, i)] = (-f_i(2.0 * h) + 16.0 * f_i(h) - 30.0 * f_i(0.0) + 16.0 * f_i(-h)
                - f_i(-2.0 * h))
                / (12.0 * h * h);
        }
        for i in 0..d {
            for j in (i + 1)..d {
                // Mixed: 4th-order derivative of the 4th-order gradient.
                let bi = c[i];
                let mut g_j = |offset: f64| {
                    probe[i] = bi + offset;
                    let g = self.gradient_fd(&probe.clone(), step)[j];
                    probe[i] = bi;
                    g
                };
                let v = (-g_j(2.0 * h) + 8.0 * g_j(h) - 8.0 * g_j(-h) + g_j(-2.0 * h)) / (12.0 * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        hess
    }
}

/// Fields with a closed-form gauge potential on the plane; the lattice
/// operator construction needs exact link integrals, which these admit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RadialProfile {
    Constant(f64),
    Harmonic,
    ShiftedHarmonic(f64),
}

impl ScalarField {
    pub(crate) fn radial_profile(&self) -> Option<RadialProfile> {
        if self.dof != 1 {
            return None;
        }
        match &self.kind {
            FieldKind::Constant { value } => Some(RadialProfile::Constant(*value)),
            FieldKind::Harmonic => Some(RadialProfile::Harmonic),
            FieldKind::ShiftedHarmonic { offset } => Some(RadialProfile::ShiftedHarmonic(*offset)),
            _ => None,
        }
    }
}

/// Floor below which h is treated as singular; guards the inaccessible
/// phase-plane origin of the conformal oscillator metric.
pub const DEFAULT_H_MIN: f64 = 1e-9;

/// Metric g, its inverse and determinant at one point.
#[derive(Debug, Clone)]
pub struct MetricAt {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub det: f64,
    pub h: f64,
}

/// Christoffel symbols Gamma^k_ij at a point, symmetric in the lower
/// indices, units 1/action^(1/2).
#[derive(Debug, Clone)]
pub struct ChristoffelTensor {
    dim: usize,
    values: Vec<f64>,
}

impl ChristoffelTensor {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            values: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.values[(k * self.dim + i) * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.values[(k * self.dim + i) * self.dim + j] = v;
    }

    /// Gamma^k_ij v^i v^j for each k.
    pub fn contract(&self, v: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        let mut out = DVector::zeros(d);
        for k in 0..d {
            let mut acc = 0.0;
            for i in 0..d {
                for j in 0..d {
                    acc += self.get(k, i, j) * v[i] * v[j];
                }
            }
            out[k] = acc;
        }
        out
    }
}

/// The conformal phase-space metric g = gamma / h with constant symmetric
/// gamma of unit determinant (identity by default).
#[derive(Debug, Clone)]
pub struct MetricField {
    h: ScalarField,
    gamma: DMatrix<f64>,
    gamma_inv: DMatrix<f64>,
    h_min: f64,
}

impl MetricField {
    /// gamma = identity.
    pub fn conformal(h: ScalarField) -> Self {
        let d = h.dim();
        Self {
            gamma: DMatrix::identity(d, d),
            gamma_inv: DMatrix::identity(d, d),
            h_min: DEFAULT_H_MIN,
            h,
        }
    }

    /// Constant gamma with det gamma = 1 (tolerance 1e-12) and symmetry.
    pub fn with_gamma(h: ScalarField, gamma: DMatrix<f64>) -> Result<Self, CoreError> {
        let d = h.dim();
        if gamma.nrows() != d || gamma.ncols() != d {
            return Err(CoreError::InvalidInput(format!(
                "gamma is {}x{}, expected {}x{}",
                gamma.nrows(),
                gamma.ncols(),
                d,
                d
            )));
        }
        for i in 0..d {
            for j in 0..d {
                if (gamma[(i, j)] - gamma[(j, i)]).abs() > 1e-12 {
                    return Err(CoreError::InvalidInput("gamma must be symmetric".into()));
                }
            }
        }
        let det = gamma.determinant();
        if (det - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidInput(format!(
                "det gamma = {det:.15e}, must equal 1"
            )));
        }
        let gamma_inv = gamma
            .clone()
            .try_inverse()
            .ok_or_else(|| CoreError::InvalidInput("gamma is not invertible".into()))?;
        Ok(Self {
            h,
            gamma,
            gamma_inv,
            h_min: DEFAULT_H_MIN,
        })
    }

    pub fn with_h_min(mut self, h_min: f64) -> Self {
        self.h_min = h_min;
        self
    }

    pub fn field(&self) -> &ScalarField {
        &self.h
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn dof(&self) -> usize {
        self.h.dof()
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    fn check_h(&self, x: &PhaseSpacePoint) -> Result<f64, CoreError> {
        let h = self.h.value(x);
        if h.is_nan() || h <= self.h_min {
            return Err(CoreError::MetricSingular {
                h,
                floor: self.h_min,
            });
        }
        Ok(h)
    }

    /// g, g^-1 and det g at x. det g = h^(-2n) by construction.
    pub fn metric_at(&self, x: &PhaseSpacePoint) -> Result<MetricAt, CoreError> {
        let h = self.check_h(x)?;
        let g = &self.gamma / h;
        let g_inv = &self.gamma_inv * h;
        let det = h.powi(-(self.dim() as i32));
        Ok(MetricAt { g, g_inv, det, h })
    }

    /// Gamma^k_ij = g^{kl} (d_i g_lj + d_j g_il - d_l g_ij) / 2.
    ///
    /// With constant gamma, d_k g_ij = -gamma_ij d_k h / h^2, which collapses
    /// the symbols to -(delta^k_j u_i + delta^k_i u_j - gamma_ij
    /// gamma^{kl} u_l) / 2 with u = grad h / h.
    pub fn christoffel_at(&self, x: &PhaseSpacePoint) -> Result<ChristoffelTensor, CoreError> {
        let h = self.check_h(x)?;
        let u = self.h.gradient(x) / h;
        let d = self.dim();
        let gamma_inv_u = &self.gamma_inv * &u;
        let mut out = ChristoffelTensor::zeros(d);
        for k in 0..d {
            for i in 0..d {
                for j in i..d {
                    let mut v = 0.0;
                    if k == j {
                        v += u[i];
                    }
                    if k == i {
                        v += u[j];
                    }
                    v -= self.gamma[(i, j)] * gamma_inv_u[k];
                    let v = -0.5 * v;
                    out.set(k, i, j, v);
                    out.set(k, j, i, v);
                }
            }
        }
        Ok(out)
    }
}

/// Scalar invariants of h in the flat Cartesian background:
/// `|grad h|^2 / h^2` and `lap h / h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarInvariants {
    pub grad_norm_sq_over_h_sq: f64,
    pub laplacian_over_h: f64,
}

/// Evaluate the two invariants the effective-Hamiltonian formulas consume.
pub fn scalar_invariants_at(
    h: &ScalarField,
    x: &PhaseSpacePoint,
    h_min: f64,
) -> Result<ScalarInvariants, CoreError> {
    let hv = h.value(x);
    if hv.is_nan() || hv <= h_min {
        return Err(CoreError::MetricSingular {
            h: hv,
            floor: h_min,
        });
    }
    let grad = h.gradient(x);
    Ok(ScalarInvariants {
        grad_norm_sq_over_h_sq: grad.norm_squared() / (hv * hv),
        laplacian_over_h: h.laplacian(x) / hv,
    })
}

/// Norm of the symplectic two-form in the metric, sqrt(omega_ij g^{ik}
/// g^{jl} omega_kl / 2). For n = 1 and any unit-determinant gamma this
/// equals h(x); the covariance argument is one-dimensional, so other n are
/// rejected.
pub fn symplectic_norm_at(
    m: &MetricField,
    s: &SymplecticStructure,
    x: &PhaseSpacePoint,
) -> Result<f64, CoreError> {
    if s.dof() != 1 || m.dof() != 1 {
        return Err(CoreError::UnsupportedDimension {
            n: s.dof().max(m.dof()),
        });
    }
    let at = m.metric_at(x)?;
    let omega = s.omega_lower();
    let mut acc = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    acc += omega[(i, j)] * at.g_inv[(i, k)] * at.g_inv[(j, l)] * omega[(k, l)];
                }
            }
        }
    }
    Ok((0.5 * acc).sqrt())
}
