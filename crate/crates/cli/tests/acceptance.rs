//! Acceptance suite: one test per criterion, tolerances pinned in code.
//! Each test prints `ACCEPTANCE <n> <name>: PASS|FAIL` plus the measured
//! numbers (visible with `--nocapture`, and in the failure message
//! otherwise).

use shadowflow::dynamics::{
    default_sample_interval, integrate_extended, ExtendedState, IntegratorConfig, Termination,
};
use shadowflow::geometry::{
    MetricField, PhaseSpacePoint, PolyTerm, ScalarField, SymplecticStructure,
};
use shadowflow::guiding_center::{fit_log_log, run_adiabatic_sweep, SweepConfig};
use shadowflow::oscillator::{
    bound_radial_period, exact_r_squared, fit_phase, integrals_of_motion, oscillator_initial_state,
    quadrature_time, zeta_of_r_squared, BranchSign, OscillatorParams,
};
use shadowflow::quantum::{
    eigenpairs_near, lowest_eigenpairs, magnetic_spectrum, EigOptions, GridSpec, LatticeGauge,
    PeierlsOperator,
};
use shadowflow::sampling::SplitMix64;

const ENERGY: f64 = 1.0;
const ANGULAR_MOMENTUM: f64 = 0.25;

fn oscillator_setup() -> (MetricField, SymplecticStructure) {
    (
        MetricField::conformal(ScalarField::harmonic(1)),
        SymplecticStructure::new(1).unwrap(),
    )
}

fn mu_for_p(p: f64) -> f64 {
    p * ANGULAR_MOMENTUM * ANGULAR_MOMENTUM / ENERGY
}

fn run_oscillator(p: f64, horizon: f64, sample_interval: f64) -> shadowflow::dynamics::Trajectory {
    let (metric, s) = oscillator_setup();
    let mu = mu_for_p(p);
    let init = oscillator_initial_state(mu, ENERGY, ANGULAR_MOMENTUM, 1.0).unwrap();
    let cfg = IntegratorConfig {
        mu,
        rel_tol: 1e-10,
        abs_tol: 1e-13,
        max_step: 0.0,
        horizon,
        sample_interval,
    };
    integrate_extended(&metric, &s, &cfg, &init).unwrap()
}

fn verdict(n: usize, name: &str, pass: bool, detail: &str) -> String {
    let line = format!(
        "ACCEPTANCE {n} {name}: {} -- {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    println!("{line}");
    line
}

/// Criterion 1: numeric r^2(t) matches the closed form to 1e-6 relative
/// over three gyro periods for the bound Fig-1 parameter set.
#[test]
fn acceptance_1_oscillator_oracle_match() {
    let mut details = Vec::new();
    let mut pass = true;
    for &p in &[0.01, 0.1, 0.5, 0.95] {
        let mu = mu_for_p(p);
        let probe =
            OscillatorParams::new(mu, ENERGY, ANGULAR_MOMENTUM, 0.0, BranchSign::Plus).unwrap();
        let period = bound_radial_period(&probe).unwrap();
        let traj = run_oscillator(p, 3.05 * period, period / 64.0);
        assert!(matches!(traj.termination, Termination::Completed));
        let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
        let values: Vec<f64> = traj
            .samples
            .iter()
            .map(|s| s.state.position.coords().norm_squared())
            .collect();
        let fitted = fit_phase(mu, ENERGY, ANGULAR_MOMENTUM, &times, &values).unwrap();
        let mut worst: f64 = 0.0;
        for (&t, &v) in times.iter().zip(&values) {
            worst = worst.max(((exact_r_squared(&fitted, t) - v) / v).abs());
        }
        pass &= worst <= 1e-6;
        details.push(format!("p={p}: max rel err {worst:.3e}"));
    }
    let line = verdict(
        1,
        "oscillator oracle match (<= 1e-6)",
        pass,
        &details.join("; "),
    );
    assert!(pass, "{line}");
}

/// Criterion 2: regime behavior. p = 10 collapses exponentially (R^2 of the
/// final-decade log r fit > 0.999); p = 1 satisfies r^2 t^2 -> 2 mu^2 / l
/// within 2%; bound runs stay inside [0.5 min, 1.5 max] of the closed-form
/// envelope.
#[test]
fn acceptance_2_regime_behavior() {
    let mut details = Vec::new();
    let mut pass = true;

    // p = 10: run until the fall truncates at the singular origin.
    {
        let traj = run_oscillator(10.0, 40.0, 0.02);
        assert!(
            matches!(traj.termination, Termination::MetricSingular { .. }),
            "p = 10 should fall onto the origin"
        );
        let rs: Vec<(f64, f64)> = traj
            .samples
            .iter()
            .map(|s| (s.t, s.state.position.coords().norm()))
            .collect();
        let r_min = rs.last().unwrap().1;
        let window: Vec<(f64, f64)> = rs
            .iter()
            .copied()
            .filter(|(_, r)| *r <= 10.0 * r_min)
            .collect();
        let n = window.len() as f64;
        let sx: f64 = window.iter().map(|(t, _)| t).sum();
        let sy: f64 = window.iter().map(|(_, r)| r.ln()).sum();
        let sxx: f64 = window.iter().map(|(t, _)| t * t).sum();
        let sxy: f64 = window.iter().map(|(t, r)| t * r.ln()).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        let ss_res: f64 = window
            .iter()
            .map(|(t, r)| (r.ln() - intercept - slope * t).powi(2))
            .sum();
        let mean = sy / n;
        let ss_tot: f64 = window.iter().map(|(_, r)| (r.ln() - mean).powi(2)).sum();
        let r2fit = 1.0 - ss_res / ss_tot;
        pass &= r2fit > 0.999 && slope < 0.0;
        details.push(format!(
            "p=10: final-decade log r linearity R^2 = {r2fit:.6}"
        ));
    }

    // p = 1: power-law tail.
    {
        let mu = mu_for_p(1.0);
        let traj = run_oscillator(1.0, 50.0, 0.05);
        assert!(matches!(traj.termination, Termination::Completed));
        let last = traj.samples.last().unwrap();
        let value = last.state.position.coords().norm_squared() * last.t * last.t;
        let limit = 2.0 * mu * mu / ANGULAR_MOMENTUM;
        let rel = (value / limit - 1.0).abs();
        pass &= rel <= 0.02;
        details.push(format!("p=1: r^2 t^2 / (2 mu^2/l) - 1 = {rel:.4}"));
    }

    // Bound runs stay inside the slackened closed-form envelope.
    for &p in &[0.95, 0.5, 0.1, 0.01] {
        let l = ANGULAR_MOMENTUM;
        let env_min = 4.0 * l * (1.0 - p) / (1.0 + p.sqrt());
        let env_max = 4.0 * l * (1.0 - p) / (1.0 - p.sqrt());
        let traj = run_oscillator(
            p,
            2.0 * std::f64::consts::PI,
            default_sample_interval(mu_for_p(p), 0.5),
        );
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for s in &traj.samples {
            let r2 = s.state.position.coords().norm_squared();
            lo = lo.min(r2);
            hi = hi.max(r2);
        }
        let ok = lo >= 0.5 * env_min && hi <= 1.5 * env_max;
        pass &= ok;
        details.push(format!(
            "p={p}: r^2 in [{lo:.4}, {hi:.4}] vs envelope [{env_min:.4}, {env_max:.4}]"
        ));
    }

    let line = verdict(2, "regime behavior", pass, &details.join("; "));
    assert!(pass, "{line}");
}

/// Criterion 3: the quadrature inverts the closed-form branches to 1e-8 in
/// all three regimes.
#[test]
fn acceptance_3_quadrature_consistency() {
    let mut details = Vec::new();
    let mut pass = true;
    let l = ANGULAR_MOMENTUM;

    let mut check = |label: &str, params: &OscillatorParams, ta: f64, tb: f64| {
        let za = zeta_of_r_squared(params, exact_r_squared(params, ta));
        let zb = zeta_of_r_squared(params, exact_r_squared(params, tb));
        let dt = quadrature_time(params, za, zb).unwrap();
        let residual = (dt.abs() - (tb - ta)).abs();
        pass &= residual <= 1e-8;
        details.push(format!("{label}: |quadrature - elapsed| = {residual:.2e}"));
    };

    let p_bound = OscillatorParams::new(mu_for_p(0.25), ENERGY, l, 0.0, BranchSign::Plus).unwrap();
    let period = bound_radial_period(&p_bound).unwrap();
    check("p=0.25", &p_bound, 0.04 * period, 0.21 * period);

    let p_exp = OscillatorParams::new(mu_for_p(10.0), ENERGY, l, 0.0, BranchSign::Plus).unwrap();
    let pv = p_exp.p_param();
    let a = l * (pv - 1.0).sqrt() / p_exp.mu;
    let t_peak = pv.ln() / (4.0 * a);
    check("p=10", &p_exp, t_peak + 0.2, t_peak + 1.1);

    let p_pl = OscillatorParams::new(mu_for_p(1.0), ENERGY, l, 0.0, BranchSign::Plus).unwrap();
    check("p=1", &p_pl, 0.3, 1.7);

    let line = verdict(
        3,
        "paper-internal quadrature consistency (<= 1e-8)",
        pass,
        &details.join("; "),
    );
    assert!(pass, "{line}");
}

/// Criterion 4: adiabatic-limit sweep over mu = {0.1 .. 0.002} at fixed
/// E = 1, l = 1/4: fitted order >= 0.5 for sup_t |X - xi_H|, >= 0.8 for the
/// J relative variation, fit residuals < 0.15.
///
/// Two structural features of these exact initial data work against the
/// stated thresholds, so this criterion is expected to fail as written (the
/// diagnostics below print the full story): mu = 0.1 means p = 1.6 > 1, an
/// unbound point whose trajectory collapses onto the origin and leaves the
/// power-law family entirely; and the guiding center traces the reference
/// orbit at J ~ 2 times its speed, so the time-parametrized sup error
/// plateaus at the phase-lag geometry instead of vanishing.
#[test]
fn acceptance_4_adiabatic_limit_sweep() {
    let cfg = SweepConfig {
        mu_values: vec![0.1, 0.05, 0.02, 0.01, 0.005, 0.002],
        energy: ENERGY,
        angular_momentum: ANGULAR_MOMENTUM,
        horizon: 2.0 * std::f64::consts::PI,
        rel_tol: 1e-10,
        abs_tol: 1e-12,
        threads: 3,
    };
    let report = run_adiabatic_sweep(&cfg).unwrap();
    let x_slope = report.slopes.sup_x_error.unwrap_or(f64::NAN);
    let j_slope = report.slopes.j_variation.unwrap_or(f64::NAN);
    let x_resid = report.residuals.sup_x_error.unwrap_or(f64::NAN);
    let j_resid = report.residuals.j_variation.unwrap_or(f64::NAN);

    println!("  mu            : {:?}", report.mu);
    println!("  sup_X_error   : {:?}", report.sup_x_error);
    println!("  J_variation   : {:?}", report.j_variation);
    println!("  J secular     : {:?}", report.j_variation_secular);
    println!("  |X| band width: {:?}", report.x_band_width);
    println!("  separation res: {:?}", report.separation_residual);
    println!("  terminations  : {:?}", report.terminations);
    // Diagnostic fits over the bound points only (p = 16 mu < 1).
    let bound: Vec<usize> = (0..report.mu.len())
        .filter(|&i| 16.0 * report.mu[i] < 1.0)
        .collect();
    let bmu: Vec<f64> = bound.iter().map(|&i| report.mu[i]).collect();
    let bx: Vec<f64> = bound.iter().map(|&i| report.sup_x_error[i]).collect();
    let bj: Vec<f64> = bound.iter().map(|&i| report.j_variation[i]).collect();
    if let (Ok(fx), Ok(fj)) = (fit_log_log(&bmu, &bx), fit_log_log(&bmu, &bj)) {
        println!(
            "  bound-only fits: sup_X slope {:.3} (residual {:.3}), J slope {:.3} (residual {:.3})",
            fx.slope, fx.residual_rms, fj.slope, fj.residual_rms
        );
    }
    println!(
        "  band slope {:?}, separation slope {:?}",
        report.x_band_slope, report.separation_slope
    );

    let pass = x_slope >= 0.5 && j_slope >= 0.8 && x_resid < 0.15 && j_resid < 0.15;
    let detail = format!(
        "sup_X slope {x_slope:.3} (need >= 0.5), J slope {j_slope:.3} (need >= 0.8), \
         residuals {x_resid:.3}/{j_resid:.3} (need < 0.15)"
    );
    let line = verdict(4, "adiabatic-limit convergence orders", pass, &detail);
    assert!(pass, "{line}");
}

/// Criterion 5: conservation suite. Extended energy, l and E drift below
/// 1e-8 on every oscillator run of the reference p set; the homogeneous
/// field keeps the guiding center fixed to 1e-6. The runs integrate at
/// rel_tol 1e-12 so the p = 0.01 case (eight hundred gyro periods inside
/// the horizon) resolves conservation rather than tolerance accumulation.
#[test]
fn acceptance_5_conservation_suite() {
    let mut details = Vec::new();
    let mut pass = true;
    let (metric, s) = oscillator_setup();
    for &p in &[10.0, 1.0, 0.95, 0.5, 0.1, 0.01] {
        let mu = mu_for_p(p);
        let init = oscillator_initial_state(mu, ENERGY, ANGULAR_MOMENTUM, 1.0).unwrap();
        let cfg = IntegratorConfig {
            mu,
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_step: 0.0,
            horizon: 2.0 * std::f64::consts::PI,
            sample_interval: default_sample_interval(mu, 0.5),
        };
        let traj = integrate_extended(&metric, &s, &cfg, &init).unwrap();
        let e0 = traj.samples[0].decomposition.e_ext;
        let (l0, en0) = integrals_of_motion(mu, &traj.samples[0].state).unwrap();
        let mut worst: f64 = 0.0;
        for s in &traj.samples {
            worst = worst.max(((s.decomposition.e_ext - e0) / e0).abs());
            let (l, en) = integrals_of_motion(mu, &s.state).unwrap();
            worst = worst.max(((l - l0) / l0).abs());
            worst = worst.max(((en - en0) / en0).abs());
        }
        pass &= worst < 1e-8;
        details.push(format!("p={p}: worst drift {worst:.2e}"));
    }

    // Homogeneous field: X constant to 1e-6.
    {
        let metric = MetricField::conformal(ScalarField::constant(1, 1.0));
        let s = SymplecticStructure::new(1).unwrap();
        let cfg = IntegratorConfig {
            mu: 1.0,
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_step: 0.0,
            horizon: 6.0,
            sample_interval: 0.02,
        };
        let init = ExtendedState::new(PhaseSpacePoint::qp(1.0, 0.0), vec![1.0, 0.0]).unwrap();
        let traj = integrate_extended(&metric, &s, &cfg, &init).unwrap();
        let x0 = traj.samples[0].decomposition.x.clone();
        let mut worst: f64 = 0.0;
        for s in &traj.samples {
            worst = worst.max((&s.decomposition.x - &x0).norm());
        }
        pass &= worst < 1e-6;
        details.push(format!("homogeneous X drift {worst:.2e}"));
    }

    let line = verdict(
        5,
        "conservation suite (< 1e-8, X < 1e-6)",
        pass,
        &details.join("; "),
    );
    assert!(pass, "{line}");
}

/// Criterion 6: the standard ordering invariant cancels the order-hbar
/// coefficient to 1e-12 at 1000 random points for three field families.
#[test]
fn acceptance_6_i1_cancellation() {
    use shadowflow::quantum::{order_hbar_coefficient, OrderingInvariant};
    let quartic = ScalarField::polynomial(
        1,
        vec![
            PolyTerm {
                exponents: vec![0, 0],
                coefficient: 1.0,
            },
            PolyTerm {
                exponents: vec![2, 0],
                coefficient: 1.0,
            },
            PolyTerm {
                exponents: vec![0, 2],
                coefficient: 1.0,
            },
            PolyTerm {
                exponents: vec![2, 2],
                coefficient: 0.5,
            },
            PolyTerm {
                exponents: vec![4, 0],
                coefficient: 0.25,
            },
            PolyTerm {
                exponents: vec![0, 4],
                coefficient: 0.25,
            },
        ],
    )
    .unwrap();
    let fields = vec![
        ("harmonic", ScalarField::harmonic(1)),
        ("shifted-harmonic", ScalarField::shifted_harmonic(1, 0.7)),
        ("quartic table", quartic),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    let mut rng = SplitMix64::new(0xacce97);
    for (name, field) in &fields {
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        while checked < 1000 {
            let x = PhaseSpacePoint::qp(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
            if field.value(&x) < 1e-6 {
                continue;
            }
            let c = order_hbar_coefficient(field, &x, &OrderingInvariant::Standard).unwrap();
            worst = worst.max(c.abs());
            checked += 1;
        }
        pass &= worst < 1e-12;
        details.push(format!("{name}: max |coeff| = {worst:.2e}"));
    }
    let line = verdict(
        6,
        "I1 cancellation (< 1e-12 at 1000 points)",
        pass,
        &details.join("; "),
    );
    assert!(pass, "{line}");
}

/// Criterion 7: Landau check at B = 1, hbar = 0.1, N = 192, L = 3. Lowest
/// levels at 0.5 and the next tower at 1.5 within 1%; the degeneracy count
/// in the 1% window around 0.5 within +-2 of flux / (2 pi hbar).
///
/// The level checks hold. The literal degeneracy count is expected to fail:
/// flux/(2 pi hbar) counts states as if the box had no walls, but Dirichlet
/// walls push every state whose guiding center sits within a few magnetic
/// lengths of the boundary out of the 1% window. The printed wall-corrected
/// estimate quantifies exactly that.
#[test]
fn acceptance_7_landau_levels_and_degeneracy() {
    let hbar = 0.1;
    let b_field = 1.0;
    let half_width = 3.0;
    let field = ScalarField::constant(1, b_field);
    let grid = GridSpec::new(half_width, 192, hbar).unwrap();
    let mut pass = true;
    let mut details = Vec::new();

    // The measurements are independent; run them concurrently. The solver
    // values are cross-certified by inertia brackets: zero eigenvalues below
    // 0.495 plus at least six below 0.505 proves the six lowest lie within
    // 1% of 0.5 independent of iterative residuals.
    let op = PeierlsOperator::build(&field, &grid, LatticeGauge::Symmetric).unwrap();
    let t0 = std::time::Instant::now();
    let low_opts = EigOptions {
        max_sweeps: 16,
        residual_ceiling: 5e-5,
        ..EigOptions::for_k(6)
    };
    let op_ref = &op;
    let low_opts_ref = &low_opts;
    let (low, near, counts) = std::thread::scope(|scope| {
        let low = scope.spawn(move || lowest_eigenpairs(op_ref, 6, low_opts_ref).unwrap());
        let near =
            scope.spawn(move || eigenpairs_near(op_ref, 1.5, 6, &EigOptions::for_k(6)).unwrap());
        let count_jobs: Vec<_> = [0.495, 0.505, 1.485, 1.515, 1.0]
            .into_iter()
            .map(|shift| scope.spawn(move || op_ref.count_below(shift).unwrap()))
            .collect();
        (
            low.join().unwrap(),
            near.join().unwrap(),
            count_jobs
                .into_iter()
                .map(|j| j.join().unwrap())
                .collect::<Vec<usize>>(),
        )
    });
    println!("  solver + inertia wall time: {:.1?}", t0.elapsed());
    let (below_0495, below_0505, below_1485, below_1515, below_midgap) =
        (counts[0], counts[1], counts[2], counts[3], counts[4]);

    let worst0 = low
        .values
        .iter()
        .map(|e| (e - 0.5f64).abs() / 0.5)
        .fold(0.0, f64::max);
    pass &= worst0 <= 0.01 && below_0495 == 0 && below_0505 >= 6;
    details.push(format!(
        "lowest 6 within {worst0:.4} of 0.5 (need <= 0.01; bracket: {below_0495} below 0.495, {below_0505} below 0.505)"
    ));

    let worst1 = near
        .values
        .iter()
        .map(|e| (e - 1.5f64).abs() / 1.5)
        .fold(0.0, f64::max);
    let tower_count = below_1515 - below_1485;
    pass &= worst1 <= 0.01 && tower_count >= 6;
    details.push(format!(
        "n=1 tower within {worst1:.4} of 1.5 (need <= 0.01; {tower_count} states in the 1% window)"
    ));

    // Degeneracy: states within 1% of 0.5, counted exactly by inertia.
    let count = below_0505 - below_0495;
    let flux_count =
        b_field * (2.0 * half_width) * (2.0 * half_width) / (2.0 * std::f64::consts::PI * hbar);
    let ok = (count as f64 - flux_count).abs() <= 2.0;
    pass &= ok;
    details.push(format!(
        "degeneracy {count} vs flux/(2 pi hbar) = {flux_count:.2} (need within +-2)"
    ));
    // Wall-corrected estimate: exclude guiding centers within d0 of the
    // wall, d0 from exp(-x^2)/(sqrt(pi) x) = 1% of the level ratio.
    let magnetic_length = (hbar / b_field).sqrt();
    let mut x_lo = 0.5f64;
    let mut x_hi = 5.0f64;
    for _ in 0..60 {
        let x = 0.5 * (x_lo + x_hi);
        let v = (-x * x).exp() / (std::f64::consts::PI.sqrt() * x);
        if v > 0.005 {
            x_lo = x;
        } else {
            x_hi = x;
        }
    }
    let d0 = 0.5 * (x_lo + x_hi) * magnetic_length;
    let l_eff = 2.0 * half_width - 2.0 * d0;
    let corrected = b_field * l_eff * l_eff / (2.0 * std::f64::consts::PI * hbar);
    println!(
        "  wall-corrected estimate: L_eff = {l_eff:.3}, count ~ {corrected:.1} (measured {count})"
    );
    println!("  states below midgap 1.0: {below_midgap}");

    let line = verdict(7, "Landau levels and degeneracy", pass, &details.join("; "));
    assert!(pass, "{line}");
}

/// Criterion 8: harmonic field strength B = |xi|^2 / 2 at hbar = 0.05,
/// N = 256: three lowest-band eigenvalues within 5% of hbar (m + 1/2) / 2,
/// with the factor-2 alternative failing the match.
///
/// Expected to fail as stated: the prediction extrapolates the adiabatic
/// band formula into the region where B vanishes (the inaccessible origin),
/// but the low-lying states live exactly there, at radii where the magnetic
/// length exceeds the field's variation scale. A zero-mode (Aharonov-
/// Casher-type) estimate puts the true ground state near
/// sqrt(hbar)/sqrt(pi) ~ 0.126, an order of magnitude above
/// hbar/4 = 0.0125; the run below measures it and the refinement check
/// shows the gap is physical, not discretization.
#[test]
fn acceptance_8_effective_spectrum() {
    let hbar = 0.05;
    let field = ScalarField::harmonic(1);
    let grid = GridSpec::new(3.0, 256, hbar).unwrap();
    let report = magnetic_spectrum(&field, &grid, 8).unwrap();

    let mut details = Vec::new();
    let mut pass = true;
    let mut alt_fails = true;
    for m in 0..3 {
        let eig = report.eigenvalues[m];
        let predicted = 0.5 * hbar * (m as f64 + 0.5);
        let rel = (eig - predicted).abs() / predicted;
        pass &= rel <= 0.05;
        let rel_double = (eig - 2.0 * predicted).abs() / (2.0 * predicted);
        alt_fails &= rel_double > 0.05;
        details.push(format!(
            "m={m}: eig {eig:.5} vs hbar(m+1/2)/2 = {predicted:.5} (rel {rel:.3}), x2 rel {rel_double:.3}"
        ));
    }
    // The factor-2 alternative must fail the match, disambiguating the
    // normalization empirically.
    pass &= alt_fails;
    details.push(format!("factor-2 alternative rejected: {alt_fails}"));

    // Refinement cross-check: the same levels at N = 128 to show the
    // computed values are grid-converged.
    let coarse = magnetic_spectrum(&field, &GridSpec::new(3.0, 128, hbar).unwrap(), 4).unwrap();
    println!(
        "  refinement: lowest at N=128 {:.6} vs N=256 {:.6}",
        coarse.eigenvalues[0], report.eigenvalues[0]
    );
    println!(
        "  zero-mode estimate sqrt(hbar/pi) = {:.5}",
        (hbar / std::f64::consts::PI).sqrt()
    );
    println!("  boundary amplitude {:.2e}", report.boundary_amplitude);
    // Level-spacing scaling across hbar: halving hbar shrinks the measured
    // intra-band spacing by ~sqrt(2) (the zero-mode sqrt(hbar) scale), not
    // the factor 2 the band formula would give.
    let half = magnetic_spectrum(&field, &GridSpec::new(3.0, 256, 0.5 * hbar).unwrap(), 4).unwrap();
    let spacing = report.eigenvalues[1] - report.eigenvalues[0];
    let spacing_half = half.eigenvalues[1] - half.eigenvalues[0];
    println!(
        "  spacing at hbar = {hbar}: {spacing:.5}; at hbar/2: {spacing_half:.5}; ratio {:.3} (sqrt(2) = 1.414)",
        spacing / spacing_half
    );

    let line = verdict(
        8,
        "effective lowest-band spectrum",
        pass,
        &details.join("; "),
    );
    assert!(pass, "{line}");
}
