//! The acceptance checks: every criterion the artifact must satisfy, with its
//! tolerance pinned in code. Each check returns a [`CriterionReport`]; the
//! `acceptance` integration test asserts them all and the CLI `verify`
//! subcommand prints them as a table.
//!
//! Oracles used here (RK4 width integration, quadrature, closed-form exit
//! statistics, master-equation densities) are deliberately independent of the
//! code paths they check.

use num_complex::Complex;
use rand::Rng;

use crate::ensemble::{
    run_ensemble, EnsembleSpec, GridDoubleDeltaA, GridInitial,
    GridMeanDensity, SingleGaussianMeans,
};
use crate::error::{Error, Result};
use crate::gauss1;
use crate::gauss2::{
    self, bounding_sandwich, hitting_stats, run_delocalization_ensemble, run_hitting_ensemble,
    DoubleGaussianState, HittingConfig,
};
use crate::grid::{self, GridSpec, SpectralEngine, WaveGrid};
use crate::master;
use crate::model::Model;
use crate::ode;
use crate::stochastic::{sample_path, substream_rng, time_change};
use crate::units::{self, derive_constants, ModelParams, Preset};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: &'static str,
    pub name: &'static str,
    pub pass: bool,
    pub details: String,
}

impl CriterionReport {
    fn new(id: &'static str, name: &'static str, pass: bool, details: String) -> Self {
        CriterionReport {
            id,
            name,
            pass,
            details,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{:<4} {:<28} {}  {}",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.details
        )
    }
}

/// Ensemble sizing knobs for the Monte Carlo criteria (the defaults are the
/// acceptance values).
#[derive(Debug, Clone, Copy)]
pub struct McOptions {
    pub n_paths: Option<usize>,
    pub seed: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            n_paths: None,
            seed: 70,
        }
    }
}

fn nat() -> Model<f64> {
    Model::natural()
}

/// C1: exact closed-form identities at 1e-12.
pub fn criterion_closed_form_identities() -> CriterionReport {
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for preset in [Preset::Electron, Preset::Nucleon, Preset::Gram] {
        let c = derive_constants(&ModelParams::<f64>::preset(preset)).unwrap();
        let product = c.sigma_q_inf * c.sigma_p_inf;
        let target = c.params().hbar / 2f64.sqrt();
        worst = worst.max((product - target).abs() / target);
    }
    notes.push(format!("heisenberg rel err {worst:.2e}"));

    // Fixed-point residual λ − (2iħ/m)a∞² in natural units.
    let m = nat();
    let a = m.a_inf();
    let residual = (Complex::new(m.lambda, 0.0)
        - Complex::new(0.0, 2.0 * m.hbar / m.mass) * a * a)
        .norm()
        / m.lambda;
    notes.push(format!("a_inf residual {residual:.2e}"));

    // Eigenvalues of the asymptotic separation matrix.
    let (_, eig) = gauss2::a_infinity_system(&m);
    let omega = m.omega();
    let mut eig_err = 0.0f64;
    for mu in eig {
        let re = (mu.re + omega / 2.0).abs() / omega;
        let im = (mu.im.abs() - omega / 2.0).abs() / omega;
        eig_err = eig_err.max(re).max(im);
    }
    notes.push(format!("eigenvalue rel err {eig_err:.2e}"));

    let pass = worst < 1e-12 && residual < 1e-12 && eig_err < 1e-12;
    CriterionReport::new("C1", "closed-form identities", pass, notes.join("; "))
}

/// C2: closed-form width vs RK4 oracle, 100 random starts, ωt ∈ [0, 10].
pub fn criterion_riccati_oracle(seed: u64) -> CriterionReport {
    let m = nat();
    let mut rng = substream_rng(seed, 2);
    let mut max_rel = 0.0f64;
    let hm = m.hbar / m.mass;
    let f = |_t: f64, y: &[f64; 2]| {
        [
            m.lambda + 4.0 * hm * y[0] * y[1],
            -2.0 * hm * (y[0] * y[0] - y[1] * y[1]),
        ]
    };
    for _ in 0..100 {
        let a0 = Complex::new(
            10f64.powf(rng.gen_range(-2.0..0.7)),
            rng.gen_range(-2.0..2.0),
        );
        let mut y = [a0.re, a0.im];
        let h = 2e-4;
        let mut t = 0.0;
        for step in 1..=50_000usize {
            y = ode::rk4_step(&f, t, &y, h);
            t = step as f64 * 2e-4;
            if step % 5000 == 0 {
                let exact = gauss1::a_exact(&m, a0, t).unwrap();
                let oracle = Complex::new(y[0], y[1]);
                let rel = (exact - oracle).norm() / oracle.norm();
                if rel > max_rel {
                    max_rel = rel;
                }
            }
        }
    }
    CriterionReport::new(
        "C2",
        "width Riccati vs RK4 oracle",
        max_rel < 1e-8,
        format!("max rel err {max_rel:.2e} over 100 starts"),
    )
}

/// C3: positivity of Re a_t for 1000 random starts, ωt ∈ [0, 50].
pub fn criterion_positivity_sweep(seed: u64) -> CriterionReport {
    let m = nat();
    let mut rng = substream_rng(seed, 3);
    let mut min_re = f64::INFINITY;
    let mut all_positive = true;
    for _ in 0..1000 {
        let a0 = Complex::new(
            10f64.powf(rng.gen_range(-3.0..1.0)),
            rng.gen_range(-5.0..5.0),
        );
        let flow = gauss1::WidthFlow::new(&m, a0).unwrap();
        for i in 0..=250 {
            let t = 0.2 * i as f64;
            let re = flow.at(t).re;
            if re <= 0.0 {
                all_positive = false;
            }
            if re < min_re {
                min_re = re;
            }
        }
    }
    CriterionReport::new(
        "C3",
        "width positivity sweep",
        all_positive,
        format!("min Re a = {min_re:.3e} over 1000 starts x 251 times"),
    )
}

/// C4: situation-A closed form and its time change.
pub fn criterion_situation_a() -> CriterionReport {
    let m = nat();
    let x0 = 2.0f64;
    let horizon = 30.0;
    let n = 120_000usize;
    let dt = horizon / n as f64;
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    let xk = gauss2::xk_evolve(&m, m.a_inf(), x0, 0.0, &ts).unwrap();
    let mut max_rel = 0.0f64;
    for (i, &(x, _)) in xk.iter().enumerate() {
        let closed = gauss2::situation_a_x(&m, x0, ts[i]);
        max_rel = max_rel.max((x - closed).abs() / x0);
    }
    let xs: Vec<f64> = xk.iter().map(|p| p.0).collect();
    let tc = time_change(&xs, dt, m.lambda).unwrap();
    let s_expect = m.lambda * x0 * x0 / (2.0 * m.omega());
    let s_rel = (tc.s_infinity - s_expect).abs() / s_expect;
    // Refinement: halving the grid spacing must move s_infinity < 1e-6 rel.
    let coarse: Vec<f64> = xs.iter().step_by(2).copied().collect();
    let tc2 = time_change(&coarse, 2.0 * dt, m.lambda).unwrap();
    let refine_rel = (tc.s_infinity - tc2.s_infinity).abs() / s_expect;
    let pass = max_rel < 1e-8 && s_rel < 1e-6 && refine_rel < 1e-6;
    CriterionReport::new(
        "C4",
        "situation-A decay + time change",
        pass,
        format!("X rel err {max_rel:.2e}; s_inf rel err {s_rel:.2e}; refinement delta {refine_rel:.2e}"),
    )
}

/// C5: hitting-time Monte Carlo against the exit-statistics formulas.
pub fn criterion_hitting_mc(opts: McOptions) -> Result<CriterionReport> {
    let n = opts.n_paths.unwrap_or(10_000);
    let b = 2.0f64;
    let dt_s = 1e-3;
    let ens = run_hitting_ensemble(b, 0.0, 200.0, dt_s, opts.seed, n)?;
    let cfg = HittingConfig::new(b, 0.0, 1.0)?;
    let st = hitting_stats(&cfg)?;
    let z_mean = (ens.mean_s - st.mean_s) / ens.se_mean;
    let z_var = (ens.var_s - st.var_s) / ens.se_var;
    let z_frac = (ens.frac_plus - 0.5) / ens.se_frac;

    // Born-rule start b0 = 0.5.
    let ens2 = run_hitting_ensemble(b, 0.5, 200.0, dt_s, opts.seed + 1, n)?;
    let cfg2 = HittingConfig::new(b, 0.5, 1.0)?;
    let st2 = hitting_stats(&cfg2)?;
    let z_frac2 = (ens2.frac_plus - st2.p_collapse_2) / ens2.se_frac;

    // Step-refinement run quantifying the first-crossing bias.
    let refined = run_hitting_ensemble(b, 0.0, 200.0, dt_s / 4.0, opts.seed + 2, n)?;
    let bias_coarse = (ens.mean_s - st.mean_s).abs();
    let bias_fine = (refined.mean_s - st.mean_s).abs();

    let pass = z_mean.abs() < 3.0
        && z_var.abs() < 4.0
        && z_frac.abs() < 3.0
        && z_frac2.abs() < 3.0
        && ens.n_censored == 0;
    Ok(CriterionReport::new(
        "C5",
        "hitting-time Monte Carlo",
        pass,
        format!(
            "z_mean {z_mean:.2}, z_var {z_var:.2}, z_frac {z_frac:.2}, z_born {z_frac2:.2}; bias {bias_coarse:.4} -> {bias_fine:.4} at dt/4"
        ),
    ))
}

/// C6: empirical delocalization frequency under the closed-form bound.
pub fn criterion_delocalization(opts: McOptions) -> Result<CriterionReport> {
    let n = opts.n_paths.unwrap_or(10_000);
    let cfg = HittingConfig::new(2.0, 0.0, 1.0)?;
    let rep = run_delocalization_ensemble(&cfg, 200.0, 20.0, 1e-3, opts.seed + 3, n)?;
    Ok(CriterionReport::new(
        "C6",
        "delocalization bound",
        rep.within_bound,
        format!(
            "dip frequency {:.4} (n={}) <= bound {:.4}",
            rep.frequency, rep.n_hit, rep.bound
        ),
    ))
}

fn classicality_ensemble(opts: &McOptions) -> Result<crate::ensemble::MomentStats<f64>> {
    let m = nat();
    let scenario = SingleGaussianMeans::stationary(m, 1e-3, 2000, 200);
    run_ensemble(&scenario, &EnsembleSpec::new(opts.n_paths.unwrap_or(10_000), opts.seed + 4)?)
}

/// C7: ensemble classicality of the peak motion.
pub fn criterion_classicality(opts: McOptions) -> Result<CriterionReport> {
    let m = nat();
    let stats = classicality_ensemble(&opts)?;
    let mut notes = Vec::new();
    let mut pass = true;

    // E[⟨p⟩] flat within 3 SE at every recorded time.
    let k_series = stats.series("k")?;
    let max_zp = k_series
        .iter()
        .map(|(_, mean, se)| if *se > 0.0 { (mean / se).abs() } else { 0.0 })
        .fold(0.0f64, f64::max);
    pass &= max_zp < 3.0;
    notes.push(format!("max |z| of E[p] {max_zp:.2}"));

    // d E[⟨q⟩]/dt = E[⟨p⟩]/m via the per-path Ehrenfest residual.
    let e_series = stats.series("ehrenfest")?;
    let max_ze = e_series
        .iter()
        .skip(1)
        .map(|(_, mean, se)| if *se > 0.0 { (mean / se).abs() } else { 0.0 })
        .fold(0.0f64, f64::max);
    pass &= max_ze < 3.0;
    notes.push(format!("max |z| of Ehrenfest residual {max_ze:.2}"));

    // Energy slope within 5% of λħ²/2m.
    let h_series = stats.series("energy")?;
    let pairs: Vec<(f64, f64)> = h_series.iter().map(|(t, e, _)| (*t, *e)).collect();
    let report = gauss1::energy_law(&m, &pairs, stats.n_paths() as usize)?;
    let rel = (report.rate_mc - report.rate_analytic).abs() / report.rate_analytic;
    pass &= rel < 0.05;
    notes.push(format!("energy slope rel err {rel:.3}"));

    // V[⟨p⟩_t] = λħ²t within 5% wherever t > 0.
    let mut worst_v = 0.0f64;
    for (ti, &t) in stats.times.iter().enumerate() {
        if t == 0.0 {
            continue;
        }
        let var = stats
            .cell(ti, stats.obs_index("k")?)
            .variance()
            .unwrap_or(0.0);
        let expect = m.lambda * t;
        worst_v = worst_v.max((var - expect).abs() / expect);
    }
    pass &= worst_v < 0.05;
    notes.push(format!("V[p] worst rel err {worst_v:.3}"));

    Ok(CriterionReport::new(
        "C7",
        "ensemble classicality",
        pass,
        notes.join("; "),
    ))
}

/// C8: covariance ODE oracle vs Monte Carlo, z-threshold 3.
pub fn criterion_covariance_oracle(opts: McOptions) -> Result<CriterionReport> {
    let m = nat();
    let stats = classicality_ensemble(&opts)?;
    let n = stats.n_paths() as f64;
    let oracle = gauss1::covariance_evolution(&m, m.a_inf(), &stats.times)?;
    let ix = stats.obs_index("x")?;
    let ik = stats.obs_index("k")?;
    let ixk = stats.obs_index("xk")?;
    let mut n_exceed = 0usize;
    let mut count = 0usize;
    let mut max_z = 0.0f64;
    for (ti, cov) in oracle.iter().enumerate() {
        if stats.times[ti] == 0.0 {
            continue;
        }
        let vq = stats.cell(ti, ix).variance().unwrap_or(0.0);
        let vp = stats.cell(ti, ik).variance().unwrap_or(0.0);
        let mx = stats.cell(ti, ix).mean();
        let mk = stats.cell(ti, ik).mean();
        let cqp = stats.cell(ti, ixk).mean() - mx * mk;
        // Gaussian-sampling standard errors.
        let se_vq = vq * (2.0 / (n - 1.0)).sqrt();
        let se_vp = vp * (2.0 / (n - 1.0)).sqrt();
        let se_c = ((vq * vp + cqp * cqp) / (n - 1.0)).sqrt();
        for (sample, target, se) in [
            (vq, cov.c_q2, se_vq),
            (vp, cov.c_p2, se_vp),
            (cqp, cov.c_qp, se_c),
        ] {
            let z = (sample - target) / se;
            max_z = max_z.max(z.abs());
            count += 1;
            if z.abs() > 3.0 {
                n_exceed += 1;
            }
        }
    }
    let allowance = (0.01 * count as f64).ceil() as usize;
    Ok(CriterionReport::new(
        "C8",
        "covariance ODEs vs MC",
        n_exceed <= allowance,
        format!("{n_exceed}/{count} points beyond z=3 (allow {allowance}); max |z| {max_z:.2}"),
    ))
}

/// C9: grid solver against the Gaussian closed-form/SDE path on shared noise.
pub fn criterion_grid_vs_gaussian(seed: u64) -> Result<CriterionReport> {
    let distance = |dt: f64| -> Result<f64> {
        let m = nat();
        let spec = GridSpec::new(1024, 80.0)?;
        let a0 = m.a_inf();
        let steps = (5.0 / dt).round() as usize;
        let path = sample_path::<f64>(5.0, dt, seed, 9)?;
        let mut gauss = gauss1::GaussianState::new(a0, 0.0, 0.0)?;
        let mut grid = WaveGrid::gaussian(spec, a0, 0.0, 0.0)?;
        let mut engine = SpectralEngine::new(spec);
        let mut worst = 0.0f64;
        let record_every = steps / 10;
        let mut step_idx = 0usize;
        engine.evolve_nonlinear(&m, &mut grid, &path.increments, dt, |g, info| {
            gauss = gauss1::step_means(&m, &gauss, path.increments[step_idx], dt)?;
            step_idx += 1;
            if info.step % record_every == 0 {
                let reference = WaveGrid::gaussian(spec, gauss.a, gauss.x_bar, gauss.k_bar)?;
                // The reference is built from (a, x̄, k̄) alone, so its global
                // phase is arbitrary; align it before measuring the distance.
                let dist = phase_aligned_l2(g, &reference)?;
                if dist > worst {
                    worst = dist;
                }
            }
            Ok(())
        })?;
        Ok(worst)
    };
    let d_coarse = distance(1e-4)?;
    let d_fine = distance(5e-5)?;
    let pass = d_coarse < 1e-3 && d_fine < d_coarse;
    Ok(CriterionReport::new(
        "C9",
        "grid vs Gaussian, shared noise",
        pass,
        format!("worst L2 {d_coarse:.2e} at dt=1e-4, {d_fine:.2e} at dt=5e-5"),
    ))
}

/// L² distance after removing the global phase difference.
fn phase_aligned_l2(a: &WaveGrid<f64>, b: &WaveGrid<f64>) -> Result<f64> {
    if a.spec != b.spec {
        return Err(Error::GridMismatch("phase_aligned_l2 needs matching grids".into()));
    }
    let mut overlap = Complex::new(0.0, 0.0);
    for (x, y) in a.psi.iter().zip(&b.psi) {
        overlap += x.conj() * y;
    }
    let phase = overlap / overlap.norm();
    let mut acc = 0.0;
    for (x, y) in a.psi.iter().zip(&b.psi) {
        acc += (*x * phase - *y).norm_sqr();
    }
    Ok((acc * a.spec.dx()).sqrt())
}

/// C10: collapse diagnostic E[ΔA] on a double-Gaussian grid ensemble.
pub fn criterion_collapse_diagnostic(opts: McOptions) -> Result<CriterionReport> {
    let m = nat();
    let spec = GridSpec::new(1024, 80.0)?;
    let initial = DoubleGaussianState::symmetric(m.a_inf(), 4.0, 0.0)?.normalized();
    let scenario = GridDoubleDeltaA {
        model: m,
        grid: spec,
        initial,
        dt: 1e-3,
        steps: 5000,
        record_every: 500,
    };
    let n = opts.n_paths.unwrap_or(500);
    let stats = run_ensemble(&scenario, &EnsembleSpec::new(n, opts.seed + 5)?)?;
    let series = stats.series("delta_a")?;
    let times: Vec<f64> = series.iter().map(|s| s.0).collect();
    let means: Vec<f64> = series.iter().map(|s| s.1).collect();
    let ses: Vec<f64> = series.iter().map(|s| s.2).collect();
    let rep = grid::collapse_convergence_report(&times, &means, &ses)?;
    let pass = rep.monotone_within_band && rep.terminal_ratio < 0.10;
    Ok(CriterionReport::new(
        "C10",
        "collapse diagnostic decay",
        pass,
        format!(
            "terminal/initial {:.4}; worst rise z {:.2}; decay rate {:.2} (>= omega = 1)",
            rep.terminal_ratio, rep.worst_violation_z, rep.decay_rate
        ),
    ))
}

/// C11: unraveling consistency, grid ensemble density vs master equation.
pub fn criterion_unraveling(opts: McOptions) -> Result<CriterionReport> {
    let m = nat();
    let spec = GridSpec::new(512, 40.0)?;
    let a0 = m.a_inf();
    let horizon = 1.0f64;
    let scenario = GridMeanDensity {
        model: m,
        grid: spec,
        initial: GridInitial::Gaussian {
            a0,
            x0: 0.0,
            k0: 0.0,
        },
        dt: 1e-3,
        steps: 1000,
    };
    let n = opts.n_paths.unwrap_or(2000);
    let stats = run_ensemble(&scenario, &EnsembleSpec::new(n, opts.seed + 6)?)?;
    let xs = spec.xs();
    let mean_density = master::DensityProfile {
        xs: xs.clone(),
        values: (0..spec.n)
            .map(|i| stats.cell(0, i).mean())
            .collect(),
        t: horizon,
    };
    let p_s = master::pure_schrodinger_density(&m, a0, 0.0, 0.0, horizon, &xs)?;
    let master_density = master::density_convolve(&m, &p_s, horizon)?;
    let l1 = mean_density.l1_distance(&master_density.profile)?;
    Ok(CriterionReport::new(
        "C11",
        "unraveling vs master equation",
        l1 < 0.02 && !master_density.delta_regime,
        format!("L1 distance {l1:.4} over {n} paths"),
    ))
}

/// C12: order-of-magnitude reproduction of the quoted physical scales
/// (collapse frequency, asymptotic spreads, suppression times, energy gain).
pub fn criterion_quoted_magnitudes() -> CriterionReport {
    let mut pass = true;
    let mut notes = Vec::new();

    let nucleon = derive_constants(&ModelParams::<f64>::preset(Preset::Nucleon)).unwrap();
    pass &= nucleon.omega >= 1e-5 && nucleon.omega < 1e-4;
    notes.push(format!("omega {:.2e}", nucleon.omega));
    pass &= nucleon.sigma_q_inf >= 0.3e-2 && nucleon.sigma_q_inf <= 30e-2;
    notes.push(format!("sigma_q nucleon {:.2e} m", nucleon.sigma_q_inf));

    let electron = derive_constants(&ModelParams::<f64>::preset(Preset::Electron)).unwrap();
    pass &= electron.sigma_q_inf >= 0.3 && electron.sigma_q_inf <= 3.0;
    notes.push(format!("sigma_q electron {:.2} m", electron.sigma_q_inf));

    let gram = derive_constants(&ModelParams::<f64>::preset(Preset::Gram)).unwrap();
    pass &= gram.sigma_q_inf >= 1e-13 / 3.0 && gram.sigma_q_inf <= 3e-13;
    notes.push(format!("sigma_q gram {:.2e} m", gram.sigma_q_inf));

    let kg = derive_constants(&ModelParams::<f64>::with_mass(1.0).unwrap()).unwrap();
    let alpha = master::alpha(&Model::new(kg.lambda, units::HBAR_SI, 1.0), 1.0).unwrap();
    pass &= alpha >= 1e42 && alpha <= 1e44;
    notes.push(format!("alpha(1kg,1s) {alpha:.2e}"));

    let et = units::macro_micro_estimates(&ModelParams::<f64>::preset(Preset::Electron), 1.0, 10.0)
        .unwrap();
    pass &= et.e_t_b >= 1e6 / 5.0 && et.e_t_b <= 5e6;
    notes.push(format!("E[T_b] electron {:.2e} s", et.e_t_b));

    pass &= nucleon.energy_rate >= 1e-44 && nucleon.energy_rate <= 1e-42;
    notes.push(format!("energy rate {:.2e} J/s", nucleon.energy_rate));

    CriterionReport::new("C12", "quoted magnitudes", pass, notes.join("; "))
}

/// C13: overlap-drift bound on full paths and the pathwise sandwich.
pub fn criterion_appendix_bounds(opts: McOptions) -> Result<CriterionReport> {
    let m = nat();
    // |g| bound along 100 fully coupled paths.
    let initial = DoubleGaussianState::symmetric(m.a_inf(), 3.0, 0.0)?.normalized();
    let mut bound_ok = true;
    let mut worst_margin = f64::INFINITY;
    for path in 0..100 {
        let traj = gauss2::simulate_double_full(&m, initial, 1e-3, 1000, opts.seed + 7, path)?;
        for (g, b) in traj.g_values.iter().zip(&traj.g_bounds) {
            let margin = b - g.abs();
            if margin < worst_margin {
                worst_margin = margin;
            }
            if g.abs() > b * (1.0 + 1e-9) + 1e-300 {
                bound_ok = false;
            }
        }
    }

    // Sandwich with c = 0 (degenerate: both bounding processes coincide) and
    // with the microscopic c = 1/(e−1) ≈ 0.582 from a_R X_min² = 4.
    let micro = DoubleGaussianState::symmetric(m.a_inf(), 16.6, 0.0)?.normalized();
    let n = opts.n_paths.map(|n| n.min(1000)).unwrap_or(1000);
    let rep0 = bounding_sandwich(&m, micro, 1e-4, 10_000, 0.0, 2.0, opts.seed + 8, n)?;
    let c = 1.0 / (1f64.exp() - 1.0);
    let rep = bounding_sandwich(&m, micro, 1e-4, 10_000, c, 2.0, opts.seed + 8, n)?;
    let sandwich_ok = rep.violations == 0 && rep0.mean_exit_minus == rep0.mean_exit_plus;
    let brackets = rep.mean_exit_plus <= rep.mean_exit_reduced
        && rep.mean_exit_reduced <= rep.mean_exit_minus;
    Ok(CriterionReport::new(
        "C13",
        "appendix bounds + sandwich",
        bound_ok && sandwich_ok,
        format!(
            "g-bound margin {worst_margin:.2e}; sandwich slack {:.2e} on {} paths; exits -:{:.3} ~:{:.3} +:{:.3}{}",
            rep.worst_slack,
            n,
            rep.mean_exit_minus,
            rep.mean_exit_reduced,
            rep.mean_exit_plus,
            if brackets { " (bracketed)" } else { "" }
        ),
    ))
}

/// Every criterion in order, with the default acceptance sizes.
pub fn run_all(opts: McOptions) -> Result<Vec<CriterionReport>> {
    Ok(vec![
        criterion_closed_form_identities(),
        criterion_riccati_oracle(opts.seed),
        criterion_positivity_sweep(opts.seed),
        criterion_situation_a(),
        criterion_hitting_mc(opts)?,
        criterion_delocalization(opts)?,
        criterion_classicality(opts)?,
        criterion_covariance_oracle(opts)?,
        criterion_grid_vs_gaussian(opts.seed)?,
        criterion_collapse_diagnostic(opts)?,
        criterion_unraveling(opts)?,
        criterion_quoted_magnitudes(),
        criterion_appendix_bounds(opts)?,
    ])
}

/// Named verification suites for the CLI.
pub fn run_suite(name: &str, opts: McOptions) -> Result<Vec<CriterionReport>> {
    match name {
        "closed-forms" => Ok(vec![
            criterion_closed_form_identities(),
            criterion_riccati_oracle(opts.seed),
            criterion_positivity_sweep(opts.seed),
            criterion_situation_a(),
        ]),
        "monte-carlo" => Ok(vec![
            criterion_hitting_mc(opts)?,
            criterion_delocalization(opts)?,
            criterion_classicality(opts)?,
            criterion_covariance_oracle(opts)?,
        ]),
        "grid-vs-gauss" => Ok(vec![criterion_grid_vs_gaussian(opts.seed)?]),
        "grid-ensembles" => Ok(vec![
            criterion_collapse_diagnostic(opts)?,
            criterion_unraveling(opts)?,
        ]),
        "magnitudes" => Ok(vec![criterion_quoted_magnitudes()]),
        "bounds" => Ok(vec![criterion_appendix_bounds(opts)?]),
        "all" => run_all(opts),
        other => Err(Error::Configuration(format!(
            "unknown verification suite '{other}' (try closed-forms, monte-carlo, grid-vs-gauss, grid-ensembles, magnitudes, bounds, all)"
        ))),
    }
}
