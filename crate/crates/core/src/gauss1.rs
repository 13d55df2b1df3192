//! Single-Gaussian dynamics.
//!
//! A Gaussian wavefunction exp[−a_t(x − x̄_t)² + ik̄_t·x + γ_t] stays Gaussian
//! under both the linear and the nonlinear stochastic equation. The complex
//! width a_t obeys a deterministic Riccati equation
//!
//! ```text
//! da/dt = λ − (2iħ/m)·a²
//! ```
//!
//! solved in closed form by a_t = c·tanh(bt + k), while the peak coordinates
//! (x̄, k̄) and the log-amplitude γ pick up the noise. The width flow is always
//! advanced through the closed form — only the noisy parameters are ever
//! discretized.

use crate::error::{Error, Result};
use crate::model::{Model, C};
use crate::ode;
use crate::scalar::Real;

/// Parameters of one Gaussian branch at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState<R: Real> {
    /// Complex width parameter; `a.re > 0` throughout the evolution.
    pub a: C<R>,
    /// Position of the peak.
    pub x_bar: R,
    /// Wavenumber of the peak (⟨p⟩ = ħk̄).
    pub k_bar: R,
    /// Complex log-amplitude.
    pub gamma: C<R>,
    pub t: R,
}

impl<R: Real> GaussianState<R> {
    pub fn new(a: C<R>, x_bar: R, k_bar: R) -> Result<Self> {
        if a.re <= R::zero() {
            return Err(Error::Parameter("width parameter needs a.re > 0".into()));
        }
        Ok(GaussianState {
            a,
            x_bar,
            k_bar,
            gamma: C::new(R::zero(), R::zero()),
            t: R::zero(),
        })
    }

    /// Gamma offset that makes ‖φ‖ = 1 at the current width.
    pub fn normalized(mut self) -> Self {
        let g = -self.log_norm_sq() / R::of(2.0);
        self.gamma.re = self.gamma.re + g;
        self
    }

    /// ln‖φ‖² = 2γ_R + ½·ln(π/2a_R).
    pub fn log_norm_sq(&self) -> R {
        log_norm_sq(self.gamma.re, self.a.re)
    }
}

/// ln‖φ‖² of a Gaussian with log-amplitude real part `gamma_r` and width real
/// part `a_r`.
pub fn log_norm_sq<R: Real>(gamma_r: R, a_r: R) -> R {
    R::of(2.0) * gamma_r + (R::PI() / (R::of(2.0) * a_r)).ln() / R::of(2.0)
}

/// Closed-form solution data for the width Riccati equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiClosedForm<R: Real> {
    pub c: C<R>,
    pub b: C<R>,
    pub k: C<R>,
    /// Phase offsets of the explicit real/imaginary-part formulas:
    /// φ₁ = 2·Re k, φ₂ = 2·Im k.
    pub phi1: R,
    pub phi2: R,
}

/// Deterministic width flow a₀ ↦ a_t, covering the collapse-free limit and
/// the exact stationary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WidthFlow<R: Real> {
    /// a₀ is the stationary value; the flow is constant.
    Stationary(C<R>),
    /// λ = 0: pure Schrödinger spreading, 1/a_t = 1/a₀ + 2iħt/m.
    Free { a0: C<R>, hbar_over_m: R },
    /// Generic case, a_t = c·tanh(bt + k).
    Tanh(RiccatiClosedForm<R>),
}

// tanh(z) is 1 to double precision once Re z exceeds this.
fn saturation_threshold<R: Real>() -> R {
    R::of(20.0)
}

impl<R: Real> WidthFlow<R> {
    pub fn new(model: &Model<R>, a0: C<R>) -> Result<Self> {
        if a0.re <= R::zero() {
            return Err(Error::Parameter("width parameter needs a0.re > 0".into()));
        }
        if model.lambda == R::zero() {
            return Ok(WidthFlow::Free {
                a0,
                hbar_over_m: model.hbar / model.mass,
            });
        }
        let c = model.riccati_c();
        if (a0 - c).norm() <= R::of(1e-14) * c.norm() {
            return Ok(WidthFlow::Stationary(c));
        }
        let b = model.riccati_b();
        let k = (a0 / c).atanh();
        Ok(WidthFlow::Tanh(RiccatiClosedForm {
            c,
            b,
            k,
            phi1: R::of(2.0) * k.re,
            phi2: R::of(2.0) * k.im,
        }))
    }

    pub fn at(&self, t: R) -> C<R> {
        match self {
            WidthFlow::Stationary(c) => *c,
            WidthFlow::Free { a0, hbar_over_m } => {
                // 1/a_t = 1/a₀ + 2iħt/m.
                let denom =
                    C::new(R::one(), R::zero()) + C::new(R::zero(), R::of(2.0) * *hbar_over_m * t) * *a0;
                *a0 / denom
            }
            WidthFlow::Tanh(cf) => {
                let z = cf.b.scale(t) + cf.k;
                if z.re > saturation_threshold() {
                    cf.c
                } else {
                    cf.c * z.tanh()
                }
            }
        }
    }
}

/// Closed-form width at time `t` starting from `a0`.
pub fn a_exact<R: Real>(model: &Model<R>, a0: C<R>, t: R) -> Result<C<R>> {
    Ok(WidthFlow::new(model, a0)?.at(t))
}

/// Explicit trigonometric/hyperbolic form of a_t (real and imaginary parts).
/// Returns `None` within a distance 10⁻¹² of a zero of the shared denominator
/// cosh(ωt+φ₁) + cos(ωt+φ₂), where the tanh form must be used instead.
pub fn a_trig<R: Real>(model: &Model<R>, cf: &RiccatiClosedForm<R>, t: R) -> Option<C<R>> {
    let omega = model.omega();
    let u = omega * t + cf.phi1;
    let v = omega * t + cf.phi2;
    if u > R::of(350.0) {
        // Far past saturation: both forms equal a(∞) to machine precision.
        return Some(model.a_inf());
    }
    let denom = u.cosh() + v.cos();
    if denom <= R::of(1e-12) {
        return None;
    }
    let r = model.lambda / omega;
    Some(C::new(
        r * (u.sinh() + v.sin()) / denom,
        -r * (u.sinh() - v.sin()) / denom,
    ))
}

/// Position and momentum spreads of a Gaussian of width `a`:
/// σ_q = ½·√(1/a_R), σ_p = ħ·√((a_R² + a_I²)/a_R).
pub fn spreads_of<R: Real>(model: &Model<R>, a: C<R>) -> (R, R) {
    let sigma_q = (a.re.recip()).sqrt() / R::of(2.0);
    let sigma_p = model.hbar * ((a.re * a.re + a.im * a.im) / a.re).sqrt();
    (sigma_q, sigma_p)
}

/// Spreads at time `t` from initial width `a0`, via the closed-form flow.
pub fn spreads_at<R: Real>(model: &Model<R>, a0: C<R>, t: R) -> Result<(R, R)> {
    Ok(spreads_of(model, a_exact(model, a0, t)?))
}

/// The published explicit spread formulas,
/// σ_q = √(ħ/mω)·√((cosh+cos)/(sinh+sin)) and
/// σ_p = √(ħmω/2)·√((cosh−cos)/(sinh+sin)),
/// with all arguments ωt + φ₁ (hyperbolic) and ωt + φ₂ (trigonometric).
pub fn spreads_trig<R: Real>(model: &Model<R>, cf: &RiccatiClosedForm<R>, t: R) -> (R, R) {
    let omega = model.omega();
    let u = omega * t + cf.phi1;
    let v = omega * t + cf.phi2;
    if u > R::of(350.0) {
        return (model.sigma_q_inf(), model.sigma_p_inf());
    }
    let num_q = u.cosh() + v.cos();
    let num_p = u.cosh() - v.cos();
    let den = u.sinh() + v.sin();
    (
        (model.hbar / (model.mass * omega)).sqrt() * (num_q / den).sqrt(),
        (model.hbar * model.mass * omega / R::of(2.0)).sqrt() * (num_p / den).sqrt(),
    )
}

/// Advance (x̄, k̄, γ) by one Euler–Maruyama step given the realized noise
/// bracket β (the factor [dξ − 2√λx̄dt] of the linear equation, or its
/// measure-changed counterpart), then move the width along the closed form.
///
/// The γ drifts carry the corrected extra terms λ/(4a_R) and λa_I/(4a_R²);
/// without them ‖φ‖² is not a martingale.
pub(crate) fn param_step<R: Real>(
    model: &Model<R>,
    a: C<R>,
    x_bar: R,
    k_bar: R,
    gamma: C<R>,
    beta: R,
    dt: R,
) -> (R, R, C<R>) {
    let sqrt_lambda = model.lambda.sqrt();
    let hm = model.hbar / model.mass;
    let a_ratio = a.im / a.re;

    let x_new = x_bar + hm * k_bar * dt + sqrt_lambda / (R::of(2.0) * a.re) * beta;
    let k_new = k_bar - sqrt_lambda * a_ratio * beta;
    let gamma_r = gamma.re
        + (model.lambda * x_bar * x_bar
            + hm * a.im
            + model.lambda / (R::of(4.0) * a.re))
            * dt
        + sqrt_lambda * x_bar * beta;
    let gamma_i = gamma.im
        + (-hm * a.re - hm / R::of(2.0) * k_bar * k_bar
            + model.lambda * a.im / (R::of(4.0) * a.re * a.re))
            * dt
        + sqrt_lambda * a_ratio * x_bar * beta;
    (x_new, k_new, C::new(gamma_r, gamma_i))
}

/// One step of the physical-measure dynamics: for a single Gaussian the
/// quantum mean equals x̄, so the noise bracket reduces to dW itself.
pub fn step_means<R: Real>(
    model: &Model<R>,
    state: &GaussianState<R>,
    dw: R,
    dt: R,
) -> Result<GaussianState<R>> {
    step_with_bracket(model, state, dw, dt)
}

/// One step of the linear equation driven by dξ; the bracket is
/// dξ − 2√λ·x̄·dt.
pub fn step_linear<R: Real>(
    model: &Model<R>,
    state: &GaussianState<R>,
    d_xi: R,
    dt: R,
) -> Result<GaussianState<R>> {
    let beta = d_xi - R::of(2.0) * model.lambda.sqrt() * state.x_bar * dt;
    step_with_bracket(model, state, beta, dt)
}

/// The γ update alone (linear-equation form), exposed because the
/// double-Gaussian weights are built from differences of γ between branches.
pub fn gamma_step<R: Real>(
    model: &Model<R>,
    state: &GaussianState<R>,
    d_xi: R,
    dt: R,
) -> C<R> {
    let beta = d_xi - R::of(2.0) * model.lambda.sqrt() * state.x_bar * dt;
    let (_, _, gamma) = param_step(
        model, state.a, state.x_bar, state.k_bar, state.gamma, beta, dt,
    );
    gamma
}

fn step_with_bracket<R: Real>(
    model: &Model<R>,
    state: &GaussianState<R>,
    beta: R,
    dt: R,
) -> Result<GaussianState<R>> {
    let (x_bar, k_bar, gamma) = param_step(
        model, state.a, state.x_bar, state.k_bar, state.gamma, beta, dt,
    );
    Ok(GaussianState {
        a: a_exact(model, state.a, dt)?,
        x_bar,
        k_bar,
        gamma,
        t: state.t + dt,
    })
}

/// Covariances of the peak coordinates across the noise ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceState<R: Real> {
    pub c_q2: R,
    pub c_qp: R,
    pub c_p2: R,
    pub t: R,
}

/// Integrate the covariance ODE system
///
/// ```text
/// Ċ_q² = (2/m)·C_qp + (λ/4)/a_R²
/// Ċ_qp = (1/m)·C_p² − (λħ/2)·a_I/a_R²
/// Ċ_p² = λħ²·(a_I/a_R)²
/// ```
///
/// from C(0) = 0 (deterministic initial parameters), with the width supplied
/// by the closed form. Sampled at every point of `ts`.
pub fn covariance_evolution<R: Real>(
    model: &Model<R>,
    a0: C<R>,
    ts: &[R],
) -> Result<Vec<CovarianceState<R>>> {
    let flow = WidthFlow::new(model, a0)?;
    let lambda = model.lambda;
    let hbar = model.hbar;
    let m = model.mass;
    let f = move |t: R, y: &[R; 3]| {
        let a = flow.at(t);
        let ratio = a.im / a.re;
        [
            R::of(2.0) / m * y[1] + lambda / R::of(4.0) / (a.re * a.re),
            y[2] / m - lambda * hbar / R::of(2.0) * a.im / (a.re * a.re),
            lambda * hbar * hbar * ratio * ratio,
        ]
    };
    let dt_max = if model.lambda > R::zero() {
        R::of(1e-3) / model.omega()
    } else {
        // RK4 is exact for the polynomial free-particle system; any step works.
        ts.last().copied().unwrap_or(R::one()).max(R::one())
    };
    let samples = ode::rk4_sample(f, [R::zero(); 3], R::zero(), ts, dt_max);
    Ok(samples
        .iter()
        .zip(ts)
        .map(|(y, &t)| CovarianceState {
            c_q2: y[0],
            c_qp: y[1],
            c_p2: y[2],
            t,
        })
        .collect())
}

/// Closed form of the covariance system for a stationary width
/// (a_R = −a_I = λ/ω):
///
/// C_q²(t) = (ω/8λ)[(ωt)³/6 + (ωt)² + 2ωt],
/// C_qp(t) = λħ²t²/2m + ħωt/2, C_p²(t) = λħ²t.
pub fn covariance_stationary<R: Real>(model: &Model<R>, t: R) -> CovarianceState<R> {
    let omega = model.omega();
    let wt = omega * t;
    let bracket = wt * wt * wt / R::of(6.0) + wt * wt + R::of(2.0) * wt;
    CovarianceState {
        c_q2: omega / (R::of(8.0) * model.lambda) * bracket,
        c_qp: model.lambda * model.hbar * model.hbar * t * t / (R::of(2.0) * model.mass)
            + model.hbar * omega * t / R::of(2.0),
        c_p2: model.lambda * model.hbar * model.hbar * t,
        t,
    }
}

/// Quantum mean energy ⟨p²⟩/2m = (ħ²k̄² + σ_p²)/2m of a Gaussian state.
pub fn mean_energy<R: Real>(model: &Model<R>, a: C<R>, k_bar: R) -> R {
    let (_, sigma_p) = spreads_of(model, a);
    (model.hbar * model.hbar * k_bar * k_bar + sigma_p * sigma_p)
        / (R::of(2.0) * model.mass)
}

/// Analytic vs Monte Carlo energy gain rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLawReport<R: Real> {
    /// λħ²/2m.
    pub rate_analytic: R,
    /// Least-squares slope of the sampled E[⟨H⟩_t] series.
    pub rate_mc: R,
    pub n_paths: usize,
}

/// Fit the energy gain rate from an ensemble-averaged energy series
/// (t, E[⟨H⟩_t]). Ensembles below 100 paths are refused.
pub fn energy_law<R: Real>(
    model: &Model<R>,
    series: &[(R, R)],
    n_paths: usize,
) -> Result<EnergyLawReport<R>> {
    if n_paths < 100 {
        return Err(Error::Statistics(format!(
            "energy-rate fit needs at least 100 paths, got {n_paths}"
        )));
    }
    if series.len() < 2 {
        return Err(Error::Parameter("energy series needs at least 2 points".into()));
    }
    let (slope, _) = linear_fit(series);
    Ok(EnergyLawReport {
        rate_analytic: model.energy_rate(),
        rate_mc: slope,
        n_paths,
    })
}

/// Ordinary least squares for (x, y) pairs: returns (slope, intercept).
pub fn linear_fit<R: Real>(pairs: &[(R, R)]) -> (R, R) {
    let n = R::from_usize(pairs.len()).unwrap();
    let sx = pairs.iter().map(|p| p.0).sum::<R>();
    let sy = pairs.iter().map(|p| p.1).sum::<R>();
    let sxx = pairs.iter().map(|p| p.0 * p.0).sum::<R>();
    let sxy = pairs.iter().map(|p| p.0 * p.1).sum::<R>();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    ((slope), (sy - slope * sx) / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use crate::stochastic::substream_rng;
    use rand::Rng;

    fn natural() -> Model<f64> {
        Model::natural()
    }

    // Independent oracle: RK4 on the real/imaginary parts of the Riccati
    // equation, dA/dt = λ + (4ħ/m)AB, dB/dt = −(2ħ/m)(A² − B²).
    fn riccati_rk4(model: &Model<f64>, a0: Complex<f64>, t: f64, n: usize) -> Complex<f64> {
        let hm = model.hbar / model.mass;
        let f = |_t: f64, y: &[f64; 2]| {
            [
                model.lambda + 4.0 * hm * y[0] * y[1],
                -2.0 * hm * (y[0] * y[0] - y[1] * y[1]),
            ]
        };
        let mut y = [a0.re, a0.im];
        let h = t / n as f64;
        let mut tt = 0.0;
        for _ in 0..n {
            y = ode::rk4_step(&f, tt, &y, h);
            tt += h;
        }
        Complex::new(y[0], y[1])
    }

    #[test]
    fn rejects_non_positive_width() {
        let m = natural();
        assert!(a_exact(&m, Complex::new(0.0, 1.0), 1.0).is_err());
        assert!(a_exact(&m, Complex::new(-0.1, 0.0), 1.0).is_err());
    }

    #[test]
    fn stationary_width_is_fixed_point() {
        let m = natural();
        let a_inf = m.a_inf();
        for t in [0.0, 0.3, 3.0, 47.0] {
            let a = a_exact(&m, a_inf, t).unwrap();
            assert!((a - a_inf).norm() <= 1e-12 * a_inf.norm());
        }
    }

    #[test]
    fn generic_width_converges_to_stationary() {
        let m = natural();
        let a_inf = m.a_inf();
        for a0 in [
            Complex::new(1.0, 0.0),
            Complex::new(0.02, -3.0),
            Complex::new(5.0, 4.0),
        ] {
            let a = a_exact(&m, a0, 40.0).unwrap();
            assert!(
                (a - a_inf).norm() < 1e-12 * a_inf.norm(),
                "a0 = {a0}, a = {a}"
            );
        }
    }

    #[test]
    fn closed_form_matches_rk4_oracle() {
        let m = natural();
        let mut rng = substream_rng(17, 0);
        for _ in 0..20 {
            let a0 = Complex::new(rng.gen_range(0.02..2.0), rng.gen_range(-2.0..2.0));
            let t = 3.0;
            let exact = a_exact(&m, a0, t).unwrap();
            let oracle = riccati_rk4(&m, a0, t, 30_000);
            assert!(
                (exact - oracle).norm() / exact.norm() < 1e-8,
                "a0 = {a0}: {exact} vs {oracle}"
            );
        }
    }

    #[test]
    fn free_limit_matches_rk4_oracle() {
        let m: Model<f64> = Model::free();
        let a0 = Complex::new(0.7, -0.4);
        let exact = a_exact(&m, a0, 2.0).unwrap();
        let oracle = riccati_rk4(&m, a0, 2.0, 20_000);
        assert!((exact - oracle).norm() / exact.norm() < 1e-9, "{exact} vs {oracle}");
    }

    #[test]
    fn trig_form_agrees_with_tanh_form() {
        let m = natural();
        let mut rng = substream_rng(18, 0);
        for _ in 0..50 {
            let a0 = Complex::new(rng.gen_range(0.05..2.0), rng.gen_range(-2.0..2.0));
            let flow = WidthFlow::new(&m, a0).unwrap();
            let cf = match flow {
                WidthFlow::Tanh(cf) => cf,
                _ => unreachable!(),
            };
            for i in 0..40 {
                let t = 0.25 * i as f64;
                if let Some(trig) = a_trig(&m, &cf, t) {
                    let tanh = flow.at(t);
                    assert!(
                        (trig - tanh).norm() <= 1e-10 * tanh.norm().max(1.0),
                        "t = {t}: {trig} vs {tanh}"
                    );
                }
            }
        }
    }

    #[test]
    fn positivity_of_width_real_part() {
        let m = natural();
        let mut rng = substream_rng(19, 0);
        for _ in 0..200 {
            let a0 = Complex::new(
                10f64.powf(rng.gen_range(-3.0..1.0)),
                rng.gen_range(-5.0..5.0),
            );
            let flow = WidthFlow::new(&m, a0).unwrap();
            for i in 0..=100 {
                let t = 0.5 * i as f64;
                let a = flow.at(t);
                assert!(a.re > 0.0, "a0 = {a0}, t = {t}, a = {a}");
            }
        }
    }

    #[test]
    fn spread_identities() {
        let m = natural();
        let a0 = Complex::new(0.9, -0.2);
        let flow = WidthFlow::new(&m, a0).unwrap();
        let cf = match flow {
            WidthFlow::Tanh(cf) => cf,
            _ => unreachable!(),
        };
        for i in 0..60 {
            let t = 0.25 * i as f64;
            let a = flow.at(t);
            let (sq, sp) = spreads_of(&m, a);
            let (sq_trig, sp_trig) = spreads_trig(&m, &cf, t);
            assert!((sq - sq_trig).abs() <= 1e-12 * sq);
            assert!((sp - sp_trig).abs() <= 1e-12 * sp);
            // Uncertainty product: ≥ ħ/2 always.
            assert!(sq * sp >= 0.5 * m.hbar * (1.0 - 1e-13));
        }
        // Asymptotically the product hits ħ/√2.
        let (sq, sp) = spreads_at(&m, a0, 60.0).unwrap();
        assert!((sq * sp - m.hbar / 2f64.sqrt()).abs() < 1e-12);
        assert!((sq - m.sigma_q_inf()).abs() < 1e-12);
    }

    #[test]
    fn free_particle_limit_of_means() {
        let m: Model<f64> = Model::free();
        let mut s = GaussianState::new(Complex::new(0.25, 0.0), 1.0, 2.0).unwrap();
        let dt = 1e-3;
        for _ in 0..1000 {
            s = step_means(&m, &s, 0.0, dt).unwrap();
        }
        // x̄_t = x̄₀ + (ħ/m)k̄₀t, k̄ constant.
        assert!((s.x_bar - (1.0 + 2.0 * 1.0)).abs() < 1e-9);
        assert!((s.k_bar - 2.0).abs() < 1e-15);
    }

    #[test]
    fn spread_evolution_is_noise_independent() {
        let m = natural();
        let a0 = Complex::new(1.5, 0.3);
        let mut s1 = GaussianState::new(a0, 0.0, 0.0).unwrap();
        let mut s2 = GaussianState::new(a0, 0.0, 0.0).unwrap();
        let mut rng = substream_rng(20, 0);
        let dt = 1e-2;
        for _ in 0..200 {
            let dw: f64 = rng.gen_range(-0.3..0.3);
            s1 = step_means(&m, &s1, dw, dt).unwrap();
            s2 = step_means(&m, &s2, -2.0 * dw, dt).unwrap();
        }
        assert_eq!(s1.a, s2.a);
    }

    #[test]
    fn covariance_zero_at_origin_and_stationary_forms() {
        let m = natural();
        let a_inf = m.a_inf();
        let ts: Vec<f64> = (0..=10).map(|i| 0.5 * i as f64).collect();
        let cov = covariance_evolution(&m, a_inf, &ts).unwrap();
        assert_eq!(cov[0].c_q2, 0.0);
        assert_eq!(cov[0].c_qp, 0.0);
        assert_eq!(cov[0].c_p2, 0.0);
        for c in &cov {
            let closed = covariance_stationary(&m, c.t);
            // C_p² = λħ²t exactly (a_I/a_R = −1).
            assert!((c.c_p2 - closed.c_p2).abs() <= 1e-12 * closed.c_p2.max(1e-30));
            assert!(
                (c.c_q2 - closed.c_q2).abs() <= 1e-8 * closed.c_q2.max(1e-12),
                "t = {}: {} vs {}",
                c.t,
                c.c_q2,
                closed.c_q2
            );
            assert!((c.c_qp - closed.c_qp).abs() <= 1e-8 * closed.c_qp.max(1e-12));
            // Cauchy–Schwarz.
            assert!(c.c_qp * c.c_qp <= c.c_q2 * c.c_p2 * (1.0 + 1e-9) + 1e-30);
        }
    }

    #[test]
    fn covariance_cauchy_schwarz_generic_width() {
        let m = natural();
        let ts: Vec<f64> = (1..=8).map(|i| 0.7 * i as f64).collect();
        let cov = covariance_evolution(&m, Complex::new(2.0, 1.0), &ts).unwrap();
        for c in &cov {
            assert!(c.c_q2 >= 0.0 && c.c_p2 >= 0.0);
            assert!(c.c_qp * c.c_qp <= c.c_q2 * c.c_p2 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn norm_martingale_under_linear_evolution() {
        // E_Q[‖φ_t‖²] stays 1; the corrected γ drift is what makes this hold.
        let m = natural();
        let a0 = m.a_inf();
        let n_paths = 2000;
        let dt = 1e-3f64;
        let steps = 500;
        let mut sum = 0.0f64;
        let mut sumsq = 0.0f64;
        for path in 0..n_paths {
            let mut rng = substream_rng(21, path);
            let mut s = GaussianState::new(a0, 0.0, 0.0).unwrap().normalized();
            for _ in 0..steps {
                let dxi = f64::std_normal(&mut rng) * dt.sqrt();
                s = step_linear(&m, &s, dxi, dt).unwrap();
            }
            let w = s.log_norm_sq().exp();
            sum += w;
            sumsq += w * w;
        }
        let n = n_paths as f64;
        let mean = sum / n;
        let var = (sumsq - n * mean * mean) / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            (mean - 1.0).abs() < 3.0 * se,
            "martingale mean {mean} ± {se}"
        );
    }

    #[test]
    fn energy_law_requires_ensemble() {
        let m = natural();
        assert!(energy_law(&m, &[(0.0, 0.0), (1.0, 1.0)], 50).is_err());
        let r = energy_law(&m, &[(0.0, 0.25), (1.0, 0.375), (2.0, 0.5)], 1000).unwrap();
        assert!((r.rate_mc - 0.125).abs() < 1e-12);
        assert!((r.rate_analytic - 0.125).abs() < 1e-15);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 + 2.0 * i as f64)).collect();
        let (slope, intercept) = linear_fit(&pts);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((intercept - 3.0).abs() < 1e-12);
    }
}
