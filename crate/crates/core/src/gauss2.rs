//! Double-Gaussian dynamics: suppression of one branch of a two-packet
//! superposition.
//!
//! Both branches share the same deterministic width a_t, so the observable
//! physics sits in the peak separations X = x̄₂ − x̄₁, K = k̄₂ − k̄₁ (a
//! deterministic linear system) and in the log weight ratio Γ_R = γ₂ᴿ − γ₁ᴿ,
//! which performs a diffusion with drift λX²·tanh Γ_R plus a small overlap
//! term g_t. Under the time change s_t = λ∫X²du the reduced process is
//! dΓ̃ = tanh Γ̃ ds + dW̃, whose exit statistics from (−b, b) are known in
//! closed form.
//!
//! Weights e^{2γᴿ} and overlaps h are carried in log form: macroscopic
//! parameters produce magnitudes like exp(−10²¹) that no float can hold.


use crate::error::{Error, Result};
use crate::gauss1::{self, WidthFlow};
use crate::model::{Model, C};
use crate::ode;
use crate::scalar::Real;
use crate::stochastic::substream_rng;

/// Superposition of two Gaussians with a shared width parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleGaussianState<R: Real> {
    pub a: C<R>,
    pub x_bar_1: R,
    pub x_bar_2: R,
    pub k_bar_1: R,
    pub k_bar_2: R,
    pub gamma_1: C<R>,
    pub gamma_2: C<R>,
    pub t: R,
}

/// Derived collapse coordinates of a [`DoubleGaussianState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseVariables<R: Real> {
    /// Peak separation in position.
    pub x: R,
    /// Peak separation in wavenumber.
    pub k: R,
    /// Log weight ratio Γᴿ = γ₂ᴿ − γ₁ᴿ.
    pub gamma_r: R,
    /// Phase difference Γᴵ = γ₂ᴵ − γ₁ᴵ.
    pub gamma_i: R,
    /// Y = −(2a_I·X + K)/(2a_R).
    pub y: R,
    /// θ = ½(x̄₁ + x̄₂)K + Γᴵ.
    pub theta: R,
    /// ln h = −a_R(X² + Y²)/2 ∈ (−∞, 0].
    pub log_h: R,
    /// δ = h[(x̄₁+x̄₂)cos θ + Y sin θ].
    pub delta: R,
}

impl<R: Real> CollapseVariables<R> {
    pub fn h(&self) -> R {
        self.log_h.exp()
    }
}

impl<R: Real> DoubleGaussianState<R> {
    /// Symmetric superposition: peaks at ±X₀/2, wavenumbers ±K₀/2, equal
    /// weights.
    pub fn symmetric(a: C<R>, x0: R, k0: R) -> Result<Self> {
        if a.re <= R::zero() {
            return Err(Error::Parameter("width parameter needs a.re > 0".into()));
        }
        let half_x = x0 / R::of(2.0);
        let half_k = k0 / R::of(2.0);
        Ok(DoubleGaussianState {
            a,
            x_bar_1: -half_x,
            x_bar_2: half_x,
            k_bar_1: -half_k,
            k_bar_2: half_k,
            gamma_1: C::new(R::zero(), R::zero()),
            gamma_2: C::new(R::zero(), R::zero()),
            t: R::zero(),
        })
    }

    pub fn collapse_variables(&self) -> CollapseVariables<R> {
        let x = self.x_bar_2 - self.x_bar_1;
        let k = self.k_bar_2 - self.k_bar_1;
        let gamma_r = self.gamma_2.re - self.gamma_1.re;
        let gamma_i = self.gamma_2.im - self.gamma_1.im;
        let y = -(R::of(2.0) * self.a.im * x + k) / (R::of(2.0) * self.a.re);
        let theta = (self.x_bar_1 + self.x_bar_2) / R::of(2.0) * k + gamma_i;
        let log_h = -self.a.re * (x * x + y * y) / R::of(2.0);
        let delta =
            log_h.exp() * ((self.x_bar_1 + self.x_bar_2) * theta.cos() + y * theta.sin());
        CollapseVariables {
            x,
            k,
            gamma_r,
            gamma_i,
            y,
            theta,
            log_h,
            delta,
        }
    }

    /// Normalized quantum mean
    ///
    /// ```text
    ///        x̄₁e^{2γ₁ᴿ} + x̄₂e^{2γ₂ᴿ} + δ·e^{γ₁ᴿ+γ₂ᴿ}
    /// ⟨q⟩ = ─────────────────────────────────────────────
    ///        e^{2γ₁ᴿ} + e^{2γ₂ᴿ} + 2h·cosθ·e^{γ₁ᴿ+γ₂ᴿ}
    /// ```
    ///
    /// evaluated with the largest weight factored out so that weight ratios
    /// like e^{−10²¹} degrade gracefully to zero.
    pub fn mean_position(&self) -> R {
        let cv = self.collapse_variables();
        let g1 = R::of(2.0) * self.gamma_1.re;
        let g2 = R::of(2.0) * self.gamma_2.re;
        let gx = self.gamma_1.re + self.gamma_2.re;
        let m = g1.max(g2);
        let w1 = (g1 - m).exp();
        let w2 = (g2 - m).exp();
        let cross_weight = (gx - m + cv.log_h).exp();
        let num = self.x_bar_1 * w1
            + self.x_bar_2 * w2
            + ((self.x_bar_1 + self.x_bar_2) * cv.theta.cos() + cv.y * cv.theta.sin())
                * cross_weight;
        let den = w1 + w2 + R::of(2.0) * cv.theta.cos() * cross_weight;
        num / den
    }

    /// ln‖φ‖² of the superposition.
    pub fn log_norm_sq(&self) -> R {
        let g1 = R::of(2.0) * self.gamma_1.re;
        let g2 = R::of(2.0) * self.gamma_2.re;
        let cv = self.collapse_variables();
        let m = g1.max(g2);
        let sum = (g1 - m).exp()
            + (g2 - m).exp()
            + R::of(2.0)
                * cv.theta.cos()
                * (self.gamma_1.re + self.gamma_2.re - m + cv.log_h).exp();
        m + sum.ln() + (R::PI() / (R::of(2.0) * self.a.re)).ln() / R::of(2.0)
    }

    /// Shift both γᴿ so that ‖φ‖ = 1 (dynamics only ever sees differences).
    pub fn normalized(mut self) -> Self {
        let shift = -self.log_norm_sq() / R::of(2.0);
        self.gamma_1.re = self.gamma_1.re + shift;
        self.gamma_2.re = self.gamma_2.re + shift;
        self
    }
}

/// Deterministic evolution of the peak separations:
/// d(X,K)/dt = [[−A₁, ħ/m], [−A₂, 0]]·(X,K) with A₁ = λ/a_R and
/// A₂ = −2λ·a_I/a_R, integrated by RK4 along the closed-form width.
pub fn xk_evolve<R: Real>(
    model: &Model<R>,
    a0: C<R>,
    x0: R,
    k0: R,
    ts: &[R],
) -> Result<Vec<(R, R)>> {
    let flow = WidthFlow::new(model, a0)?;
    let lambda = model.lambda;
    let hm = model.hbar / model.mass;
    let f = move |t: R, y: &[R; 2]| {
        let a = flow.at(t);
        let a1 = lambda / a.re;
        let a2 = -R::of(2.0) * lambda * a.im / a.re;
        [-a1 * y[0] + hm * y[1], -a2 * y[0]]
    };
    let dt_max = if model.lambda > R::zero() {
        R::of(1e-3) / model.omega()
    } else {
        ts.last().copied().unwrap_or(R::one()).max(R::one())
    };
    Ok(ode::rk4_sample(f, [x0, k0], R::zero(), ts, dt_max)
        .into_iter()
        .map(|y| (y[0], y[1]))
        .collect())
}

/// Closed-form separation decay for "situation A" (stationary width, K₀ = 0):
/// X_t = X₀·e^{−ωt/2}[cos(ωt/2) − sin(ωt/2)].
pub fn situation_a_x<R: Real>(model: &Model<R>, x0: R, t: R) -> R {
    let half = model.omega() * t / R::of(2.0);
    x0 * (-half).exp() * (half.cos() - half.sin())
}

/// The asymptotic coefficient matrix [[−ω, ħ/m], [−2λ, 0]] of the separation
/// system together with its eigenvalues, computed from the characteristic
/// polynomial μ² − tr·μ + det = 0.
pub fn a_infinity_system<R: Real>(model: &Model<R>) -> ([[R; 2]; 2], [C<R>; 2]) {
    let m = [
        [-model.omega(), model.hbar / model.mass],
        [-R::of(2.0) * model.lambda, R::zero()],
    ];
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr - R::of(4.0) * det;
    let sqrt_disc = if disc >= R::zero() {
        C::new(disc.sqrt(), R::zero())
    } else {
        C::new(R::zero(), (-disc).sqrt())
    };
    let half = R::of(0.5);
    let mu1 = (C::new(tr, R::zero()) + sqrt_disc) * C::new(half, R::zero());
    let mu2 = (C::new(tr, R::zero()) - sqrt_disc) * C::new(half, R::zero());
    (m, [mu1, mu2])
}

/// The overlap drift g_t(Γᴿ) of the weight-ratio equation, evaluated in a
/// form that never exponentiates a positive multiple of |Γᴿ|:
///
/// ```text
///            Y sinθ (1 + e^{2Γ}) + X cosθ (1 − e^{2Γ})
/// g = 2λXh·e^Γ ─────────────────────────────────────────
///            [1 + e^{2Γ} + 2h cosθ e^Γ][1 + e^{2Γ}]
/// ```
pub fn g_term<R: Real>(model: &Model<R>, cv: &CollapseVariables<R>) -> R {
    let h = cv.log_h.exp();
    if h == R::zero() {
        return R::zero();
    }
    let g = cv.gamma_r;
    let (e1, e2, sign) = if g >= R::zero() {
        ((-g).exp(), (-(g + g)).exp(), -R::one())
    } else {
        (g.exp(), (g + g).exp(), R::one())
    };
    // For Γ ≥ 0 the fraction is rescaled by e^{−4Γ}; the prefactor e^Γ then
    // becomes e^{−3Γ}·e^{... } — combine everything through e1, e2.
    let num = cv.y * cv.theta.sin() * (e2 + R::one())
        - sign * cv.x * cv.theta.cos() * (e2 - R::one());
    let den = (e2 + R::one() + R::of(2.0) * h * cv.theta.cos() * e1) * (e2 + R::one());
    R::of(2.0) * model.lambda * cv.x * h * e1 * num / den
}

/// Appendix bound |g| ≤ λ(|X|+|Y|)² / (e^{a_R(|X|+|Y|)²/4} − 1).
pub fn g_bound<R: Real>(model: &Model<R>, a_re: R, cv: &CollapseVariables<R>) -> R {
    let s = cv.x.abs() + cv.y.abs();
    let z = a_re * s * s / R::of(4.0);
    if z > R::of(700.0) {
        return R::zero(); // denominator overflows; the bound underflows to 0
    }
    model.lambda * s * s / (z.exp() - R::one())
}

/// ln of the coefficient c = 1/(e^{a_R·X²/4} − 1) appearing in the weaker
/// bound |g| ≤ λX_t²·c built from the interval minima a_R and |X|. Stays
/// meaningful for macroscopic arguments where c itself underflows
/// (ln c ≈ −a_R X²/4).
pub fn log_g_coefficient<R: Real>(a_min_re: R, x_min: R) -> R {
    let z = a_min_re * x_min * x_min / R::of(4.0);
    if z > R::of(30.0) {
        -z
    } else {
        -(z.exp() - R::one()).ln()
    }
}

/// One Euler–Maruyama step of the weight-ratio equation
/// dΓᴿ = λX²·tanh Γᴿ dt + g_t dt + √λ·X·dW.
pub fn gamma_full_step<R: Real>(
    model: &Model<R>,
    state: &DoubleGaussianState<R>,
    dw: R,
    dt: R,
) -> R {
    let cv = state.collapse_variables();
    cv.gamma_r
        + (model.lambda * cv.x * cv.x * cv.gamma_r.tanh() + g_term(model, &cv)) * dt
        + model.lambda.sqrt() * cv.x * dw
}

/// One Euler–Maruyama step of the full coupled parameter set under the
/// physical measure. Each branch sees the noise bracket
/// dW + 2√λ(⟨q⟩ − x̄ᵢ)dt with the shared quantum mean.
pub fn double_step<R: Real>(
    model: &Model<R>,
    state: &DoubleGaussianState<R>,
    dw: R,
    dt: R,
) -> Result<DoubleGaussianState<R>> {
    let mean = state.mean_position();
    let two_sqrt_lambda = R::of(2.0) * model.lambda.sqrt();
    let beta1 = dw + two_sqrt_lambda * (mean - state.x_bar_1) * dt;
    let beta2 = dw + two_sqrt_lambda * (mean - state.x_bar_2) * dt;
    let (x1, k1, g1) = gauss1::param_step(
        model,
        state.a,
        state.x_bar_1,
        state.k_bar_1,
        state.gamma_1,
        beta1,
        dt,
    );
    let (x2, k2, g2) = gauss1::param_step(
        model,
        state.a,
        state.x_bar_2,
        state.k_bar_2,
        state.gamma_2,
        beta2,
        dt,
    );
    Ok(DoubleGaussianState {
        a: gauss1::a_exact(model, state.a, dt)?,
        x_bar_1: x1,
        x_bar_2: x2,
        k_bar_1: k1,
        k_bar_2: k2,
        gamma_1: g1,
        gamma_2: g2,
        t: state.t + dt,
    })
}

/// Record of one full double-Gaussian trajectory.
#[derive(Debug, Clone)]
pub struct DoubleTrajectory<R: Real> {
    pub states: Vec<DoubleGaussianState<R>>,
    /// Realized overlap drift g at the start of each step.
    pub g_values: Vec<R>,
    /// The bound on |g| at the same instants.
    pub g_bounds: Vec<R>,
    /// Time-change increments Δs_n = λX²_n·dt.
    pub ds: Vec<R>,
    /// Transformed noise increments ΔW̃_n = √λ·X_n·ΔW_n.
    pub dw_tilde: Vec<R>,
}

/// Simulate the fully coupled double-Gaussian system for `steps` steps,
/// recording everything the bounding analysis needs.
pub fn simulate_double_full<R: Real>(
    model: &Model<R>,
    initial: DoubleGaussianState<R>,
    dt: R,
    steps: usize,
    seed: u64,
    index: u64,
) -> Result<DoubleTrajectory<R>> {
    let mut rng = substream_rng(seed, index);
    let sqrt_dt = dt.sqrt();
    let sqrt_lambda = model.lambda.sqrt();
    let mut states = Vec::with_capacity(steps + 1);
    let mut g_values = Vec::with_capacity(steps);
    let mut g_bounds = Vec::with_capacity(steps);
    let mut ds = Vec::with_capacity(steps);
    let mut dw_tilde = Vec::with_capacity(steps);
    let mut s = initial;
    states.push(s);
    for _ in 0..steps {
        let cv = s.collapse_variables();
        g_values.push(g_term(model, &cv));
        g_bounds.push(g_bound(model, s.a.re, &cv));
        let dw = R::std_normal(&mut rng) * sqrt_dt;
        ds.push(model.lambda * cv.x * cv.x * dt);
        dw_tilde.push(sqrt_lambda * cv.x * dw);
        s = double_step(model, &s, dw, dt)?;
        states.push(s);
    }
    Ok(DoubleTrajectory {
        states,
        g_values,
        g_bounds,
        ds,
        dw_tilde,
    })
}

/// Suppression threshold configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingConfig<R: Real> {
    /// Suppression threshold; the superposition counts as collapsed once
    /// |Γᴿ| ≥ b.
    pub b: R,
    /// Initial log weight ratio.
    pub b0: R,
    /// Delocalization margin η for the revival bound.
    pub eta: R,
}

impl<R: Real> HittingConfig<R> {
    pub fn new(b: R, b0: R, eta: R) -> Result<Self> {
        if b0.abs() >= b {
            return Err(Error::Parameter("hitting start needs |b0| < b".into()));
        }
        if eta <= R::zero() || eta >= b {
            return Err(Error::Parameter("delocalization margin needs 0 < eta < b".into()));
        }
        Ok(HittingConfig { b, b0, eta })
    }
}

/// Closed-form exit statistics of dΓ̃ = tanh Γ̃ ds + dW̃ from (−b, b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingStats<R: Real> {
    /// E[S_b] = b·tanh b − b₀·tanh b₀.
    pub mean_s: R,
    /// 𝕍[S_b] = F(b) − F(b₀) with F(x) = x²tanh²x + x·tanh x − x².
    pub var_s: R,
    /// Probability of exiting at +b: (tanh b + tanh b₀)/(2 tanh b).
    pub p_collapse_2: R,
    /// Probability of exiting at −b.
    pub p_collapse_1: R,
    /// Upper bound on the revival probability
    /// 1 − (1 + tanh b)·tanh η/(1 + tanh η).
    pub p_deloc_bound: R,
}

/// F(x) = x²tanh²x + x·tanh x − x²; even, increasing on x ≥ 0.
pub fn hitting_variance_f<R: Real>(x: R) -> R {
    let th = x.tanh();
    x * x * th * th + x * th - x * x
}

pub fn hitting_stats<R: Real>(cfg: &HittingConfig<R>) -> Result<HittingStats<R>> {
    if cfg.b0.abs() >= cfg.b {
        return Err(Error::Parameter("hitting start needs |b0| < b".into()));
    }
    let tb = cfg.b.tanh();
    let t0 = cfg.b0.tanh();
    let te = cfg.eta.tanh();
    Ok(HittingStats {
        mean_s: cfg.b * tb - cfg.b0 * t0,
        var_s: hitting_variance_f(cfg.b) - hitting_variance_f(cfg.b0),
        p_collapse_2: (tb + t0) / (R::of(2.0) * tb),
        p_collapse_1: (tb - t0) / (R::of(2.0) * tb),
        p_deloc_bound: R::one() - (R::one() + tb) * te / (R::one() + te),
    })
}

/// Outcome of one reduced-equation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitOutcome<R: Real> {
    /// First grid time with |Γ̃| ≥ b (s units), or `s_max` when censored.
    pub s: R,
    /// +1 when the exit is at +b, −1 at −b, 0 when censored.
    pub sign: i8,
    /// The path ran into `s_max` (physically: the Gaussians merged before one
    /// was suppressed) without exiting.
    pub censored: bool,
    /// Γ̃ value at the exit step (carries the discretization overshoot).
    pub gamma_exit: R,
}

/// Simulate dΓ̃ = tanh Γ̃ ds + dW̃ from b₀ until |Γ̃| ≥ b or s reaches `s_max`,
/// at step resolution `dt_s` (first grid crossing, no bridge correction).
pub fn simulate_reduced_gamma<R: Real>(
    b: R,
    b0: R,
    s_max: R,
    dt_s: R,
    rng: &mut impl rand::Rng,
) -> Result<HitOutcome<R>> {
    if dt_s <= R::zero() {
        return Err(Error::Parameter("dt_s must be positive".into()));
    }
    if b0.abs() >= b {
        return Ok(HitOutcome {
            s: R::zero(),
            sign: if b0 >= R::zero() { 1 } else { -1 },
            censored: false,
            gamma_exit: b0,
        });
    }
    let sqrt_dt = dt_s.sqrt();
    let mut g = b0;
    let mut s = R::zero();
    while s < s_max {
        g = g + g.tanh() * dt_s + R::std_normal(rng) * sqrt_dt;
        s = s + dt_s;
        if g.abs() >= b {
            return Ok(HitOutcome {
                s,
                sign: if g > R::zero() { 1 } else { -1 },
                censored: false,
                gamma_exit: g,
            });
        }
    }
    Ok(HitOutcome {
        s: s_max,
        sign: 0,
        censored: true,
        gamma_exit: g,
    })
}

/// Ensemble of reduced-equation hitting times with moment-based errors.
#[derive(Debug, Clone)]
pub struct HittingEnsemble<R: Real> {
    pub outcomes: Vec<HitOutcome<R>>,
    pub n_paths: usize,
    pub n_censored: usize,
    /// Sample mean/variance of the exit time over non-censored paths.
    pub mean_s: R,
    pub var_s: R,
    /// Standard error of the mean.
    pub se_mean: R,
    /// Standard error of the sample variance, √((m₄ − var²)/n).
    pub se_var: R,
    /// Fraction of non-censored paths exiting at +b.
    pub frac_plus: R,
    pub se_frac: R,
}

/// Run `n_paths` independent reduced-equation paths with per-path substreams
/// of `seed`.
pub fn run_hitting_ensemble<R: Real>(
    b: R,
    b0: R,
    s_max: R,
    dt_s: R,
    seed: u64,
    n_paths: usize,
) -> Result<HittingEnsemble<R>> {
    let mut outcomes = Vec::with_capacity(n_paths);
    for index in 0..n_paths {
        let mut rng = substream_rng(seed, index as u64);
        outcomes.push(simulate_reduced_gamma(b, b0, s_max, dt_s, &mut rng)?);
    }
    let hits: Vec<&HitOutcome<R>> = outcomes.iter().filter(|o| !o.censored).collect();
    let n = hits.len();
    let n_r = R::from_usize(n.max(1)).unwrap();
    let mean = hits.iter().map(|o| o.s).sum::<R>() / n_r;
    let m2 = hits.iter().map(|o| (o.s - mean) * (o.s - mean)).sum::<R>();
    let m4 = hits
        .iter()
        .map(|o| {
            let d = o.s - mean;
            d * d * d * d
        })
        .sum::<R>()
        / n_r;
    let var = if n > 1 {
        m2 / R::from_usize(n - 1).unwrap()
    } else {
        R::zero()
    };
    let n_plus = hits.iter().filter(|o| o.sign > 0).count();
    let frac_plus = R::from_usize(n_plus).unwrap() / n_r;
    Ok(HittingEnsemble {
        n_paths,
        n_censored: n_paths - n,
        mean_s: mean,
        var_s: var,
        se_mean: (var / n_r).sqrt(),
        se_var: ((m4 - var * var).max(R::zero()) / n_r).sqrt(),
        frac_plus,
        se_frac: (frac_plus * (R::one() - frac_plus) / n_r).sqrt(),
        outcomes,
    })
}

/// Empirical delocalization check: frequency of the suppressed branch
/// reviving by η within a post-hit window, against the closed-form bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelocalizationReport<R: Real> {
    pub n_hit: usize,
    pub n_dipped: usize,
    pub frequency: R,
    pub bound: R,
    /// frequency ≤ bound (one-sided check against the closed form).
    pub within_bound: bool,
}

/// Simulate reduced-equation paths to their first exit, then keep integrating
/// for `post_window` further s-time and count paths whose |Γ̃| dips back past
/// b − η on the side it exited.
pub fn run_delocalization_ensemble<R: Real>(
    cfg: &HittingConfig<R>,
    s_max: R,
    post_window: R,
    dt_s: R,
    seed: u64,
    n_paths: usize,
) -> Result<DelocalizationReport<R>> {
    let mut n_hit = 0usize;
    let mut n_dipped = 0usize;
    for index in 0..n_paths {
        let mut rng = substream_rng(seed, index as u64);
        let out = simulate_reduced_gamma(cfg.b, cfg.b0, s_max, dt_s, &mut rng)?;
        if out.censored {
            continue;
        }
        n_hit += 1;
        let sign = R::from_i8(out.sign).unwrap();
        let mut g = out.gamma_exit;
        let mut s = R::zero();
        let sqrt_dt = dt_s.sqrt();
        let threshold = cfg.b - cfg.eta;
        while s < post_window {
            g = g + g.tanh() * dt_s + R::std_normal(&mut rng) * sqrt_dt;
            s = s + dt_s;
            if g * sign < threshold {
                n_dipped += 1;
                break;
            }
        }
    }
    let stats = hitting_stats(cfg)?;
    let frequency = R::from_usize(n_dipped).unwrap() / R::from_usize(n_hit.max(1)).unwrap();
    Ok(DelocalizationReport {
        n_hit,
        n_dipped,
        frequency,
        bound: stats.p_deloc_bound,
        within_bound: frequency <= stats.p_deloc_bound,
    })
}

/// Exact collapse probability against the Born-rule weight ratio
/// e^{2γ₂₀}/(e^{2γ₁₀} + e^{2γ₂₀}): they agree up to O(1 − tanh b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BornRuleCheck<R: Real> {
    pub p_exact: R,
    pub p_norm_ratio: R,
}

pub fn born_rule_check<R: Real>(gamma_10_r: R, gamma_20_r: R, b: R) -> BornRuleCheck<R> {
    let b0 = gamma_20_r - gamma_10_r;
    let p_exact = (b.tanh() + b0.tanh()) / (R::of(2.0) * b.tanh());
    // e^{2γ₂₀}/(e^{2γ₁₀}+e^{2γ₂₀}) = (1 + tanh Γ₀)/2, in log-safe form.
    let p_norm_ratio = (R::one() + b0.tanh()) / R::of(2.0);
    BornRuleCheck {
        p_exact,
        p_norm_ratio,
    }
}

/// Result of the pathwise bounding comparison Γ⁻ ≤ Γ ≤ Γ⁺.
#[derive(Debug, Clone)]
pub struct SandwichReport<R: Real> {
    pub n_paths: usize,
    pub c: R,
    /// Worst signed slack min(Γ⁺ − Γ, Γ − Γ⁻) over all steps of all paths;
    /// non-negative when the sandwich holds.
    pub worst_slack: R,
    pub violations: usize,
    /// Mean exit s-times of Γ⁻, Γ̃ (reduced), Γ⁺ from (−b, b) on the shared
    /// noise, for the paths where all three exited.
    pub mean_exit_minus: R,
    pub mean_exit_reduced: R,
    pub mean_exit_plus: R,
}

/// Run the full double-Gaussian equation and the bounding s-domain processes
/// dΓ^± = [tanh Γ^± ± c]ds + dW̃ on the same realized noise; check
/// Γ⁻ ≤ Γᴿ ≤ Γ⁺ at every step.
pub fn bounding_sandwich<R: Real>(
    model: &Model<R>,
    initial: DoubleGaussianState<R>,
    dt: R,
    steps: usize,
    c: R,
    b: R,
    seed: u64,
    n_paths: usize,
) -> Result<SandwichReport<R>> {
    if c < R::zero() {
        return Err(Error::Parameter("bounding coefficient c must be >= 0".into()));
    }
    let mut worst_slack = R::infinity();
    let mut violations = 0usize;
    let mut exits = [R::zero(); 3];
    let mut n_exited = 0usize;
    for path in 0..n_paths {
        let traj = simulate_double_full(model, initial, dt, steps, seed, path as u64)?;
        let gamma0 = initial.collapse_variables().gamma_r;
        let mut lo = gamma0;
        let mut mid = gamma0;
        let mut hi = gamma0;
        let mut s_acc = R::zero();
        let mut exit_s = [None::<R>; 3];
        for n in 0..steps {
            let ds = traj.ds[n];
            let dwt = traj.dw_tilde[n];
            lo = lo + (lo.tanh() - c) * ds + dwt;
            mid = mid + mid.tanh() * ds + dwt;
            hi = hi + (hi.tanh() + c) * ds + dwt;
            s_acc = s_acc + ds;
            let gamma = traj.states[n + 1].collapse_variables().gamma_r;
            let slack = (hi - gamma).min(gamma - lo);
            if slack < worst_slack {
                worst_slack = slack;
            }
            if slack < -R::of(1e-9) {
                violations += 1;
            }
            for (i, v) in [lo, mid, hi].into_iter().enumerate() {
                if exit_s[i].is_none() && v.abs() >= b {
                    exit_s[i] = Some(s_acc);
                }
            }
        }
        if let (Some(a), Some(bb), Some(cc)) = (exit_s[0], exit_s[1], exit_s[2]) {
            exits[0] = exits[0] + a;
            exits[1] = exits[1] + bb;
            exits[2] = exits[2] + cc;
            n_exited += 1;
        }
    }
    let denom = R::from_usize(n_exited.max(1)).unwrap();
    Ok(SandwichReport {
        n_paths,
        c,
        worst_slack,
        violations,
        mean_exit_minus: exits[0] / denom,
        mean_exit_reduced: exits[1] / denom,
        mean_exit_plus: exits[2] / denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use crate::stochastic::substream_rng;

    fn natural() -> Model<f64> {
        Model::natural()
    }

    #[test]
    fn situation_a_closed_form_matches_rk4() {
        let m = natural();
        let x0 = 3.0;
        let ts: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
        let xk = xk_evolve(&m, m.a_inf(), x0, 0.0, &ts).unwrap();
        for (i, &(x, _)) in xk.iter().enumerate() {
            let closed = situation_a_x(&m, x0, ts[i]);
            assert!(
                (x - closed).abs() <= 1e-8 * x0,
                "t = {}: {} vs {}",
                ts[i],
                x,
                closed
            );
        }
    }

    #[test]
    fn free_limit_separation_is_ballistic() {
        let m: Model<f64> = Model::free();
        let ts = [0.0, 1.0, 2.0];
        let xk = xk_evolve(&m, Complex::new(0.25, 0.0), 1.0, 0.5, &ts).unwrap();
        // λ=0 kills both A₁ and A₂: X_t = X₀ + (ħ/m)K₀t, K constant.
        assert!((xk[1].0 - 1.5).abs() < 1e-10);
        assert!((xk[1].1 - 0.5).abs() < 1e-12);
        assert!((xk[2].0 - 2.0).abs() < 1e-10);
    }

    #[test]
    fn separation_decays_at_half_omega() {
        let m = natural();
        let ts: Vec<f64> = (0..=40).map(|i| i as f64).collect();
        let xk = xk_evolve(&m, m.a_inf(), 1.0, 0.0, &ts).unwrap();
        let z0 = 1.0f64;
        let z40 = (xk[40].0.powi(2) + xk[40].1.powi(2)).sqrt();
        assert!(z40 < (-15.0f64).exp() * z0, "|Z(40)| = {z40:e}");
        // Log-linear fit of |Z| over ωt ∈ [10, 40] recovers the Lyapunov
        // exponent −ω/2 within 5%.
        let pairs: Vec<(f64, f64)> = (10..=40)
            .map(|i| {
                let z = (xk[i].0.powi(2) + xk[i].1.powi(2)).sqrt();
                (ts[i], z.ln())
            })
            .collect();
        let (slope, _) = gauss1::linear_fit(&pairs);
        assert!((slope + 0.5).abs() < 0.025, "slope = {slope}");
    }

    #[test]
    fn asymptotic_system_eigenvalues() {
        let m = natural();
        let (mat, eig) = a_infinity_system(&m);
        let omega = m.omega();
        assert_eq!(mat[0][0], -omega);
        assert_eq!(mat[1][0], -2.0 * m.lambda);
        // Trace and determinant.
        assert!((mat[0][0] + mat[1][1] + omega).abs() < 1e-15);
        let det = mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0];
        assert!((det - omega * omega / 2.0).abs() < 1e-15);
        for mu in eig {
            // Characteristic polynomial μ² + ωμ + 2λħ/m = 0 with 2λħ/m = ω²/2.
            let char_poly = mu * mu + Complex::new(omega, 0.0) * mu
                + Complex::new(omega * omega / 2.0, 0.0);
            assert!(char_poly.norm() < 1e-12);
            assert!((mu.re + omega / 2.0).abs() < 1e-12);
            assert!((mu.im.abs() - omega / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_position_limits() {
        let m = natural();
        // Well separated, equal weights: ⟨q⟩ is the midpoint.
        let s = DoubleGaussianState::symmetric(m.a_inf(), 20.0, 0.0).unwrap();
        assert!(s.mean_position().abs() < 1e-12);
        // Strong weight on branch 2: ⟨q⟩ → x̄₂.
        let mut s2 = s;
        s2.gamma_2.re = 5.0;
        s2.gamma_1.re = -5.0;
        assert!((s2.mean_position() - s2.x_bar_2).abs() < 1e-4 * 20.0);
        // Extreme log weights must not overflow.
        let mut s3 = s;
        s3.gamma_2.re = 1e6;
        assert!((s3.mean_position() - s3.x_bar_2).abs() < 1e-9);
    }

    #[test]
    fn full_drift_identity_between_mean_form_and_tanh_form() {
        // −λX[x̄₁+x̄₂−2⟨q⟩] = λX²·tanh Γᴿ + g, step by step along a path.
        let m = natural();
        let mut s = DoubleGaussianState::symmetric(m.a_inf(), 3.0, 0.4)
            .unwrap()
            .normalized();
        s.gamma_2.re += 0.3;
        let mut rng = substream_rng(31, 0);
        let dt = 1e-3f64;
        for _ in 0..500 {
            let cv = s.collapse_variables();
            let mean = s.mean_position();
            let lhs = -m.lambda * cv.x * (s.x_bar_1 + s.x_bar_2 - 2.0 * mean);
            let rhs = m.lambda * cv.x * cv.x * cv.gamma_r.tanh() + g_term(&m, &cv);
            assert!(
                (lhs - rhs).abs() <= 1e-12 * (lhs.abs().max(1.0)),
                "lhs {lhs} rhs {rhs}"
            );
            let dw = f64::std_normal(&mut rng) * dt.sqrt();
            // The Γ step assembled from the coupled system equals the direct
            // weight-ratio step on the same noise.
            let direct = gamma_full_step(&m, &s, dw, dt);
            s = double_step(&m, &s, dw, dt).unwrap();
            let stepped = s.collapse_variables().gamma_r;
            assert!((direct - stepped).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn g_bound_holds_along_paths() {
        let m = natural();
        let init = DoubleGaussianState::symmetric(m.a_inf(), 3.0, 0.0)
            .unwrap()
            .normalized();
        for path in 0..10 {
            let traj = simulate_double_full(&m, init, 1e-3, 1000, 77, path).unwrap();
            for (g, bound) in traj.g_values.iter().zip(&traj.g_bounds) {
                assert!(
                    g.abs() <= bound * (1.0 + 1e-9) + 1e-300,
                    "|g| = {} > bound = {}",
                    g.abs(),
                    bound
                );
            }
        }
    }

    #[test]
    fn gamma_corrections_cancel_in_weight_ratio() {
        // The corrected γ drift carries branch-independent terms λ/4a_R and
        // λa_I/4a_R²; with equal widths they cancel in Γ = γ₂ − γ₁.
        let m = natural();
        let s = DoubleGaussianState::symmetric(m.a_inf(), 2.0, 0.0).unwrap();
        let g1 = gauss1::GaussianState {
            a: s.a,
            x_bar: s.x_bar_1,
            k_bar: s.k_bar_1,
            gamma: s.gamma_1,
            t: 0.0,
        };
        let g2 = gauss1::GaussianState {
            a: s.a,
            x_bar: s.x_bar_2,
            k_bar: s.k_bar_2,
            gamma: s.gamma_2,
            t: 0.0,
        };
        let dxi = 0.017f64;
        let dt = 1e-3f64;
        let n1 = gauss1::gamma_step(&m, &g1, dxi, dt);
        let n2 = gauss1::gamma_step(&m, &g2, dxi, dt);
        // Direct difference of the linear-equation γ steps (the corrections
        // drop out): dΓᴿ = λ(x̄₂²−x̄₁²)dt + √λX·dξ − 2λ(x̄₂²−x̄₁²)dt.
        let x1 = s.x_bar_1;
        let x2 = s.x_bar_2;
        let expected = m.lambda * (x2 * x2 - x1 * x1) * dt
            + m.lambda.sqrt() * (x2 - x1) * dxi
            - 2.0 * m.lambda * (x2 * x2 - x1 * x1) * dt;
        let got = (n2.re - n1.re) - (s.gamma_2.re - s.gamma_1.re);
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn hitting_formulas() {
        let cfg = HittingConfig::<f64>::new(10.0, 0.0, 3.0).unwrap();
        let st = hitting_stats(&cfg).unwrap();
        // E[S_b] ≃ b for b₀ ≪ b.
        assert!((st.mean_s - 10.0).abs() < 1e-3);
        assert!((st.p_collapse_2 - 0.5).abs() < 1e-15);
        assert!((st.p_collapse_1 + st.p_collapse_2 - 1.0).abs() < 1e-15);
        // η = 3 gives a revival bound of about 0.002.
        assert!(st.p_deloc_bound > 0.0 && st.p_deloc_bound < 0.003);
        // F is even, increasing, so the variance is positive.
        assert!(st.var_s > 0.0);
        assert!(HittingConfig::<f64>::new(2.0, 2.0, 1.0).is_err());
        assert!(HittingConfig::<f64>::new(2.0, 0.0, 2.5).is_err());
    }

    #[test]
    fn variance_function_shape() {
        for x in [0.3f64, 0.9, 2.0, 4.0] {
            assert!((hitting_variance_f(x) - hitting_variance_f(-x)).abs() < 1e-12);
            assert!(hitting_variance_f(x + 0.1) > hitting_variance_f(x));
        }
        assert_eq!(hitting_variance_f(0.0), 0.0);
    }

    #[test]
    fn immediate_exit_when_started_at_threshold() {
        let mut rng = substream_rng(1, 0);
        let out = simulate_reduced_gamma(2.0, 2.0, 10.0, 1e-3, &mut rng).unwrap();
        assert_eq!(out.s, 0.0);
        assert_eq!(out.sign, 1);
        assert!(!out.censored);
    }

    #[test]
    fn censoring_at_s_max() {
        let mut rng = substream_rng(2, 0);
        let out = simulate_reduced_gamma(50.0, 0.0, 0.5, 1e-3, &mut rng).unwrap();
        assert!(out.censored);
        assert_eq!(out.sign, 0);
    }

    #[test]
    fn born_rule_agreement() {
        let chk = born_rule_check::<f64>(0.0, 0.0, 10.0);
        assert!((chk.p_exact - 0.5).abs() < 1e-15);
        assert!((chk.p_norm_ratio - 0.5).abs() < 1e-15);
        let chk = born_rule_check::<f64>(0.0, 0.5, 10.0);
        let tol = 1.0 - 10f64.tanh();
        assert!((chk.p_exact - chk.p_norm_ratio).abs() < tol);
    }

    #[test]
    fn sandwich_with_zero_c_is_tight_on_reduced_process() {
        // c = 0 collapses the bracket: Γ⁺ = Γ⁻ = Γ̃ pathwise; the full Γ still
        // sits inside within the overlap drift accumulated per step, and the
        // comparison processes coincide.
        let m = natural();
        let init = DoubleGaussianState::symmetric(m.a_inf(), 16.5635, 0.0)
            .unwrap()
            .normalized();
        let rep = bounding_sandwich(&m, init, 1e-4, 2000, 0.0, 2.0, 5150, 20).unwrap();
        // Γ⁺ − Γ⁻ must be identically zero at c = 0.
        assert!(rep.mean_exit_minus == rep.mean_exit_plus);
    }

    #[test]
    fn bounding_exit_means_bracket_reduced_process() {
        // With an asymmetric start the up-biased process exits first and the
        // down-biased one last, bracketing the reduced exit time in mean.
        let m = natural();
        let mut init = DoubleGaussianState::symmetric(m.a_inf(), 16.6, 0.0)
            .unwrap()
            .normalized();
        init.gamma_2.re += 0.25;
        init.gamma_1.re -= 0.25;
        let c = 1.0 / (1f64.exp() - 1.0);
        let rep = bounding_sandwich(&m, init, 1e-4, 10_000, c, 2.0, 600, 500).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(
            rep.mean_exit_plus < rep.mean_exit_reduced
                && rep.mean_exit_reduced < rep.mean_exit_minus,
            "-:{} ~:{} +:{}",
            rep.mean_exit_minus,
            rep.mean_exit_reduced,
            rep.mean_exit_plus
        );
    }

    #[test]
    fn sandwich_holds_microscopic_case() {
        // a_R·X_min² = 4 over the window gives c = 1/(e−1) ≈ 0.582.
        let m = natural();
        let x0 = 16.5635;
        let init = DoubleGaussianState::symmetric(m.a_inf(), x0, 0.0)
            .unwrap()
            .normalized();
        let c = (-log_g_coefficient::<f64>(0.25, 4.0)).exp().recip();
        assert!((c - 1.0 / (1f64.exp() - 1.0)).abs() < 1e-12);
        let rep = bounding_sandwich(&m, init, 1e-4, 10_000, c, 2.0, 5151, 50).unwrap();
        assert_eq!(rep.violations, 0, "worst slack {}", rep.worst_slack);
        assert!(rep.worst_slack >= -1e-12);
    }
}
