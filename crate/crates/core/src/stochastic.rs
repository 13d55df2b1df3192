//! Seeded Wiener increments, per-path substreams, the deterministic time
//! change s_t = λ∫₀ᵗX_u²du and the Girsanov shift between the linear-equation
//! noise ξ and the physical noise W.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Counter-based per-path generator: the master seed selects the key, the
/// path index selects the stream. Regeneration is bit-identical and paths are
/// independent of evaluation order.
pub fn substream_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A discretized Wiener path: increments dW_n ~ N(0, dt).
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath<R: Real> {
    pub dt: R,
    pub increments: Vec<R>,
    pub seed: u64,
    pub index: u64,
}

impl<R: Real> WienerPath<R> {
    pub fn horizon(&self) -> R {
        self.dt * R::from_usize(self.increments.len()).unwrap()
    }

    /// Cumulative path values W_{t_n}, starting at 0.
    pub fn cumulative(&self) -> Vec<R> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut w = R::zero();
        out.push(w);
        for &dw in &self.increments {
            w = w + dw;
            out.push(w);
        }
        out
    }
}

/// Sample a Wiener path of `horizon / dt` increments, deterministic in
/// (seed, index).
pub fn sample_path<R: Real>(horizon: R, dt: R, seed: u64, index: u64) -> Result<WienerPath<R>> {
    if dt <= R::zero() {
        return Err(Error::Parameter("wiener step dt must be positive".into()));
    }
    if horizon < dt {
        return Err(Error::Parameter("horizon must cover at least one step".into()));
    }
    let n = (horizon / dt).round().to_f64_lossy() as usize;
    let mut rng = substream_rng(seed, index);
    let sqrt_dt = dt.sqrt();
    let increments = (0..n).map(|_| R::std_normal(&mut rng) * sqrt_dt).collect();
    Ok(WienerPath { dt, increments, seed, index })
}

/// The time change s_t = λ∫₀ᵗX_u²du evaluated by trapezoidal quadrature on a
/// uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChange<R: Real> {
    /// Uniform t grid, starting at 0.
    pub t: Vec<R>,
    /// s values on the same grid; monotone non-decreasing, s[0] = 0.
    pub s: Vec<R>,
    /// s at the end of the sampled window; the best available estimate of s_∞
    /// when the window covers the decay of X.
    pub s_infinity: R,
    /// Set when X vanishes identically on some subinterval; the separation
    /// then stays zero for all later times and the time change degenerates.
    pub degenerate: bool,
}

/// Build the time change from samples of X on a uniform grid of spacing `dt`.
pub fn time_change<R: Real>(x: &[R], dt: R, lambda: R) -> Result<TimeChange<R>> {
    if x.len() < 2 {
        return Err(Error::Parameter("time_change needs at least two samples".into()));
    }
    if dt <= R::zero() {
        return Err(Error::Parameter("time_change grid spacing must be positive".into()));
    }
    let mut t = Vec::with_capacity(x.len());
    let mut s = Vec::with_capacity(x.len());
    let mut acc = R::zero();
    let mut degenerate = false;
    t.push(R::zero());
    s.push(acc);
    for i in 1..x.len() {
        let f0 = lambda * x[i - 1] * x[i - 1];
        let f1 = lambda * x[i] * x[i];
        if x[i - 1] == R::zero() && x[i] == R::zero() {
            degenerate = true;
        }
        acc = acc + (f0 + f1) * dt / R::of(2.0);
        t.push(dt * R::from_usize(i).unwrap());
        s.push(acc);
    }
    Ok(TimeChange {
        t,
        s,
        s_infinity: acc,
        degenerate,
    })
}

/// Girsanov shift: dW = dξ − 2√λ·⟨q⟩dt, applied per step. `mean_history`
/// holds ⟨q⟩ at the start of each increment.
pub fn girsanov_shift<R: Real>(
    xi: &WienerPath<R>,
    mean_history: &[R],
    lambda: R,
) -> Result<WienerPath<R>> {
    shift(xi, mean_history, lambda, -R::one())
}

/// Inverse shift: dξ = dW + 2√λ·⟨q⟩dt.
pub fn girsanov_unshift<R: Real>(
    w: &WienerPath<R>,
    mean_history: &[R],
    lambda: R,
) -> Result<WienerPath<R>> {
    shift(w, mean_history, lambda, R::one())
}

fn shift<R: Real>(
    path: &WienerPath<R>,
    mean_history: &[R],
    lambda: R,
    sign: R,
) -> Result<WienerPath<R>> {
    if mean_history.len() != path.increments.len() {
        return Err(Error::GridMismatch(format!(
            "mean history has {} entries, path has {} increments",
            mean_history.len(),
            path.increments.len()
        )));
    }
    let two_sqrt_lambda = R::of(2.0) * lambda.sqrt();
    let increments = path
        .increments
        .iter()
        .zip(mean_history)
        .map(|(&d, &q)| d + sign * two_sqrt_lambda * q * path.dt)
        .collect();
    Ok(WienerPath {
        dt: path.dt,
        increments,
        seed: path.seed,
        index: path.index,
    })
}
