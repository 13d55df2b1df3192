//! Statistical-operator layer: the deterministic density that the stochastic
//! ensemble must average to.
//!
//! The position density solving the master equation is the pure-Schrödinger
//! density convolved with a Gaussian of parameter
//! α_t = 3m²/(2ħ²λt³): p_t = √(α_t/π)∫e^{−α_t y²}·p_S(x+y)dy. For
//! macroscopic parameters α_t is so large that the kernel acts like a delta
//! and p_t ≈ p_S; that regime is detected and flagged instead of being pushed
//! through an impossible grid resolution.

use crate::error::{Error, Result};
use crate::gauss1;
use crate::model::{Model, C};
use crate::scalar::Real;

/// Position density on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile<R: Real> {
    pub xs: Vec<R>,
    pub values: Vec<R>,
    pub t: R,
}

impl<R: Real> DensityProfile<R> {
    pub fn dx(&self) -> R {
        if self.xs.len() < 2 {
            R::zero()
        } else {
            self.xs[1] - self.xs[0]
        }
    }

    /// Riemann integral over the grid.
    pub fn integral(&self) -> R {
        self.values.iter().copied().sum::<R>() * self.dx()
    }

    pub fn normalize(&mut self) {
        let z = self.integral();
        if z > R::zero() {
            for v in &mut self.values {
                *v /= z;
            }
        }
    }

    /// L¹ distance ∫|p − q|dx; grids must match.
    pub fn l1_distance(&self, other: &DensityProfile<R>) -> Result<R> {
        if self.xs.len() != other.xs.len() {
            return Err(Error::GridMismatch(
                "L¹ distance needs matching density grids".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a - *b).abs())
            .sum::<R>()
            * self.dx())
    }
}

/// Decoherence kernel F[k,x,t] = exp[−(λ/2)t(x² − (k/m)xt + (k²/3m²)t²)],
/// with `k` a momentum. The quadratic form is positive semi-definite
/// (discriminant (1/m)² − 4/3m² < 0), so 0 < F ≤ 1.
pub fn kernel_f<R: Real>(model: &Model<R>, k: R, x: R, t: R) -> R {
    let kt_over_m = k * t / model.mass;
    let q = x * x - kt_over_m * x + kt_over_m * kt_over_m / R::of(3.0);
    (-model.lambda / R::of(2.0) * t * q).exp()
}

/// Smoothing parameter α_t = 3m²/(2ħ²λt³); grows without bound as t → 0.
pub fn alpha<R: Real>(model: &Model<R>, t: R) -> Result<R> {
    if t <= R::zero() {
        return Err(Error::Parameter("alpha needs t > 0".into()));
    }
    Ok(R::of(3.0) * model.mass * model.mass
        / (R::of(2.0) * model.hbar * model.hbar * model.lambda * t * t * t))
}

/// Free-particle density of an initial Gaussian exp[−a₀(x−x₀)² + ik₀x],
/// evaluated on `xs` at time `t`: a Gaussian with mean x₀ + (ħ/m)k₀t and
/// variance 1/(4·Re a_t) under the collapse-free width flow.
pub fn pure_schrodinger_density<R: Real>(
    model: &Model<R>,
    a0: C<R>,
    x0: R,
    k0: R,
    t: R,
    xs: &[R],
) -> Result<DensityProfile<R>> {
    let free = Model::new(R::zero(), model.hbar, model.mass);
    let a_t = gauss1::a_exact(&free, a0, t)?;
    let var = (R::of(4.0) * a_t.re).recip();
    let mean = x0 + model.hbar / model.mass * k0 * t;
    Ok(gaussian_profile(xs, mean, var, t))
}

/// Gaussian density with the given mean and variance on a grid.
pub fn gaussian_profile<R: Real>(xs: &[R], mean: R, var: R, t: R) -> DensityProfile<R> {
    let norm = (R::of(2.0) * R::PI() * var).sqrt().recip();
    DensityProfile {
        xs: xs.to_vec(),
        values: xs
            .iter()
            .map(|&x| {
                let d = x - mean;
                norm * (-d * d / (R::of(2.0) * var)).exp()
            })
            .collect(),
        t,
    }
}

/// Result of pushing a pure-Schrödinger density through the collapse kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolvedDensity<R: Real> {
    pub profile: DensityProfile<R>,
    /// Set when the smoothing width is far below the grid resolution: the
    /// kernel acts like a delta and the density is returned unchanged (the
    /// macroscopic regime).
    pub delta_regime: bool,
}

/// Convolve with the Gaussian kernel of parameter α_t. The kernel width
/// 1/√α_t must either be resolvable (≥ dx) or recognizably sub-grid
/// (< dx/10); anything in between needs a finer grid.
pub fn density_convolve<R: Real>(
    model: &Model<R>,
    p_s: &DensityProfile<R>,
    t: R,
) -> Result<ConvolvedDensity<R>> {
    if p_s.xs.len() < 2 {
        return Err(Error::Parameter("density grid too small".into()));
    }
    let dx = p_s.dx();
    if t == R::zero() {
        return Ok(ConvolvedDensity {
            profile: p_s.clone(),
            delta_regime: true,
        });
    }
    let a = alpha(model, t)?;
    let width = a.sqrt().recip();
    if width < dx / R::of(10.0) {
        return Ok(ConvolvedDensity {
            profile: p_s.clone(),
            delta_regime: true,
        });
    }
    if width < dx {
        return Err(Error::RefinementRequired(format!(
            "smoothing width {:.3e} falls between dx/10 and dx = {:.3e}",
            width.to_f64_lossy(),
            dx.to_f64_lossy()
        )));
    }
    // Discrete Gaussian kernel out to 8 standard deviations, renormalized so
    // the convolution conserves mass exactly on the grid.
    let sigma = (R::of(2.0) * a).sqrt().recip();
    let reach = (R::of(8.0) * sigma / dx).ceil().to_f64_lossy() as usize;
    let mut kernel = Vec::with_capacity(2 * reach + 1);
    for j in -(reach as isize)..=(reach as isize) {
        let y = R::from_isize(j).unwrap() * dx;
        kernel.push((-a * y * y).exp());
    }
    let ksum = kernel.iter().copied().sum::<R>();
    for k in &mut kernel {
        *k /= ksum;
    }
    let n = p_s.values.len();
    let mut values = vec![R::zero(); n];
    for (i, v) in values.iter_mut().enumerate() {
        let mut acc = R::zero();
        for (jj, k) in kernel.iter().enumerate() {
            let j = i as isize + jj as isize - reach as isize;
            if j >= 0 && (j as usize) < n {
                acc += *k * p_s.values[j as usize];
            }
        }
        *v = acc;
    }
    let mut profile = DensityProfile {
        xs: p_s.xs.clone(),
        values,
        t,
    };
    profile.normalize();
    Ok(ConvolvedDensity {
        profile,
        delta_regime: false,
    })
}

/// μ_t([lo, hi]) = ∫ p_t over the interval: the probability of finding the
/// collapsed wavefunction there.
pub fn measure_mu<R: Real>(p: &DensityProfile<R>, lo: R, hi: R) -> Result<R> {
    let dx = p.dx();
    let (first, last) = (p.xs[0], *p.xs.last().unwrap());
    if lo >= hi || lo < first - dx || hi > last + dx {
        return Err(Error::Parameter(format!(
            "interval [{}, {}] outside density grid [{}, {}]",
            lo, hi, first, last
        )));
    }
    Ok(p
        .xs
        .iter()
        .zip(&p.values)
        .filter(|(&x, _)| x >= lo && x <= hi)
        .map(|(_, &v)| v)
        .sum::<R>()
        * dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use rand::Rng;

    use crate::stochastic::substream_rng;
    use crate::units::{derive_constants, ModelParams};

    fn natural() -> Model<f64> {
        Model::natural()
    }

    fn grid(n: usize, l: f64) -> Vec<f64> {
        let dx = l / n as f64;
        (0..n).map(|j| j as f64 * dx - l / 2.0).collect()
    }

    #[test]
    fn kernel_limits_and_symmetry() {
        let m = natural();
        let free = Model::new(0.0, 1.0, 1.0);
        let mut rng = substream_rng(50, 0);
        for _ in 0..100 {
            let k = rng.gen_range(-3.0..3.0);
            let x = rng.gen_range(-3.0..3.0);
            let t = rng.gen_range(0.0..5.0);
            let f = kernel_f(&m, k, x, t);
            assert!(f > 0.0 && f <= 1.0, "F = {f}");
            // F[k,x,t] = F[−k,−x,t].
            assert!((f - kernel_f(&m, -k, -x, t)).abs() < 1e-15);
            // λ = 0 ⇒ F ≡ 1; t = 0 ⇒ F = 1.
            assert_eq!(kernel_f(&free, k, x, t), 1.0);
            assert_eq!(kernel_f(&m, k, x, 0.0), 1.0);
        }
    }

    #[test]
    fn alpha_scalings() {
        let m = natural();
        assert!(alpha(&m, 0.0).is_err());
        assert!(alpha(&m, -1.0).is_err());
        let a1 = alpha(&m, 1.0).unwrap();
        let a2 = alpha(&m, 2.0).unwrap();
        assert!((a2 - a1 / 8.0).abs() < 1e-12 * a1);
        let double_mass = Model::new(0.5, 1.0, 2.0); // λ ∝ m keeps λ/m fixed
        let am = alpha(&double_mass, 1.0).unwrap();
        assert!((am - 2.0 * a1).abs() < 1e-12 * am);
    }

    #[test]
    fn alpha_magnitude_kilogram_second() {
        // α(1 kg, 1 s) ≃ 10⁴³ m⁻² within a factor 10.
        let c = derive_constants(&ModelParams::<f64>::with_mass(1.0).unwrap()).unwrap();
        let si = Model::new(c.lambda, crate::units::HBAR_SI, 1.0);
        let a = alpha(&si, 1.0).unwrap();
        assert!(a > 1e42 && a < 1e44, "alpha = {a:e}");
    }

    #[test]
    fn schrodinger_density_basics() {
        let m = natural();
        let xs = grid(512, 40.0);
        let a0 = Complex::new(0.25, 0.0);
        let p0 = pure_schrodinger_density(&m, a0, 0.5, 1.0, 0.0, &xs).unwrap();
        assert!((p0.integral() - 1.0).abs() < 1e-6);
        // Mean moves at ħk₀/m; variance follows the free spreading law.
        let t = 1.5;
        let pt = pure_schrodinger_density(&m, a0, 0.5, 1.0, t, &xs).unwrap();
        let mean: f64 = pt.xs.iter().zip(&pt.values).map(|(x, v)| x * v).sum::<f64>()
            * pt.dx();
        assert!((mean - (0.5 + 1.0 * t)).abs() < 1e-9);
        let var: f64 = pt
            .xs
            .iter()
            .zip(&pt.values)
            .map(|(x, v)| (x - mean) * (x - mean) * v)
            .sum::<f64>()
            * pt.dx();
        let sigma0_sq = 1.0 / (4.0 * a0.re);
        let expect = sigma0_sq + t * t / (4.0 * sigma0_sq);
        assert!((var - expect).abs() < 1e-6, "{var} vs {expect}");
    }

    #[test]
    fn convolution_adds_kernel_variance() {
        let m = natural();
        let xs = grid(1024, 60.0);
        let v0 = 1.3;
        let t = 1.7;
        let p_s = gaussian_profile(&xs, 0.4, v0, t);
        let out = density_convolve(&m, &p_s, t).unwrap();
        assert!(!out.delta_regime);
        let a = alpha(&m, t).unwrap();
        let mean: f64 = out
            .profile
            .xs
            .iter()
            .zip(&out.profile.values)
            .map(|(x, v)| x * v)
            .sum::<f64>()
            * out.profile.dx();
        let var: f64 = out
            .profile
            .xs
            .iter()
            .zip(&out.profile.values)
            .map(|(x, v)| (x - mean) * (x - mean) * v)
            .sum::<f64>()
            * out.profile.dx();
        assert!((out.profile.integral() - 1.0).abs() < 1e-9);
        assert!(
            (var - (v0 + 1.0 / (2.0 * a))).abs() < 1e-8,
            "{var} vs {}",
            v0 + 1.0 / (2.0 * a)
        );
        for v in &out.profile.values {
            assert!(*v >= 0.0);
        }
    }

    #[test]
    fn macro_regime_returns_identity_with_flag() {
        // A 1-kg object at laboratory times: the kernel width is far below
        // any feasible grid spacing.
        let c = derive_constants(&ModelParams::<f64>::with_mass(1.0).unwrap()).unwrap();
        let si = Model::new(c.lambda, crate::units::HBAR_SI, 1.0);
        let n = 512;
        let l = 1.0e-2; // 1 cm window
        let dx = l / n as f64;
        let xs: Vec<f64> = (0..n).map(|j| j as f64 * dx - l / 2.0).collect();
        let p_s = gaussian_profile(&xs, 0.0, 1e-6, 1.0);
        let out = density_convolve(&si, &p_s, 1.0).unwrap();
        assert!(out.delta_regime);
        assert_eq!(out.profile.values, p_s.values);
    }

    #[test]
    fn intermediate_width_requests_refinement() {
        let m = natural();
        let xs = grid(64, 40.0); // dx = 0.625
        let t = 0.9f64; // width (τ³/6)^½ ≈ 0.35 ∈ (dx/10, dx)
        let p_s = gaussian_profile(&xs, 0.0, 1.0, t);
        let a = alpha(&m, t).unwrap();
        let width = a.sqrt().recip();
        assert!(width > xs[1] - xs[0] || width >= (xs[1] - xs[0]) / 10.0);
        let r = density_convolve(&m, &p_s, t);
        assert!(matches!(r, Err(Error::RefinementRequired(_))), "{r:?}");
    }

    #[test]
    fn measure_mu_properties() {
        let xs = grid(512, 40.0);
        let p = gaussian_profile(&xs, 0.0, 1.0, 0.0);
        let full = measure_mu(&p, -19.99, 19.9).unwrap();
        assert!((full - 1.0).abs() < 1e-9);
        // Finite additivity on disjoint intervals with off-grid boundaries.
        let mid = 0.512_345;
        let left = measure_mu(&p, -6.0, mid).unwrap();
        let right = measure_mu(&p, mid + 1e-9, 6.0).unwrap();
        let both = measure_mu(&p, -6.0, 6.0).unwrap();
        assert!((left + right - both).abs() < 1e-12);
        assert!(measure_mu(&p, -50.0, 0.0).is_err());
    }
}
