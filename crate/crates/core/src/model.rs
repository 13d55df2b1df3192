//! Dimensionless model parameters.
//!
//! Every simulation routine works with the triple (λ, ħ, m) in whatever unit
//! system the caller picked. The natural choice — and the only one the rest
//! of the crate ever uses in anger — measures time in 1/ω and length in
//! ℓ = √(ħ/mω), which pins ħ = m = 1 and λ = 1/4 (because ω² = 4ħλ/m).
//! SI values appear only at the I/O boundary, through [`crate::units::Scale`].

use num_complex::Complex;

use crate::scalar::Real;

pub type C<R> = Complex<R>;

/// Collapse-model parameters for a single free particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model<R: Real> {
    /// Collapse strength λ (length⁻² · time⁻¹).
    pub lambda: R,
    /// Reduced Planck constant in the working units.
    pub hbar: R,
    /// Particle mass in the working units.
    pub mass: R,
}

impl<R: Real> Model<R> {
    pub fn new(lambda: R, hbar: R, mass: R) -> Self {
        Model { lambda, hbar, mass }
    }

    /// Natural units: time 1/ω, length ℓ. Then ħ = m = 1, λ = 1/4, ω = 1.
    pub fn natural() -> Self {
        Model {
            lambda: R::of(0.25),
            hbar: R::one(),
            mass: R::one(),
        }
    }

    /// Same units, collapse switched off (free Schrödinger dynamics).
    pub fn free() -> Self {
        Model {
            lambda: R::zero(),
            hbar: R::one(),
            mass: R::one(),
        }
    }

    /// Characteristic frequency ω = 2√(ħλ/m).
    pub fn omega(&self) -> R {
        R::of(2.0) * (self.hbar * self.lambda / self.mass).sqrt()
    }

    /// Stationary width parameter a(∞) = (λ/ω)(1 − i).
    pub fn a_inf(&self) -> C<R> {
        let r = self.lambda / self.omega();
        C::new(r, -r)
    }

    /// Riccati constant c = (1 − i)·√(mλ/ħ)/2; equals a(∞).
    pub fn riccati_c(&self) -> C<R> {
        let r = (self.mass * self.lambda / self.hbar).sqrt() / R::of(2.0);
        C::new(r, -r)
    }

    /// Riccati rate b = (1 + i)·√(ħλ/m) = (1 + i)·ω/2.
    pub fn riccati_b(&self) -> C<R> {
        let r = (self.hbar * self.lambda / self.mass).sqrt();
        C::new(r, r)
    }

    /// Asymptotic position spread σ_q(∞) = √(ħ/mω).
    pub fn sigma_q_inf(&self) -> R {
        (self.hbar / (self.mass * self.omega())).sqrt()
    }

    /// Asymptotic momentum spread σ_p(∞) = √(ħmω/2).
    pub fn sigma_p_inf(&self) -> R {
        (self.hbar * self.mass * self.omega() / R::of(2.0)).sqrt()
    }

    /// Mean energy gain rate λħ²/2m.
    pub fn energy_rate(&self) -> R {
        self.lambda * self.hbar * self.hbar / (R::of(2.0) * self.mass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_units_are_self_consistent() {
        let m: Model<f64> = Model::natural();
        assert!((m.omega() - 1.0).abs() < 1e-15);
        assert!((m.sigma_q_inf() - 1.0).abs() < 1e-15);
        assert!((m.sigma_p_inf() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let a = m.a_inf();
        assert!((a.re - 0.25).abs() < 1e-15 && (a.im + 0.25).abs() < 1e-15);
        // c coincides with the stationary point.
        assert!((m.riccati_c() - a).norm() < 1e-15);
    }

    #[test]
    fn a_inf_is_fixed_point_of_width_flow() {
        // λ − (2iħ/m)·a² must vanish at a = a(∞).
        let m: Model<f64> = Model::new(0.7, 1.3, 2.1);
        let a = m.a_inf();
        let residual = Complex::new(m.lambda, 0.0)
            - Complex::new(0.0, 2.0 * m.hbar / m.mass) * a * a;
        assert!(residual.norm() < 1e-15 * m.lambda);
    }

    #[test]
    fn generic_over_f32() {
        let m: Model<f32> = Model::natural();
        assert!((m.omega() - 1.0).abs() < 1e-6);
    }
}
