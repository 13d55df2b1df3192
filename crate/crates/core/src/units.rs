//! Physical parameters, derived constants and the SI ↔ dimensionless scaling.
//!
//! Raw SI magnitudes for this model are hostile to floating point (ħ²λ is of
//! order 10⁻⁷⁰, overlap factors reach exp(−10²¹)), so all dynamics runs in
//! natural units — time in 1/ω, length in ℓ = √(ħ/mω) — and this module owns
//! the only conversions in or out of SI.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::scalar::Real;

/// CODATA 2018 reduced Planck constant (J s).
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// CODATA 2018 proton mass (kg); the "nucleon" reference mass.
pub const NUCLEON_MASS_SI: f64 = 1.672_621_923_69e-27;
/// CODATA 2018 electron mass (kg).
pub const ELECTRON_MASS_SI: f64 = 9.109_383_7015e-31;
/// One gram (kg).
pub const GRAM_SI: f64 = 1.0e-3;
/// Earth mass (kg).
pub const EARTH_MASS_SI: f64 = 5.9722e24;
/// Collapse constant λ₀ (m⁻² s⁻¹); the product of the localization rate and
/// inverse squared localization width of the original GRW parameter choice.
pub const LAMBDA0_SI: f64 = 1.0e-2;

/// Order-of-magnitude environmental decoherence rates λ (cm⁻² s⁻¹) quoted
/// from the open-quantum-systems literature for a 10⁻³ cm dust particle and
/// a 10⁻⁶ cm large molecule, with the collapse-model rate last. Shipped for
/// documentation and reporting only — nothing in the dynamics computes with
/// them.
pub const DECOHERENCE_COMPARISON_CM2_S: &[(&str, f64, f64)] = &[
    ("air molecules", 1e36, 1e30),
    ("laboratory vacuum", 1e23, 1e17),
    ("sunlight on earth", 1e21, 1e13),
    ("300K photons", 1e19, 1e6),
    ("cosmic background radiation", 1e6, 1e-12),
    ("collapse model", 1e7, 1e-2),
];

/// Physical inputs in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<R: Real> {
    /// Particle (or centre-of-mass) mass, kg.
    pub m: R,
    /// Reference mass, kg.
    pub m0: R,
    /// Collapse constant for the reference mass, m⁻² s⁻¹.
    pub lambda0: R,
    /// Reduced Planck constant, J s.
    pub hbar: R,
}

/// Built-in particle presets with CODATA-style masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Electron,
    Nucleon,
    Gram,
    Earth,
}

impl<R: Real> ModelParams<R> {
    pub fn new(m: R, m0: R, lambda0: R, hbar: R) -> Result<Self> {
        let p = ModelParams { m, m0, lambda0, hbar };
        p.validate()?;
        Ok(p)
    }

    /// Parameters for a particle of mass `m` kg with the default reference
    /// mass and collapse constant.
    pub fn with_mass(m: R) -> Result<Self> {
        Self::new(
            m,
            R::of(NUCLEON_MASS_SI),
            R::of(LAMBDA0_SI),
            R::of(HBAR_SI),
        )
    }

    pub fn preset(which: Preset) -> Self {
        let m = match which {
            Preset::Electron => ELECTRON_MASS_SI,
            Preset::Nucleon => NUCLEON_MASS_SI,
            Preset::Gram => GRAM_SI,
            Preset::Earth => EARTH_MASS_SI,
        };
        Self::with_mass(R::of(m)).expect("preset masses are positive")
    }

    /// Centre of mass of `n` identical particles of the reference mass.
    pub fn nucleon_aggregate(n: R) -> Result<Self> {
        Self::with_mass(n * R::of(NUCLEON_MASS_SI))
    }

    fn validate(&self) -> Result<()> {
        let ok = self.m > R::zero()
            && self.m0 > R::zero()
            && self.lambda0 > R::zero()
            && self.hbar > R::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(
                "ModelParams fields must all be strictly positive".into(),
            ))
        }
    }
}

/// Every constant the model derives from [`ModelParams`], in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants<R: Real> {
    /// λ = (m/m₀)·λ₀, m⁻² s⁻¹.
    pub lambda: R,
    /// ω = 2√(ħλ₀/m₀), s⁻¹; independent of the particle mass.
    pub omega: R,
    /// Length unit ℓ = √(ħ/mω), m.
    pub length_unit: R,
    /// Asymptotic position spread, m; equals ℓ.
    pub sigma_q_inf: R,
    /// Asymptotic momentum spread √(ħmω/2), kg m/s.
    pub sigma_p_inf: R,
    /// Stationary width parameter a(∞) = (λ/ω)(1 − i), m⁻².
    pub a_inf: Complex<R>,
    /// Mean energy gain rate λ₀ħ²/2m₀, J/s; independent of the particle mass.
    pub energy_rate: R,
    params: ModelParams<R>,
}

/// Compute every derived constant.
pub fn derive_constants<R: Real>(p: &ModelParams<R>) -> Result<DerivedConstants<R>> {
    p.validate()?;
    let lambda = p.m / p.m0 * p.lambda0;
    let omega = R::of(2.0) * (p.hbar * p.lambda0 / p.m0).sqrt();
    let length_unit = (p.hbar / (p.m * omega)).sqrt();
    let r = lambda / omega;
    Ok(DerivedConstants {
        lambda,
        omega,
        length_unit,
        sigma_q_inf: length_unit,
        sigma_p_inf: (p.hbar * p.m * omega / R::of(2.0)).sqrt(),
        a_inf: Complex::new(r, -r),
        energy_rate: p.lambda0 * p.hbar * p.hbar / (R::of(2.0) * p.m0),
        params: p.clone(),
    })
}

impl<R: Real> DerivedConstants<R> {
    pub fn params(&self) -> &ModelParams<R> {
        &self.params
    }

    /// Collapse constant for the centre of mass of a composite of total mass
    /// `total_mass` kg: λ_CM = (M/m₀)·λ₀.
    pub fn lambda_cm_for_mass(&self, total_mass: R) -> R {
        total_mass / self.params.m0 * self.params.lambda0
    }

    /// λ_CM for `n` identical particles of the reference mass: exactly n·λ₀.
    pub fn lambda_cm_for_count(&self, n: R) -> R {
        n * self.params.lambda0
    }

    /// The scaling between SI and natural units for this particle.
    pub fn scale(&self) -> Scale<R> {
        Scale {
            omega: self.omega,
            length_unit: self.length_unit,
            hbar: self.params.hbar,
        }
    }

    /// Dimensionless model seen by the simulation layer; always
    /// (λ, ħ, m) = (1/4, 1, 1).
    pub fn natural_model(&self) -> Model<R> {
        Model::natural()
    }
}

/// SI ↔ dimensionless conversion maps.
///
/// Time is measured in 1/ω, length in ℓ, momentum-like quantities in ħ/ℓ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale<R: Real> {
    pub omega: R,
    pub length_unit: R,
    pub hbar: R,
}

impl<R: Real> Scale<R> {
    pub fn time_unit(&self) -> R {
        self.omega.recip()
    }

    pub fn time_to_dimensionless(&self, t_si: R) -> R {
        t_si * self.omega
    }
    pub fn time_to_si(&self, tau: R) -> R {
        tau / self.omega
    }

    pub fn length_to_dimensionless(&self, x_si: R) -> R {
        x_si / self.length_unit
    }
    pub fn length_to_si(&self, x: R) -> R {
        x * self.length_unit
    }

    /// Wavenumber k̄ (m⁻¹).
    pub fn wavenumber_to_dimensionless(&self, k_si: R) -> R {
        k_si * self.length_unit
    }
    pub fn wavenumber_to_si(&self, k: R) -> R {
        k / self.length_unit
    }

    /// Width parameter a (m⁻²).
    pub fn width_param_to_dimensionless(&self, a_si: Complex<R>) -> Complex<R> {
        let l2 = self.length_unit * self.length_unit;
        Complex::new(a_si.re * l2, a_si.im * l2)
    }
    pub fn width_param_to_si(&self, a: Complex<R>) -> Complex<R> {
        let l2 = self.length_unit * self.length_unit;
        Complex::new(a.re / l2, a.im / l2)
    }

    /// Momentum spread (kg m/s).
    pub fn momentum_to_dimensionless(&self, p_si: R) -> R {
        p_si * self.length_unit / self.hbar
    }
    pub fn momentum_to_si(&self, p: R) -> R {
        p * self.hbar / self.length_unit
    }

    /// Position covariance (m²).
    pub fn qq_cov_to_dimensionless(&self, c_si: R) -> R {
        c_si / (self.length_unit * self.length_unit)
    }
    pub fn qq_cov_to_si(&self, c: R) -> R {
        c * self.length_unit * self.length_unit
    }

    /// Position–momentum covariance (J s).
    pub fn qp_cov_to_dimensionless(&self, c_si: R) -> R {
        c_si / self.hbar
    }
    pub fn qp_cov_to_si(&self, c: R) -> R {
        c * self.hbar
    }

    /// Momentum covariance ((kg m/s)²).
    pub fn pp_cov_to_dimensionless(&self, c_si: R) -> R {
        c_si * (self.length_unit / self.hbar) * (self.length_unit / self.hbar)
    }
    pub fn pp_cov_to_si(&self, c: R) -> R {
        c * (self.hbar / self.length_unit) * (self.hbar / self.length_unit)
    }

    /// Energy (J); the unit is ħω.
    pub fn energy_to_dimensionless(&self, e_si: R) -> R {
        e_si / (self.hbar * self.omega)
    }
    pub fn energy_to_si(&self, e: R) -> R {
        e * self.hbar * self.omega
    }

    /// Energy rate (J/s); the unit is ħω².
    pub fn energy_rate_to_dimensionless(&self, r_si: R) -> R {
        r_si / (self.hbar * self.omega * self.omega)
    }
    pub fn energy_rate_to_si(&self, r: R) -> R {
        r * self.hbar * self.omega * self.omega
    }

    /// Inverse-area quantities such as the smoothing parameter α_t (m⁻²).
    pub fn inv_area_to_dimensionless(&self, a_si: R) -> R {
        a_si * self.length_unit * self.length_unit
    }
    pub fn inv_area_to_si(&self, a: R) -> R {
        a / (self.length_unit * self.length_unit)
    }
}

/// Order-of-magnitude estimates for a superposition of separation `x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroMicroEstimates<R: Real> {
    /// Expected suppression time E[T_b] = b/(λ·X₀²), s.
    pub e_t_b: R,
    /// Asymptotic spread, m.
    pub sigma_q_inf: R,
    /// Stationary floor of d𝕍[⟨q⟩]/dt from the position-covariance ODE:
    /// (λ/4)/a_R(∞)² = ħ/m, m²/s.
    pub fluct_rate: R,
}

/// Suppression-time and fluctuation estimates for a two-branch superposition
/// of separation `x0` (m), with suppression threshold `b`.
///
/// Assumes the separation stays ≈ X₀ over the suppression time, which is what
/// makes the time change linear: s_t = λX₀²t.
pub fn macro_micro_estimates<R: Real>(
    p: &ModelParams<R>,
    x0: R,
    b: R,
) -> Result<MacroMicroEstimates<R>> {
    if x0 <= R::zero() {
        return Err(Error::Domain(
            "separation X0 must be positive (no superposition otherwise)".into(),
        ));
    }
    let c = derive_constants(p)?;
    Ok(MacroMicroEstimates {
        e_t_b: b / (c.lambda * x0 * x0),
        sigma_q_inf: c.sigma_q_inf,
        fluct_rate: p.hbar / p.m,
    })
}

/// Fluctuations of the wavepacket means accumulated by time `t`, assuming the
/// spread already sits at its stationary value.
///
/// V_q integrates the covariance ODE system in closed form,
/// V_q = (ω/8λ)[(ωt)³/6 + (ωt)² + 2ωt]; V_p = λħ²t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationDamping<R: Real> {
    /// 𝕍[⟨q⟩_t], m².
    pub v_q: R,
    /// 𝕍[⟨p⟩_t], (kg m/s)².
    pub v_p: R,
    /// The stationary-spread assumption baked into the formulas.
    pub assumes_stationary_spread: bool,
}

pub fn fluctuation_damping<R: Real>(
    c: &DerivedConstants<R>,
    t: R,
) -> FluctuationDamping<R> {
    let wt = c.omega * t;
    let bracket = wt * wt * wt / R::of(6.0) + wt * wt + R::of(2.0) * wt;
    FluctuationDamping {
        v_q: c.omega / (R::of(8.0) * c.lambda) * bracket,
        v_p: c.lambda * c.params.hbar * c.params.hbar * t,
        assumes_stationary_spread: true,
    }
}
