//! Dynamics of a free quantum particle under spontaneous position
//! localization (the QMUPL collapse model), in one dimension.
//!
//! The crate provides four independent routes to the same physics, which the
//! verification suite plays against each other:
//!
//! * closed-form single-Gaussian dynamics ([`gauss1`]),
//! * double-Gaussian collapse statistics and hitting times ([`gauss2`]),
//! * a split-step spectral solver for the full nonlinear stochastic equation
//!   on a spatial grid ([`grid`]),
//! * the deterministic master-equation density ([`master`]).
//!
//! [`ensemble`] runs seeded Monte Carlo over any of them and [`verify`] hosts
//! the acceptance checks. All numerics are generic over the scalar type via
//! [`scalar::Real`]; `f64` aliases are exported at the crate root.

pub mod ensemble;
pub mod error;
pub mod gauss1;
pub mod gauss2;
pub mod grid;
pub mod master;
pub mod model;
pub mod ode;
pub mod scalar;
pub mod stochastic;
pub mod units;
pub mod verify;

pub use error::{Error, Result};
pub use model::{Model, C};
pub use scalar::Real;

/// Default scalar for binaries and verification runs.
pub type R64 = f64;
/// Complex scalar matching [`R64`].
pub type C64 = num_complex::Complex<f64>;

pub type Model64 = Model<R64>;
pub type GaussianState64 = gauss1::GaussianState<R64>;
pub type DoubleGaussianState64 = gauss2::DoubleGaussianState<R64>;
pub type WaveGrid64 = grid::WaveGrid<R64>;
pub type DensityProfile64 = master::DensityProfile<R64>;
pub type MomentStats64 = ensemble::MomentStats<R64>;
