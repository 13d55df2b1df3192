//! Property tests for the structural invariants: unit-scale round trips,
//! accumulator merges, time-change monotonicity, noise-shift inverses, width
//! positivity and the closed-form flow's semigroup law.

use num_complex::Complex;
use proptest::prelude::*;

use qmupl::ensemble::Welford;
use qmupl::gauss1;
use qmupl::gauss2;
use qmupl::master;
use qmupl::model::Model;
use qmupl::stochastic::{girsanov_shift, girsanov_unshift, time_change, WienerPath};
use qmupl::units::{derive_constants, ModelParams};

fn natural() -> Model<f64> {
    Model::natural()
}

proptest! {
    #[test]
    fn scale_round_trips_are_identity(
        mass_exp in -30.0f64..2.0,
        value_exp in -20.0f64..10.0,
        sign in any::<bool>(),
    ) {
        let mass = 10f64.powf(mass_exp);
        let v = if sign { 10f64.powf(value_exp) } else { -(10f64.powf(value_exp)) };
        let scale = derive_constants(&ModelParams::<f64>::with_mass(mass).unwrap())
            .unwrap()
            .scale();
        let checks = [
            scale.time_to_si(scale.time_to_dimensionless(v)),
            scale.length_to_si(scale.length_to_dimensionless(v)),
            scale.wavenumber_to_si(scale.wavenumber_to_dimensionless(v)),
            scale.momentum_to_si(scale.momentum_to_dimensionless(v)),
            scale.qq_cov_to_si(scale.qq_cov_to_dimensionless(v)),
            scale.qp_cov_to_si(scale.qp_cov_to_dimensionless(v)),
            scale.pp_cov_to_si(scale.pp_cov_to_dimensionless(v)),
            scale.energy_to_si(scale.energy_to_dimensionless(v)),
            scale.energy_rate_to_si(scale.energy_rate_to_dimensionless(v)),
            scale.inv_area_to_si(scale.inv_area_to_dimensionless(v)),
        ];
        for c in checks {
            prop_assert!(((c - v) / v).abs() < 1e-12);
        }
    }

    #[test]
    fn welford_merge_is_associative_and_commutative(
        xs in prop::collection::vec(-1e3f64..1e3, 3..60),
        cut_a in 1usize..58,
        cut_b in 1usize..58,
    ) {
        let (i, j) = {
            let a = cut_a % xs.len().max(1);
            let b = cut_b % xs.len().max(1);
            (a.min(b).max(1).min(xs.len() - 1), a.max(b).max(1).min(xs.len() - 1))
        };
        let mut w1 = Welford::default();
        let mut w2 = Welford::default();
        let mut w3 = Welford::default();
        for &x in &xs[..i] { w1.update(x); }
        for &x in &xs[i..j] { w2.update(x); }
        for &x in &xs[j..] { w3.update(x); }
        let left = Welford::merge(&Welford::merge(&w1, &w2), &w3);
        let right = Welford::merge(&w1, &Welford::merge(&w2, &w3));
        let swapped = Welford::merge(&Welford::merge(&w3, &w2), &w1);
        let mut single = Welford::default();
        for &x in &xs { single.update(x); }
        for w in [left, right, swapped] {
            prop_assert_eq!(w.count(), single.count());
            prop_assert!((w.mean() - single.mean()).abs() <= 1e-12 * single.mean().abs().max(1.0));
            if let (Some(a), Some(b)) = (w.variance(), single.variance()) {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-9));
            }
        }
    }

    #[test]
    fn time_change_is_monotone(
        xs in prop::collection::vec(-10.0f64..10.0, 2..200),
        lambda in 1e-3f64..10.0,
    ) {
        let tc = time_change(&xs, 1e-2, lambda).unwrap();
        for w in tc.s.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        prop_assert_eq!(tc.s[0], 0.0);
    }

    #[test]
    fn girsanov_round_trip(
        incs in prop::collection::vec(-0.3f64..0.3, 1..100),
        means in prop::collection::vec(-5.0f64..5.0, 100),
        lambda in 1e-3f64..2.0,
    ) {
        let path = WienerPath { dt: 1e-2, increments: incs.clone(), seed: 0, index: 0 };
        let m = &means[..incs.len()];
        let shifted = girsanov_shift(&path, m, lambda).unwrap();
        let back = girsanov_unshift(&shifted, m, lambda).unwrap();
        for (a, b) in back.increments.iter().zip(&incs) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn width_flow_stays_positive_and_composes(
        re_exp in -2.0f64..1.0,
        im in -4.0f64..4.0,
        t1 in 0.01f64..8.0,
        t2 in 0.01f64..8.0,
    ) {
        let m = natural();
        let a0 = Complex::new(10f64.powf(re_exp), im);
        let direct = gauss1::a_exact(&m, a0, t1 + t2).unwrap();
        let mid = gauss1::a_exact(&m, a0, t1).unwrap();
        prop_assert!(mid.re > 0.0);
        let composed = gauss1::a_exact(&m, mid, t2).unwrap();
        prop_assert!(composed.re > 0.0);
        prop_assert!((direct - composed).norm() <= 1e-9 * direct.norm().max(1e-9));
    }

    #[test]
    fn uncertainty_product_bounded_below(
        re_exp in -2.0f64..1.0,
        im in -4.0f64..4.0,
        t in 0.0f64..30.0,
    ) {
        let m = natural();
        let a0 = Complex::new(10f64.powf(re_exp), im);
        let (sq, sp) = gauss1::spreads_at(&m, a0, t).unwrap();
        prop_assert!(sq * sp >= 0.5 * m.hbar * (1.0 - 1e-12));
    }

    #[test]
    fn decoherence_kernel_stays_in_unit_interval(
        k in -20.0f64..20.0,
        x in -20.0f64..20.0,
        t in 0.0f64..50.0,
    ) {
        let m = natural();
        let f = master::kernel_f(&m, k, x, t);
        prop_assert!(f >= 0.0 && f <= 1.0);
        // The quadratic form is positive definite, so F is strictly positive
        // wherever the exponential has not underflowed.
        let kt = k * t / m.mass;
        let exponent = -m.lambda / 2.0 * t * (x * x - kt * x + kt * kt / 3.0);
        prop_assert!(exponent <= 1e-12);
        if exponent > -700.0 {
            prop_assert!(f > 0.0);
        }
    }

    #[test]
    fn exit_statistics_well_formed(
        b in 0.5f64..12.0,
        frac in -0.95f64..0.95,
    ) {
        let b0 = b * frac;
        let cfg = gauss2::HittingConfig::new(b, b0, b / 2.0).unwrap();
        let st = gauss2::hitting_stats(&cfg).unwrap();
        prop_assert!(st.mean_s >= 0.0);
        prop_assert!(st.var_s > 0.0);
        prop_assert!(st.p_collapse_2 >= 0.0 && st.p_collapse_2 <= 1.0);
        prop_assert!((st.p_collapse_1 + st.p_collapse_2 - 1.0).abs() < 1e-12);
        prop_assert!(st.p_deloc_bound >= 0.0 && st.p_deloc_bound <= 1.0);
    }
}
