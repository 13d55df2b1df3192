//! The numerical core is generic over the scalar; exercise the f32
//! instantiation end to end at tolerances f32 can honour.

use num_complex::Complex;

use qmupl::ensemble::Welford;
use qmupl::gauss1;
use qmupl::gauss2;
use qmupl::model::Model;
use qmupl::stochastic::{sample_path, substream_rng};
use qmupl::units::{derive_constants, ModelParams};

#[test]
fn constants_and_closed_forms_at_f32() {
    // SI magnitudes underflow f32 (ħ·m ~ 10⁻⁶¹); order-unity parameters
    // exercise the same generic formulas.
    let c = derive_constants(&ModelParams::<f32>::new(2.0, 1.0, 1e-2, 1.0).unwrap()).unwrap();
    let target = c.params().hbar / 2f32.sqrt();
    assert!((c.sigma_q_inf * c.sigma_p_inf - target).abs() / target < 1e-5);

    let m: Model<f32> = Model::natural();
    let a = gauss1::a_exact(&m, Complex::new(1.0f32, -0.5), 30.0).unwrap();
    assert!((a - m.a_inf()).norm() < 1e-5);
    let (sq, sp) = gauss1::spreads_at(&m, Complex::new(0.7f32, 0.2), 25.0).unwrap();
    assert!((sq * sp - m.hbar / 2f32.sqrt()).abs() < 1e-4);
}

#[test]
fn hitting_formulas_at_f32() {
    let cfg = gauss2::HittingConfig::<f32>::new(2.0, 0.0, 1.0).unwrap();
    let st = gauss2::hitting_stats(&cfg).unwrap();
    assert!((st.mean_s - 2.0 * 2f32.tanh()).abs() < 1e-5);
    assert!((st.p_collapse_2 - 0.5).abs() < 1e-6);
}

#[test]
fn paths_and_accumulators_at_f32() {
    let p = sample_path::<f32>(1.0, 1e-2, 7, 0).unwrap();
    assert_eq!(p.increments.len(), 100);
    let mut w = Welford::<f32>::default();
    for &x in &p.increments {
        w.update(x);
    }
    assert!(w.variance().unwrap() > 0.0);

    let mut rng = substream_rng(3, 1);
    let out = gauss2::simulate_reduced_gamma::<f32>(2.0, 0.0, 100.0, 1e-2, &mut rng).unwrap();
    assert!(!out.censored);
    assert!(out.s > 0.0);
}
