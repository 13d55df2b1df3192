//! Grid-level ensemble checks that sit just outside the acceptance criteria:
//! the norm martingale of the linear pathway and interval probabilities
//! against the master-equation density.

use qmupl::ensemble::{run_ensemble, EnsembleSpec, GridInitial, GridLinearMartingale, GridMeanDensity};
use qmupl::grid::GridSpec;
use qmupl::master;
use qmupl::model::Model;

#[test]
fn grid_norm_martingale_mean_is_one() {
    // E_Q[‖φ_t‖²] = 1 for the linear equation, over 10⁴ grid paths.
    let m: Model<f64> = Model::natural();
    let scenario = GridLinearMartingale {
        model: m,
        grid: GridSpec::new(128, 30.0).unwrap(),
        a0: m.a_inf(),
        dt: 1e-3,
        steps: 200,
    };
    let stats = run_ensemble(&scenario, &EnsembleSpec::new(10_000, 90).unwrap()).unwrap();
    let series = stats.series("norm_sq").unwrap();
    let (_, mean, se) = series[0];
    assert!(
        (mean - 1.0).abs() < 3.0 * se,
        "martingale mean {mean} ± {se}"
    );
}

#[test]
fn interval_probability_matches_master_measure() {
    // Ensemble-averaged interval probability against μ_t of the convolved
    // master density, within 0.02.
    let m: Model<f64> = Model::natural();
    let spec = GridSpec::new(256, 40.0).unwrap();
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
    let stats = run_ensemble(&scenario, &EnsembleSpec::new(500, 91).unwrap()).unwrap();
    let xs = spec.xs();
    let mean_density = master::DensityProfile {
        xs: xs.clone(),
        values: (0..spec.n).map(|i| stats.cell(0, i).mean()).collect(),
        t: horizon,
    };
    let p_s = master::pure_schrodinger_density(&m, a0, 0.0, 0.0, horizon, &xs).unwrap();
    let p_master = master::density_convolve(&m, &p_s, horizon).unwrap().profile;
    for (lo, hi) in [(-2.0, 2.0), (-0.5, 3.0), (-8.0, -1.0)] {
        let ens = master::measure_mu(&mean_density, lo, hi).unwrap();
        let ora = master::measure_mu(&p_master, lo, hi).unwrap();
        assert!(
            (ens - ora).abs() < 0.02,
            "[{lo}, {hi}]: ensemble {ens} vs master {ora}"
        );
    }
}
