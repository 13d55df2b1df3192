//! Small fixed-step RK4 integrator for the deterministic subsystems
//! (covariance ODEs, peak-separation system).

use crate::scalar::Real;

/// One classical RK4 step of y' = f(t, y).
pub fn rk4_step<R: Real, const N: usize>(
    f: &impl Fn(R, &[R; N]) -> [R; N],
    t: R,
    y: &[R; N],
    dt: R,
) -> [R; N] {
    let half = dt / R::of(2.0);
    let k1 = f(t, y);
    let k2 = f(t + half, &add(y, &k1, half));
    let k3 = f(t + half, &add(y, &k2, half));
    let k4 = f(t + dt, &add(y, &k3, dt));
    let sixth = dt / R::of(6.0);
    let mut out = *y;
    for i in 0..N {
        out[i] = y[i] + sixth * (k1[i] + R::of(2.0) * (k2[i] + k3[i]) + k4[i]);
    }
    out
}

/// Integrate from `t0` to each point of the (strictly increasing) grid `ts`,
/// taking internal steps no larger than `dt_max`. Returns the state at every
/// grid point, including the initial one when `ts[0] == t0`.
pub fn rk4_sample<R: Real, const N: usize>(
    f: impl Fn(R, &[R; N]) -> [R; N],
    y0: [R; N],
    t0: R,
    ts: &[R],
    dt_max: R,
) -> Vec<[R; N]> {
    let mut out = Vec::with_capacity(ts.len());
    let mut t = t0;
    let mut y = y0;
    for &target in ts {
        if target > t {
            let span = target - t;
            let n = (span / dt_max).ceil().to_f64_lossy().max(1.0) as usize;
            let h = span / R::from_usize(n).unwrap();
            for _ in 0..n {
                y = rk4_step(&f, t, &y, h);
                t = t + h;
            }
            t = target;
        }
        out.push(y);
    }
    out
}

fn add<R: Real, const N: usize>(y: &[R; N], k: &[R; N], h: R) -> [R; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] = y[i] + h * k[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_fourth_order() {
        // y' = -y, y(0) = 1, over [0, 1].
        let ys = rk4_sample(|_t, y: &[f64; 1]| [-y[0]], [1.0], 0.0, &[1.0], 1e-2);
        assert!((ys[0][0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let ys = rk4_sample(
            |_t, y: &[f64; 2]| [y[1], -y[0]],
            [1.0, 0.0],
            0.0,
            &[2.0 * std::f64::consts::PI],
            1e-3,
        );
        assert!((ys[0][0] - 1.0).abs() < 1e-10);
        assert!(ys[0][1].abs() < 1e-10);
    }
}
