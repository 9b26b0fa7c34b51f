//! Shared numerical kernels: the RK4 step, finite difference stencils, and
//! cubic Hermite interpolation.
//!
//! Everything here is deterministic and allocation-light; the integrators in
//! `flow` and `transport` build their loops on these pieces.

use nalgebra::{DMatrix, DVector};

/// One classical Runge-Kutta step y(t) -> y(t+h).
pub fn rk4_step<F>(f: &F, t: f64, y: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y + &k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(y + &k2 * (0.5 * h)));
    let k4 = f(t + h, &(y + &k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Second-order central first derivative of f at 0.
pub fn fd1<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

/// Second-order central second derivative of f at 0.
pub fn fd2<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h)
}

/// Fourth-order central first derivative of f at 0 (5-point stencil).
pub fn fd1_4<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
}

/// Fourth-order central second derivative of f at 0 (5-point stencil).
pub fn fd2_4<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h))
        / (12.0 * h * h)
}

/// Cubic Hermite value on [t0, t1] from endpoint values and slopes.
pub fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let w = t1 - t0;
    let s = (t - t0) / w;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * w * d0 + h01 * y1 + h11 * w * d1
}

/// Elementwise cubic Hermite for matrix-valued samples.
pub fn hermite_mat(
    t0: f64,
    t1: f64,
    y0: &DMatrix<f64>,
    y1: &DMatrix<f64>,
    d0: &DMatrix<f64>,
    d1: &DMatrix<f64>,
    t: f64,
) -> DMatrix<f64> {
    let w = t1 - t0;
    let s = (t - t0) / w;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = (s3 - 2.0 * s2 + s) * w;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = (s3 - s2) * w;
    y0 * h00 + d0 * h10 + y1 * h01 + d1 * h11
}

/// (A + A^T)/2 together with the size of the part it discards.
pub fn symmetrize(a: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let sym = (a + a.transpose()) * 0.5;
    let skew = (a - a.transpose()) * 0.5;
    (sym, skew.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rk4_exponential_fourth_order() {
        // y' = y, y(0) = 1; one unit of time at two resolutions.
        let f = |_t: f64, y: &DVector<f64>| y.clone();
        let run = |steps: usize| {
            let mut y = DVector::from_vec(vec![1.0]);
            let h = 1.0 / steps as f64;
            for k in 0..steps {
                y = rk4_step(&f, k as f64 * h, &y, h);
            }
            (y[0] - std::f64::consts::E).abs()
        };
        let e16 = run(16);
        let e32 = run(32);
        let ratio = e16 / e32;
        assert!((12.0..22.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rk4_harmonic_oscillator() {
        // x'' = -x as a first-order system; period 2*pi.
        let f = |_t: f64, y: &DVector<f64>| DVector::from_vec(vec![y[1], -y[0]]);
        let mut y = DVector::from_vec(vec![1.0, 0.0]);
        let steps = 512;
        let h = std::f64::consts::TAU / steps as f64;
        for k in 0..steps {
            y = rk4_step(&f, k as f64 * h, &y, h);
        }
        assert_relative_eq!(y[0], 1.0, epsilon = 1e-8);
        assert_relative_eq!(y[1], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn stencil_orders() {
        let x = 0.4;
        let f = |s: f64| (2.0 * (x + s)).sin();
        let d1 = 2.0 * (2.0 * x).cos();
        let d2 = -4.0 * (2.0 * x).sin();
        assert_relative_eq!(fd1(f, 1e-5), d1, epsilon = 1e-9);
        assert_relative_eq!(fd2(f, 1e-4), d2, epsilon = 1e-6);
        assert_relative_eq!(fd1_4(f, 1e-2), d1, epsilon = 1e-8);
        assert_relative_eq!(fd2_4(f, 1e-2), d2, epsilon = 1e-7);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let y = |t: f64| 1.0 + t + t * t - 0.5 * t * t * t;
        let d = |t: f64| 1.0 + 2.0 * t - 1.5 * t * t;
        let (t0, t1) = (0.3, 0.9);
        for k in 0..=10 {
            let t = t0 + (t1 - t0) * k as f64 / 10.0;
            let v = hermite(t0, t1, y(t0), y(t1), d(t0), d(t1), t);
            assert_relative_eq!(v, y(t), epsilon = 1e-13);
        }
    }

    #[test]
    fn symmetrize_reports_skew_norm() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let (s, skew) = symmetrize(&a);
        assert_relative_eq!(s[(0, 1)], 1.0);
        assert_relative_eq!(s[(1, 0)], 1.0);
        assert_relative_eq!(skew, std::f64::consts::SQRT_2, epsilon = 1e-14);
    }
}
