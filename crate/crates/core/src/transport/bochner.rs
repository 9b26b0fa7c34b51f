//! Bochner-type identity for kinetic Hamiltonians:
//!
//!   lap_g H(x, df) - <grad(lap_g f), H_p> = |hess f|^2 + tr R
//!
//! The left side is evaluated by finite differences of two analytic scalar
//! maps (the energy y -> H(y, df_y) and the Laplacian y -> lap_g f(y)), the
//! right side from the frame Hessian and the analytic curvature trace, so
//! the two sides share no code path.

use crate::curvature::{curvature_trace_analytic, hessian_initial, laplacian};
use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::geometry::fd::ensure_room;
use crate::hamiltonian::{HamiltonianKind, HamiltonianModel, PhasePoint};
use nalgebra::DVector;

const FD_STEP: f64 = 1e-3;

/// Evaluates both sides of the identity at x. Returns (lhs, rhs).
pub fn bochner_check(
    model: &HamiltonianModel,
    f: &ScalarField,
    x: &DVector<f64>,
) -> Result<(f64, f64)> {
    if !matches!(model.kind, HamiltonianKind::Kinetic) {
        return Err(CoreError::UnsupportedKind {
            op: "Bochner identity check (kinetic Hamiltonians only)".into(),
        });
    }
    let n = model.dim();
    let h = FD_STEP;
    ensure_room(&model.metric, x, 2.0 * h)?;

    let energy = |y: &DVector<f64>| {
        model.evaluate(0.0, &PhasePoint::new(y.clone(), f.gradient(0.0, y)))
    };
    let lap_f = |y: &DVector<f64>| laplacian(&model.metric, f, 0.0, y);

    let at = |y: &DVector<f64>, i: usize, d: f64| {
        let mut s = y.clone();
        s[i] += d;
        s
    };

    // Laplace-Beltrami of the energy by central differences, with the
    // analytic Christoffel correction.
    let ginv = model.metric.g_inv(0.0, x);
    let gamma = model.metric.christoffel(0.0, x);
    let e0 = energy(x);
    let mut grad_e = DVector::zeros(n);
    let mut lap_e = 0.0;
    for i in 0..n {
        let ep = energy(&at(x, i, h));
        let em = energy(&at(x, i, -h));
        grad_e[i] = (ep - em) / (2.0 * h);
        lap_e += ginv[(i, i)] * (ep - 2.0 * e0 + em) / (h * h);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let pp = energy(&at(&at(x, i, h), j, h));
                let pm = energy(&at(&at(x, i, h), j, -h));
                let mp = energy(&at(&at(x, i, -h), j, h));
                let mm = energy(&at(&at(x, i, -h), j, -h));
                lap_e += ginv[(i, j)] * (pp - pm - mp + mm) / (4.0 * h * h);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                lap_e -= ginv[(i, j)] * gamma[k][(i, j)] * grad_e[k];
            }
        }
    }

    let mut grad_lap = DVector::zeros(n);
    for i in 0..n {
        grad_lap[i] = (lap_f(&at(x, i, h)) - lap_f(&at(x, i, -h))) / (2.0 * h);
    }
    let hp = model.velocity(0.0, x, &f.gradient(0.0, x));
    let lhs = lap_e - grad_lap.dot(&hp);

    let s0 = hessian_initial(model, f, 0.0, x)?;
    let tr_r = curvature_trace_analytic(
        model,
        0.0,
        &PhasePoint::new(x.clone(), f.gradient(0.0, x)),
    )?;
    let rhs = s0.norm_squared() + tr_r;
    Ok((lhs, rhs))
}
