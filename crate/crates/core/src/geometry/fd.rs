//! Finite-difference oracle for metric derivatives and curvature.
//!
//! Everything here differentiates only metric evaluations g(t, x), never the
//! analytic partials, so it provides an independent check of the closed-form
//! paths in `geometry::metric` and `geometry::pack`. Stencils are
//! fourth-order central differences.

use crate::chart::Axis;
use crate::error::{CoreError, Result};
use crate::geometry::metric::{christoffel_from_partials, MetricModel};
use crate::geometry::pack::{assemble_pack, CurvaturePack};
use crate::numeric::{fd1_4, fd2_4};
use nalgebra::{DMatrix, DVector};

/// Distance from x to the nearest bounded chart wall, infinite on tori.
fn boundary_margin(model: &MetricModel, x: &DVector<f64>) -> f64 {
    let mut margin = f64::INFINITY;
    for (i, axis) in model.chart.axes.iter().enumerate() {
        if let Axis::Bounded { lo, hi } = axis {
            margin = margin.min((x[i] - lo).min(hi - x[i]));
        }
    }
    margin
}

pub(crate) fn ensure_room(model: &MetricModel, x: &DVector<f64>, span: f64) -> Result<()> {
    let margin = boundary_margin(model, x);
    if span >= margin {
        return Err(CoreError::StepTooLarge { step: span, margin });
    }
    Ok(())
}

pub fn fd_dg(model: &MetricModel, t: f64, x: &DVector<f64>, h: f64) -> Result<Vec<DMatrix<f64>>> {
    ensure_room(model, x, 2.0 * h)?;
    let n = model.dim();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut m = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let f = |s: f64| {
                    let mut xs = x.clone();
                    xs[k] += s;
                    model.g(t, &xs)[(a, b)]
                };
                m[(a, b)] = fd1_4(f, h);
            }
        }
        out.push(m);
    }
    Ok(out)
}

pub fn fd_ddg(
    model: &MetricModel,
    t: f64,
    x: &DVector<f64>,
    h: f64,
) -> Result<Vec<Vec<DMatrix<f64>>>> {
    ensure_room(model, x, 4.0 * h)?;
    let n = model.dim();
    let mut out = vec![vec![DMatrix::zeros(n, n); n]; n];
    for k in 0..n {
        for l in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let val = if k == l {
                        let f = |s: f64| {
                            let mut xs = x.clone();
                            xs[k] += s;
                            model.g(t, &xs)[(a, b)]
                        };
                        fd2_4(f, h)
                    } else {
                        let f = |s: f64| {
                            let mut xs = x.clone();
                            xs[l] += s;
                            let g = |r: f64| {
                                let mut xr = xs.clone();
                                xr[k] += r;
                                model.g(t, &xr)[(a, b)]
                            };
                            fd1_4(g, h)
                        };
                        fd1_4(f, h)
                    };
                    out[k][l][(a, b)] = val;
                }
            }
        }
    }
    Ok(out)
}

/// Full curvature pack from finite-differenced metric partials only.
pub fn curvature_pack_fd(
    model: &MetricModel,
    t: f64,
    x: &DVector<f64>,
    h: f64,
) -> Result<CurvaturePack> {
    ensure_room(model, x, 8.0 * h)?;
    let scalar_at = |y: &DVector<f64>| -> Result<f64> {
        Ok(assemble_pack(&model.g(t, y), &fd_dg(model, t, y, h)?, &fd_ddg(model, t, y, h)?).scalar)
    };

    let mut pack =
        assemble_pack(&model.g(t, x), &fd_dg(model, t, x, h)?, &fd_ddg(model, t, x, h)?);

    let n = model.dim();
    let mut dr = DVector::zeros(n);
    let mut ddr = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut vals = [0.0; 5];
        for (idx, off) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().enumerate() {
            let mut xs = x.clone();
            xs[k] += off * h;
            vals[idx] = scalar_at(&xs)?;
        }
        dr[k] = (8.0 * (vals[3] - vals[1]) - (vals[4] - vals[0])) / (12.0 * h);
        ddr[(k, k)] = (-vals[0] + 16.0 * vals[1] - 30.0 * vals[2] + 16.0 * vals[3] - vals[4])
            / (12.0 * h * h);
    }
    if n > 1 {
        for k in 0..n {
            for l in 0..k {
                let f = |s: f64| -> Result<f64> {
                    let mut xs = x.clone();
                    xs[l] += s;
                    let g = |r: f64| -> Result<f64> {
                        let mut xr = xs.clone();
                        xr[k] += r;
                        scalar_at(&xr)
                    };
                    Ok((8.0 * (g(h)? - g(-h)?) - (g(2.0 * h)? - g(-2.0 * h)?)) / (12.0 * h))
                };
                let v = (8.0 * (f(h)? - f(-h)?) - (f(2.0 * h)? - f(-2.0 * h)?)) / (12.0 * h);
                ddr[(k, l)] = v;
                ddr[(l, k)] = v;
            }
        }
    }

    let ginv = model.g_inv(t, x);
    let gamma = christoffel_from_partials(&ginv, &fd_dg(model, t, x, h)?);
    let mut lap = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut cov = ddr[(i, j)];
            for k in 0..n {
                cov -= gamma[k][(i, j)] * dr[k];
            }
            lap += ginv[(i, j)] * cov;
        }
    }
    pack.grad_r = dr;
    pack.lap_r = lap;
    Ok(pack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::geometry::pack::curvature_pack;
    use approx::assert_relative_eq;

    #[test]
    fn oracle_matches_closed_forms_on_sphere() {
        let m = MetricModel::round_sphere(1.25).unwrap();
        let x = DVector::from_vec(vec![1.0, 0.3]);
        let fd = curvature_pack_fd(&m, 0.0, &x, 1e-2).unwrap();
        let exact = curvature_pack(&m, 0.0, &x).unwrap();
        assert_relative_eq!(fd.scalar, exact.scalar, max_relative = 1e-6);
        assert!((fd.rc.clone() - exact.rc.clone()).norm() < 1e-6);
        assert!(fd.grad_r.norm() < 1e-5);
        assert!(fd.lap_r.abs() < 1e-3);
        for l in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        assert_relative_eq!(
                            fd.rm(l, i, j, k),
                            exact.rm(l, i, j, k),
                            epsilon = 1e-6
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_matches_conformal_identity() {
        let phi = ScalarField::parse("0.1*cos(x1) + 0.07*sin(2*x2)", 2).unwrap();
        let m = MetricModel::conformal_torus(phi.clone()).unwrap();
        let x = DVector::from_vec(vec![0.45, 1.1]);
        let fd = curvature_pack_fd(&m, 0.0, &x, 1e-2).unwrap();
        let lap_phi = phi.hessian(0.0, &x).trace();
        let expect = -2.0 * (-2.0 * phi.value(0.0, &x)).exp() * lap_phi;
        assert_relative_eq!(fd.scalar, expect, max_relative = 1e-6);

        let prod = curvature_pack(&m, 0.0, &x).unwrap();
        assert_relative_eq!(fd.lap_r, prod.lap_r, epsilon = 2e-4);
        assert!((fd.grad_r.clone() - prod.grad_r.clone()).norm() < 1e-6);
    }

    #[test]
    fn stencil_near_wall_is_rejected() {
        let m = MetricModel::round_sphere(1.0).unwrap();
        let x = DVector::from_vec(vec![0.16, 0.0]);
        let res = fd_ddg(&m, 0.0, &x, 1e-2);
        assert!(matches!(res, Err(CoreError::StepTooLarge { .. })));
    }
}
