//! Curvature tensors of the metric models.
//!
//! Conventions: R^l_{ijk} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik}
//! + Gamma^m_{jk} Gamma^l_{im} - Gamma^m_{ik} Gamma^l_{jm}, Ricci by tracing
//! the first upper against the first lower slot, Rc_{jk} = R^i_{ijk}. With
//! these signs the round sphere has positive Ricci curvature.
//!
//! Constant-curvature kinds (flat, round sphere, scaled family) use the
//! closed form R^l_{ijk} = kappa (g_{jk} d^l_i - g_{ik} d^l_j). The conformal
//! torus is assembled from fourth-order central differences of the metric;
//! its scalar curvature also has the two-dimensional identity
//! R = -2 e^{-2 phi} (phi_11 + phi_22), which supplies gradient and Laplacian.

use crate::error::Result;
use crate::geometry::fd;
use crate::geometry::metric::{MetricKind, MetricModel};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub dim: usize,
    rm: Vec<f64>,
    pub rc: DMatrix<f64>,
    pub scalar: f64,
    pub grad_r: DVector<f64>,
    pub lap_r: f64,
    pub norm_rc2: f64,
}

impl CurvaturePack {
    /// Component R^l_{ijk}.
    pub fn rm(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim;
        self.rm[((l * n + i) * n + j) * n + k]
    }

    /// Sectional-style quadratic form g(Rm(v, w) w, v) contracted in coordinates.
    pub fn rm_apply(&self, g: &DMatrix<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let n = self.dim;
        let mut out = 0.0;
        for l in 0..n {
            let mut comp = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        comp += v[i] * w[j] * w[k] * self.rm(l, i, j, k);
                    }
                }
            }
            for r in 0..n {
                out += g[(l, r)] * comp * v[r];
            }
        }
        out
    }
}

/// Builds the pack from metric partials; used by the constant-curvature
/// closed form fallback paths, the conformal production path (finite
/// differenced partials) and the analytic cross-check in tests.
pub fn assemble_pack(
    g: &DMatrix<f64>,
    dg: &[DMatrix<f64>],
    ddg: &[Vec<DMatrix<f64>>],
) -> CurvaturePack {
    let n = g.nrows();
    let ginv = g.clone().try_inverse().expect("metric invertible");
    let gamma = crate::geometry::metric::christoffel_from_partials(&ginv, dg);
    let dgamma = crate::geometry::metric::dchristoffel_from_partials(&ginv, dg, ddg);

    let mut rm = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut val = dgamma[i][l][(j, k)] - dgamma[j][l][(i, k)];
                    for m in 0..n {
                        val += gamma[m][(j, k)] * gamma[l][(i, m)]
                            - gamma[m][(i, k)] * gamma[l][(j, m)];
                    }
                    rm[((l * n + i) * n + j) * n + k] = val;
                }
            }
        }
    }

    let mut rc = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let mut val = 0.0;
            for i in 0..n {
                val += rm[((i * n + i) * n + j) * n + k];
            }
            rc[(j, k)] = val;
        }
    }
    let scalar = (&ginv * &rc).trace();
    let tmp = &ginv * &rc;
    let norm_rc2 = (&tmp * &tmp).trace();

    CurvaturePack {
        dim: n,
        rm,
        rc,
        scalar,
        grad_r: DVector::zeros(n),
        lap_r: 0.0,
        norm_rc2,
    }
}

fn constant_curvature_pack(g: &DMatrix<f64>, kappa: f64) -> CurvaturePack {
    let n = g.nrows();
    let mut rm = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut val = 0.0;
                    if l == i {
                        val += kappa * g[(j, k)];
                    }
                    if l == j {
                        val -= kappa * g[(i, k)];
                    }
                    rm[((l * n + i) * n + j) * n + k] = val;
                }
            }
        }
    }
    let nf = n as f64;
    CurvaturePack {
        dim: n,
        rm,
        rc: g * (kappa * (nf - 1.0)),
        scalar: nf * (nf - 1.0) * kappa,
        grad_r: DVector::zeros(n),
        lap_r: 0.0,
        norm_rc2: nf * (nf - 1.0) * (nf - 1.0) * kappa * kappa,
    }
}

/// Curvature of the model at (t, x). Constant-curvature kinds are exact;
/// the conformal torus differentiates the metric with fourth-order stencils.
pub fn curvature_pack(model: &MetricModel, t: f64, x: &DVector<f64>) -> Result<CurvaturePack> {
    match &model.kind {
        MetricKind::Flat | MetricKind::RoundSphere { .. } | MetricKind::ScaledFamily { .. } => {
            let kappa = model.sectional_curvature(t).unwrap();
            Ok(constant_curvature_pack(&model.g(t, x), kappa))
        }
        MetricKind::ConformalTorus { phi } => {
            let h = 1e-2;
            let dg = fd::fd_dg(model, t, x, h)?;
            let ddg = fd::fd_ddg(model, t, x, h)?;
            let mut pack = assemble_pack(&model.g(t, x), &dg, &ddg);

            let scalar_at = |y: &DVector<f64>| {
                let lap = phi.hessian(t, y).trace();
                -2.0 * (-2.0 * phi.value(t, y)).exp() * lap
            };
            // d_k R from the identity, using third derivatives of phi.
            let e2p = (-2.0 * phi.value(t, x)).exp();
            let grad = phi.gradient(t, x);
            let lap_phi = phi.hessian(t, x).trace();
            let mut grad_r = DVector::zeros(2);
            for k in 0..2 {
                let dlap = phi.d3(t, x, 0, 0, k) + phi.d3(t, x, 1, 1, k);
                grad_r[k] = -2.0 * e2p * (dlap - 2.0 * grad[k] * lap_phi);
            }
            pack.grad_r = grad_r;
            // Laplace-Beltrami of R in a 2d conformal chart is e^{-2 phi}
            // times the flat Laplacian; the flat second derivatives of R are
            // finite differenced from the identity above.
            let mut flat_lap = 0.0;
            for k in 0..2 {
                let f = |s: f64| {
                    let mut xs = x.clone();
                    xs[k] += s;
                    scalar_at(&xs)
                };
                flat_lap += crate::numeric::fd2_4(f, h);
            }
            pack.lap_r = e2p * flat_lap;
            Ok(pack)
        }
    }
}

/// Residual of gdot = c1(t) Rc + c2(t) g for scaled families, zero for
/// static metrics by convention.
pub fn evolution_residual(model: &MetricModel, t: f64, x: &DVector<f64>) -> Result<f64> {
    let Some(scale) = model.scale() else { return Ok(0.0) };
    let pack = curvature_pack(model, t, x)?;
    let res = model.gdot(t, x)
        - pack.rc.clone() * scale.c1.value(t)
        - model.g(t, x) * scale.c2.value(t);
    Ok(res.norm())
}

/// Residual of the contracted second Bianchi identity div gdot = (c1/2) dR
/// for scaled families.
pub fn bianchi_residual(model: &MetricModel, t: f64, x: &DVector<f64>) -> Result<f64> {
    let Some(scale) = model.scale() else { return Ok(0.0) };
    let q = model.time_quantities(t, x);
    let pack = curvature_pack(model, t, x)?;
    Ok((q.div_gdot - pack.grad_r * (0.5 * scale.c1.value(t))).norm())
}

/// Max residual of dR/dt = -(c1/2) lap R - c1 |Rc|^2 - c2 R over the window,
/// with the time derivative taken by central differences of the integrated
/// scale solution.
pub fn scalar_evolution_residual(
    model: &MetricModel,
    x: &DVector<f64>,
    samples: usize,
) -> Result<f64> {
    let Some(scale) = model.scale() else { return Ok(0.0) };
    let (lo, hi) = scale.window();
    let h = ((hi - lo) / 256.0).min(1e-3);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let t = lo + (hi - lo) * (i as f64 + 0.5) / samples as f64;
        let t = t.clamp(lo + 2.0 * h, hi - 2.0 * h);
        let r_at = |s: f64| curvature_pack(model, t + s, x).map(|p| p.scalar);
        let rdot = (8.0 * (r_at(h)? - r_at(-h)?) - (r_at(2.0 * h)? - r_at(-2.0 * h)?)) / (12.0 * h);
        let pack = curvature_pack(model, t, x)?;
        let rhs = -(scale.c1.value(t) / 2.0) * pack.lap_r
            - scale.c1.value(t) * pack.norm_rc2
            - scale.c2.value(t) * pack.scalar;
        worst = worst.max((rdot - rhs).abs());
    }
    Ok(worst)
}
