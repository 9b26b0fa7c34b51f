//! Metric models on the working charts.
//!
//! Four kinds are supported: the flat metric on a torus or box chart, the
//! round sphere of radius r in spherical coordinates (theta, phi) with a
//! safety margin away from the poles, a conformally flat torus e^{2 phi} I,
//! and a time-scaled family s(t) g0 over a constant-curvature base. All
//! first and second space derivatives of the metric are analytic, as are the
//! time derivatives for the scaled family; finite differencing of metrics is
//! confined to the independent oracle in `geometry::fd`.

use crate::chart::{Axis, Chart};
use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::geometry::scale::ScaleSolution;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

pub const SPHERE_POLE_MARGIN: f64 = 0.15;

#[derive(Debug, Clone)]
pub enum MetricKind {
    Flat,
    RoundSphere { radius: f64 },
    ConformalTorus { phi: ScalarField },
    ScaledFamily { base: Box<MetricModel>, scale: ScaleSolution },
}

#[derive(Debug, Clone)]
pub struct MetricModel {
    pub chart: Chart,
    pub kind: MetricKind,
}

/// First and second time derivatives of the metric together with the traced
/// quantities that enter curvature traces: tr gdot, its gradient, the
/// divergence of gdot, tr gddot and |gdot|^2 (all with indices raised by g).
#[derive(Debug, Clone)]
pub struct MetricTimeQuantities {
    pub gdot: DMatrix<f64>,
    pub gddot: DMatrix<f64>,
    pub tr_gdot: f64,
    pub grad_tr_gdot: DVector<f64>,
    pub div_gdot: DVector<f64>,
    pub tr_gddot: f64,
    pub norm_gdot2: f64,
}

impl MetricModel {
    pub fn flat_torus(n: usize) -> Self {
        MetricModel { chart: Chart::torus("torus", n, 2.0 * PI), kind: MetricKind::Flat }
    }

    pub fn flat_box(ranges: &[(f64, f64)]) -> Self {
        MetricModel { chart: Chart::boxed("box", ranges), kind: MetricKind::Flat }
    }

    pub fn round_sphere(radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(CoreError::InvalidModel(format!("sphere radius {radius} must be positive")));
        }
        let chart = Chart::new(
            "sphere",
            vec![
                Axis::Bounded { lo: SPHERE_POLE_MARGIN, hi: PI - SPHERE_POLE_MARGIN },
                Axis::Periodic { period: 2.0 * PI },
            ],
        );
        Ok(MetricModel { chart, kind: MetricKind::RoundSphere { radius } })
    }

    pub fn conformal_torus(phi: ScalarField) -> Result<Self> {
        if phi.dim() != 2 {
            return Err(CoreError::InvalidModel(
                "conformal torus requires a two-dimensional conformal factor".into(),
            ));
        }
        if phi.time_dependent() {
            return Err(CoreError::InvalidModel(
                "conformal factor must not depend on time".into(),
            ));
        }
        Ok(MetricModel {
            chart: Chart::torus("conformal torus", 2, 2.0 * PI),
            kind: MetricKind::ConformalTorus { phi },
        })
    }

    /// Builds g(t) = s(t) g_base. The base must have constant sectional
    /// curvature (flat or round sphere) so the scale ODE closes.
    pub fn scaled_family(base: MetricModel, scale: ScaleSolution) -> Result<Self> {
        match base.kind {
            MetricKind::Flat | MetricKind::RoundSphere { .. } => {}
            _ => {
                return Err(CoreError::InvalidModel(
                    "scaled family requires a flat or round-sphere base".into(),
                ))
            }
        }
        if scale.dim != base.dim() {
            return Err(CoreError::InvalidModel(format!(
                "scale solution dimension {} does not match base dimension {}",
                scale.dim,
                base.dim()
            )));
        }
        let expect = base.sectional_curvature(0.0).unwrap_or(0.0);
        if (scale.kappa0 - expect).abs() > 1e-12 {
            return Err(CoreError::InvalidModel(format!(
                "scale solution was built for curvature {} but the base has {expect}",
                scale.kappa0
            )));
        }
        let chart = base.chart.clone();
        Ok(MetricModel { chart, kind: MetricKind::ScaledFamily { base: Box::new(base), scale } })
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn time_dependent(&self) -> bool {
        matches!(self.kind, MetricKind::ScaledFamily { .. })
    }

    /// Sectional curvature when it is a spatial constant, else None.
    pub fn sectional_curvature(&self, t: f64) -> Option<f64> {
        match &self.kind {
            MetricKind::Flat => Some(0.0),
            MetricKind::RoundSphere { radius } => Some(1.0 / (radius * radius)),
            MetricKind::ConformalTorus { .. } => None,
            MetricKind::ScaledFamily { base, scale } => {
                Some(base.sectional_curvature(t).unwrap() / scale.s(t))
            }
        }
    }

    pub fn scale(&self) -> Option<&ScaleSolution> {
        match &self.kind {
            MetricKind::ScaledFamily { scale, .. } => Some(scale),
            _ => None,
        }
    }

    pub fn g(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        match &self.kind {
            MetricKind::Flat => DMatrix::identity(n, n),
            MetricKind::RoundSphere { radius } => {
                let r2 = radius * radius;
                DMatrix::from_diagonal(&DVector::from_vec(vec![r2, r2 * x[0].sin().powi(2)]))
            }
            MetricKind::ConformalTorus { phi } => {
                DMatrix::identity(n, n) * (2.0 * phi.value(t, x)).exp()
            }
            MetricKind::ScaledFamily { base, scale } => base.g(t, x) * scale.s(t),
        }
    }

    pub fn g_inv(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        self.g(t, x).try_inverse().expect("metric is invertible on the chart")
    }

    pub fn sqrt_det_g(&self, t: f64, x: &DVector<f64>) -> f64 {
        self.g(t, x).determinant().sqrt()
    }

    /// Spatial partials dg[k] = d g / d x_k.
    pub fn dg(&self, t: f64, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        match &self.kind {
            MetricKind::Flat => vec![DMatrix::zeros(n, n); n],
            MetricKind::RoundSphere { radius } => {
                let r2 = radius * radius;
                let mut d_theta = DMatrix::zeros(2, 2);
                d_theta[(1, 1)] = r2 * (2.0 * x[0]).sin();
                vec![d_theta, DMatrix::zeros(2, 2)]
            }
            MetricKind::ConformalTorus { phi } => {
                let e2p = (2.0 * phi.value(t, x)).exp();
                let grad = phi.gradient(t, x);
                (0..n).map(|k| DMatrix::identity(n, n) * (2.0 * grad[k] * e2p)).collect()
            }
            MetricKind::ScaledFamily { base, scale } => {
                let s = scale.s(t);
                base.dg(t, x).into_iter().map(|m| m * s).collect()
            }
        }
    }

    /// Second spatial partials ddg[k][l] = d^2 g / d x_k d x_l.
    pub fn ddg(&self, t: f64, x: &DVector<f64>) -> Vec<Vec<DMatrix<f64>>> {
        let n = self.dim();
        match &self.kind {
            MetricKind::Flat => vec![vec![DMatrix::zeros(n, n); n]; n],
            MetricKind::RoundSphere { radius } => {
                let r2 = radius * radius;
                let mut out = vec![vec![DMatrix::zeros(2, 2); 2]; 2];
                out[0][0][(1, 1)] = 2.0 * r2 * (2.0 * x[0]).cos();
                out
            }
            MetricKind::ConformalTorus { phi } => {
                let e2p = (2.0 * phi.value(t, x)).exp();
                let grad = phi.gradient(t, x);
                let hess = phi.hessian(t, x);
                (0..n)
                    .map(|k| {
                        (0..n)
                            .map(|l| {
                                let c = (4.0 * grad[k] * grad[l] + 2.0 * hess[(k, l)]) * e2p;
                                DMatrix::identity(n, n) * c
                            })
                            .collect()
                    })
                    .collect()
            }
            MetricKind::ScaledFamily { base, scale } => {
                let s = scale.s(t);
                base.ddg(t, x)
                    .into_iter()
                    .map(|row| row.into_iter().map(|m| m * s).collect())
                    .collect()
            }
        }
    }

    pub fn gdot(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        match &self.kind {
            MetricKind::ScaledFamily { base, scale } => base.g(t, x) * scale.sdot(t),
            _ => DMatrix::zeros(n, n),
        }
    }

    pub fn gddot(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        match &self.kind {
            MetricKind::ScaledFamily { base, scale } => base.g(t, x) * scale.sddot(t),
            _ => DMatrix::zeros(n, n),
        }
    }

    /// Spatial partials of gdot.
    pub fn dgdot(&self, t: f64, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        match &self.kind {
            MetricKind::ScaledFamily { base, scale } => {
                let sdot = scale.sdot(t);
                base.dg(t, x).into_iter().map(|m| m * sdot).collect()
            }
            _ => vec![DMatrix::zeros(n, n); n],
        }
    }

    /// Christoffel symbols, gamma[k] holding Gamma^k_{ij} as a matrix in (i, j).
    pub fn christoffel(&self, t: f64, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        christoffel_from_partials(&self.g_inv(t, x), &self.dg(t, x))
    }

    /// Partials dgamma[m][k] = d Gamma^k_{ij} / d x_m.
    pub fn dchristoffel(&self, t: f64, x: &DVector<f64>) -> Vec<Vec<DMatrix<f64>>> {
        let ginv = self.g_inv(t, x);
        dchristoffel_from_partials(&ginv, &self.dg(t, x), &self.ddg(t, x))
    }

    /// Lower Cholesky factor of the metric, g = L L^T.
    pub fn chol_l(&self, t: f64, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        chol_lower(&self.g(t, x)).ok_or_else(|| CoreError::NotSpd {
            context: format!("metric at t = {t}, x = {:?}", x.as_slice()),
        })
    }

    /// Traced time-derivative quantities assembled from the generic formulas;
    /// for static metrics everything vanishes.
    pub fn time_quantities(&self, t: f64, x: &DVector<f64>) -> MetricTimeQuantities {
        let n = self.dim();
        let gdot = self.gdot(t, x);
        let gddot = self.gddot(t, x);
        if !self.time_dependent() {
            return MetricTimeQuantities {
                gdot,
                gddot,
                tr_gdot: 0.0,
                grad_tr_gdot: DVector::zeros(n),
                div_gdot: DVector::zeros(n),
                tr_gddot: 0.0,
                norm_gdot2: 0.0,
            };
        }
        let ginv = self.g_inv(t, x);
        let dg = self.dg(t, x);
        let dgdot = self.dgdot(t, x);
        let gamma = christoffel_from_partials(&ginv, &dg);

        let tr_gdot = (&ginv * &gdot).trace();
        let tr_gddot = (&ginv * &gddot).trace();
        let tmp = &ginv * &gdot;
        let norm_gdot2 = (&tmp * &tmp).trace();

        let mut grad_tr = DVector::zeros(n);
        for j in 0..n {
            let dginv = -(&ginv * &dg[j] * &ginv);
            grad_tr[j] = (&dginv * &gdot).trace() + (&ginv * &dgdot[j]).trace();
        }

        // (div gdot)_j = g^{ik} (d_i gdot_{kj} - Gamma^m_{ik} gdot_{mj} - Gamma^m_{ij} gdot_{km})
        let mut div = DVector::zeros(n);
        for j in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                for k in 0..n {
                    let mut cov = dgdot[i][(k, j)];
                    for m in 0..n {
                        cov -= gamma[m][(i, k)] * gdot[(m, j)] + gamma[m][(i, j)] * gdot[(k, m)];
                    }
                    acc += ginv[(i, k)] * cov;
                }
            }
            div[j] = acc;
        }

        MetricTimeQuantities {
            gdot,
            gddot,
            tr_gdot,
            grad_tr_gdot: grad_tr,
            div_gdot: div,
            tr_gddot,
            norm_gdot2,
        }
    }
}

pub fn christoffel_from_partials(
    ginv: &DMatrix<f64>,
    dg: &[DMatrix<f64>],
) -> Vec<DMatrix<f64>> {
    let n = ginv.nrows();
    let mut gamma = vec![DMatrix::zeros(n, n); n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gamma[k][(i, j)] = 0.5 * acc;
            }
        }
    }
    gamma
}

pub fn dchristoffel_from_partials(
    ginv: &DMatrix<f64>,
    dg: &[DMatrix<f64>],
    ddg: &[Vec<DMatrix<f64>>],
) -> Vec<Vec<DMatrix<f64>>> {
    let n = ginv.nrows();
    let mut out = vec![vec![DMatrix::zeros(n, n); n]; n];
    for m in 0..n {
        let dginv = -(ginv * &dg[m] * ginv);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        let sym = dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)];
                        let dsym = ddg[m][i][(j, l)] + ddg[m][j][(i, l)] - ddg[m][l][(i, j)];
                        acc += dginv[(k, l)] * sym + ginv[(k, l)] * dsym;
                    }
                    out[m][k][(i, j)] = 0.5 * acc;
                }
            }
        }
    }
    out
}

/// Plain Cholesky, returning None when the matrix is not positive definite.
pub fn chol_lower(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    nalgebra::Cholesky::new(g.clone()).map(|c| c.l())
}

/// Directional derivative of the Cholesky factor: for g = L L^T and a
/// symmetric perturbation dg, dL = L Phi(L^{-1} dg L^{-T}) where Phi keeps
/// the strict lower triangle and halves the diagonal.
pub fn chol_directional(l: &DMatrix<f64>, dg: &DMatrix<f64>) -> DMatrix<f64> {
    let linv = l.clone().try_inverse().expect("Cholesky factor is invertible");
    let a = &linv * dg * linv.transpose();
    l * phi_half(&a)
}

/// Second time derivative of the Cholesky factor given gdot and gddot.
pub fn chol_second_t(
    l: &DMatrix<f64>,
    ldot: &DMatrix<f64>,
    gdot: &DMatrix<f64>,
    gddot: &DMatrix<f64>,
) -> DMatrix<f64> {
    let linv = l.clone().try_inverse().expect("Cholesky factor is invertible");
    let linv_t = linv.transpose();
    let a = &linv * gdot * &linv_t;
    let da = -(&linv * ldot * &linv * gdot * &linv_t) + &linv * gddot * &linv_t
        - &linv * gdot * &linv_t * ldot.transpose() * &linv_t;
    ldot * phi_half(&a) + l * phi_half(&da)
}

fn phi_half(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = 0.5 * m[(i, i)];
        for j in 0..i {
            out[(i, j)] = m[(i, j)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TimeFn;
    use crate::numeric;
    use approx::assert_relative_eq;

    fn sphere_point() -> DVector<f64> {
        DVector::from_vec(vec![1.1, 0.4])
    }

    #[test]
    fn sphere_christoffel_closed_form() {
        let m = MetricModel::round_sphere(1.0).unwrap();
        let x = sphere_point();
        let gamma = m.christoffel(0.0, &x);
        let (s, c) = (x[0].sin(), x[0].cos());
        assert_relative_eq!(gamma[0][(1, 1)], -s * c, max_relative = 1e-12);
        assert_relative_eq!(gamma[1][(0, 1)], c / s, max_relative = 1e-12);
        assert_relative_eq!(gamma[1][(1, 0)], c / s, max_relative = 1e-12);
        assert!(gamma[0][(0, 0)].abs() < 1e-14);

        let dgamma = m.dchristoffel(0.0, &x);
        assert_relative_eq!(dgamma[0][0][(1, 1)], -(2.0 * x[0]).cos(), max_relative = 1e-12);
        assert_relative_eq!(dgamma[0][1][(0, 1)], -1.0 / (s * s), max_relative = 1e-12);
    }

    #[test]
    fn conformal_christoffel_closed_form() {
        let phi = ScalarField::parse("0.1*cos(x1) + 0.05*sin(x2)", 2).unwrap();
        let m = MetricModel::conformal_torus(phi.clone()).unwrap();
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let gamma = m.christoffel(0.0, &x);
        let grad = phi.gradient(0.0, &x);
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut expect = 0.0;
                    if k == i {
                        expect += grad[j];
                    }
                    if k == j {
                        expect += grad[i];
                    }
                    if i == j {
                        expect -= grad[k];
                    }
                    assert_relative_eq!(gamma[k][(i, j)], expect, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn metric_partials_match_finite_differences() {
        let phi = ScalarField::parse("0.1*cos(x1)*sin(x2)", 2).unwrap();
        let models = [
            MetricModel::round_sphere(1.3).unwrap(),
            MetricModel::conformal_torus(phi).unwrap(),
        ];
        for m in &models {
            let x = sphere_point();
            let dg = m.dg(0.0, &x);
            let ddg = m.ddg(0.0, &x);
            for k in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let f = |s: f64| {
                            let mut xs = x.clone();
                            xs[k] += s;
                            m.g(0.0, &xs)[(a, b)]
                        };
                        assert_relative_eq!(
                            dg[k][(a, b)],
                            numeric::fd1_4(f, 1e-2),
                            epsilon = 1e-8
                        );
                        for l in 0..2 {
                            let f2 = |s: f64| {
                                let mut xs = x.clone();
                                xs[l] += s;
                                m.dg(0.0, &xs)[k][(a, b)]
                            };
                            assert_relative_eq!(
                                ddg[l][k][(a, b)],
                                numeric::fd1_4(f2, 1e-2),
                                epsilon = 1e-7
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cholesky_derivatives_match_finite_differences() {
        let phi = ScalarField::parse("0.2*sin(x1 + 0.5*x2)", 2).unwrap();
        let m = MetricModel::conformal_torus(phi).unwrap();
        let x = DVector::from_vec(vec![0.4, 1.2]);
        let l = m.chol_l(0.0, &x).unwrap();
        let dg = m.dg(0.0, &x);
        for k in 0..2 {
            let dl = chol_directional(&l, &dg[k]);
            for a in 0..2 {
                for b in 0..2 {
                    let f = |s: f64| {
                        let mut xs = x.clone();
                        xs[k] += s;
                        m.chol_l(0.0, &xs).unwrap()[(a, b)]
                    };
                    assert_relative_eq!(dl[(a, b)], numeric::fd1_4(f, 1e-3), epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn scaled_family_time_quantities() {
        let base = MetricModel::round_sphere(1.0).unwrap();
        let scale = ScaleSolution::solve(
            TimeFn::constant(-2.0),
            TimeFn::constant(0.0),
            1.0,
            2,
            0.0,
            1.0,
            0.0,
            0.2,
            1024,
        )
        .unwrap();
        let m = MetricModel::scaled_family(base.clone(), scale).unwrap();
        let x = sphere_point();
        let t = 0.12;
        let s = 1.0 - 2.0 * t;

        assert_relative_eq!(m.g(t, &x)[(0, 0)], s, max_relative = 1e-10);
        let q = m.time_quantities(t, &x);
        assert_relative_eq!(q.tr_gdot, 2.0 * (-2.0) / s, max_relative = 1e-10);
        assert_relative_eq!(q.norm_gdot2, 2.0 * (4.0) / (s * s), max_relative = 1e-10);
        assert!(q.tr_gddot.abs() < 1e-8);
        assert!(q.div_gdot.norm() < 1e-10, "scaled family has divergence-free gdot");
        assert!(q.grad_tr_gdot.norm() < 1e-10);

        // Christoffel symbols are scale invariant.
        let g0 = base.christoffel(t, &x);
        let g1 = m.christoffel(t, &x);
        for k in 0..2 {
            assert!((&g0[k] - &g1[k]).norm() < 1e-12);
        }

        // Cholesky time derivatives against finite differences in t.
        let l = m.chol_l(t, &x).unwrap();
        let ldot = chol_directional(&l, &m.gdot(t, &x));
        let lddot = chol_second_t(&l, &ldot, &m.gdot(t, &x), &m.gddot(t, &x));
        for a in 0..2 {
            for b in 0..2 {
                let f = |s: f64| m.chol_l(t + s, &x).unwrap()[(a, b)];
                assert_relative_eq!(ldot[(a, b)], numeric::fd1_4(f, 1e-3), epsilon = 1e-8);
                assert_relative_eq!(lddot[(a, b)], numeric::fd2_4(f, 1e-3), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn scaled_family_rejects_mismatched_curvature() {
        let base = MetricModel::round_sphere(2.0).unwrap();
        let scale = ScaleSolution::solve(
            TimeFn::constant(-2.0),
            TimeFn::constant(0.0),
            1.0,
            2,
            0.0,
            1.0,
            0.0,
            0.2,
            512,
        )
        .unwrap();
        assert!(MetricModel::scaled_family(base, scale).is_err());
    }
}
