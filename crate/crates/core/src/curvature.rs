//! Curvature of the Hamiltonian system via canonical frames.
//!
//! The vertical frame V_i has momentum components given by the rows of
//! C = L^T where g = L L^T, which makes C g^{-1} C^T = I. Transporting the
//! frame by the flow produces
//!
//!   edot_i  = [H, V_i] + Vdot_i
//!   eddot_i = [H, edot-field]_i + d_t(edot-field)_i
//!
//! where [H, .] is the Lie bracket with the Hamiltonian vector field and
//! Vdot differentiates the Cholesky factor in t. The structure matrix is
//! Omega_{ij} = omega(edot_i, edot_j) and the curvature matrix is extracted
//! from
//!
//!   M_i = -( eddot_i + (Omega edot)_i + (1/2)(Omegadot V)_i + (1/4)(Omega^2 V)_i ),
//!
//! which must be vertical with momentum rows M_p = [R] C. The first-level
//! brackets are fully analytic (the flow Jacobian and Cholesky derivatives
//! are closed form); only the outer directional derivative along the flow
//! and the explicit time derivative use central differences, with step 1e-4.

use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::geometry::measure::MeasureModel;
use crate::geometry::metric::{chol_directional, chol_second_t, MetricModel};
use crate::geometry::pack::{curvature_pack, CurvaturePack};
use crate::hamiltonian::{omega, HamiltonianModel, PhasePoint, TangentVector};
use crate::numeric::symmetrize;
use nalgebra::{DMatrix, DVector};

const OUTER_FD_STEP: f64 = 1e-4;
const SYMMETRY_TOL: f64 = 1e-4;

/// Vertical orthonormal frame data at a point of the cotangent bundle.
#[derive(Debug, Clone)]
pub struct CanonicalFrameData {
    /// Lower Cholesky factor of the metric.
    pub l: DMatrix<f64>,
    /// Momentum components of the frame, row i for V_i; equals l^T.
    pub c: DMatrix<f64>,
    /// Time derivative of c, nonzero only for time-dependent metrics.
    pub cdot: DMatrix<f64>,
    /// Second time derivative of c.
    pub cddot: DMatrix<f64>,
}

impl CanonicalFrameData {
    pub fn vertical(&self, i: usize) -> TangentVector {
        let n = self.c.nrows();
        TangentVector::new(DVector::zeros(n), self.c.row(i).transpose())
    }
}

pub fn vertical_frame(metric: &MetricModel, t: f64, x: &DVector<f64>) -> Result<CanonicalFrameData> {
    let l = metric.chol_l(t, x)?;
    let n = l.nrows();
    let (ldot, lddot) = if metric.time_dependent() {
        let gdot = metric.gdot(t, x);
        let ldot = chol_directional(&l, &gdot);
        let lddot = chol_second_t(&l, &ldot, &gdot, &metric.gddot(t, x));
        (ldot, lddot)
    } else {
        (DMatrix::zeros(n, n), DMatrix::zeros(n, n))
    };
    Ok(CanonicalFrameData {
        c: l.transpose(),
        cdot: ldot.transpose(),
        cddot: lddot.transpose(),
        l,
    })
}

/// Curvature matrix in the canonical frame together with the structure
/// matrix, its time derivative, and the extraction residuals.
#[derive(Debug, Clone)]
pub struct CurvatureMatrix {
    pub r: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub omega_dot: DMatrix<f64>,
    /// Frobenius asymmetry of the raw extracted matrix.
    pub sym_residual: f64,
    /// Largest base component of M_i, which should vanish.
    pub base_residual: f64,
    /// Deviation of omega(edot_i, V_j) from the identity pairing.
    pub pairing_residual: f64,
}

/// The transported-frame first derivative field at (t, z), all analytic.
pub(crate) fn edot_field(
    model: &HamiltonianModel,
    t: f64,
    z: &DVector<f64>,
) -> Result<Vec<TangentVector>> {
    let n = model.dim();
    let pt = PhasePoint::from_vec(z);
    let b = model.derivative_blocks(t, &pt);
    let frame = vertical_frame(&model.metric, t, &pt.x)?;
    let dg = model.metric.dg(t, &pt.x);
    let dc: Vec<DMatrix<f64>> =
        dg.iter().map(|d| chol_directional(&frame.l, d).transpose()).collect();

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let ci = frame.c.row(i).transpose();
        let dx = -(&b.hpp * &ci);
        let mut dp = b.hpx.transpose() * &ci + frame.cdot.row(i).transpose();
        for k in 0..n {
            dp += dc[k].row(i).transpose() * b.hp[k];
        }
        out.push(TangentVector::new(dx, dp));
    }
    Ok(out)
}

fn tangent_sub(a: &TangentVector, b: &TangentVector) -> TangentVector {
    TangentVector::new(&a.dx - &b.dx, &a.dp - &b.dp)
}

fn tangent_scale(a: &TangentVector, s: f64) -> TangentVector {
    TangentVector::new(&a.dx * s, &a.dp * s)
}

/// Full frame-based curvature computation at a phase point.
pub fn curvature_via_frames(
    model: &HamiltonianModel,
    t: f64,
    point: &PhasePoint,
) -> Result<CurvatureMatrix> {
    let n = model.dim();
    let z = point.to_vec();
    let frame = vertical_frame(&model.metric, t, &point.x)?;
    let jac = model.jacobian(t, &z);
    let hvec = model.vector_field(t, &z);

    let e1 = edot_field(model, t, &z)?;

    // Directional derivative of the edot field along the flow direction.
    let eps = OUTER_FD_STEP;
    let zp = &z + &hvec * eps;
    let zm = &z - &hvec * eps;
    let e1p = edot_field(model, t, &zp)?;
    let e1m = edot_field(model, t, &zm)?;

    // Explicit time derivative, skipped when the frame field is static in t.
    let td = model.metric.time_dependent()
        || model.drift_field().map_or(false, |w| w.time_dependent());
    let e1t: Option<(Vec<TangentVector>, Vec<TangentVector>)> = if td {
        Some((edot_field(model, t + eps, &z)?, edot_field(model, t - eps, &z)?))
    } else {
        None
    };

    let mut eddot = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = tangent_scale(&tangent_sub(&e1p[i], &e1m[i]), 0.5 / eps);
        let je = TangentVector::from_vec(&(&jac * e1[i].to_vec()));
        v = tangent_sub(&v, &je);
        if let Some((tp, tm)) = &e1t {
            let dt = tangent_scale(&tangent_sub(&tp[i], &tm[i]), 0.5 / eps);
            v = TangentVector::new(v.dx + dt.dx, v.dp + dt.dp);
        }
        eddot.push(v);
    }

    let mut pairing_residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let vj = frame.vertical(j);
            let target = if i == j { 1.0 } else { 0.0 };
            pairing_residual = pairing_residual.max((omega(&e1[i], &vj) - target).abs());
        }
    }

    let mut om = DMatrix::zeros(n, n);
    let mut om_dot = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            om[(i, j)] = omega(&e1[i], &e1[j]);
            om_dot[(i, j)] = omega(&eddot[i], &e1[j]) + omega(&e1[i], &eddot[j]);
        }
    }
    let om2 = &om * &om;

    let mut m_p = DMatrix::zeros(n, n);
    let mut base_residual: f64 = 0.0;
    for i in 0..n {
        let mut mx = -eddot[i].dx.clone();
        let mut mp = -eddot[i].dp.clone();
        for j in 0..n {
            mx -= &e1[j].dx * om[(i, j)];
            mp -= &e1[j].dp * om[(i, j)];
            let cj = frame.c.row(j).transpose();
            mp -= cj * (0.5 * om_dot[(i, j)] + 0.25 * om2[(i, j)]);
        }
        base_residual = base_residual.max(mx.norm());
        m_p.row_mut(i).copy_from(&mp.transpose());
    }

    let c_inv = frame.c.clone().try_inverse().expect("Cholesky transpose invertible");
    let raw = m_p * c_inv;
    let (r, sym_residual) = symmetrize(&raw);
    if sym_residual > SYMMETRY_TOL {
        return Err(CoreError::SymmetryBreach { residual: sym_residual });
    }

    Ok(CurvatureMatrix { r, omega: om, omega_dot: om_dot, sym_residual, base_residual, pairing_residual })
}

/// Frame curvature matrix from the curvature tensors, valid for static
/// metrics: [R]_{mk} = <Rm(b_m, P) P, b_k> + Hess U(b_m, b_k) with
/// b_m = L^{-T} e_m and P the velocity dual to p.
pub fn curvature_matrix_static(
    model: &HamiltonianModel,
    pack: &CurvaturePack,
    t: f64,
    point: &PhasePoint,
) -> Result<DMatrix<f64>> {
    if model.metric.time_dependent() {
        return Err(CoreError::UnsupportedKind {
            op: "closed-form curvature matrix for a time-dependent metric".into(),
        });
    }
    let n = model.dim();
    let x = &point.x;
    let g = model.metric.g(t, x);
    let l = model.metric.chol_l(t, x)?;
    let linv_t = l.transpose().try_inverse().expect("Cholesky invertible");
    let vel = model.velocity(t, x, &point.p);

    let mut out = DMatrix::zeros(n, n);
    for m in 0..n {
        let bm = linv_t.column(m).into_owned();
        // (Rm(b_m, P) P)^l
        let mut rmv = DVector::zeros(n);
        for l_idx in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        acc += bm[i] * vel[j] * vel[k] * pack.rm(l_idx, i, j, k);
                    }
                }
            }
            rmv[l_idx] = acc;
        }
        let grmv = &g * rmv;
        for k in 0..n {
            out[(m, k)] = linv_t.column(k).dot(&grmv);
        }
    }

    let hess = covariant_hessian_of_potential(model, t, x);
    out += linv_t.transpose() * hess * linv_t;
    Ok(out)
}

fn covariant_hessian_of_potential(
    model: &HamiltonianModel,
    t: f64,
    x: &DVector<f64>,
) -> DMatrix<f64> {
    let n = model.dim();
    let pt = PhasePoint::new(x.clone(), DVector::zeros(n));
    let b = model.derivative_blocks(t, &pt);
    // With p = 0 the blocks reduce to the potential parts (drift kinetic
    // terms vanish at zero momentum), so hxx here is dd U and hx is dU.
    let gamma = model.metric.christoffel(t, x);
    let mut hess = b.hxx.clone();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                hess[(i, j)] -= gamma[k][(i, j)] * b.hx[k];
            }
        }
    }
    hess
}

/// Covariant Hessian of a scalar field under the model metric.
pub fn covariant_hessian(
    metric: &MetricModel,
    f: &ScalarField,
    t: f64,
    x: &DVector<f64>,
) -> DMatrix<f64> {
    let n = metric.dim();
    let grad = f.gradient(t, x);
    let gamma = metric.christoffel(t, x);
    let mut hess = f.hessian(t, x);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                hess[(i, j)] -= gamma[k][(i, j)] * grad[k];
            }
        }
    }
    hess
}

/// Laplace-Beltrami of a scalar field given plain partials.
fn laplacian_from_partials(
    metric: &MetricModel,
    t: f64,
    x: &DVector<f64>,
    grad: &DVector<f64>,
    hess: &DMatrix<f64>,
) -> f64 {
    let n = metric.dim();
    let ginv = metric.g_inv(t, x);
    let gamma = metric.christoffel(t, x);
    let mut lap = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut cov = hess[(i, j)];
            for k in 0..n {
                cov -= gamma[k][(i, j)] * grad[k];
            }
            lap += ginv[(i, j)] * cov;
        }
    }
    lap
}

pub fn laplacian(metric: &MetricModel, f: &ScalarField, t: f64, x: &DVector<f64>) -> f64 {
    laplacian_from_partials(metric, t, x, &f.gradient(t, x), &f.hessian(t, x))
}

/// Analytic trace of the curvature matrix:
///
///   tr R = Rc(P, P) + lap U - (1/2) lap |grad W|^2 - lap Wdot
///          - <P, grad tr gdot - div gdot> - (1/2) tr gddot + (1/4) |gdot|^2
///
/// with P = H_p the velocity. Static kinds keep only the first two terms.
pub fn curvature_trace_analytic(
    model: &HamiltonianModel,
    t: f64,
    point: &PhasePoint,
) -> Result<f64> {
    let metric = &model.metric;
    let x = &point.x;
    let n = model.dim();
    let pack = curvature_pack(metric, t, x)?;
    let b = model.derivative_blocks(t, point);
    let vel = &b.hp;

    // Rc(P, P) with the velocity index lowered by g.
    let mut trace = vel.dot(&(&pack.rc * vel));

    // lap U; zero for the curvature-locked profile on constant curvature.
    let u_hess = {
        let pt0 = PhasePoint::new(x.clone(), DVector::zeros(n));
        let b0 = model.derivative_blocks(t, &pt0);
        laplacian_from_partials(metric, t, x, &b0.hx, &b0.hxx)
    };
    trace += u_hess;

    if let Some(w) = model.drift_field() {
        // |grad W|^2 as a scalar field: plain first and second partials from
        // the cached derivatives of W and the metric inverse.
        let a = metric.g_inv(t, x);
        let dg = metric.dg(t, x);
        let da: Vec<DMatrix<f64>> = dg.iter().map(|d| -(&a * d * &a)).collect();
        let wx = w.gradient(t, x);
        let wh = w.hessian(t, x);
        let mut grad_sq = DVector::zeros(n);
        for k in 0..n {
            grad_sq[k] = wx.dot(&(&da[k] * &wx)) + 2.0 * wx.dot(&(&a * wh.column(k)));
        }
        let ddg = metric.ddg(t, x);
        let mut hess_sq = DMatrix::zeros(n, n);
        for k in 0..n {
            for l in 0..=k {
                let dda = -(&da[l] * &dg[k] * &a) - (&a * &ddg[k][l] * &a) - (&a * &dg[k] * &da[l]);
                let mut third_k = DVector::zeros(n);
                let mut third_l = DVector::zeros(n);
                for j in 0..n {
                    third_k[j] = w.d3(t, x, j, k, l);
                    third_l[j] = w.d3(t, x, j, l, k);
                }
                let v = wx.dot(&(&dda * &wx))
                    + 2.0 * wx.dot(&(&da[k] * wh.column(l)))
                    + 2.0 * wx.dot(&(&da[l] * wh.column(k)))
                    + 2.0 * wh.column(k).dot(&(&a * wh.column(l)))
                    + wx.dot(&(&a * third_k)) + wx.dot(&(&a * third_l));
                hess_sq[(k, l)] = v;
                hess_sq[(l, k)] = v;
            }
        }
        trace -= 0.5 * laplacian_from_partials(metric, t, x, &grad_sq, &hess_sq);

        if w.time_dependent() {
            trace -= laplacian_from_partials(metric, t, x, &w.dt_gradient(t, x), &w.dt_hessian(t, x));
        }
    }

    if metric.time_dependent() {
        let q = metric.time_quantities(t, x);
        trace -= vel.dot(&(&q.grad_tr_gdot - &q.div_gdot));
        trace += -0.5 * q.tr_gddot + 0.25 * q.norm_gdot2;
    }

    Ok(trace)
}

/// Fiberwise scaling of the frame trace: tr R at (x, lambda p) against
/// lambda^2 tr R at (x, p). Requires a fiberwise quadratic Hamiltonian.
pub fn curvature_scaling_check(
    model: &HamiltonianModel,
    t: f64,
    point: &PhasePoint,
    lambda: f64,
) -> Result<(f64, f64)> {
    let h2 = model.evaluate(t, &PhasePoint::new(point.x.clone(), &point.p * lambda))
        - lambda * lambda * model.evaluate(t, point);
    if h2.abs() > 1e-10 {
        return Err(CoreError::NotHomogeneous(format!(
            "Hamiltonian is not fiberwise quadratic (residual {h2:.3e})"
        )));
    }
    let base = curvature_via_frames(model, t, point)?.r.trace();
    let scaled = curvature_via_frames(
        model,
        t,
        &PhasePoint::new(point.x.clone(), &point.p * lambda),
    )?
    .r
    .trace();
    Ok((scaled, lambda * lambda * base))
}

/// Initial Riccati matrix for the potential f: the frame components of the
/// covariant Hessian of f, plus the drift Hessian and half the metric speed
/// for time-dependent families.
pub fn hessian_initial(
    model: &HamiltonianModel,
    f: &ScalarField,
    t: f64,
    x: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let mut h = covariant_hessian(&model.metric, f, t, x);
    if let Some(w) = model.drift_field() {
        h += covariant_hessian(&model.metric, w, t, x);
    }
    if model.metric.time_dependent() {
        h += model.metric.gdot(t, x) * 0.5;
    }
    let l = model.metric.chol_l(t, x)?;
    let linv = l.try_inverse().expect("Cholesky invertible");
    Ok(&linv * h * linv.transpose())
}

/// Volume distortion v and its first two flow derivatives at a node, for a
/// trajectory with Hamilton-Jacobi value u at that node.
pub fn volume_distortion(
    model: &HamiltonianModel,
    measure: &MeasureModel,
    t: f64,
    point: &PhasePoint,
    u: Option<f64>,
) -> Result<(f64, f64, f64)> {
    match measure {
        MeasureModel::RiemannianVolume => Ok((0.0, 0.0, 0.0)),
        MeasureModel::Weighted { weight } => {
            let b = model.derivative_blocks(t, point);
            let xdot = &b.hp;
            let pdot = -&b.hx;
            let xddot = &b.htp + &b.hpx * xdot + &b.hpp * pdot;
            let grad = weight.gradient(t, &point.x);
            let hess = weight.hessian(t, &point.x);
            let v = -weight.value(t, &point.x);
            let vdot = -grad.dot(xdot);
            let vddot = -(xdot.dot(&(&hess * xdot)) + grad.dot(&xddot));
            Ok((v, vdot, vddot))
        }
        MeasureModel::HjWeighted { k, log_sigma } => {
            let u = u.ok_or(CoreError::MissingHjState)?;
            let b = model.derivative_blocks(t, point);
            let p = &point.p;
            let udot = p.dot(&b.hp) - b.h;
            // uddot = d/dt (p . H_p - H) along the flow.
            let uddot = p.dot(&b.htp) + p.dot(&(&b.hpx * &b.hp))
                - p.dot(&(&b.hpp * &b.hx))
                - b.hx.dot(&b.hp)
                - b.ht;
            let v = k.value(t) * u + log_sigma.value(t);
            let vdot = k.d1(t) * u + k.value(t) * udot + log_sigma.d1(t);
            let vddot = k.d2(t) * u + 2.0 * k.d1(t) * udot + k.value(t) * uddot
                + log_sigma.d2(t);
            Ok((v, vdot, vddot))
        }
    }
}
