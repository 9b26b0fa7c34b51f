//! Hamiltonians quadratic in momentum over the metric models.
//!
//! Supported kinds:
//!   kinetic       H = (1/2) p' g^{-1} p
//!   mechanical    H = (1/2) p' g^{-1} p + U(x)
//!   time_dependent_mechanical   as above with g(t) and U(t, x)
//!   drift         H = (1/2) p' g^{-1} p + p' g^{-1} dW + U
//!
//! whose Lagrangians are (1/2)|v|^2 - U and (1/2)|v - grad W|^2 - U. All
//! first and second partials of H, including the mixed time partials that
//! feed the time derivative of the Hamiltonian vector field, are assembled
//! analytically from the metric model and cached scalar-field derivatives.

use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::geometry::metric::MetricModel;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HamiltonianKind {
    Kinetic,
    Mechanical,
    TimeDependentMechanical,
    Drift,
}

/// Scalar potential: an explicit field, or the curvature-locked profile
/// U = -c1(t)^2 R(t) / 8 used by the scaled-family scenarios (spatially
/// constant on constant-curvature models).
#[derive(Debug, Clone)]
pub enum PotentialSpec {
    Field(ScalarField),
    RicciScaled,
}

#[derive(Debug, Clone)]
pub struct PhasePoint {
    pub x: DVector<f64>,
    pub p: DVector<f64>,
}

impl PhasePoint {
    pub fn new(x: DVector<f64>, p: DVector<f64>) -> Self {
        PhasePoint { x, p }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn to_vec(&self) -> DVector<f64> {
        let n = self.dim();
        let mut z = DVector::zeros(2 * n);
        z.rows_mut(0, n).copy_from(&self.x);
        z.rows_mut(n, n).copy_from(&self.p);
        z
    }

    pub fn from_vec(z: &DVector<f64>) -> Self {
        let n = z.len() / 2;
        PhasePoint { x: z.rows(0, n).into_owned(), p: z.rows(n, n).into_owned() }
    }
}

/// Tangent vector to phase space at a point, split into base and fiber parts.
#[derive(Debug, Clone)]
pub struct TangentVector {
    pub dx: DVector<f64>,
    pub dp: DVector<f64>,
}

impl TangentVector {
    pub fn new(dx: DVector<f64>, dp: DVector<f64>) -> Self {
        TangentVector { dx, dp }
    }

    pub fn zeros(n: usize) -> Self {
        TangentVector { dx: DVector::zeros(n), dp: DVector::zeros(n) }
    }

    pub fn to_vec(&self) -> DVector<f64> {
        let n = self.dx.len();
        let mut z = DVector::zeros(2 * n);
        z.rows_mut(0, n).copy_from(&self.dx);
        z.rows_mut(n, n).copy_from(&self.dp);
        z
    }

    pub fn from_vec(z: &DVector<f64>) -> Self {
        let n = z.len() / 2;
        TangentVector { dx: z.rows(0, n).into_owned(), dp: z.rows(n, n).into_owned() }
    }
}

/// Canonical symplectic pairing omega(a, b) = a_p . b_x - b_p . a_x.
pub fn omega(a: &TangentVector, b: &TangentVector) -> f64 {
    a.dp.dot(&b.dx) - b.dp.dot(&a.dx)
}

/// All partial derivatives of H needed by the flow, the variational
/// equation and the bracket machinery. hpx is indexed (i, j) = d2 H / dp_i dx_j.
#[derive(Debug, Clone)]
pub struct DerivativeBlocks {
    pub h: f64,
    pub hp: DVector<f64>,
    pub hx: DVector<f64>,
    pub hpp: DMatrix<f64>,
    pub hpx: DMatrix<f64>,
    pub hxx: DMatrix<f64>,
    pub ht: f64,
    pub htp: DVector<f64>,
    pub htx: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    pub metric: MetricModel,
    pub kind: HamiltonianKind,
    potential: Option<PotentialSpec>,
    drift: Option<ScalarField>,
}

impl HamiltonianModel {
    pub fn kinetic(metric: MetricModel) -> Result<Self> {
        if metric.time_dependent() {
            return Err(CoreError::InvalidModel(
                "kinetic kind requires a static metric; use time_dependent_mechanical".into(),
            ));
        }
        Ok(HamiltonianModel { metric, kind: HamiltonianKind::Kinetic, potential: None, drift: None })
    }

    pub fn mechanical(metric: MetricModel, potential: ScalarField) -> Result<Self> {
        if metric.time_dependent() || potential.time_dependent() {
            return Err(CoreError::InvalidModel(
                "mechanical kind is static; use time_dependent_mechanical".into(),
            ));
        }
        if potential.dim() != metric.dim() {
            return Err(CoreError::InvalidModel("potential dimension mismatch".into()));
        }
        Ok(HamiltonianModel {
            metric,
            kind: HamiltonianKind::Mechanical,
            potential: Some(PotentialSpec::Field(potential)),
            drift: None,
        })
    }

    pub fn time_dependent(metric: MetricModel, potential: Option<PotentialSpec>) -> Result<Self> {
        if let Some(PotentialSpec::RicciScaled) = &potential {
            if metric.scale().is_none() {
                return Err(CoreError::InvalidModel(
                    "curvature-locked potential requires a scaled metric family".into(),
                ));
            }
        }
        if let Some(PotentialSpec::Field(f)) = &potential {
            if f.dim() != metric.dim() {
                return Err(CoreError::InvalidModel("potential dimension mismatch".into()));
            }
        }
        Ok(HamiltonianModel {
            metric,
            kind: HamiltonianKind::TimeDependentMechanical,
            potential,
            drift: None,
        })
    }

    pub fn drift(
        metric: MetricModel,
        drift: ScalarField,
        potential: Option<ScalarField>,
    ) -> Result<Self> {
        if drift.dim() != metric.dim() {
            return Err(CoreError::InvalidModel("drift potential dimension mismatch".into()));
        }
        if let Some(f) = &potential {
            if f.dim() != metric.dim() {
                return Err(CoreError::InvalidModel("potential dimension mismatch".into()));
            }
        }
        Ok(HamiltonianModel {
            metric,
            kind: HamiltonianKind::Drift,
            potential: potential.map(PotentialSpec::Field),
            drift: Some(drift),
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn is_time_dependent(&self) -> bool {
        let pot_td = match &self.potential {
            Some(PotentialSpec::Field(f)) => f.time_dependent(),
            Some(PotentialSpec::RicciScaled) => true,
            None => false,
        };
        let drift_td = self.drift.as_ref().map_or(false, |w| w.time_dependent());
        self.metric.time_dependent() || pot_td || drift_td
    }

    pub fn potential_spec(&self) -> Option<&PotentialSpec> {
        self.potential.as_ref()
    }

    pub fn drift_field(&self) -> Option<&ScalarField> {
        self.drift.as_ref()
    }

    /// Potential value and its partials; spatial parts vanish for the
    /// curvature-locked profile on constant-curvature families.
    pub fn potential_value(&self, t: f64, x: &DVector<f64>) -> f64 {
        match &self.potential {
            None => 0.0,
            Some(PotentialSpec::Field(f)) => f.value(t, x),
            Some(PotentialSpec::RicciScaled) => {
                let scale = self.metric.scale().expect("validated at construction");
                let n = self.dim() as f64;
                let r = n * (n - 1.0) * scale.kappa0 / scale.s(t);
                -scale.c1.value(t).powi(2) * r / 8.0
            }
        }
    }

    pub fn potential_dt(&self, t: f64, x: &DVector<f64>) -> f64 {
        match &self.potential {
            None => 0.0,
            Some(PotentialSpec::Field(f)) => f.dt(t, x),
            Some(PotentialSpec::RicciScaled) => {
                let scale = self.metric.scale().expect("validated at construction");
                let n = self.dim() as f64;
                let s = scale.s(t);
                let r = n * (n - 1.0) * scale.kappa0 / s;
                let rdot = -r * scale.sdot(t) / s;
                let c1 = scale.c1.value(t);
                -(2.0 * c1 * scale.c1.d1(t) * r + c1 * c1 * rdot) / 8.0
            }
        }
    }

    fn potential_grad(&self, t: f64, x: &DVector<f64>) -> DVector<f64> {
        match &self.potential {
            Some(PotentialSpec::Field(f)) => f.gradient(t, x),
            _ => DVector::zeros(self.dim()),
        }
    }

    fn potential_hess(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.potential {
            Some(PotentialSpec::Field(f)) => f.hessian(t, x),
            _ => DMatrix::zeros(self.dim(), self.dim()),
        }
    }

    fn potential_dt_grad(&self, t: f64, x: &DVector<f64>) -> DVector<f64> {
        match &self.potential {
            Some(PotentialSpec::Field(f)) => f.dt_gradient(t, x),
            _ => DVector::zeros(self.dim()),
        }
    }

    pub fn evaluate(&self, t: f64, point: &PhasePoint) -> f64 {
        let a = self.metric.g_inv(t, &point.x);
        let mut h = 0.5 * point.p.dot(&(&a * &point.p)) + self.potential_value(t, &point.x);
        if let Some(w) = &self.drift {
            h += point.p.dot(&(&a * w.gradient(t, &point.x)));
        }
        h
    }

    /// Hamiltonian vector field (H_p, -H_x) as a flat 2n vector.
    pub fn vector_field(&self, t: f64, z: &DVector<f64>) -> DVector<f64> {
        let b = self.derivative_blocks(t, &PhasePoint::from_vec(z));
        let n = self.dim();
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&b.hp);
        out.rows_mut(n, n).copy_from(&(-b.hx));
        out
    }

    /// Time partial of the vector field, (H_tp, -H_tx).
    pub fn vector_field_dt(&self, t: f64, z: &DVector<f64>) -> DVector<f64> {
        let b = self.derivative_blocks(t, &PhasePoint::from_vec(z));
        let n = self.dim();
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&b.htp);
        out.rows_mut(n, n).copy_from(&(-b.htx));
        out
    }

    /// Jacobian of the vector field, the coefficient matrix of the
    /// variational equation.
    pub fn jacobian(&self, t: f64, z: &DVector<f64>) -> DMatrix<f64> {
        let b = self.derivative_blocks(t, &PhasePoint::from_vec(z));
        let n = self.dim();
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        j.view_mut((0, 0), (n, n)).copy_from(&b.hpx);
        j.view_mut((0, n), (n, n)).copy_from(&b.hpp);
        j.view_mut((n, 0), (n, n)).copy_from(&(-&b.hxx));
        j.view_mut((n, n), (n, n)).copy_from(&(-b.hpx.transpose()));
        j
    }

    pub fn derivative_blocks(&self, t: f64, point: &PhasePoint) -> DerivativeBlocks {
        let n = self.dim();
        let x = &point.x;
        let p = &point.p;
        let td = self.is_time_dependent();

        let a = self.metric.g_inv(t, x);
        let dg = self.metric.dg(t, x);
        let ddg = self.metric.ddg(t, x);
        let da: Vec<DMatrix<f64>> = dg.iter().map(|d| -(&a * d * &a)).collect();

        // Kinetic part K = (1/2) p' A p.
        let ap = &a * p;
        let mut h = 0.5 * p.dot(&ap);
        let mut hp = ap.clone();
        let hpp = a.clone();
        let mut hx = DVector::zeros(n);
        let mut hpx = DMatrix::zeros(n, n);
        for k in 0..n {
            let dap = &da[k] * p;
            hx[k] = 0.5 * p.dot(&dap);
            hpx.column_mut(k).copy_from(&dap);
        }
        let mut hxx = DMatrix::zeros(n, n);
        for k in 0..n {
            for l in 0..=k {
                // d_k d_l A = -dA_l dg_k A - A ddg_{kl} A - A dg_k dA_l
                let dda = -(&da[l] * &dg[k] * &a) - (&a * &ddg[k][l] * &a) - (&a * &dg[k] * &da[l]);
                let v = 0.5 * p.dot(&(&dda * p));
                hxx[(k, l)] = v;
                hxx[(l, k)] = v;
            }
        }

        let (mut ht, mut htp, mut htx) = (0.0, DVector::zeros(n), DVector::zeros(n));
        let gdot = if td { self.metric.gdot(t, x) } else { DMatrix::zeros(n, n) };
        let at = if td { -(&a * &gdot * &a) } else { DMatrix::zeros(n, n) };
        if td {
            let atp = &at * p;
            ht += 0.5 * p.dot(&atp);
            htp += &atp;
            let dgdot = self.metric.dgdot(t, x);
            for k in 0..n {
                // d_t d_k A = -A_t dg_k A - A dgdot_k A - A dg_k A_t
                let dta = -(&at * &dg[k] * &a) - (&a * &dgdot[k] * &a) - (&a * &dg[k] * &at);
                htx[k] += 0.5 * p.dot(&(&dta * p));
            }
        }

        // Potential part.
        h += self.potential_value(t, x);
        hx += self.potential_grad(t, x);
        hxx += self.potential_hess(t, x);
        ht += self.potential_dt(t, x);
        htx += self.potential_dt_grad(t, x);

        // Drift part D = p' A W_x.
        if let Some(w) = &self.drift {
            let wx = w.gradient(t, x);
            let wxx = w.hessian(t, x);
            let awx = &a * &wx;
            h += p.dot(&awx);
            hp += &awx;
            for k in 0..n {
                let col = &da[k] * &wx + &a * wxx.column(k);
                hx[k] += p.dot(&col);
                hpx.column_mut(k).iter_mut().zip(col.iter()).for_each(|(o, v)| *o += v);
            }
            for k in 0..n {
                for l in 0..n {
                    let dda = -(&da[l] * &dg[k] * &a)
                        - (&a * &ddg[k][l] * &a)
                        - (&a * &dg[k] * &da[l]);
                    let mut third = DVector::zeros(n);
                    for j in 0..n {
                        third[j] = w.d3(t, x, j, k, l);
                    }
                    hxx[(k, l)] += p.dot(&(&dda * &wx))
                        + p.dot(&(&da[k] * wxx.column(l)))
                        + p.dot(&(&da[l] * wxx.column(k)))
                        + p.dot(&(&a * third));
                }
            }
            if td {
                let wtx = w.dt_gradient(t, x);
                let wtxx = w.dt_hessian(t, x);
                ht += p.dot(&(&at * &wx)) + p.dot(&(&a * &wtx));
                htp += &at * &wx + &a * &wtx;
                let dgdot = self.metric.dgdot(t, x);
                for k in 0..n {
                    let dta =
                        -(&at * &dg[k] * &a) - (&a * &dgdot[k] * &a) - (&a * &dg[k] * &at);
                    htx[k] += p.dot(&(&dta * &wx))
                        + p.dot(&(&da[k] * &wtx))
                        + p.dot(&(&at * wxx.column(k)))
                        + p.dot(&(&a * wtxx.column(k)));
                }
            }
        }

        DerivativeBlocks { h, hp, hx, hpp, hpx, hxx, ht, htp, htx }
    }

    /// Lagrangian dual to H at velocity v.
    pub fn lagrangian(&self, t: f64, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let g = self.metric.g(t, x);
        let u = self.potential_value(t, x);
        match &self.drift {
            None => 0.5 * v.dot(&(&g * v)) - u,
            Some(w) => {
                let shifted = v - self.metric.g_inv(t, x) * w.gradient(t, x);
                0.5 * shifted.dot(&(&g * &shifted)) - u
            }
        }
    }

    /// Momentum realizing the Legendre supremum at velocity v.
    pub fn legendre(&self, t: f64, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let g = self.metric.g(t, x);
        match &self.drift {
            None => &g * v,
            Some(w) => &g * v - w.gradient(t, x),
        }
    }

    /// Velocity dual to momentum p, the base projection of the flow field.
    pub fn velocity(&self, t: f64, x: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
        let a = self.metric.g_inv(t, x);
        match &self.drift {
            None => &a * p,
            Some(w) => &a * p + &a * w.gradient(t, x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TimeFn;
    use crate::geometry::scale::ScaleSolution;
    use crate::numeric::{fd1, fd1_4};
    use approx::assert_relative_eq;

    fn models() -> Vec<HamiltonianModel> {
        let sphere = MetricModel::round_sphere(1.2).unwrap();
        let torus_phi = ScalarField::parse("0.1*cos(x1)*sin(x2)", 2).unwrap();
        let conf = MetricModel::conformal_torus(torus_phi).unwrap();
        let scale = ScaleSolution::solve(
            TimeFn::constant(-2.0),
            TimeFn::constant(0.0),
            1.0,
            2,
            0.0,
            1.0,
            0.0,
            0.2,
            2048,
        )
        .unwrap();
        let shrinking =
            MetricModel::scaled_family(MetricModel::round_sphere(1.0).unwrap(), scale).unwrap();

        vec![
            HamiltonianModel::kinetic(conf).unwrap(),
            HamiltonianModel::mechanical(
                sphere,
                ScalarField::parse("0.05*sin(x1)*cos(x2)", 2).unwrap(),
            )
            .unwrap(),
            HamiltonianModel::time_dependent(shrinking.clone(), Some(PotentialSpec::RicciScaled))
                .unwrap(),
            HamiltonianModel::time_dependent(
                shrinking,
                Some(PotentialSpec::Field(ScalarField::parse("0.1*t*cos(x1)", 2).unwrap())),
            )
            .unwrap(),
            HamiltonianModel::drift(
                MetricModel::flat_torus(2),
                ScalarField::parse("0.1*sin(x1)", 2).unwrap(),
                Some(ScalarField::parse("0.05*cos(2*x1) + 0.02*sin(x2)", 2).unwrap()),
            )
            .unwrap(),
            HamiltonianModel::drift(
                MetricModel::round_sphere(1.0).unwrap(),
                ScalarField::parse("0.08*cos(x1) + 0.02*t*sin(x2)", 2).unwrap(),
                None,
            )
            .unwrap(),
        ]
    }

    #[test]
    fn blocks_match_finite_differences() {
        let t = 0.11;
        for model in models() {
            let x = DVector::from_vec(vec![1.0, 0.7]);
            let p = DVector::from_vec(vec![0.3, -0.5]);
            let pt = PhasePoint::new(x.clone(), p.clone());
            let b = model.derivative_blocks(t, &pt);

            assert_relative_eq!(b.h, model.evaluate(t, &pt), max_relative = 1e-14);

            let h = 1e-4;
            for i in 0..2 {
                let fp = |s: f64| {
                    let mut pp = p.clone();
                    pp[i] += s;
                    model.evaluate(t, &PhasePoint::new(x.clone(), pp))
                };
                let fx = |s: f64| {
                    let mut xx = x.clone();
                    xx[i] += s;
                    model.evaluate(t, &PhasePoint::new(xx, p.clone()))
                };
                assert_relative_eq!(b.hp[i], fd1_4(fp, h), epsilon = 1e-9);
                assert_relative_eq!(b.hx[i], fd1_4(fx, h), epsilon = 1e-9);
                for j in 0..2 {
                    let fpx = |s: f64| {
                        let mut xx = x.clone();
                        xx[j] += s;
                        let bb = model.derivative_blocks(t, &PhasePoint::new(xx, p.clone()));
                        bb.hp[i]
                    };
                    assert_relative_eq!(b.hpx[(i, j)], fd1_4(fpx, h), epsilon = 1e-8);
                    let fxx = |s: f64| {
                        let mut xx = x.clone();
                        xx[j] += s;
                        let bb = model.derivative_blocks(t, &PhasePoint::new(xx, p.clone()));
                        bb.hx[i]
                    };
                    assert_relative_eq!(b.hxx[(i, j)], fd1_4(fxx, h), epsilon = 1e-8);
                    let fpp = |s: f64| {
                        let mut pp = p.clone();
                        pp[j] += s;
                        let bb = model.derivative_blocks(t, &PhasePoint::new(x.clone(), pp));
                        bb.hp[i]
                    };
                    assert_relative_eq!(b.hpp[(i, j)], fd1_4(fpp, h), epsilon = 1e-9);
                }
            }

            // Time partials, skipping models that are static in t.
            let ft = |s: f64| model.evaluate(t + s, &pt);
            assert_relative_eq!(b.ht, fd1(ft, 1e-5), epsilon = 1e-7);
            for i in 0..2 {
                let ftp = |s: f64| model.derivative_blocks(t + s, &pt).hp[i];
                let ftx = |s: f64| model.derivative_blocks(t + s, &pt).hx[i];
                assert_relative_eq!(b.htp[i], fd1(ftp, 1e-5), epsilon = 1e-6);
                assert_relative_eq!(b.htx[i], fd1(ftx, 1e-5), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn legendre_roundtrip() {
        let t = 0.07;
        for model in models() {
            let x = DVector::from_vec(vec![1.1, -0.4]);
            let v = DVector::from_vec(vec![0.6, 0.2]);
            let p = model.legendre(t, &x, &v);
            // Fenchel equality at the optimum: L(v) + H(p) = <p, v>.
            let l = model.lagrangian(t, &x, &v);
            let h = model.evaluate(t, &PhasePoint::new(x.clone(), p.clone()));
            assert_relative_eq!(l + h, p.dot(&v), epsilon = 1e-12);
            let back = model.velocity(t, &x, &p);
            assert!((back - &v).norm() < 1e-12);

            // And H_p is that velocity.
            let b = model.derivative_blocks(t, &PhasePoint::new(x.clone(), p));
            assert!((b.hp - v).norm() < 1e-12);
        }
    }

    #[test]
    fn omega_pairing_is_antisymmetric() {
        let a = TangentVector::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![-0.3, 0.4]),
        );
        let b = TangentVector::new(
            DVector::from_vec(vec![0.5, -1.0]),
            DVector::from_vec(vec![0.2, 0.1]),
        );
        assert_relative_eq!(omega(&a, &b), -omega(&b, &a), epsilon = 1e-15);
        assert_eq!(omega(&a, &a), 0.0);
    }

    #[test]
    fn construction_guards() {
        let sphere = MetricModel::round_sphere(1.0).unwrap();
        let td_u = ScalarField::parse("t*cos(x1)", 2).unwrap();
        assert!(HamiltonianModel::mechanical(sphere.clone(), td_u).is_err());
        assert!(HamiltonianModel::time_dependent(sphere, Some(PotentialSpec::RicciScaled)).is_err());
    }
}
