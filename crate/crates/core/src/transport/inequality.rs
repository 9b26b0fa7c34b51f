//! Convexity and monotonicity checks for the entropy functionals.
//!
//! Each check pairs a functional with the differential inequality it must
//! satisfy along the interpolation. The reported left-hand side always uses
//! the finite-difference derivatives of F on the track grid, so a check
//! never inherits the analytic derivation it is meant to test. Parameter
//! identities tying the scale functions c1, c2 to the measure exponent k
//! are enforced numerically before any row is produced.

use crate::error::{CoreError, Result};
use crate::field::TimeFn;
use crate::geometry::MeasureModel;
use crate::hamiltonian::{HamiltonianModel, PhasePoint, PotentialSpec};
use crate::transport::functionals::{functional_report, FunctionalReport, FunctionalSpec};
use crate::transport::hj::InterpolationState;
use nalgebra::DVector;

const IDENTITY_TOL: f64 = 1e-10;
const GUARD_SAMPLES: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremId {
    Thm2_2,
    Cor2_3,
    Cor2_4,
    Cor2_7,
    Cor2_8,
    Cor2_9,
    Thm2_10,
    Cor2_11,
    Cor2_13,
    Thm2_15,
}

impl TheoremId {
    pub fn label(self) -> &'static str {
        match self {
            TheoremId::Thm2_2 => "thm2.2",
            TheoremId::Cor2_3 => "cor2.3",
            TheoremId::Cor2_4 => "cor2.4",
            TheoremId::Cor2_7 => "cor2.7",
            TheoremId::Cor2_8 => "cor2.8",
            TheoremId::Cor2_9 => "cor2.9",
            TheoremId::Thm2_10 => "thm2.10",
            TheoremId::Cor2_11 => "cor2.11",
            TheoremId::Cor2_13 => "cor2.13",
            TheoremId::Thm2_15 => "thm2.15",
        }
    }
}

/// A theorem id plus the scenario parameters its statement depends on.
#[derive(Debug, Clone)]
pub enum TheoremCheck {
    /// d2F + b dF + n b^2/4 >= integral of (tr R - vddot - b vdot).
    Thm2_2 { b: TimeFn },
    /// d2E2 >= (2K/T) C_T for Ricci curvature bounded below by K.
    Cor2_3 { k_lower: f64 },
    /// d2E3 + b dE3 + n(c2dot/2 + c2^2/4 + b^2/4) >= 0 under the
    /// parameter identities c1 k = -2, kddot = -b kdot, 2kdot = c2 k - b k,
    /// U = -c1^2 R / 8.
    Cor2_4 { b: TimeFn },
    /// d2E4 + (3/2t) dE4 >= 0 on the backward scaled family.
    Cor2_7,
    /// d2E5 + (3/2t) dE5 >= 0 on the forward scaled family.
    Cor2_8,
    /// d2E6 >= 0; the b = 0 instance of the scaled-measure convexity.
    Cor2_9,
    /// d2F + (q b1 + b2) dF + (q^2 b1^2/4 + q n b2^2/4) F >=
    /// integral of q rho^q (tr R - b2 vdot - vddot), for F(r) = r^q.
    Thm2_10 { q: f64, b1: TimeFn, b2: TimeFn },
    /// d2E7 >= 0 for E7 = -integral of rho^(-1/N), n <= N, Rc >= 0.
    Cor2_11 { n_cap: f64 },
    /// d2E8 + ((q C2 - m + 1)/t) dE8 + q (2nm(m-1) + q C2^2)/(4t^2) E8 >= 0
    /// for k = C1 t^m, b1 = C2 t^(-m), b2 = (1-m)/t, c2 = (m+1)/t.
    Cor2_13 { q: f64, m: f64, k_coeff: f64, b1_coeff: f64 },
    /// d2E1 >= 0 for drift systems with Rc >= 0 and
    /// laplacian(Wdot) + laplacian(|grad W|^2)/2 - laplacian(U) <= 0.
    Thm2_15,
}

impl TheoremCheck {
    pub fn id(&self) -> TheoremId {
        match self {
            TheoremCheck::Thm2_2 { .. } => TheoremId::Thm2_2,
            TheoremCheck::Cor2_3 { .. } => TheoremId::Cor2_3,
            TheoremCheck::Cor2_4 { .. } => TheoremId::Cor2_4,
            TheoremCheck::Cor2_7 => TheoremId::Cor2_7,
            TheoremCheck::Cor2_8 => TheoremId::Cor2_8,
            TheoremCheck::Cor2_9 => TheoremId::Cor2_9,
            TheoremCheck::Thm2_10 { .. } => TheoremId::Thm2_10,
            TheoremCheck::Cor2_11 { .. } => TheoremId::Cor2_11,
            TheoremCheck::Cor2_13 { .. } => TheoremId::Cor2_13,
            TheoremCheck::Thm2_15 => TheoremId::Thm2_15,
        }
    }

    /// The functional the inequality speaks about.
    pub fn functional(&self, dim: usize) -> Result<FunctionalSpec> {
        match self {
            TheoremCheck::Cor2_7 | TheoremCheck::Cor2_8 => {
                let beta = TimeFn::parse(&format!("{}*ln(t)", dim as f64 / 2.0))?;
                Ok(FunctionalSpec::log_entropy_with_offset(beta))
            }
            TheoremCheck::Thm2_10 { q, .. } | TheoremCheck::Cor2_13 { q, .. } => {
                FunctionalSpec::power(*q)
            }
            TheoremCheck::Cor2_11 { n_cap } => FunctionalSpec::inverse_power(*n_cap),
            _ => Ok(FunctionalSpec::log_entropy()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct InequalityRow {
    pub t: f64,
    pub f: f64,
    pub df_analytic: f64,
    pub df_fd: f64,
    pub d2f_fd: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub theorem: TheoremId,
    /// Interior track nodes; endpoints are excluded from the verdict.
    pub rows: Vec<InequalityRow>,
    pub worst_margin: f64,
    pub worst_t: f64,
    pub pass: bool,
    pub functional: FunctionalReport,
}

fn guard(name: &str, residual: f64) -> Result<()> {
    if residual.abs() > IDENTITY_TOL {
        return Err(CoreError::ConstraintViolation {
            name: name.into(),
            residual,
            tol: IDENTITY_TOL,
        });
    }
    Ok(())
}

fn guard_max(name: &str, mut worst: impl FnMut(f64) -> f64, times: &[f64]) -> Result<()> {
    let mut r: f64 = 0.0;
    for &t in times {
        r = r.max(worst(t).abs());
    }
    guard(name, r)
}

fn measure_exponent(measure: &MeasureModel) -> Result<(&TimeFn, &TimeFn)> {
    match measure {
        MeasureModel::HjWeighted { k, log_sigma } => Ok((k, log_sigma)),
        _ => Err(CoreError::InvalidModel(
            "this check needs the Hamilton-Jacobi weighted reference measure".into(),
        )),
    }
}

fn scale_fns(model: &HamiltonianModel) -> Result<(&TimeFn, &TimeFn)> {
    model
        .metric
        .scale()
        .map(|s| (&s.c1, &s.c2))
        .ok_or_else(|| CoreError::InvalidModel("this check needs a scaled metric family".into()))
}

fn guard_times(state: &InterpolationState) -> Vec<f64> {
    let (t0, t1) = (state.t_grid[0], *state.t_grid.last().unwrap());
    (0..GUARD_SAMPLES)
        .map(|i| t0 + (t1 - t0) * i as f64 / (GUARD_SAMPLES - 1) as f64)
        .collect()
}

/// Residual of U = -c1^2 R / 8 on the scaled family, sampled at the cloud
/// nodes. A potential declared as the Ricci-scaled closed form is exact.
fn ricci_potential_guard(model: &HamiltonianModel, state: &InterpolationState) -> Result<()> {
    if matches!(model.potential_spec(), Some(PotentialSpec::RicciScaled)) {
        return Ok(());
    }
    let scale = model
        .metric
        .scale()
        .ok_or_else(|| CoreError::InvalidModel("this check needs a scaled metric family".into()))?;
    let n = scale.dim as f64;
    let times = guard_times(state);
    let mut worst: f64 = 0.0;
    for &t in &times {
        let kappa = model
            .metric
            .sectional_curvature(t)
            .ok_or_else(|| CoreError::InvalidModel("scalar curvature unavailable".into()))?;
        let r_scal = n * (n - 1.0) * kappa;
        let c1 = scale.c1.value(t);
        for x in &state.cloud.nodes {
            worst = worst.max((model.potential_value(t, x) + c1 * c1 * r_scal / 8.0).abs());
        }
    }
    guard("U + c1^2 R/8", worst)
}

fn nonnegative_ricci_guard(model: &HamiltonianModel, t0: f64) -> Result<()> {
    match model.metric.sectional_curvature(t0) {
        Some(kappa) if kappa >= -IDENTITY_TOL => Ok(()),
        Some(kappa) => Err(CoreError::ConstraintViolation {
            name: "Ricci lower bound 0".into(),
            residual: kappa,
            tol: IDENTITY_TOL,
        }),
        None => Err(CoreError::InvalidModel(
            "this check needs a metric with a known curvature sign".into(),
        )),
    }
}

/// Residual of the scaled-measure parameter identities shared by the
/// E3-type checks: c1 k = -2, kddot = -b kdot, 2 kdot = c2 k - b k.
fn scaled_measure_guards(
    model: &HamiltonianModel,
    measure: &MeasureModel,
    state: &InterpolationState,
    b: &TimeFn,
) -> Result<()> {
    let (k, _) = measure_exponent(measure)?;
    let (c1, c2) = scale_fns(model)?;
    let times = guard_times(state);
    guard_max("c1 k + 2", |t| c1.value(t) * k.value(t) + 2.0, &times)?;
    guard_max("kddot + b kdot", |t| k.d2(t) + b.value(t) * k.d1(t), &times)?;
    guard_max(
        "2 kdot - c2 k + b k",
        |t| 2.0 * k.d1(t) - c2.value(t) * k.value(t) + b.value(t) * k.value(t),
        &times,
    )?;
    ricci_potential_guard(model, state)
}

fn validate(
    model: &HamiltonianModel,
    measure: &MeasureModel,
    state: &InterpolationState,
    check: &TheoremCheck,
) -> Result<()> {
    let t0 = state.t_grid[0];
    let n = state.dim() as f64;
    match check {
        TheoremCheck::Thm2_2 { .. } | TheoremCheck::Thm2_10 { .. } => Ok(()),
        TheoremCheck::Cor2_3 { k_lower } => {
            let kappa = model.metric.sectional_curvature(t0).ok_or_else(|| {
                CoreError::InvalidModel("this check needs a metric with known curvature".into())
            })?;
            guard(
                "Ricci lower bound K",
                (kappa * (n - 1.0) - k_lower).min(0.0),
            )
        }
        TheoremCheck::Cor2_4 { b } => scaled_measure_guards(model, measure, state, b),
        TheoremCheck::Cor2_7 | TheoremCheck::Cor2_8 => {
            let sign = if matches!(check, TheoremCheck::Cor2_7) { -1.0 } else { 1.0 };
            let (k, log_sigma) = measure_exponent(measure)?;
            let times = guard_times(state);
            guard_max(
                "k - sign t^(-1/2)",
                |t| k.value(t) - sign / t.sqrt(),
                &times,
            )?;
            guard_max(
                "log sigma + (n/4) ln t",
                |t| log_sigma.value(t) + n / 4.0 * t.ln(),
                &times,
            )?;
            let b = TimeFn::parse("3/(2*t)")?;
            scaled_measure_guards(model, measure, state, &b)
        }
        TheoremCheck::Cor2_9 => {
            let (k, log_sigma) = measure_exponent(measure)?;
            let times = guard_times(state);
            guard_max("k - 1", |t| k.value(t) - 1.0, &times)?;
            guard_max("log sigma", |t| log_sigma.value(t), &times)?;
            scaled_measure_guards(model, measure, state, &TimeFn::constant(0.0))
        }
        TheoremCheck::Cor2_11 { n_cap } => {
            if *n_cap + 1e-12 < n {
                return Err(CoreError::ConstraintViolation {
                    name: "dimension bound N >= n".into(),
                    residual: n - n_cap,
                    tol: 0.0,
                });
            }
            if !matches!(measure, MeasureModel::RiemannianVolume) {
                return Err(CoreError::InvalidModel(
                    "this check is stated for the Riemannian volume".into(),
                ));
            }
            nonnegative_ricci_guard(model, t0)
        }
        TheoremCheck::Cor2_13 { m, k_coeff, .. } => {
            let (k, log_sigma) = measure_exponent(measure)?;
            let (c1, c2) = scale_fns(model)?;
            let times = guard_times(state);
            guard_max("k - C1 t^m", |t| k.value(t) - k_coeff * t.powf(*m), &times)?;
            guard_max("log sigma", |t| log_sigma.value(t), &times)?;
            guard_max("c1 k + 2", |t| c1.value(t) * k.value(t) + 2.0, &times)?;
            guard_max("c2 - (m+1)/t", |t| c2.value(t) - (m + 1.0) / t, &times)?;
            ricci_potential_guard(model, state)
        }
        TheoremCheck::Thm2_15 => {
            nonnegative_ricci_guard(model, t0)?;
            let times = guard_times(state);
            let mut worst: f64 = 0.0;
            for &t in &times {
                for x in &state.cloud.nodes {
                    let rest = PhasePoint::new(x.clone(), DVector::zeros(x.len()));
                    let tr = crate::curvature::curvature_trace_analytic(model, t, &rest)?;
                    worst = worst.max((-tr).max(0.0));
                }
            }
            guard("laplacian(Wdot) + laplacian(|grad W|^2)/2 - laplacian(U)", worst)
        }
    }
}

/// Left-hand side of the check at node k of the report.
fn lhs_at(
    check: &TheoremCheck,
    model: &HamiltonianModel,
    n: f64,
    report: &FunctionalReport,
    k: usize,
) -> f64 {
    let t = report.t[k];
    let d1 = report.df_fd[k];
    let d2 = report.d2f_fd[k];
    match check {
        TheoremCheck::Thm2_2 { b } => {
            let bv = b.value(t);
            d2 + bv * d1 + n * bv * bv / 4.0
        }
        TheoremCheck::Cor2_3 { .. }
        | TheoremCheck::Cor2_9
        | TheoremCheck::Cor2_11 { .. }
        | TheoremCheck::Thm2_15 => d2,
        TheoremCheck::Cor2_4 { b } => {
            let (_, c2) = scale_fns(model).expect("validated");
            let bv = b.value(t);
            let c2v = c2.value(t);
            d2 + bv * d1 + n * (c2.d1(t) / 2.0 + c2v * c2v / 4.0 + bv * bv / 4.0)
        }
        TheoremCheck::Cor2_7 | TheoremCheck::Cor2_8 => d2 + 1.5 / t * d1,
        TheoremCheck::Thm2_10 { q, b1, b2 } => {
            let b1v = b1.value(t);
            let b2v = b2.value(t);
            d2 + (q * b1v + b2v) * d1
                + (q * q * b1v * b1v / 4.0 + q * n * b2v * b2v / 4.0) * report.f[k]
        }
        TheoremCheck::Cor2_13 { q, m, b1_coeff, .. } => {
            let coeff = (q * b1_coeff - m + 1.0) / t;
            let constant = q * (2.0 * n * m * (m - 1.0) + q * b1_coeff * b1_coeff)
                / (4.0 * t * t);
            d2 + coeff * d1 + constant * report.f[k]
        }
    }
}

/// Right-hand side of the check at node k.
fn rhs_at(
    check: &TheoremCheck,
    state: &InterpolationState,
    window: f64,
    k: usize,
) -> f64 {
    let t = state.t_grid[k];
    match check {
        TheoremCheck::Thm2_2 { b } => {
            let bv = b.value(t);
            state
                .cloud
                .weights
                .iter()
                .zip(&state.particles)
                .map(|(w, p)| w * (p.tr_r[k] - p.volume.vddot[k] - bv * p.volume.vdot[k]))
                .sum()
        }
        TheoremCheck::Cor2_3 { k_lower } => 2.0 * k_lower / window * state.wasserstein_cost(),
        TheoremCheck::Thm2_10 { q, b2, .. } => {
            let b2v = b2.value(t);
            state
                .cloud
                .weights
                .iter()
                .zip(&state.particles)
                .map(|(w, p)| {
                    w * q
                        * p.rho[k].powf(*q)
                        * (p.tr_r[k] - b2v * p.volume.vdot[k] - p.volume.vddot[k])
                })
                .sum()
        }
        _ => 0.0,
    }
}

/// Runs one inequality check over the interpolation. Rows cover interior
/// track nodes; the verdict is the worst margin against -tol.
pub fn inequality_check(
    model: &HamiltonianModel,
    measure: &MeasureModel,
    state: &InterpolationState,
    check: &TheoremCheck,
    tol: f64,
) -> Result<InequalityReport> {
    validate(model, measure, state, check)?;
    let n = state.dim() as f64;
    let spec = check.functional(state.dim())?;
    let report = functional_report(state, &spec);
    let window = *state.t_grid.last().unwrap() - state.t_grid[0];

    let mut rows = Vec::with_capacity(report.len().saturating_sub(2));
    let mut worst_margin = f64::INFINITY;
    let mut worst_t = state.t_grid[0];
    for k in 1..report.len().saturating_sub(1) {
        let lhs = lhs_at(check, model, n, &report, k);
        let rhs = rhs_at(check, state, window, k);
        let margin = lhs - rhs;
        if margin < worst_margin {
            worst_margin = margin;
            worst_t = report.t[k];
        }
        rows.push(InequalityRow {
            t: report.t[k],
            f: report.f[k],
            df_analytic: report.df_analytic[k],
            df_fd: report.df_fd[k],
            d2f_fd: report.d2f_fd[k],
            lhs,
            rhs,
            margin,
            pass: margin >= -tol,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(InequalityReport { theorem: check.id(), rows, worst_margin, worst_t, pass, functional: report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::flow::default_steps;
    use crate::geometry::MetricModel;
    use crate::transport::hj::{hj_solve, particle_cloud};

    fn flat_log_state() -> (HamiltonianModel, MeasureModel, InterpolationState) {
        let model = HamiltonianModel::kinetic(
            MetricModel::flat_box(&[(-2.0, 2.0), (-2.0, 2.0)]),
        )
        .unwrap();
        let measure = MeasureModel::RiemannianVolume;
        let f = ScalarField::parse("0.2*(x1^2 + x2^2)", 2).unwrap();
        let cloud = particle_cloud(
            &model,
            &measure,
            &f,
            &ScalarField::parse("1 + 0.2*cos(x1)", 2).unwrap(),
            0.0,
            &[(-0.5, 0.5), (-0.5, 0.5)],
            5,
        )
        .unwrap();
        let state =
            hj_solve(&model, &measure, &f, &cloud, 0.0, 1.0, default_steps(0.0, 1.0)).unwrap();
        (model, measure, state)
    }

    #[test]
    fn flat_entropy_is_displacement_convex() {
        let (model, measure, state) = flat_log_state();
        let check = TheoremCheck::Thm2_2 { b: TimeFn::constant(0.0) };
        let report = inequality_check(&model, &measure, &state, &check, 1e-6).unwrap();
        assert!(report.pass, "worst margin {} at t = {}", report.worst_margin, report.worst_t);
        // RHS vanishes on flat space with the plain volume.
        assert!(report.rows.iter().all(|r| r.rhs.abs() < 1e-12));
    }

    #[test]
    fn power_entropy_obeys_the_weighted_inequality() {
        let (model, measure, state) = flat_log_state();
        for q in [0.5, 2.0, -0.5] {
            let check = TheoremCheck::Thm2_10 {
                q,
                b1: TimeFn::constant(0.0),
                b2: TimeFn::constant(0.0),
            };
            let report = inequality_check(&model, &measure, &state, &check, 1e-6).unwrap();
            assert!(
                report.pass,
                "q = {q}: worst margin {} at t = {}",
                report.worst_margin, report.worst_t
            );
        }
    }

    #[test]
    fn dimension_bound_violation_is_rejected() {
        let (model, measure, state) = flat_log_state();
        let check = TheoremCheck::Cor2_11 { n_cap: 1.5 };
        let err = inequality_check(&model, &measure, &state, &check, 1e-4).unwrap_err();
        assert!(matches!(err, CoreError::ConstraintViolation { .. }));
    }

    #[test]
    fn renyi_functional_is_convex_within_the_dimension_bound() {
        let (model, measure, state) = flat_log_state();
        let check = TheoremCheck::Cor2_11 { n_cap: 2.0 };
        let report = inequality_check(&model, &measure, &state, &check, 1e-6).unwrap();
        assert!(report.pass, "worst margin {}", report.worst_margin);
    }
}
