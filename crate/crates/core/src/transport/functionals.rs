//! Entropy-type functionals of a transported measure and their time
//! derivatives.
//!
//! F(t) = Sum_i w_i F(rho_i(t)) + beta(t) over the particle quadrature. The
//! analytic derivative uses the co-moving rate a = vdot + tr S per particle:
//!
//!   dF/dt  = -Sum w F'(rho) rho a + beta'
//!   d2F/dt2 = Sum w [ (F''rho + F') rho a^2 + F' rho (|S|^2 + tr R - vddot) ] + beta''
//!
//! Reported second derivatives come from central differences on the track's
//! own grid; the analytic value is carried alongside as a cross-check.

use crate::error::{CoreError, Result};
use crate::field::TimeFn;
use crate::transport::hj::InterpolationState;

#[derive(Debug, Clone)]
pub enum EntropyKind {
    /// F(r) = log r.
    Log,
    /// F(r) = sign * r^q.
    Power { q: f64, sign: f64 },
}

#[derive(Debug, Clone)]
pub struct FunctionalSpec {
    pub kind: EntropyKind,
    /// Additive time offset beta(t), e.g. (n/2) log t for the scaled
    /// entropies defined with a moving reference volume.
    pub offset: Option<TimeFn>,
}

impl FunctionalSpec {
    pub fn log_entropy() -> Self {
        FunctionalSpec { kind: EntropyKind::Log, offset: None }
    }

    pub fn log_entropy_with_offset(offset: TimeFn) -> Self {
        FunctionalSpec { kind: EntropyKind::Log, offset: Some(offset) }
    }

    pub fn power(q: f64) -> Result<Self> {
        if q == 0.0 {
            return Err(CoreError::InvalidModel("power entropy needs q != 0".into()));
        }
        Ok(FunctionalSpec { kind: EntropyKind::Power { q, sign: 1.0 }, offset: None })
    }

    /// The Renyi-type functional -integral of rho^(-1/N).
    pub fn inverse_power(n_cap: f64) -> Result<Self> {
        if n_cap <= 0.0 {
            return Err(CoreError::InvalidModel("dimension bound must be positive".into()));
        }
        Ok(FunctionalSpec {
            kind: EntropyKind::Power { q: -1.0 / n_cap, sign: -1.0 },
            offset: None,
        })
    }

    fn value(&self, rho: f64) -> f64 {
        match self.kind {
            EntropyKind::Log => rho.ln(),
            EntropyKind::Power { q, sign } => sign * rho.powf(q),
        }
    }

    /// (F'(rho) rho, (F''(rho) rho + F'(rho)) rho), the two weights of
    /// the derivative formulas.
    fn derivative_weights(&self, rho: f64) -> (f64, f64) {
        match self.kind {
            EntropyKind::Log => (1.0, 0.0),
            EntropyKind::Power { q, sign } => {
                let pq = sign * q * rho.powf(q);
                (pq, q * pq)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FunctionalReport {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub df_analytic: Vec<f64>,
    pub df_fd: Vec<f64>,
    pub d2f_fd: Vec<f64>,
    pub d2f_analytic: Vec<f64>,
}

impl FunctionalReport {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Worst |analytic - FD| first-derivative gap over interior nodes.
    pub fn derivative_agreement(&self) -> f64 {
        let n = self.len();
        (1..n.saturating_sub(1))
            .map(|k| (self.df_analytic[k] - self.df_fd[k]).abs())
            .fold(0.0, f64::max)
    }
}

/// Functional value at one grid node of the state.
pub fn functional_eval(state: &InterpolationState, spec: &FunctionalSpec, node: usize) -> f64 {
    let mut f = 0.0;
    for (w, p) in state.cloud.weights.iter().zip(&state.particles) {
        f += w * spec.value(p.rho[node]);
    }
    if let Some(beta) = &spec.offset {
        f += beta.value(state.t_grid[node]);
    }
    f
}

/// Evaluates F, its analytic first and second derivatives, and finite
/// differences of F on the full track grid.
pub fn functional_report(state: &InterpolationState, spec: &FunctionalSpec) -> FunctionalReport {
    let nodes = state.node_count();
    let mut f = Vec::with_capacity(nodes);
    let mut df_an = Vec::with_capacity(nodes);
    let mut d2f_an = Vec::with_capacity(nodes);

    for k in 0..nodes {
        let t = state.t_grid[k];
        let mut fv = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (w, p) in state.cloud.weights.iter().zip(&state.particles) {
            let rho = p.rho[k];
            let a = p.volume.vdot[k] + p.riccati.s[k].trace();
            let s_norm2 = p.riccati.s[k].norm_squared();
            let (lin, quad) = spec.derivative_weights(rho);
            fv += w * spec.value(rho);
            d1 -= w * lin * a;
            d2 += w * (quad * a * a + lin * (s_norm2 + p.tr_r[k] - p.volume.vddot[k]));
        }
        if let Some(beta) = &spec.offset {
            fv += beta.value(t);
            d1 += beta.d1(t);
            d2 += beta.d2(t);
        }
        f.push(fv);
        df_an.push(d1);
        d2f_an.push(d2);
    }

    let h = if nodes > 1 { state.t_grid[1] - state.t_grid[0] } else { 1.0 };
    let df_fd = fd_first(&f, h);
    let d2f_fd = fd_second(&f, h);

    FunctionalReport {
        t: state.t_grid.clone(),
        f,
        df_analytic: df_an,
        df_fd,
        d2f_fd,
        d2f_analytic: d2f_an,
    }
}

/// Second-order first derivative on a uniform grid, one-sided at the ends.
fn fd_first(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for k in 1..n - 1 {
        out[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    out
}

/// Second-order second derivative on a uniform grid, one-sided at the ends.
fn fd_second(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 4 {
        return out;
    }
    let h2 = h * h;
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    for k in 1..n - 1 {
        out[k] = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / h2;
    }
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::flow::default_steps;
    use crate::geometry::{MeasureModel, MetricModel};
    use crate::hamiltonian::HamiltonianModel;
    use crate::transport::hj::{hj_solve, particle_cloud};
    use approx::assert_relative_eq;

    fn flat_state(f_expr: &str, t1: f64) -> InterpolationState {
        let model = HamiltonianModel::kinetic(
            MetricModel::flat_box(&[(-2.0, 2.0), (-2.0, 2.0)]),
        )
        .unwrap();
        let measure = MeasureModel::RiemannianVolume;
        let f = ScalarField::parse(f_expr, 2).unwrap();
        let cloud = particle_cloud(
            &model,
            &measure,
            &f,
            &ScalarField::constant(1.0, 2),
            0.0,
            &[(-0.5, 0.5), (-0.5, 0.5)],
            5,
        )
        .unwrap();
        hj_solve(&model, &measure, &f, &cloud, 0.0, t1, default_steps(0.0, t1)).unwrap()
    }

    #[test]
    fn linear_potential_gives_flat_entropy() {
        let state = flat_state("0.3*x1 + 0.1*x2", 1.0);
        let spec = FunctionalSpec::log_entropy();
        let report = functional_report(&state, &spec);
        for k in 0..report.len() {
            assert_relative_eq!(report.f[k], report.f[0], epsilon = 1e-12);
            assert!(report.df_analytic[k].abs() < 1e-12);
        }
        for k in 1..report.len() - 1 {
            assert!(report.df_fd[k].abs() < 1e-9);
            assert!(report.d2f_fd[k].abs() < 1e-6);
        }
    }

    #[test]
    fn quadratic_entropy_decays_logarithmically() {
        let a = 0.4;
        let state = flat_state("0.2*(x1^2 + x2^2)", 1.0);
        let spec = FunctionalSpec::log_entropy();
        let report = functional_report(&state, &spec);
        for (k, &t) in report.t.iter().enumerate() {
            let expect = report.f[0] - 2.0 * (1.0 + a * t).ln();
            assert_relative_eq!(report.f[k], expect, epsilon = 1e-8);
            assert_relative_eq!(
                report.df_analytic[k],
                -2.0 * a / (1.0 + a * t),
                epsilon = 1e-8
            );
        }
        // Interior FD agrees with the closed form to O(h^2).
        for k in 1..report.len() - 1 {
            assert!((report.df_fd[k] - report.df_analytic[k]).abs() < 1e-5);
            let t = report.t[k];
            let d2 = 2.0 * a * a / (1.0 + a * t).powi(2);
            assert!((report.d2f_fd[k] - d2).abs() < 1e-5);
            assert!((report.d2f_analytic[k] - d2).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_density_power_functional_is_constant() {
        let state = flat_state("0.3*x1 + 0.1*x2", 0.8);
        let spec = FunctionalSpec::inverse_power(2.0).unwrap();
        let report = functional_report(&state, &spec);
        let rho = state.particles[0].rho[0];
        for k in 0..report.len() {
            assert_relative_eq!(report.f[k], -rho.powf(-0.5), epsilon = 1e-10);
        }
        for k in 1..report.len() - 1 {
            assert!(report.d2f_fd[k].abs() < 1e-6);
        }
    }

    #[test]
    fn analytic_and_fd_derivatives_converge_quadratically() {
        // Weighted measure on the sphere: no closed form, but the gap
        // between analytic and FD first derivatives must shrink like h^2.
        let model =
            HamiltonianModel::kinetic(MetricModel::round_sphere(1.0).unwrap()).unwrap();
        let weight = ScalarField::parse("0.3*cos(x1)", 2).unwrap();
        let measure = MeasureModel::weighted(weight).unwrap();
        let f = ScalarField::parse("0.1*sin(x1)*sin(x2)", 2).unwrap();
        let cloud = particle_cloud(
            &model,
            &measure,
            &f,
            &ScalarField::constant(1.0, 2),
            0.0,
            &[(0.9, std::f64::consts::PI - 0.9), (-0.5, 0.5)],
            4,
        )
        .unwrap();
        let spec = FunctionalSpec::log_entropy();
        let gap = |steps: usize| {
            let state = hj_solve(&model, &measure, &f, &cloud, 0.0, 0.5, steps).unwrap();
            functional_report(&state, &spec).derivative_agreement()
        };
        let coarse = gap(64);
        let fine = gap(128);
        let slope = (coarse / fine).log2();
        assert!(
            (1.6..=2.4).contains(&slope),
            "expected quadratic convergence, slope {slope} ({coarse:.3e} -> {fine:.3e})"
        );
    }
}
