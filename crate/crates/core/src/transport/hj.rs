//! Measure transport along Hamilton-Jacobi characteristics.
//!
//! A measure is carried as a Lagrangian particle quadrature: nodes x_i with
//! fixed masses w_i and density values rho_i relative to the reference
//! measure m_t. Each particle runs the full pipeline independently: flow
//! from (x_i, df), curvature sampling along the trajectory, Riccati
//! evolution of the transported Hessian, volume distortion, and the density
//! update rho(t, phi_t(x)) = rho(0, x) exp(v(0) - v(t) - log det B(t)).

use crate::curvature::{
    self, curvature_matrix_static, curvature_via_frames, hessian_initial, volume_distortion,
};
use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::flow::{integrate_flow, Trajectory};
use crate::geometry::{curvature_pack, MeasureModel};
use crate::hamiltonian::{omega, HamiltonianModel, PhasePoint};
use crate::transport::riccati::{riccati_evolve, RiccatiTrack, CAUSTIC_LOG_THRESHOLD};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct ParticleCloud {
    pub nodes: Vec<DVector<f64>>,
    /// Lagrangian masses, quadrature cell x initial density; they sum to 1.
    pub weights: Vec<f64>,
    /// Initial density relative to the reference measure m_0.
    pub rho0: Vec<f64>,
}

impl ParticleCloud {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Tensor midpoint quadrature of mu = rho0 m0 over an axis-aligned box in
/// chart coordinates. The reference measure density e^v sqrt(det g) enters
/// the weights; masses are normalized to a probability measure and the
/// density values are rescaled accordingly, so rho0 stays the density of
/// the normalized measure with respect to the unnormalized m0.
pub fn particle_cloud(
    model: &HamiltonianModel,
    measure: &MeasureModel,
    f: &ScalarField,
    rho0: &ScalarField,
    t0: f64,
    bounds: &[(f64, f64)],
    per_axis: usize,
) -> Result<ParticleCloud> {
    let n = model.dim();
    if bounds.len() != n {
        return Err(CoreError::InvalidModel(format!(
            "quadrature box has {} axes for a dimension-{} chart",
            bounds.len(),
            n
        )));
    }
    if per_axis < 2 {
        return Err(CoreError::GridTooCoarse(
            "particle grid needs at least 2 nodes per axis".into(),
        ));
    }
    let cell: f64 = bounds.iter().map(|&(lo, hi)| (hi - lo) / per_axis as f64).product();
    if cell <= 0.0 {
        return Err(CoreError::InvalidModel("quadrature box is degenerate".into()));
    }

    let total = per_axis.pow(n as u32);
    let mut nodes = Vec::with_capacity(total);
    let mut raw = Vec::with_capacity(total);
    let mut rho_raw = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let x = DVector::from_iterator(
            n,
            idx.iter().zip(bounds).map(|(&i, &(lo, hi))| {
                lo + (i as f64 + 0.5) * (hi - lo) / per_axis as f64
            }),
        );
        model.metric.chart.check(t0, &x)?;
        let dens = rho0.value(t0, &x);
        if dens <= 0.0 {
            return Err(CoreError::NonPositiveDensity(format!(
                "initial density {dens:.3e} at node {:?}",
                x.as_slice()
            )));
        }
        let u0 = if measure.needs_hj_value() { Some(f.value(t0, &x)) } else { None };
        let v0 = measure.log_density(t0, &x, u0)?;
        raw.push(dens * v0.exp() * model.metric.sqrt_det_g(t0, &x) * cell);
        rho_raw.push(dens);
        nodes.push(x);

        for a in (0..n).rev() {
            idx[a] += 1;
            if idx[a] < per_axis {
                break;
            }
            idx[a] = 0;
        }
    }

    let mass: f64 = raw.iter().sum();
    Ok(ParticleCloud {
        nodes,
        weights: raw.iter().map(|w| w / mass).collect(),
        rho0: rho_raw.iter().map(|r| r / mass).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct VolumeDistortionTrack {
    pub v: Vec<f64>,
    pub vdot: Vec<f64>,
    pub vddot: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ParticleState {
    pub trajectory: Trajectory,
    pub riccati: RiccatiTrack,
    pub volume: VolumeDistortionTrack,
    /// Hamilton-Jacobi solution u(t, phi_t(x)) accumulated along the flow.
    pub u: Vec<f64>,
    /// Density of the transported measure relative to m_t, per node.
    pub rho: Vec<f64>,
    /// Trace of the curvature matrix sampled along the trajectory.
    pub tr_r: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct InterpolationState {
    pub t_grid: Vec<f64>,
    pub cloud: ParticleCloud,
    pub particles: Vec<ParticleState>,
    /// Worst conservation-monitor deviation over all particles.
    pub energy_drift: f64,
    /// Worst Riccati symmetrization defect over all particles.
    pub riccati_sym_residual: f64,
}

impl InterpolationState {
    pub fn dim(&self) -> usize {
        self.cloud.nodes.first().map_or(0, |x| x.len())
    }

    pub fn node_count(&self) -> usize {
        self.t_grid.len()
    }

    /// Density values rho(t_k, phi_{t_k}(x_i)) for one particle.
    pub fn density_track(&self, particle: usize) -> &[f64] {
        &self.particles[particle].rho
    }

    /// Total transport cost Sum w_i int L dt, the optimal cost by the
    /// structure of the characteristic flow.
    pub fn wasserstein_cost(&self) -> f64 {
        self.cloud
            .weights
            .iter()
            .zip(&self.particles)
            .map(|(w, p)| w * p.trajectory.action.last().unwrap())
            .sum()
    }
}

/// Samples the curvature matrix and frame rotation at one flow node.
/// Static-metric, drift-free Hamiltonians take the closed-form route; the
/// rest go through the canonical-frame engine.
fn sample_curvature(
    model: &HamiltonianModel,
    t: f64,
    pt: &PhasePoint,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if model.metric.time_dependent() || model.drift_field().is_some() {
        let cm = curvature_via_frames(model, t, pt)?;
        return Ok((cm.r, cm.omega));
    }
    let n = model.dim();
    let pack = curvature_pack(&model.metric, t, &pt.x)?;
    let r = curvature_matrix_static(model, &pack, t, pt)?;
    let e1 = curvature::edot_field(model, t, &pt.to_vec())?;
    let mut om = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let w = omega(&e1[i], &e1[j]);
            om[(i, j)] = w;
            om[(j, i)] = -w;
        }
    }
    Ok((r, om))
}

fn solve_particle(
    model: &HamiltonianModel,
    measure: &MeasureModel,
    f: &ScalarField,
    x0: &DVector<f64>,
    rho0: f64,
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<ParticleState> {
    let p0 = f.gradient(t0, x0);
    let u0 = f.value(t0, x0);
    let trajectory = integrate_flow(model, t0, &PhasePoint::new(x0.clone(), p0), t1, steps)?;

    let nodes = trajectory.t_grid.len();
    let mut r_samples = Vec::with_capacity(nodes);
    let mut om_samples = Vec::with_capacity(nodes);
    for (k, &t) in trajectory.t_grid.iter().enumerate() {
        let (r, om) = sample_curvature(model, t, &trajectory.points[k])?;
        r_samples.push(r);
        om_samples.push(om);
    }

    let s0 = hessian_initial(model, f, t0, x0)?;
    let riccati = riccati_evolve(&trajectory.t_grid, &r_samples, &om_samples, &s0)?;
    if let Some(tc) = riccati.caustic_time {
        return Err(CoreError::CausticReached { t: tc, logdet: CAUSTIC_LOG_THRESHOLD });
    }

    let mut volume = VolumeDistortionTrack {
        v: Vec::with_capacity(nodes),
        vdot: Vec::with_capacity(nodes),
        vddot: Vec::with_capacity(nodes),
    };
    let mut u = Vec::with_capacity(nodes);
    let mut rho = Vec::with_capacity(nodes);
    let tr_r: Vec<f64> = r_samples.iter().map(|r| r.trace()).collect();

    let hj_u = measure.needs_hj_value();
    let mut v_start = 0.0;
    for (k, &t) in trajectory.t_grid.iter().enumerate() {
        let uk = u0 + trajectory.action[k];
        let (v, vdot, vddot) = volume_distortion(
            model,
            measure,
            t,
            &trajectory.points[k],
            if hj_u { Some(uk) } else { None },
        )?;
        if k == 0 {
            v_start = v;
        }
        volume.v.push(v);
        volume.vdot.push(vdot);
        volume.vddot.push(vddot);
        u.push(uk);
        rho.push(rho0 * (v_start - v - riccati.logdet_b[k]).exp());
    }

    Ok(ParticleState { trajectory, riccati, volume, u, rho, tr_r })
}

/// Transports the cloud along characteristics of H started on the graph of
/// df, tracking density, Hessian, and volume distortion per particle.
pub fn hj_solve(
    model: &HamiltonianModel,
    measure: &MeasureModel,
    f: &ScalarField,
    cloud: &ParticleCloud,
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<InterpolationState> {
    let mut particles = Vec::with_capacity(cloud.len());
    let mut energy_drift: f64 = 0.0;
    let mut sym_residual: f64 = 0.0;
    for i in 0..cloud.len() {
        let state =
            solve_particle(model, measure, f, &cloud.nodes[i], cloud.rho0[i], t0, t1, steps)
                .map_err(|e| e.for_particle(i))?;
        energy_drift = energy_drift.max(state.trajectory.energy_drift);
        sym_residual = sym_residual.max(state.riccati.sym_residual);
        particles.push(state);
    }
    let t_grid = particles[0].trajectory.t_grid.clone();
    Ok(InterpolationState {
        t_grid,
        cloud: cloud.clone(),
        particles,
        energy_drift,
        riccati_sym_residual: sym_residual,
    })
}

/// Verifies that the p-component of the flow is the spatial gradient of u:
/// for each axis, two characteristics from x0 +- eps e_i give a symmetric
/// difference of u at time t1 that must match p . (y+ - y-) of the center
/// trajectory to O(eps^2). Returns the worst normalized residual.
pub fn gradient_consistency(
    model: &HamiltonianModel,
    f: &ScalarField,
    t0: f64,
    x0: &DVector<f64>,
    t1: f64,
    steps: usize,
) -> Result<f64> {
    let n = model.dim();
    let eps = 1e-4;
    let center = integrate_flow(
        model,
        t0,
        &PhasePoint::new(x0.clone(), f.gradient(t0, x0)),
        t1,
        steps,
    )?;
    let p_end = &center.end().p;

    let run = |x: DVector<f64>| -> Result<(DVector<f64>, f64)> {
        let u0 = f.value(t0, &x);
        let p0 = f.gradient(t0, &x);
        let traj = integrate_flow(model, t0, &PhasePoint::new(x, p0), t1, steps)?;
        Ok((traj.end().x.clone(), u0 + traj.action.last().unwrap()))
    };

    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut xp = x0.clone();
        xp[i] += eps;
        let mut xm = x0.clone();
        xm[i] -= eps;
        let (yp, up) = run(xp)?;
        let (ym, um) = run(xm)?;
        let residual = ((up - um) - p_end.dot(&(yp - ym))).abs() / (2.0 * eps);
        worst = worst.max(residual);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TimeFn;
    use crate::flow::{default_steps, integrate_variational};
    use crate::geometry::scale::ScaleSolution;
    use crate::geometry::MetricModel;
    use crate::hamiltonian::{PotentialSpec, TangentVector};
    use approx::assert_relative_eq;

    fn flat_model(half: f64) -> HamiltonianModel {
        HamiltonianModel::kinetic(MetricModel::flat_box(&[(-half, half), (-half, half)]))
            .unwrap()
    }

    fn uniform_cloud(model: &HamiltonianModel, half: f64, per_axis: usize) -> ParticleCloud {
        particle_cloud(
            model,
            &MeasureModel::RiemannianVolume,
            &ScalarField::zero(2),
            &ScalarField::constant(1.0, 2),
            0.0,
            &[(-half, half), (-half, half)],
            per_axis,
        )
        .unwrap()
    }

    #[test]
    fn cloud_masses_are_normalized() {
        let model = flat_model(2.0);
        let cloud = particle_cloud(
            &model,
            &MeasureModel::RiemannianVolume,
            &ScalarField::zero(2),
            &ScalarField::parse("1 + 0.3*cos(x1)*sin(x2)", 2).unwrap(),
            0.0,
            &[(-0.5, 0.5), (-0.5, 0.5)],
            6,
        )
        .unwrap();
        let mass: f64 = cloud.weights.iter().sum();
        assert_relative_eq!(mass, 1.0, epsilon = 1e-12);
        assert!(cloud.weights.iter().all(|w| *w > 0.0));
        assert_eq!(cloud.len(), 36);
    }

    #[test]
    fn translation_keeps_density_constant() {
        let model = flat_model(2.0);
        let cloud = uniform_cloud(&model, 0.5, 5);
        let f = ScalarField::parse("0.3*x1 + 0.1*x2", 2).unwrap();
        let state = hj_solve(
            &model,
            &MeasureModel::RiemannianVolume,
            &f,
            &cloud,
            0.0,
            1.0,
            default_steps(0.0, 1.0),
        )
        .unwrap();

        let speed2: f64 = 0.3f64 * 0.3 + 0.1 * 0.1;
        for (i, p) in state.particles.iter().enumerate() {
            for (k, &t) in state.t_grid.iter().enumerate() {
                assert_relative_eq!(p.rho[k], cloud.rho0[i], max_relative = 1e-12);
                assert_relative_eq!(p.u[k] - p.u[0], t * speed2 / 2.0, epsilon = 1e-12);
                assert!(p.riccati.logdet_b[k].abs() < 1e-12);
            }
        }
        assert_relative_eq!(state.wasserstein_cost(), speed2 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_spreads_with_closed_form_density() {
        let a = 0.4;
        let model = flat_model(1.2);
        let cloud = uniform_cloud(&model, 0.5, 4);
        let f = ScalarField::parse("0.2*(x1^2 + x2^2)", 2).unwrap();
        let state = hj_solve(
            &model,
            &MeasureModel::RiemannianVolume,
            &f,
            &cloud,
            0.0,
            1.0,
            default_steps(0.0, 1.0),
        )
        .unwrap();
        for p in &state.particles {
            for (k, &t) in state.t_grid.iter().enumerate() {
                let growth: f64 = 1.0 + a * t;
                assert_relative_eq!(p.riccati.logdet_b[k], 2.0 * growth.ln(), epsilon = 1e-8);
                assert_relative_eq!(p.rho[k], p.rho[0] / growth.powi(2), max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn weighted_measure_density_follows_the_weight() {
        let model = flat_model(2.0);
        let weight = ScalarField::parse("cos(x1)", 2).unwrap();
        let measure = MeasureModel::weighted(weight.clone()).unwrap();
        let cloud = particle_cloud(
            &model,
            &measure,
            &ScalarField::zero(2),
            &ScalarField::constant(1.0, 2),
            0.0,
            &[(-0.5, 0.5), (-0.5, 0.5)],
            4,
        )
        .unwrap();
        let f = ScalarField::parse("0.25*x1", 2).unwrap();
        let state = hj_solve(&model, &measure, &f, &cloud, 0.0, 1.0, 512).unwrap();
        for (i, p) in state.particles.iter().enumerate() {
            let x0 = &cloud.nodes[i];
            for (k, &t) in state.t_grid.iter().enumerate() {
                let expect = cloud.rho0[i]
                    * ((x0[0] + 0.25 * t).cos() - x0[0].cos()).exp();
                assert_relative_eq!(p.rho[k], expect, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn focusing_potential_hits_caustic_near_one() {
        let model = flat_model(2.0);
        let cloud = uniform_cloud(&model, 0.4, 3);
        let f = ScalarField::parse("-0.5*(x1^2 + x2^2)", 2).unwrap();
        let err = hj_solve(
            &model,
            &MeasureModel::RiemannianVolume,
            &f,
            &cloud,
            0.0,
            1.05,
            default_steps(0.0, 1.05),
        )
        .unwrap_err();
        match err.root() {
            CoreError::CausticReached { t, .. } => {
                assert!((t - 0.999).abs() < 1e-3, "caustic latched at {t}")
            }
            other => panic!("expected a caustic, got {other}"),
        }
    }

    /// Independent check of log det B: the frame Jacobian of the optimal map
    /// from the linearized flow with seeds (b_j, Hess f b_j) must reproduce
    /// the Riccati-accumulated log det B.
    fn logdet_cross_check(model: &HamiltonianModel, f: &ScalarField, t0: f64, t1: f64) {
        let x0 = DVector::from_vec(vec![1.1, 0.4]);
        let cloud = ParticleCloud {
            nodes: vec![x0.clone()],
            weights: vec![1.0],
            rho0: vec![1.0],
        };
        let steps = default_steps(t0, t1);
        let state = hj_solve(
            model,
            &MeasureModel::RiemannianVolume,
            f,
            &cloud,
            t0,
            t1,
            steps,
        )
        .unwrap();

        let l0 = model.metric.chol_l(t0, &x0).unwrap();
        let l0_inv_t = l0.transpose().try_inverse().unwrap();
        let hess = f.hessian(t0, &x0);
        let seeds: Vec<TangentVector> = (0..2)
            .map(|j| {
                let dx = l0_inv_t.column(j).into_owned();
                TangentVector::new(dx.clone(), &hess * dx)
            })
            .collect();
        let p0 = f.gradient(t0, &x0);
        let track = integrate_variational(
            model,
            t0,
            &PhasePoint::new(x0, p0),
            t1,
            steps,
            &seeds,
        )
        .unwrap();

        for k in (0..state.t_grid.len()).step_by(37) {
            let t = state.t_grid[k];
            let c = model
                .metric
                .chol_l(t, &track.trajectory.points[k].x)
                .unwrap()
                .transpose();
            let mut b = DMatrix::zeros(2, 2);
            for (j, d) in track.deltas[k].iter().enumerate() {
                b.set_column(j, &(&c * &d.dx));
            }
            let expect = b.determinant().abs().ln();
            assert_relative_eq!(
                state.particles[0].riccati.logdet_b[k],
                expect,
                epsilon = 5e-7,
            );
        }
    }

    #[test]
    fn riccati_logdet_matches_linearized_flow_on_sphere() {
        let model =
            HamiltonianModel::kinetic(MetricModel::round_sphere(1.0).unwrap()).unwrap();
        let f = ScalarField::parse("0.05*sin(x1)*cos(x2)", 2).unwrap();
        logdet_cross_check(&model, &f, 0.0, 0.6);
    }

    #[test]
    fn riccati_logdet_matches_linearized_flow_on_shrinking_sphere() {
        let scale = ScaleSolution::solve(
            TimeFn::constant(-2.0),
            TimeFn::constant(0.0),
            1.0,
            2,
            0.0,
            1.0,
            -0.01,
            0.21,
            512,
        )
        .unwrap();
        let base = MetricModel::round_sphere(1.0).unwrap();
        let metric = MetricModel::scaled_family(base, scale).unwrap();
        let model =
            HamiltonianModel::time_dependent(metric, Some(PotentialSpec::RicciScaled)).unwrap();
        let f = ScalarField::parse("0.05*sin(x1)*cos(x2)", 2).unwrap();
        logdet_cross_check(&model, &f, 0.0, 0.2);
    }

    #[test]
    fn hj_gradient_matches_momentum() {
        let model =
            HamiltonianModel::kinetic(MetricModel::round_sphere(1.0).unwrap()).unwrap();
        let f = ScalarField::parse("0.05*sin(x1)*cos(x2)", 2).unwrap();
        let x0 = DVector::from_vec(vec![1.2, -0.3]);
        let res = gradient_consistency(&model, &f, 0.0, &x0, 0.4, 256).unwrap();
        assert!(res < 1e-7, "gradient consistency residual {res}");
    }
}
