//! Hamiltonian flow integration.
//!
//! Classical fixed-step RK4 on the first-order system xdot = H_p,
//! pdot = -H_x, with two extra scalar accumulators: the Hamilton-Jacobi
//! value increment udot = p . H_p - H (the Lagrangian along the
//! characteristic) and the running integral of H_t. The latter turns
//! dH/dt = H_t into a conservation monitor that works for time-dependent
//! Hamiltonians and reduces to plain energy conservation for autonomous
//! ones. Variational seeds ride along in the same state vector so the
//! linearized flow sees exactly the trajectory being integrated rather than
//! a finite-difference neighbor.

use crate::error::{CoreError, Result};
use crate::hamiltonian::{omega, HamiltonianModel, PhasePoint, TangentVector};
use crate::numeric::rk4_step;
use nalgebra::DVector;

pub const MIN_STEPS: usize = 16;
pub const STEPS_PER_UNIT_TIME: f64 = 512.0;

/// Default step count for a window: 512 per unit time, never fewer than 16.
pub fn default_steps(t0: f64, t1: f64) -> usize {
    ((t1 - t0).abs() * STEPS_PER_UNIT_TIME).ceil().max(MIN_STEPS as f64) as usize
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t_grid: Vec<f64>,
    pub points: Vec<PhasePoint>,
    /// Accumulated action integral of p . H_p - H from t0 to each node.
    pub action: Vec<f64>,
    pub h: f64,
    /// Max deviation of H(t, z(t)) - H(t0, z0) from the integral of H_t.
    pub energy_drift: f64,
}

impl Trajectory {
    pub fn end(&self) -> &PhasePoint {
        self.points.last().expect("trajectory has at least the initial node")
    }
}

#[derive(Debug, Clone)]
pub struct VariationalTrack {
    pub trajectory: Trajectory,
    /// deltas[node][seed], linearized flow images of the seed vectors.
    pub deltas: Vec<Vec<TangentVector>>,
    /// Max drift of any pairwise symplectic product from its initial value.
    pub omega_drift: f64,
}

fn check_steps(steps: usize) -> Result<()> {
    if steps < MIN_STEPS {
        return Err(CoreError::StepCount { found: steps, min: MIN_STEPS });
    }
    Ok(())
}

pub fn integrate_flow(
    model: &HamiltonianModel,
    t0: f64,
    z0: &PhasePoint,
    t1: f64,
    steps: usize,
) -> Result<Trajectory> {
    let track = integrate_variational(model, t0, z0, t1, steps, &[])?;
    Ok(track.trajectory)
}

pub fn integrate_variational(
    model: &HamiltonianModel,
    t0: f64,
    z0: &PhasePoint,
    t1: f64,
    steps: usize,
    seeds: &[TangentVector],
) -> Result<VariationalTrack> {
    check_steps(steps)?;
    if !(t1 > t0) {
        return Err(CoreError::InvalidModel(format!(
            "integration window [{t0}, {t1}] must be increasing"
        )));
    }
    let n = model.dim();
    let m = seeds.len();
    let h = (t1 - t0) / steps as f64;
    model.metric.chart.check(t0, &z0.x)?;

    // State layout: [x, p, u, int(H_t), delta_1, .., delta_m].
    let width = 2 * n + 2 + 2 * n * m;
    let mut y = DVector::zeros(width);
    y.rows_mut(0, n).copy_from(&z0.x);
    y.rows_mut(n, n).copy_from(&z0.p);
    for (j, seed) in seeds.iter().enumerate() {
        y.rows_mut(2 * n + 2 + 2 * n * j, 2 * n).copy_from(&seed.to_vec());
    }

    let rhs = |t: f64, y: &DVector<f64>| {
        let pt = PhasePoint::new(y.rows(0, n).into_owned(), y.rows(n, n).into_owned());
        let b = model.derivative_blocks(t, &pt);
        let mut dy = DVector::zeros(width);
        dy.rows_mut(0, n).copy_from(&b.hp);
        dy.rows_mut(n, n).copy_from(&(-&b.hx));
        dy[2 * n] = pt.p.dot(&b.hp) - b.h;
        dy[2 * n + 1] = b.ht;
        if m > 0 {
            let j = model.jacobian(t, &pt.to_vec());
            for s in 0..m {
                let d = y.rows(2 * n + 2 + 2 * n * s, 2 * n).into_owned();
                dy.rows_mut(2 * n + 2 + 2 * n * s, 2 * n).copy_from(&(&j * d));
            }
        }
        dy
    };

    let h0 = model.evaluate(t0, z0);
    let omega0: Vec<Vec<f64>> =
        (0..m).map(|i| (0..m).map(|j| omega(&seeds[i], &seeds[j])).collect()).collect();

    let mut t_grid = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let mut action = Vec::with_capacity(steps + 1);
    let mut deltas = Vec::with_capacity(steps + 1);
    let mut energy_drift: f64 = 0.0;
    let mut omega_drift: f64 = 0.0;

    let unpack = |y: &DVector<f64>| {
        let pt = PhasePoint::new(y.rows(0, n).into_owned(), y.rows(n, n).into_owned());
        let ds: Vec<TangentVector> = (0..m)
            .map(|s| TangentVector::from_vec(&y.rows(2 * n + 2 + 2 * n * s, 2 * n).into_owned()))
            .collect();
        (pt, ds)
    };

    for k in 0..=steps {
        let t = t0 + k as f64 * h;
        if k > 0 {
            y = rk4_step(&rhs, t - h, &y, h);
        }
        let (pt, ds) = unpack(&y);
        model.metric.chart.check(t, &pt.x)?;

        let drift = (model.evaluate(t, &pt) - h0 - y[2 * n + 1]).abs();
        energy_drift = energy_drift.max(drift);
        for i in 0..m {
            for j in 0..i {
                omega_drift = omega_drift.max((omega(&ds[i], &ds[j]) - omega0[i][j]).abs());
            }
        }

        t_grid.push(t);
        action.push(y[2 * n]);
        points.push(pt);
        deltas.push(ds);
    }

    Ok(VariationalTrack {
        trajectory: Trajectory { t_grid, points, action, h, energy_drift },
        deltas,
        omega_drift,
    })
}

/// Action integral of the Lagrangian along the characteristic from t0 to t1,
/// which by the method of characteristics is u(t1, end) - u(t0, start).
pub fn cost_action(
    model: &HamiltonianModel,
    t0: f64,
    z0: &PhasePoint,
    t1: f64,
    steps: usize,
) -> Result<f64> {
    let traj = integrate_flow(model, t0, z0, t1, steps)?;
    Ok(*traj.action.last().unwrap())
}

/// Checks fiberwise quadratic homogeneity of H and the induced flow
/// reparametrization: the base projection of the flow from (x, lambda p)
/// at time t equals the projection of the flow from (x, p) at lambda t.
/// Returns the sup node-wise base discrepancy.
pub fn homogeneity_flow_check(
    model: &HamiltonianModel,
    z0: &PhasePoint,
    t_span: f64,
    lambda: f64,
    steps: usize,
) -> Result<f64> {
    let r = model.evaluate(0.0, &PhasePoint::new(z0.x.clone(), &z0.p * lambda))
        - lambda * lambda * model.evaluate(0.0, z0);
    if r.abs() > 1e-10 {
        return Err(CoreError::NotHomogeneous(format!(
            "H(x, lambda p) - lambda^2 H(x, p) = {r:.3e}; homogeneity checks need a kinetic kind"
        )));
    }
    let scaled = integrate_flow(
        model,
        0.0,
        &PhasePoint::new(z0.x.clone(), &z0.p * lambda),
        t_span,
        steps,
    )?;
    let slowed = integrate_flow(model, 0.0, z0, lambda * t_span, steps)?;
    let mut worst: f64 = 0.0;
    for k in 0..=steps {
        worst = worst.max((&scaled.points[k].x - &slowed.points[k].x).norm());
    }
    Ok(worst)
}

/// Endpoint error ratio between step sizes h and h/2 against a reference
/// run at h/8; fourth-order integrators land near 16.
pub fn convergence_ratio(
    model: &HamiltonianModel,
    t0: f64,
    z0: &PhasePoint,
    t1: f64,
    steps: usize,
) -> Result<f64> {
    let coarse = integrate_flow(model, t0, z0, t1, steps)?;
    let fine = integrate_flow(model, t0, z0, t1, steps * 2)?;
    let reference = integrate_flow(model, t0, z0, t1, steps * 8)?;
    let zr = reference.end().to_vec();
    let e1 = (coarse.end().to_vec() - &zr).norm();
    let e2 = (fine.end().to_vec() - &zr).norm();
    if e2 == 0.0 {
        return Err(CoreError::GridTooCoarse(
            "refinement reached rounding level; use fewer steps".into(),
        ));
    }
    Ok(e1 / e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::geometry::metric::MetricModel;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn flat_kinetic() -> HamiltonianModel {
        HamiltonianModel::kinetic(MetricModel::flat_torus(2)).unwrap()
    }

    #[test]
    fn straight_lines_on_flat_torus() {
        let model = flat_kinetic();
        let z0 = PhasePoint::new(
            DVector::from_vec(vec![0.1, -0.2]),
            DVector::from_vec(vec![0.4, 0.3]),
        );
        let traj = integrate_flow(&model, 0.0, &z0, 1.0, 64).unwrap();
        let end = traj.end();
        assert_relative_eq!(end.x[0], 0.1 + 0.4, epsilon = 1e-12);
        assert_relative_eq!(end.x[1], -0.2 + 0.3, epsilon = 1e-12);
        assert!((&end.p - &z0.p).norm() < 1e-13);
        assert!(traj.energy_drift < 1e-13);
        // u accumulates the kinetic Lagrangian (1/2)|p|^2 t.
        let expect = 0.5 * z0.p.norm_squared();
        assert_relative_eq!(traj.action.last().unwrap(), &expect, epsilon = 1e-12);
    }

    #[test]
    fn sphere_great_circle_period() {
        // Equatorial geodesic: theta = pi/2, p_theta = 0; phi advances with
        // speed p_phi / r^2 and returns after phi period 2 pi r^2 / p_phi.
        let model = HamiltonianModel::kinetic(MetricModel::round_sphere(1.0).unwrap()).unwrap();
        let z0 = PhasePoint::new(
            DVector::from_vec(vec![PI / 2.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        );
        let t_end = 2.0 * PI;
        let traj = integrate_flow(&model, 0.0, &z0, t_end, 2048).unwrap();
        let end = traj.end();
        assert_relative_eq!(end.x[0], PI / 2.0, epsilon = 1e-10);
        assert_relative_eq!(end.x[1], 2.0 * PI, epsilon = 1e-8);
        assert!(traj.energy_drift < 1e-12);
    }

    #[test]
    fn pendulum_energy_monitor() {
        let model = HamiltonianModel::mechanical(
            MetricModel::flat_torus(1),
            ScalarField::parse("0.5*cos(x1)", 1).unwrap(),
        )
        .unwrap();
        let z0 =
            PhasePoint::new(DVector::from_vec(vec![0.3]), DVector::from_vec(vec![0.8]));
        let traj = integrate_flow(&model, 0.0, &z0, 4.0, 2048).unwrap();
        assert!(traj.energy_drift < 1e-10, "drift {}", traj.energy_drift);
    }

    #[test]
    fn fourth_order_ratio() {
        let model = HamiltonianModel::mechanical(
            MetricModel::flat_torus(1),
            ScalarField::parse("0.5*cos(x1)", 1).unwrap(),
        )
        .unwrap();
        let z0 =
            PhasePoint::new(DVector::from_vec(vec![0.3]), DVector::from_vec(vec![0.8]));
        let ratio = convergence_ratio(&model, 0.0, &z0, 1.0, 20).unwrap();
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn variational_matches_neighbor_difference() {
        let model = HamiltonianModel::mechanical(
            MetricModel::round_sphere(1.0).unwrap(),
            ScalarField::parse("0.1*cos(x1)*sin(x2)", 2).unwrap(),
        )
        .unwrap();
        let z0 = PhasePoint::new(
            DVector::from_vec(vec![1.3, 0.2]),
            DVector::from_vec(vec![0.2, 0.5]),
        );
        let seed = TangentVector::new(
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        );
        let track =
            integrate_variational(&model, 0.0, &z0, 0.8, 512, std::slice::from_ref(&seed))
                .unwrap();

        let eps = 1e-6;
        let mut zp = z0.to_vec();
        let sv = seed.to_vec();
        zp.axpy(eps, &sv, 1.0);
        let plus =
            integrate_flow(&model, 0.0, &PhasePoint::from_vec(&zp), 0.8, 512).unwrap();
        let mut zm = z0.to_vec();
        zm.axpy(-eps, &sv, 1.0);
        let minus =
            integrate_flow(&model, 0.0, &PhasePoint::from_vec(&zm), 0.8, 512).unwrap();
        let fd =
            (plus.end().to_vec() - minus.end().to_vec()) / (2.0 * eps);
        let delta = track.deltas.last().unwrap()[0].to_vec();
        assert!((fd - delta).norm() < 1e-6);
    }

    #[test]
    fn omega_pairs_are_preserved() {
        let model = HamiltonianModel::mechanical(
            MetricModel::round_sphere(1.0).unwrap(),
            ScalarField::parse("0.1*cos(x1)", 2).unwrap(),
        )
        .unwrap();
        let z0 = PhasePoint::new(
            DVector::from_vec(vec![1.2, 0.1]),
            DVector::from_vec(vec![0.1, 0.4]),
        );
        let seeds = vec![
            TangentVector::new(DVector::from_vec(vec![1.0, 0.0]), DVector::zeros(2)),
            TangentVector::new(DVector::zeros(2), DVector::from_vec(vec![1.0, 0.0])),
            TangentVector::new(
                DVector::from_vec(vec![0.0, 1.0]),
                DVector::from_vec(vec![0.0, 1.0]),
            ),
        ];
        let track = integrate_variational(&model, 0.0, &z0, 1.0, 512, &seeds).unwrap();
        assert!(track.omega_drift < 1e-9, "omega drift {}", track.omega_drift);
    }

    #[test]
    fn flow_reparametrizes_under_fiber_scaling() {
        let model = HamiltonianModel::kinetic(MetricModel::round_sphere(1.0).unwrap()).unwrap();
        let z0 = PhasePoint::new(
            DVector::from_vec(vec![1.0, 0.3]),
            DVector::from_vec(vec![0.2, 0.6]),
        );
        let disc = homogeneity_flow_check(&model, &z0, 0.5, 1.7, 256).unwrap();
        assert!(disc < 1e-8, "discrepancy {disc}");

        let mech = HamiltonianModel::mechanical(
            MetricModel::flat_torus(2),
            ScalarField::parse("0.3*cos(x1)", 2).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            homogeneity_flow_check(&mech, &z0, 0.5, 2.0, 64),
            Err(CoreError::NotHomogeneous(_))
        ));
    }

    #[test]
    fn guards() {
        let model = flat_kinetic();
        let z0 = PhasePoint::new(DVector::zeros(2), DVector::zeros(2));
        assert!(matches!(
            integrate_flow(&model, 0.0, &z0, 1.0, 8),
            Err(CoreError::StepCount { .. })
        ));

        // Leaving the sphere chart through the polar wall is an error.
        let sphere = HamiltonianModel::kinetic(MetricModel::round_sphere(1.0).unwrap()).unwrap();
        let toward_pole = PhasePoint::new(
            DVector::from_vec(vec![0.4, 0.0]),
            DVector::from_vec(vec![-1.0, 0.0]),
        );
        assert!(matches!(
            integrate_flow(&sphere, 0.0, &toward_pole, 1.0, 64),
            Err(CoreError::ChartBoundary { .. })
        ));
    }
}
