//! Randomized cross-validation of the two curvature-trace routes.
//!
//! The frame engine and the analytic trace formula share no derivation:
//! one extracts [R] from symplectic pairings of transported frame fields,
//! the other sums the closed-form trace contributions. Agreement at random
//! phase points over all model families is the main correctness oracle.

use crate::curvature::{curvature_trace_analytic, curvature_via_frames};
use crate::error::Result;
use crate::field::{ScalarField, TimeFn};
use crate::geometry::scale::ScaleSolution;
use crate::geometry::MetricModel;
use crate::hamiltonian::{HamiltonianModel, PhasePoint, PotentialSpec};
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct SweepFamily {
    pub name: &'static str,
    pub model: HamiltonianModel,
    /// Sampling box for positions, one (lo, hi) pair per axis.
    pub position_box: Vec<(f64, f64)>,
    /// Sampling window for t; degenerate for static models.
    pub time_window: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub family: &'static str,
    pub index: usize,
    pub t: f64,
    pub frame_trace: f64,
    pub analytic_trace: f64,
    pub rel_err: f64,
}

/// The five model families exercised by the oracle sweep.
pub fn sweep_families() -> Result<Vec<SweepFamily>> {
    use std::f64::consts::PI;
    let mut out = Vec::new();

    out.push(SweepFamily {
        name: "flat-torus-potential",
        model: HamiltonianModel::mechanical(
            MetricModel::flat_torus(2),
            ScalarField::parse("0.3*cos(x1) + 0.2*sin(x1)*sin(x2)", 2)?,
        )?,
        position_box: vec![(-3.0, 3.0), (-3.0, 3.0)],
        time_window: (0.0, 0.0),
    });

    out.push(SweepFamily {
        name: "sphere-potential",
        model: HamiltonianModel::mechanical(
            MetricModel::round_sphere(1.0)?,
            ScalarField::parse("0.25*cos(x1) + 0.1*sin(x1)*cos(x2)", 2)?,
        )?,
        position_box: vec![(0.8, PI - 0.8), (-3.0, 3.0)],
        time_window: (0.0, 0.0),
    });

    out.push(SweepFamily {
        name: "conformal-torus",
        model: HamiltonianModel::kinetic(MetricModel::conformal_torus(ScalarField::parse(
            "0.15*sin(x1) + 0.1*cos(x2)",
            2,
        )?)?)?,
        position_box: vec![(-3.0, 3.0), (-3.0, 3.0)],
        time_window: (0.0, 0.0),
    });

    let scale = ScaleSolution::solve(
        TimeFn::constant(-2.0),
        TimeFn::constant(0.0),
        1.0,
        2,
        0.0,
        1.0,
        -0.05,
        0.25,
        512,
    )?;
    out.push(SweepFamily {
        name: "shrinking-sphere",
        model: HamiltonianModel::time_dependent(
            MetricModel::scaled_family(MetricModel::round_sphere(1.0)?, scale)?,
            Some(PotentialSpec::RicciScaled),
        )?,
        position_box: vec![(0.8, PI - 0.8), (-3.0, 3.0)],
        time_window: (0.0, 0.2),
    });

    out.push(SweepFamily {
        name: "drift-flat",
        model: HamiltonianModel::drift(
            MetricModel::flat_torus(2),
            ScalarField::parse("0.1*sin(x1) + 0.05*cos(x2)", 2)?,
            Some(ScalarField::parse("0.04*cos(x1)*cos(x2)", 2)?),
        )?,
        position_box: vec![(-3.0, 3.0), (-3.0, 3.0)],
        time_window: (0.0, 0.0),
    });

    Ok(out)
}

/// Compares the frame-extracted trace against the analytic trace at random
/// phase points of every family. Momentum components are drawn from
/// [-1, 1]; the relative error is normalized by max(1, |analytic|).
pub fn curvature_trace_sweep(seed: u64, samples_per_family: usize) -> Result<Vec<SweepRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for family in sweep_families()? {
        let n = family.model.dim();
        for index in 0..samples_per_family {
            let x = DVector::from_iterator(
                n,
                family.position_box.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)),
            );
            let p = DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-1.0..1.0)));
            let t = if family.time_window.1 > family.time_window.0 {
                rng.gen_range(family.time_window.0..family.time_window.1)
            } else {
                family.time_window.0
            };
            let pt = PhasePoint::new(x, p);
            let frame_trace = curvature_via_frames(&family.model, t, &pt)?.r.trace();
            let analytic_trace = curvature_trace_analytic(&family.model, t, &pt)?;
            let rel_err =
                (frame_trace - analytic_trace).abs() / analytic_trace.abs().max(1.0);
            rows.push(SweepRow {
                family: family.name,
                index,
                t,
                frame_trace,
                analytic_trace,
                rel_err,
            });
        }
    }
    Ok(rows)
}

pub fn worst_relative_error(rows: &[SweepRow]) -> f64 {
    rows.iter().map(|r| r.rel_err).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_families_agree_at_random_points() {
        let rows = curvature_trace_sweep(7, 8).unwrap();
        assert_eq!(rows.len(), 40);
        let worst = worst_relative_error(&rows);
        assert!(worst <= 1e-3, "worst relative error {worst:.3e}");
    }

    #[test]
    fn sweep_is_deterministic_for_a_seed() {
        let a = curvature_trace_sweep(11, 3).unwrap();
        let b = curvature_trace_sweep(11, 3).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.frame_trace.to_bits(), rb.frame_trace.to_bits());
            assert_eq!(ra.analytic_trace.to_bits(), rb.analytic_trace.to_bits());
        }
    }
}
