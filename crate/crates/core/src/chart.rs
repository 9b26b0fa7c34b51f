//! Coordinate charts with per-axis legality rules.
//!
//! Trajectories stay in a single chart for every supported model, so legality
//! is a box condition: each axis is either periodic (never illegal, wrapped
//! only for reporting) or bounded to an interval that already includes any
//! safety margin the model requires.

use nalgebra::DVector;

use crate::error::{CoreError, Result};

#[derive(Debug, Clone)]
pub enum Axis {
    Periodic { period: f64 },
    Bounded { lo: f64, hi: f64 },
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub name: String,
    pub axes: Vec<Axis>,
}

impl Chart {
    pub fn new(name: &str, axes: Vec<Axis>) -> Self {
        Chart {
            name: name.to_string(),
            axes,
        }
    }

    pub fn torus(name: &str, n: usize, period: f64) -> Self {
        Chart {
            name: name.to_string(),
            axes: (0..n).map(|_| Axis::Periodic { period }).collect(),
        }
    }

    pub fn boxed(name: &str, bounds: &[(f64, f64)]) -> Self {
        Chart {
            name: name.to_string(),
            axes: bounds
                .iter()
                .map(|&(lo, hi)| Axis::Bounded { lo, hi })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Fails with the chart name and offending position when a bounded axis
    /// is violated. Periodic axes are always legal.
    pub fn check(&self, t: f64, x: &DVector<f64>) -> Result<()> {
        for (i, axis) in self.axes.iter().enumerate() {
            if let Axis::Bounded { lo, hi } = axis {
                if x[i] < *lo || x[i] > *hi {
                    return Err(CoreError::ChartBoundary {
                        chart: self.name.clone(),
                        t,
                        x: x.iter().copied().collect(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Wraps periodic coordinates into [-period/2, period/2). Bounded axes
    /// pass through unchanged.
    pub fn wrap(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = x.clone();
        for (i, axis) in self.axes.iter().enumerate() {
            if let Axis::Periodic { period } = axis {
                let half = period / 2.0;
                out[i] = (out[i] + half).rem_euclid(*period) - half;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_axis_rejects_outside() {
        let c = Chart::boxed("band", &[(0.15, 3.0), (-10.0, 10.0)]);
        assert!(c.check(0.0, &DVector::from_vec(vec![0.2, 0.0])).is_ok());
        let err = c.check(1.5, &DVector::from_vec(vec![0.1, 0.0]));
        match err {
            Err(CoreError::ChartBoundary { chart, t, .. }) => {
                assert_eq!(chart, "band");
                assert_eq!(t, 1.5);
            }
            other => panic!("expected boundary error, got {other:?}"),
        }
    }

    #[test]
    fn periodic_axis_always_legal_and_wraps() {
        let c = Chart::torus("t2", 2, std::f64::consts::TAU);
        let far = DVector::from_vec(vec![100.0, -7.0]);
        assert!(c.check(0.0, &far).is_ok());
        let w = c.wrap(&far);
        for i in 0..2 {
            assert!(w[i] >= -std::f64::consts::PI && w[i] < std::f64::consts::PI);
            let d = (w[i] - far[i]).rem_euclid(std::f64::consts::TAU);
            assert!(d.abs() < 1e-9 || (d - std::f64::consts::TAU).abs() < 1e-9);
        }
    }
}
