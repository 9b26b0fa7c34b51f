//! Scale factor s(t) for metric families g(t) = s(t) g0 on an Einstein base.
//!
//! When the base metric has Ricci curvature Rc(g0) = (n-1) kappa0 g0, the
//! evolution gdot = c1(t) Rc(g(t)) + c2(t) g(t) collapses to the scalar ODE
//! sdot = c1(t) (n-1) kappa0 + c2(t) s, because Ricci curvature is invariant
//! under constant rescaling. The solver
//! integrates this ODE once over the working window on a dense grid and
//! answers point queries by cubic Hermite interpolation, with slopes taken
//! from the ODE right-hand side so s and sdot stay mutually consistent.

use crate::error::{CoreError, Result};
use crate::field::TimeFn;
use crate::numeric;
use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct ScaleSolution {
    pub c1: TimeFn,
    pub c2: TimeFn,
    pub kappa0: f64,
    pub dim: usize,
    lo: f64,
    hi: f64,
    step: f64,
    nodes: Vec<f64>,
}

impl ScaleSolution {
    /// Integrates the scale ODE over [lo, hi] starting from s(anchor) = s0.
    /// The anchor must lie inside the window; integration runs outward in
    /// both directions on a grid of `cells` intervals.
    pub fn solve(
        c1: TimeFn,
        c2: TimeFn,
        kappa0: f64,
        dim: usize,
        anchor: f64,
        s0: f64,
        lo: f64,
        hi: f64,
        cells: usize,
    ) -> Result<Self> {
        if !(lo < hi) || anchor < lo - 1e-12 || anchor > hi + 1e-12 {
            return Err(CoreError::InvalidModel(format!(
                "scale window [{lo}, {hi}] must be increasing and contain the anchor {anchor}"
            )));
        }
        if s0 <= 0.0 {
            return Err(CoreError::NotSpd {
                context: format!("initial scale s({anchor}) = {s0} must be positive"),
            });
        }
        let cells = cells.max(256);
        let step = (hi - lo) / cells as f64;
        let rhs = |t: f64, s: f64| c1.value(t) * (dim as f64 - 1.0) * kappa0 + c2.value(t) * s;
        let vec_rhs = |t: f64, y: &DVector<f64>| DVector::from_element(1, rhs(t, y[0]));

        // Nearest grid node to the anchor; a short RK4 burst covers the
        // fractional offset so the anchor value is honored exactly.
        let idx = (((anchor - lo) / step).round() as usize).min(cells);
        let mut nodes = vec![0.0; cells + 1];
        let mut y = DVector::from_element(1, s0);
        let t_idx = lo + idx as f64 * step;
        let off = t_idx - anchor;
        if off.abs() > 1e-14 {
            for k in 0..4 {
                y = numeric::rk4_step(&vec_rhs, anchor + off * k as f64 / 4.0, &y, off / 4.0);
            }
        }
        nodes[idx] = y[0];

        let substeps = 4;
        let mut forward = y.clone();
        for i in idx..cells {
            let t = lo + i as f64 * step;
            for k in 0..substeps {
                let tk = t + step * k as f64 / substeps as f64;
                forward = numeric::rk4_step(&vec_rhs, tk, &forward, step / substeps as f64);
            }
            nodes[i + 1] = forward[0];
        }
        let mut backward = y;
        for i in (0..idx).rev() {
            let t = lo + (i + 1) as f64 * step;
            for k in 0..substeps {
                let tk = t - step * k as f64 / substeps as f64;
                backward = numeric::rk4_step(&vec_rhs, tk, &backward, -step / substeps as f64);
            }
            nodes[i] = backward[0];
        }

        for (i, s) in nodes.iter().enumerate() {
            if !(*s > 0.0) || !s.is_finite() {
                return Err(CoreError::NotSpd {
                    context: format!(
                        "scale factor reached s = {s} at t = {}; metric family degenerates",
                        lo + i as f64 * step
                    ),
                });
            }
        }

        Ok(ScaleSolution { c1, c2, kappa0, dim, lo, hi, step, nodes })
    }

    pub fn window(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn rhs(&self, t: f64, s: f64) -> f64 {
        self.c1.value(t) * (self.dim as f64 - 1.0) * self.kappa0 + self.c2.value(t) * s
    }

    pub fn s(&self, t: f64) -> f64 {
        // Short extrapolation past the window is allowed so time stencils
        // can probe slightly outside it; the edge cell Hermite extends smoothly.
        let slack = 0.05 * (self.hi - self.lo);
        debug_assert!(
            t >= self.lo - slack && t <= self.hi + slack,
            "t = {t} outside scale window [{}, {}]",
            self.lo,
            self.hi
        );
        let tc = t.clamp(self.lo, self.hi);
        let cell = (((tc - self.lo) / self.step) as usize).min(self.nodes.len() - 2);
        let t0 = self.lo + cell as f64 * self.step;
        let t1 = t0 + self.step;
        let (y0, y1) = (self.nodes[cell], self.nodes[cell + 1]);
        numeric::hermite(t0, t1, y0, y1, self.rhs(t0, y0), self.rhs(t1, y1), t)
    }

    pub fn sdot(&self, t: f64) -> f64 {
        self.rhs(t, self.s(t))
    }

    pub fn sddot(&self, t: f64) -> f64 {
        let kap = (self.dim as f64 - 1.0) * self.kappa0;
        self.c1.d1(t) * kap + self.c2.d1(t) * self.s(t) + self.c2.value(t) * self.sdot(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn shrinking_sphere_closed_form() {
        // gdot = -2 Rc on the unit 2-sphere: s(t) = 1 - 2t.
        let sol = ScaleSolution::solve(
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
        for &t in &[0.0, 0.05, 0.13, 0.2] {
            assert_relative_eq!(sol.s(t), 1.0 - 2.0 * t, max_relative = 1e-12);
            assert_relative_eq!(sol.sdot(t), -2.0, max_relative = 1e-12);
            assert!(sol.sddot(t).abs() < 1e-10);
        }
    }

    #[test]
    fn backward_heat_type_scale() {
        // c1 = 2 sqrt(t), c2 = 1/(2t) on the unit 2-sphere gives
        // s(t) = sqrt(t) (r^2 + 2(n-1) t) for any constant r^2 fixed by the anchor.
        let r2 = 1.0;
        let closed = |t: f64| t.sqrt() * (r2 + 2.0 * t);
        let sol = ScaleSolution::solve(
            TimeFn::parse("2*sqrt(t)").unwrap(),
            TimeFn::parse("1/(2*t)").unwrap(),
            1.0,
            2,
            0.5,
            closed(0.5),
            0.5,
            1.0,
            1024,
        )
        .unwrap();
        for &t in &[0.5, 0.6, 0.77, 0.93, 1.0] {
            assert_relative_eq!(sol.s(t), closed(t), max_relative = 1e-10);
            let sdot = 0.5 * r2 / t.sqrt() + 3.0 * t.sqrt();
            assert_relative_eq!(sol.sdot(t), sdot, max_relative = 1e-10);
            let sddot = -0.25 * r2 / t.powf(1.5) + 1.5 / t.sqrt();
            assert_relative_eq!(sol.sddot(t), sddot, max_relative = 1e-8);
        }
    }

    #[test]
    fn anchor_between_nodes_and_degenerate_window() {
        let sol = ScaleSolution::solve(
            TimeFn::constant(-2.0),
            TimeFn::constant(0.0),
            1.0,
            2,
            0.1001,
            1.0 - 2.0 * 0.1001,
            0.0,
            0.2,
            333,
        )
        .unwrap();
        assert_relative_eq!(sol.s(0.0), 1.0, max_relative = 1e-10);

        let bad = ScaleSolution::solve(
            TimeFn::constant(-2.0),
            TimeFn::constant(0.0),
            1.0,
            2,
            0.0,
            1.0,
            0.0,
            0.6,
            512,
        );
        assert!(matches!(bad, Err(CoreError::NotSpd { .. })));
    }
}
