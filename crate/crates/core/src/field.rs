//! Scalar fields on a chart with cached analytic derivatives.
//!
//! A `ScalarField` wraps a parsed expression together with every partial
//! derivative the rest of the library asks for: gradient, Hessian, third
//! coordinate derivatives, and mixed time derivatives. Differentiation happens
//! once at construction, so repeated evaluation along a trajectory costs only
//! tree walks.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};
use crate::expr::{self, Expr};

#[derive(Debug, Clone)]
pub struct ScalarField {
    n: usize,
    f: Expr,
    ft: Expr,
    ftt: Expr,
    grad: Vec<Expr>,
    grad_t: Vec<Expr>,
    hess: Vec<Vec<Expr>>,
    hess_t: Vec<Vec<Expr>>,
    third: Vec<Vec<Vec<Expr>>>,
}

impl ScalarField {
    pub fn new(f: Expr, n: usize) -> Result<Self> {
        let used = f.max_coord();
        if used > n {
            return Err(CoreError::Expr(format!(
                "expression references x{used} but the chart has {n} coordinates"
            )));
        }
        let grad: Vec<Expr> = (1..=n).map(|i| f.diff(i)).collect();
        let hess: Vec<Vec<Expr>> = (1..=n)
            .map(|i| (1..=n).map(|j| grad[i - 1].diff(j)).collect())
            .collect();
        let third: Vec<Vec<Vec<Expr>>> = (1..=n)
            .map(|i| {
                (1..=n)
                    .map(|j| (1..=n).map(|k| hess[i - 1][j - 1].diff(k)).collect())
                    .collect()
            })
            .collect();
        let ft = f.diff(0);
        let ftt = ft.diff(0);
        let grad_t: Vec<Expr> = grad.iter().map(|g| g.diff(0)).collect();
        let hess_t: Vec<Vec<Expr>> = hess
            .iter()
            .map(|row| row.iter().map(|h| h.diff(0)).collect())
            .collect();
        Ok(Self {
            n,
            f,
            ft,
            ftt,
            grad,
            grad_t,
            hess,
            hess_t,
            third,
        })
    }

    pub fn parse(src: &str, n: usize) -> Result<Self> {
        Self::new(expr::parse(src)?, n)
    }

    pub fn constant(v: f64, n: usize) -> Self {
        Self::new(Expr::Num(v), n).unwrap()
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(0.0, n)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn time_dependent(&self) -> bool {
        self.f.uses_time()
    }

    pub fn value(&self, t: f64, x: &DVector<f64>) -> f64 {
        self.f.eval(t, x.as_slice())
    }

    pub fn dt(&self, t: f64, x: &DVector<f64>) -> f64 {
        self.ft.eval(t, x.as_slice())
    }

    pub fn dtt(&self, t: f64, x: &DVector<f64>) -> f64 {
        self.ftt.eval(t, x.as_slice())
    }

    pub fn gradient(&self, t: f64, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| self.grad[i].eval(t, x.as_slice()))
    }

    pub fn dt_gradient(&self, t: f64, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| self.grad_t[i].eval(t, x.as_slice()))
    }

    pub fn hessian(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.hess[i][j].eval(t, x.as_slice()))
    }

    pub fn dt_hessian(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.hess_t[i][j].eval(t, x.as_slice()))
    }

    /// Third partial d^3 f / dx_i dx_j dx_k, zero-based indices.
    pub fn d3(&self, t: f64, x: &DVector<f64>, i: usize, j: usize, k: usize) -> f64 {
        self.third[i][j][k].eval(t, x.as_slice())
    }
}

/// Scalar function of time alone, used for coefficient profiles.
#[derive(Debug, Clone)]
pub struct TimeFn {
    f: Expr,
    d1: Expr,
    d2: Expr,
}

impl TimeFn {
    pub fn new(f: Expr) -> Result<Self> {
        let used = f.max_coord();
        if used > 0 {
            return Err(CoreError::Expr(format!(
                "time profile must not reference coordinates (found x{used})"
            )));
        }
        let d1 = f.diff(0);
        let d2 = d1.diff(0);
        Ok(Self { f, d1, d2 })
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::new(expr::parse(src)?)
    }

    pub fn constant(v: f64) -> Self {
        Self::new(Expr::Num(v)).unwrap()
    }

    pub fn value(&self, t: f64) -> f64 {
        self.f.eval(t, &[])
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.d1.eval(t, &[])
    }

    pub fn d2(&self, t: f64) -> f64 {
        self.d2.eval(t, &[])
    }
}
