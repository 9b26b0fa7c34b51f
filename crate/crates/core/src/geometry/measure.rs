//! Reference measures for the transported densities.
//!
//! Densities are tracked against the Riemannian volume of g(t); the measure
//! model contributes the extra log factor v with
//!
//!   riemannian_volume   v = 0
//!   weighted            m = e^{-U} vol_g,                v = -U(x)
//!   hj_weighted         m_t = e^{k(t) u} sigma(t) vol_g, v = k(t) u + log sigma(t)
//!
//! where u is the Hamilton-Jacobi value along the characteristic. The
//! hj_weighted variant therefore cannot be evaluated without flow data.

use crate::error::{CoreError, Result};
use crate::field::{ScalarField, TimeFn};
use nalgebra::DVector;

#[derive(Debug, Clone)]
pub enum MeasureModel {
    RiemannianVolume,
    Weighted { weight: ScalarField },
    HjWeighted { k: TimeFn, log_sigma: TimeFn },
}

impl MeasureModel {
    pub fn weighted(weight: ScalarField) -> Result<Self> {
        if weight.time_dependent() {
            return Err(CoreError::InvalidModel(
                "weighted measure requires a static weight".into(),
            ));
        }
        Ok(MeasureModel::Weighted { weight })
    }

    pub fn hj_weighted(k: TimeFn, log_sigma: TimeFn) -> Self {
        MeasureModel::HjWeighted { k, log_sigma }
    }

    /// Whether the measure needs the Hamilton-Jacobi value u along the flow.
    pub fn needs_hj_value(&self) -> bool {
        matches!(self, MeasureModel::HjWeighted { .. })
    }

    /// Log density of the measure against vol_{g(t)} at a point; u is the
    /// Hamilton-Jacobi value there when the measure requires one.
    pub fn log_density(&self, t: f64, x: &DVector<f64>, u: Option<f64>) -> Result<f64> {
        match self {
            MeasureModel::RiemannianVolume => Ok(0.0),
            MeasureModel::Weighted { weight } => Ok(-weight.value(t, x)),
            MeasureModel::HjWeighted { k, log_sigma } => {
                let u = u.ok_or(CoreError::MissingHjState)?;
                Ok(k.value(t) * u + log_sigma.value(t))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_density_variants() {
        let x = DVector::from_vec(vec![0.5, 0.0]);
        assert_eq!(MeasureModel::RiemannianVolume.log_density(1.0, &x, None).unwrap(), 0.0);

        let w = MeasureModel::weighted(ScalarField::parse("0.3*cos(x1)", 2).unwrap()).unwrap();
        let expect = -0.3 * 0.5f64.cos();
        assert!((w.log_density(2.0, &x, None).unwrap() - expect).abs() < 1e-15);

        let hj = MeasureModel::hj_weighted(
            TimeFn::parse("-t^-0.5").unwrap(),
            TimeFn::parse("-0.5*ln(t)").unwrap(),
        );
        let v = hj.log_density(4.0, &x, Some(2.0)).unwrap();
        assert!((v - (-0.5 * 2.0 + -0.5 * 4.0f64.ln())).abs() < 1e-15);
        assert!(matches!(hj.log_density(4.0, &x, None), Err(CoreError::MissingHjState)));
    }

    #[test]
    fn weighted_rejects_time_dependence() {
        let f = ScalarField::parse("t*cos(x1)", 1).unwrap();
        assert!(MeasureModel::weighted(f).is_err());
    }
}
