//! Model manifolds: charts, metrics, curvature tensors and reference measures.

pub mod fd;
pub mod measure;
pub mod metric;
pub mod pack;
pub mod scale;

pub use measure::MeasureModel;
pub use metric::{MetricKind, MetricModel, MetricTimeQuantities};
pub use pack::{curvature_pack, CurvaturePack};
pub use scale::ScaleSolution;
