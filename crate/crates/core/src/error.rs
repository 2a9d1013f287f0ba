use thiserror::Error;

use crate::exprlang::EvalError;
use crate::jets::JetError;

/// Failures while turning a metric specification into point data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("NotLorentzian: {0}")]
    NotLorentzian(String),
    #[error("SingularSpatialMetric: spatial metric is not invertible at the point")]
    SingularSpatialMetric,
    #[error("SingularMetric: spacetime metric is not invertible at the point")]
    SingularMetric,
    #[error("jet order {got} is below the required {needed}")]
    InsufficientOrder { needed: usize, got: usize },
    #[error("DomainError: {0}")]
    Domain(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
}
