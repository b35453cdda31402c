use thiserror::Error;

use crate::bounds::BoundsError;
use crate::eigen::EigenError;
use crate::geometry::GeometryError;
use crate::heat::HeatError;
use crate::model1d::ModelError;
use crate::modulus::ModulusError;
use crate::operator::OperatorError;

/// Any error raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Modulus(#[from] ModulusError),
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}
