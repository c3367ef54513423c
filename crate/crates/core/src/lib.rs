pub mod analytics;
pub mod error;
pub mod estimation;
pub mod model;
pub mod numerics;
pub mod scalar;
pub mod xval;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` instantiations of the generic model and analytics types.
pub type Params = model::ModelParams<f64>;
pub type Dist = model::QueueDist<f64>;
pub type Path = model::PricePath<f64>;
pub type Repl = model::Replenishment<f64>;
pub type Tail = analytics::TailLaw<f64>;
pub type Asymmetry = analytics::AsymmetryReport<f64>;
