pub mod construct;
pub mod dfnn;
pub mod error;
pub mod measure;
pub mod regress;
pub mod ridgedecomp;
pub mod scalar;
pub mod spline;
pub mod theory;

pub use error::{Error, Result};
pub use measure::EmpiricalMeasure;
pub use scalar::Scalar;

/// Double-precision network.
pub type Net = dfnn::DistributionNet<f64>;
pub type Net32 = dfnn::DistributionNet<f32>;
/// Double-precision empirical measure.
pub type Measure = EmpiricalMeasure<f64>;
pub type Measure32 = EmpiricalMeasure<f32>;
pub type Interpolant = spline::QuasiInterpolant<f64>;
