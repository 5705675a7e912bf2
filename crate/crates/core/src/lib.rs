//! Bayesian estimation of bivariate extremal dependence through the limit
//! set of a scaled sample cloud, with the boundary modelled as a quadratic
//! Bézier spline.

pub mod copula;
pub mod error;
pub mod geometry;
pub mod io;
pub mod likelihood;
pub mod measures;
pub mod sampler;
pub mod study;
pub mod tail;

pub use error::{Error, Result};
pub use geometry::{build_spline, GaugeSpline, Param, Point, SplineParams};
