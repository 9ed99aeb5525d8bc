//! Estimation of time-varying limit sets for bivariate data on Laplace
//! margins, and the joint-tail machinery built on top of them: dependence
//! summaries, return-level sets, tail simulation, and VaR/CoVaR risk
//! measures.
//!
//! The model has two penalized tensor-spline stages on polar coordinates:
//! a radial quantile surface (the moving threshold, `quantile_fit`) and a
//! truncated-gamma rate surface (the gauge, `gauge_fit`). `geometry` turns
//! gauge surfaces into boundary curves, tail-dependence coefficients, and
//! return-level sets; `tail` simulates the joint tail and computes risk
//! measures; `diagnostics` checks fits; `copulas` provides the reference
//! dependence examples with a density-ray oracle for the true gauge;
//! `margins` standardizes raw returns onto the Laplace scale.

pub mod copulas;
pub mod diagnostics;
pub mod error;
pub mod gauge_fit;
pub mod geometry;
pub mod linalg;
pub mod margins;
pub mod numerics;
pub mod quantile_fit;
pub mod splines;
pub mod tail;
pub mod tensor_gam;
pub mod types;

pub use error::{Error, Result};
pub use geometry::{BoundaryCurve, EtaEstimate, NormKind, PolarPoint};
pub use numerics::{GammaParams, RngStream};
pub use splines::KnotGrid;
pub use tail::{AngularDensity, CovarEstimate, CovarSide, TailModel};
pub use tensor_gam::TensorSplineModel;
pub use types::{BivariateSeries, MarginScale};
