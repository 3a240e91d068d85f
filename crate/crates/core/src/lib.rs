//! Numerical laboratory for the Godbillon–Vey type functional `gv*` on
//! 3-dimensional almost contact metric manifolds, evaluated on a single
//! coordinate chart.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::suspicious_arithmetic_impl)]

pub mod acm;
pub mod chart;
pub mod checks;
pub mod error;
pub mod exprlang;
pub mod forms;
pub mod geometry;
pub mod ode;
pub mod problem;
pub mod scenario;
pub mod twisted;
pub mod variation;

#[cfg(test)]
pub(crate) mod testing;

pub use acm::{ClassReport, Verdict};
pub use chart::{ChartBox, Grid};
pub use checks::Settings;
pub use error::{Error, Result};
pub use exprlang::{Expr, Jet2};
pub use geometry::{FrenetData, GeometryField};
pub use problem::Problem;
pub use scenario::Scenario;
pub use twisted::{TwistedReport, TwistedSpec};
