//! Discrete metric measure spaces with jump-type Dirichlet forms, and numerical checks of
//! volume, tail, capacity, spectral and Harnack-type conditions on them.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dirichlet;
pub mod error;
pub mod harnack;
pub mod linalg;
pub mod mmspace;
pub mod seed;
pub mod solvers;
pub mod spaces;
pub mod spectra;
pub mod tol;

pub use dirichlet::{DirichletForm, Energy};
pub use error::{Error, Result};
pub use mmspace::{Ball, Metric, MetricMeasureSpace, PointSet, Scaling};
pub use solvers::BoundaryValueProblem;
