//! Depth-based bootstrap inference for functional parameters.
//!
//! Functional observations live on a shared evaluation grid over [0,1] and
//! are treated as elements of a discretized L2 space. A test statistic curve
//! is ranked against its bootstrap ensemble by a functional depth, and the
//! bootstrap CDF of depth values evaluated at the observed depth gives a
//! depth p-value. The crate covers:
//!
//! - [`funcspace`]: grids, inner products, covariance eigendecomposition,
//!   Gram-Schmidt orthonormalization;
//! - [`depth`]: kernel depth, regularized halfspace depth with random
//!   projections, integrated and infimal depths;
//! - [`inference`]: bootstrap depth distributions and p-values, plus
//!   scalar-statistic calibration for classical competitors;
//! - [`twosample`]: the two-sample functional mean test with a residual-type
//!   bootstrap and the L2/sup/Fint/Fmax competitors;
//! - [`fofr`]: mean-response inference for function-on-function regression
//!   via functional principal component regression;
//! - [`simgen`]: Karhunen-Loeve scenario generation for size/power studies.

pub mod depth;
pub mod error;
pub mod fofr;
pub mod funcspace;
pub mod inference;
pub mod rng;
pub mod simgen;
pub mod twosample;

pub use error::{Error, Result};
pub use funcspace::{Curve, FunctionalSample, Grid};
