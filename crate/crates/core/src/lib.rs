//! Bivariate density estimation from observations blurred by additive
//! `Uniform([0,1)²)` noise.
//!
//! The hidden density is recovered through lattice-sum inversion formulas,
//! one per quadrant orientation. Each yields a kernel estimator; the four
//! are combined with weights that minimise the leading variance term, the
//! weights themselves being estimated from the data.

pub mod cli;
pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod geom;
pub mod grid;
pub mod inversion;
pub mod io;
pub mod kernels;
pub mod model;
pub mod quadrature;
pub mod weights;

pub use datagen::{gen_example, Seed, Simulated};
pub use error::{Error, Result};
pub use estimators::{Deconvolver, EstimatorConfig, Sample2D};
pub use geom::{Point2, QuadrantProbs, QuadrantTag};
pub use grid::{GridMethod, GridMode, GridSpec};
pub use kernels::{Kernel1D, ProductKernel2D};
pub use model::{BetaMixture, BetaProduct, Bundled, TrueModel, UniformSquare};
pub use weights::{min_weighted_quadratic, optimal_weights, WeightVec};
