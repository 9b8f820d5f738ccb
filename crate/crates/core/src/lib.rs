//! Bregman alternating minimization for generalized difference-of-convex
//! programs
//!
//! ```text
//! min_{x, y}  f1(x) - g1(x) + f2(y) - g2(y) + h+(x, y) - h-(x, y)
//! ```
//!
//! with three imaging applications built on the generic engine in [`solver`]:
//! weighted anisotropic-minus-isotropic TV reconstruction ([`tv`]),
//! capped-norm robust PCA ([`rpca`]) and blind deconvolution ([`bid`]).

pub mod bid;
pub mod error;
pub mod io;
pub mod linops;
pub mod metrics;
pub mod prox;
pub mod rng;
pub mod rpca;
pub mod solver;
pub mod tv;
pub mod verify;

pub use error::{BlockId, Error, Result};
pub use nalgebra::DMatrix;
pub use linops::{BlurKernel, GradField, ImageGrid, SamplingMask};
pub use prox::BregmanKernel;
pub use rng::SeededRng;
pub use solver::{DcProblem, IterationRecord, SolveResult, SolverConfig, Status, Trace};
