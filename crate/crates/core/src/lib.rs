//! Parallel evaluation of nonlinear recursions `x_t = f_t(x_{t-1})` by
//! fixed-point iteration, where each iteration is a linear dynamical system
//! evaluated with a parallel associative scan.

pub mod chordcheck;
pub mod dense;
pub mod error;
pub mod fixedpoint;
pub mod jacobian;
pub mod lds;
pub mod models;
pub mod pscan;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use fixedpoint::{
    compare_methods, rollout, solve, solve_batch, ElkBase, Evaluation, InitialGuess, Scheme, SolveReport,
    SolverConfig,
};
pub use jacobian::{Dynamics, FnDynamics, JacobianMode};
pub use lds::{AffineElement, Permutation, StateTrajectory, TransitionMatrix};
