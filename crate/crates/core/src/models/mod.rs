//! Case-study dynamics with analytic Jacobians.

pub mod gru;
pub mod langevin;
pub mod linear;
pub mod s5;

pub use gru::{gru_dynamics, GruParameters};
pub use langevin::{langevin_dynamics, DEFAULT_STEP, mixture_grad, GaussianMixturePotential, LangevinSpec};
pub use linear::LinearDynamics;
pub use s5::{decode_word, default_vocabulary, PermutationWordProblem};
