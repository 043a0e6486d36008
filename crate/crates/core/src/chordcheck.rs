//! Dense block-matrix view of one linearized iteration as a chord step
//! `x <- x - T⁻¹ F(x)` on the stacked residual.
//!
//! Flattening is timestep-major: `x_flat = (x_1, .., x_T)`.

use crate::dense::DenseMatrix;
use crate::error::{check_dim, Error, Result};
use crate::fixedpoint::Scheme;
use crate::jacobian::{full_jacobian, Dynamics, JacobianMode};
use crate::lds::StateTrajectory;

/// Largest `T·D` accepted.
pub const SIZE_LIMIT: usize = 4096;

/// Both operators are unit lower block-bidiagonal.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub steps: usize,
    pub dim: usize,
    /// `∂F/∂x`: sub-diagonal blocks `-∂f_t/∂x(x_{t-1})`.
    pub residual_jacobian: DenseMatrix,
    /// `T`: sub-diagonal blocks `-A_t`.
    pub scheme_operator: DenseMatrix,
}

/// Spectral radius of `M = I - T⁻¹ ∂F/∂x` and `‖M^T‖_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaReport {
    pub spectral_radius: f64,
    pub nilpotency_residual: f64,
}

impl SigmaReport {
    pub fn is_nilpotent(&self, tol: f64) -> bool {
        self.nilpotency_residual <= tol
    }
}

fn guard(steps: usize, dim: usize) -> Result<usize> {
    let n = steps * dim;
    if n > SIZE_LIMIT {
        return Err(Error::SizeGuard { size: n, limit: SIZE_LIMIT });
    }
    Ok(n)
}

fn place(m: &mut DenseMatrix, row_block: usize, col_block: usize, d: usize, block: &DenseMatrix, sign: f64) {
    for r in 0..d {
        for c in 0..d {
            m[(row_block * d + r, col_block * d + c)] = sign * block[(r, c)];
        }
    }
}

/// Mode for the exact `∂f_t/∂x` blocks: a stochastic `mode` only feeds `A_t`.
fn exact_mode<F: Dynamics + ?Sized>(f: &F, t: usize, x: &[f64], mode: JacobianMode) -> JacobianMode {
    match mode {
        JacobianMode::Hutchinson { .. } if f.jacobian(t, x).is_some() => JacobianMode::Analytic,
        JacobianMode::Hutchinson { .. } => JacobianMode::central(),
        other => other,
    }
}

/// Assemble `∂F/∂x` and the scheme's `T` at `traj`.
pub fn build_block_system<F: Dynamics + ?Sized>(
    f: &F,
    traj: &StateTrajectory,
    scheme: Scheme,
    mode: JacobianMode,
) -> Result<BlockSystem> {
    scheme.validate()?;
    check_dim(f.dim(), traj.dim())?;
    check_dim(f.steps(), traj.len())?;
    let (steps, d) = (traj.len(), traj.dim());
    let n = guard(steps, d)?;
    let mut jac = DenseMatrix::identity(n);
    let mut op = DenseMatrix::identity(n);
    for t in 2..=steps {
        let x_prev = traj.state(t - 1);
        place(&mut jac, t - 1, t - 2, d, &full_jacobian(f, t, x_prev, exact_mode(f, t, x_prev, mode))?, -1.0);
        place(&mut op, t - 1, t - 2, d, &scheme.transition(f, t, x_prev, mode)?.densify(), -1.0);
    }
    Ok(BlockSystem { steps, dim: d, residual_jacobian: jac, scheme_operator: op })
}

/// Solve `T X = B` for unit lower block-bidiagonal `T`.
fn forward_substitute(sys: &BlockSystem, b: &DenseMatrix) -> DenseMatrix {
    let d = sys.dim;
    let mut x = b.clone();
    for t in 1..sys.steps {
        for r in 0..d {
            let row = t * d + r;
            for c in 0..b.cols() {
                let mut acc = 0.0;
                for k in 0..d {
                    let coeff = sys.scheme_operator[(row, (t - 1) * d + k)];
                    if coeff != 0.0 {
                        acc += coeff * x[((t - 1) * d + k, c)];
                    }
                }
                x[(row, c)] -= acc;
            }
        }
    }
    x
}

/// `x_flat - T⁻¹ F_val`.
pub fn parallel_chord_step(sys: &BlockSystem, x_flat: &[f64], f_val: &[f64]) -> Result<Vec<f64>> {
    let n = sys.steps * sys.dim;
    check_dim(n, x_flat.len())?;
    check_dim(n, f_val.len())?;
    let rhs = DenseMatrix::from_row_major(n, 1, f_val.to_vec())?;
    let delta = forward_substitute(sys, &rhs);
    Ok(x_flat.iter().zip(delta.as_slice()).map(|(x, d)| x - d).collect())
}

/// `M = I - T⁻¹ ∂F/∂x`.
pub fn iteration_matrix(sys: &BlockSystem) -> DenseMatrix {
    let n = sys.steps * sys.dim;
    DenseMatrix::identity(n)
        .sub(&forward_substitute(sys, &sys.residual_jacobian))
        .expect("square operators")
}

/// The eigenvalue route uses a bounded Schur iteration, which may stall on
/// defective matrices; it then falls back to the Gelfand bound
/// `ρ(M) ≤ ‖M^T‖^{1/T}`.
pub fn sigma_factor(sys: &BlockSystem) -> Result<SigmaReport> {
    let n = guard(sys.steps, sys.dim)?;
    let m = iteration_matrix(sys);
    let mut power = m.clone();
    for _ in 1..sys.steps {
        power = power.matmul(&m)?;
    }
    let nilpotency_residual = power.frobenius_norm();
    let gelfand = nilpotency_residual.powf(1.0 / sys.steps as f64);
    let spectral_radius = nalgebra::linalg::Schur::try_new(m.to_nalgebra(), 1e-14, 200 * n)
        .map(|s| s.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max))
        .map_or(gelfand, |rho| rho.min(gelfand));
    Ok(SigmaReport { spectral_radius, nilpotency_residual })
}
