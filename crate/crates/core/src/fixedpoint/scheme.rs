use std::fmt;

use crate::error::{Error, Result};
use crate::jacobian::{diagonal_jacobian, full_jacobian, Dynamics, JacobianMode};
use crate::lds::TransitionMatrix;

/// Which Jacobian approximation scale-ELK damps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElkBase {
    Newton,
    QuasiNewton,
}

/// How the transition matrix `A_t` of each linearized step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Full Jacobian.
    Newton,
    /// Diagonal of the Jacobian.
    QuasiNewton,
    /// Identity.
    Picard,
    /// Zero.
    Jacobi,
    /// `(1 - k)` times the base approximation.
    ScaleElk { k: f64, base: ElkBase },
    /// Jacobian diagonal clamped to `[-1, 1]`.
    ClipElk,
}

impl Scheme {
    /// Every scheme, with scale-ELK at `k = 0.5` over both bases.
    pub fn all() -> Vec<Scheme> {
        vec![
            Scheme::Newton,
            Scheme::QuasiNewton,
            Scheme::Picard,
            Scheme::Jacobi,
            Scheme::ScaleElk { k: 0.5, base: ElkBase::Newton },
            Scheme::ScaleElk { k: 0.5, base: ElkBase::QuasiNewton },
            Scheme::ClipElk,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Scheme::ScaleElk { k, .. } if !(0.0..=1.0).contains(&k) => {
                Err(Error::InvalidConfig(format!("scale-ELK k must lie in [0, 1], got {k}")))
            }
            _ => Ok(()),
        }
    }

    /// Short name as used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Newton => "newton",
            Scheme::QuasiNewton => "quasi-newton",
            Scheme::Picard => "picard",
            Scheme::Jacobi => "jacobi",
            Scheme::ScaleElk { .. } => "scale-elk",
            Scheme::ClipElk => "clip-elk",
        }
    }

    /// Whether `A_t` needs the full Jacobian rather than its diagonal.
    pub fn needs_full_jacobian(&self) -> bool {
        matches!(self, Scheme::Newton | Scheme::ScaleElk { base: ElkBase::Newton, .. })
    }

    /// Whether `A_t` depends on derivatives at all.
    pub fn uses_jacobian(&self) -> bool {
        !matches!(self, Scheme::Picard | Scheme::Jacobi)
    }

    /// `A_t` for the step leaving `x_prev`.
    pub fn transition<F: Dynamics + ?Sized>(
        &self,
        f: &F,
        t: usize,
        x_prev: &[f64],
        mode: JacobianMode,
    ) -> Result<TransitionMatrix> {
        let d = f.dim();
        Ok(match *self {
            Scheme::Newton => TransitionMatrix::Dense(full_jacobian(f, t, x_prev, mode)?),
            Scheme::QuasiNewton => TransitionMatrix::Diagonal(diagonal_jacobian(f, t, x_prev, mode)?),
            Scheme::Picard => TransitionMatrix::Identity(d),
            Scheme::Jacobi => TransitionMatrix::Zero(d),
            Scheme::ScaleElk { k, base } => {
                let base = match base {
                    ElkBase::Newton => Scheme::Newton,
                    ElkBase::QuasiNewton => Scheme::QuasiNewton,
                };
                base.transition(f, t, x_prev, mode)?.scaled(1.0 - k)
            }
            Scheme::ClipElk => TransitionMatrix::Diagonal(
                diagonal_jacobian(f, t, x_prev, mode)?
                    .into_iter()
                    .map(|v| v.clamp(-1.0, 1.0))
                    .collect(),
            ),
        })
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::ScaleElk { k, base } => {
                let base = match base {
                    ElkBase::Newton => "newton",
                    ElkBase::QuasiNewton => "quasi-newton",
                };
                write!(f, "scale-elk(k={k}, {base})")
            }
            other => f.write_str(other.name()),
        }
    }
}
