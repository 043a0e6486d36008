use crate::dense::DenseMatrix;
use crate::error::{check_dim, Result};
use crate::lds::Permutation;

/// Structured `D x D` transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionMatrix {
    Dense(DenseMatrix),
    Diagonal(Vec<f64>),
    ScaledIdentity { dim: usize, scale: f64 },
    Identity(usize),
    Zero(usize),
    Permutation(Permutation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransitionKind {
    Dense,
    Diagonal,
    ScaledIdentity,
    Identity,
    Zero,
    Permutation,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(m) => m.rows(),
            Self::Diagonal(d) => d.len(),
            Self::ScaledIdentity { dim, .. } | Self::Identity(dim) | Self::Zero(dim) => *dim,
            Self::Permutation(p) => p.len(),
        }
    }

    pub fn kind(&self) -> TransitionKind {
        match self {
            Self::Dense(_) => TransitionKind::Dense,
            Self::Diagonal(_) => TransitionKind::Diagonal,
            Self::ScaledIdentity { .. } => TransitionKind::ScaledIdentity,
            Self::Identity(_) => TransitionKind::Identity,
            Self::Zero(_) => TransitionKind::Zero,
            Self::Permutation(_) => TransitionKind::Permutation,
        }
    }

    pub fn dense(m: DenseMatrix) -> Result<Self> {
        check_dim(m.rows(), m.cols())?;
        Ok(Self::Dense(m))
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            Self::Dense(m) => m.matvec(x)?,
            Self::Diagonal(d) => d.iter().zip(x).map(|(a, b)| a * b).collect(),
            Self::ScaledIdentity { scale, .. } => x.iter().map(|v| scale * v).collect(),
            Self::Identity(_) => x.to_vec(),
            Self::Zero(n) => vec![0.0; *n],
            Self::Permutation(p) => p.gather(x)?,
        })
    }

    pub fn densify(&self) -> DenseMatrix {
        match self {
            Self::Dense(m) => m.clone(),
            Self::Diagonal(d) => DenseMatrix::from_diagonal(d),
            Self::ScaledIdentity { dim, scale } => DenseMatrix::from_diagonal(&vec![*scale; *dim]),
            Self::Identity(n) => DenseMatrix::identity(*n),
            Self::Zero(n) => DenseMatrix::zeros(*n, *n),
            Self::Permutation(p) => {
                let mut m = DenseMatrix::zeros(p.len(), p.len());
                for (r, &c) in p.images().iter().enumerate() {
                    m[(r, c)] = 1.0;
                }
                m
            }
        }
    }

    /// Matrix product `self * rhs`, staying in the narrowest tag that
    /// represents the result exactly.
    pub fn matmul(&self, rhs: &TransitionMatrix) -> Result<TransitionMatrix> {
        use TransitionMatrix::*;
        check_dim(self.dim(), rhs.dim())?;
        let n = self.dim();
        Ok(match (self, rhs) {
            (Zero(_), _) | (_, Zero(_)) => Zero(n),
            (Identity(_), m) | (m, Identity(_)) => m.clone(),
            (ScaledIdentity { scale: a, .. }, ScaledIdentity { scale: b, .. }) => {
                ScaledIdentity { dim: n, scale: a * b }
            }
            (Diagonal(a), Diagonal(b)) => Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect()),
            (ScaledIdentity { scale, .. }, Diagonal(d)) | (Diagonal(d), ScaledIdentity { scale, .. }) => {
                Diagonal(d.iter().map(|v| scale * v).collect())
            }
            (Permutation(later), Permutation(earlier)) => Permutation(earlier.then(later)?),
            (ScaledIdentity { scale, .. }, Dense(m)) | (Dense(m), ScaledIdentity { scale, .. }) => {
                Dense(m.scale(*scale))
            }
            (Diagonal(d), Dense(m)) => {
                let mut out = m.clone();
                for r in 0..n {
                    for c in 0..n {
                        out[(r, c)] *= d[r];
                    }
                }
                Dense(out)
            }
            (Dense(m), Diagonal(d)) => {
                let mut out = m.clone();
                for r in 0..n {
                    for c in 0..n {
                        out[(r, c)] *= d[c];
                    }
                }
                Dense(out)
            }
            (a, b) => Dense(a.densify().matmul(&b.densify())?),
        })
    }

    /// `k * self`, keeping structure where possible.
    pub fn scaled(&self, k: f64) -> TransitionMatrix {
        use TransitionMatrix::*;
        match self {
            Dense(m) => Dense(m.scale(k)),
            Diagonal(d) => Diagonal(d.iter().map(|v| k * v).collect()),
            ScaledIdentity { dim, scale } => ScaledIdentity { dim: *dim, scale: k * scale },
            Identity(n) => ScaledIdentity { dim: *n, scale: k },
            Zero(n) => Zero(*n),
            Permutation(_) => Dense(self.densify().scale(k)),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Self::Dense(m) => m.is_finite(),
            Self::Diagonal(d) => d.iter().all(|v| v.is_finite()),
            Self::ScaledIdentity { scale, .. } => scale.is_finite(),
            _ => true,
        }
    }
}
