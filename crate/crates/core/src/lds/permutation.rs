use std::fmt;

use crate::error::{check_dim, Error, Result};

/// A bijection on `{0, .., n-1}` acting on vectors by gather:
/// `(P x)[i] = x[p[i]]`.
///
/// As a matrix, row `i` has its single one in column `p[i]`. Under this
/// convention the matrix product `P_later * P_earlier` gathers with
/// `i -> earlier[later[i]]`, which is also the function composition
/// `earlier ∘ later`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty".into()));
        }
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n {
                return Err(Error::InvalidPermutation(format!("index {i} out of range for size {n}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPermutation(format!("index {i} repeated")));
            }
        }
        Ok(Self(images))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Transposition of `a` and `b` in `S_n`.
    pub fn swap(n: usize, a: usize, b: usize) -> Self {
        let mut p: Vec<usize> = (0..n).collect();
        p.swap(a, b);
        Self(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn gather(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.len(), x.len())?;
        Ok(self.0.iter().map(|&j| x[j]).collect())
    }

    /// Function composition `self ∘ other`: `i -> self[other[i]]`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        check_dim(self.len(), other.len())?;
        Ok(Self(other.0.iter().map(|&j| self.0[j]).collect()))
    }

    /// Matrix product `later * earlier` for the gather action.
    pub fn then(&self, later: &Permutation) -> Result<Permutation> {
        self.compose(later)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        Self(inv)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.0)
    }
}
