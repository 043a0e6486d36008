//! Group word problems embedded as permutation-matrix recursions.
//!
//! States use the tabular representation: `x_t` is a rearrangement of the
//! distinct entries of `x_0`, and reading off where each entry went recovers
//! the running product `g_1 g_2 ... g_t`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dense::DenseMatrix;
use crate::error::{check_dim, Error, Result};
use crate::jacobian::Dynamics;
use crate::lds::{Permutation, StateTrajectory, TransitionMatrix};

#[derive(Debug, Clone)]
pub struct PermutationWordProblem {
    sequence: Vec<Permutation>,
    x0: Vec<f64>,
}

/// `[1, 2, .., n]`.
pub fn default_vocabulary(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64).collect()
}

impl PermutationWordProblem {
    pub fn new(sequence: Vec<Permutation>, x0: Vec<f64>) -> Result<Self> {
        if sequence.is_empty() {
            return Err(Error::InvalidConfig("word must contain at least one element".into()));
        }
        for p in &sequence {
            check_dim(x0.len(), p.len())?;
        }
        for i in 0..x0.len() {
            if !x0[i].is_finite() || x0[..i].contains(&x0[i]) {
                return Err(Error::InvalidConfig("vocabulary entries must be distinct and finite".into()));
            }
        }
        Ok(Self { sequence, x0 })
    }

    /// A word of `steps` uniformly drawn non-identity elements of `S_dim`.
    ///
    /// Excluding the identity keeps every step informative: no prefix of the
    /// word can leave `x_0` in place at `t = 1`.
    pub fn random(dim: usize, steps: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut sequence = Vec::with_capacity(steps);
        let mut images: Vec<usize> = (0..dim).collect();
        while sequence.len() < steps {
            images.shuffle(rng);
            let p = Permutation::new(images.clone())?;
            if dim == 1 || !p.is_identity() {
                sequence.push(p);
            }
        }
        Self::new(sequence, default_vocabulary(dim))
    }

    pub fn sequence(&self) -> &[Permutation] {
        &self.sequence
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// Transition for step `t` (1-based).
    pub fn transition(&self, t: usize) -> TransitionMatrix {
        TransitionMatrix::Permutation(self.sequence[t - 1].clone())
    }

    /// Running products `g_1 ... g_t` for every `t`.
    pub fn prefix_products(&self) -> Vec<Permutation> {
        let mut acc = Permutation::identity(self.x0.len());
        self.sequence
            .iter()
            .map(|g| {
                acc = acc.compose(g).expect("validated dimensions");
                acc.clone()
            })
            .collect()
    }
}

impl Dynamics for PermutationWordProblem {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn steps(&self) -> usize {
        self.sequence.len()
    }

    fn eval(&self, t: usize, x: &[f64]) -> Vec<f64> {
        self.sequence[t - 1].gather(x).expect("state dimension")
    }

    fn jacobian(&self, t: usize, _x: &[f64]) -> Option<DenseMatrix> {
        Some(self.transition(t).densify())
    }

    fn jvp(&self, t: usize, _x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        Some(self.eval(t, v))
    }
}

/// Recover, for every `t`, the permutation `σ_t` with `x_t[i] = x_0[σ_t(i)]`.
pub fn decode_word(traj: &StateTrajectory) -> Result<Vec<Permutation>> {
    let x0 = traj.x0();
    (1..=traj.len())
        .map(|t| {
            let images = traj
                .state(t)
                .iter()
                .map(|v| {
                    x0.iter()
                        .position(|w| (v - w).abs() <= 1e-6 * w.abs().max(1.0))
                        .ok_or(Error::NotAPermutation { t })
                })
                .collect::<Result<Vec<_>>>()?;
            Permutation::new(images).map_err(|_| Error::NotAPermutation { t })
        })
        .collect()
}
