//! Time-varying affine recursions `f_t(x) = A_t x + c_t`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::dense::DenseMatrix;
use crate::error::{check_dim, Error, Result};
use crate::jacobian::Dynamics;
use crate::lds::{AffineElement, TransitionMatrix};

#[derive(Debug, Clone)]
pub struct LinearDynamics {
    elements: Vec<AffineElement>,
}

impl LinearDynamics {
    pub fn new(elements: Vec<AffineElement>) -> Result<Self> {
        let first = elements.first().ok_or(Error::EmptyScan)?;
        let d = first.dim();
        for e in &elements {
            check_dim(d, e.dim())?;
        }
        Ok(Self { elements })
    }

    /// `x_t = x_{t-1} + c` for every step.
    pub fn shift(dim: usize, steps: usize, c: f64) -> Self {
        let e = AffineElement::new(TransitionMatrix::Identity(dim), vec![c; dim]).expect("dimension");
        Self { elements: vec![e; steps] }
    }

    /// Dense `A_t` with entries uniform on `±gain/sqrt(D)` and standard-normal `c_t`.
    pub fn random(dim: usize, steps: usize, gain: f64, rng: &mut impl Rng) -> Result<Self> {
        let lim = gain / (dim as f64).sqrt();
        let uni = Uniform::new_inclusive(-lim, lim).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let elements = (0..steps)
            .map(|_| {
                let a = DenseMatrix::from_row_major(dim, dim, (0..dim * dim).map(|_| uni.sample(rng)).collect())?;
                let c = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                AffineElement::new(TransitionMatrix::Dense(a), c)
            })
            .collect::<Result<_>>()?;
        Self::new(elements)
    }

    pub fn elements(&self) -> &[AffineElement] {
        &self.elements
    }
}

impl Dynamics for LinearDynamics {
    fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    fn steps(&self) -> usize {
        self.elements.len()
    }

    fn eval(&self, t: usize, x: &[f64]) -> Vec<f64> {
        self.elements[t - 1].apply(x).expect("state dimension")
    }

    fn jacobian(&self, t: usize, _x: &[f64]) -> Option<DenseMatrix> {
        Some(self.elements[t - 1].a.densify())
    }

    fn jvp(&self, t: usize, _x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        self.elements[t - 1].a.apply(v).ok()
    }
}
