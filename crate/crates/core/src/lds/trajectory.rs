use crate::error::{check_dim, Error, Result};

/// `x_0` plus the states `x_1 .. x_T`, stored timestep-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    dim: usize,
    x0: Vec<f64>,
    states: Vec<f64>,
}

impl StateTrajectory {
    pub fn new(x0: Vec<f64>, states: Vec<f64>) -> Result<Self> {
        let dim = x0.len();
        if dim == 0 {
            return Err(Error::InvalidConfig("state dimension must be positive".into()));
        }
        if states.is_empty() || states.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim * (states.len() / dim).max(1),
                got: states.len(),
            });
        }
        Ok(Self { dim, x0, states })
    }

    /// `len` copies of `x0`.
    pub fn replicate(x0: &[f64], len: usize) -> Result<Self> {
        Self::new(x0.to_vec(), x0.repeat(len))
    }

    pub fn from_steps(x0: Vec<f64>, steps: &[Vec<f64>]) -> Result<Self> {
        let dim = x0.len();
        let mut states = Vec::with_capacity(steps.len() * dim);
        for s in steps {
            check_dim(dim, s.len())?;
            states.extend_from_slice(s);
        }
        Self::new(x0, states)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of steps `T`.
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// `x_t` for `t` in `0..=T`.
    pub fn state(&self, t: usize) -> &[f64] {
        if t == 0 {
            &self.x0
        } else {
            &self.states[(t - 1) * self.dim..t * self.dim]
        }
    }

    /// Flattened `(x_1, .., x_T)`.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn states_mut(&mut self) -> &mut [f64] {
        &mut self.states
    }

    pub fn into_states(self) -> Vec<f64> {
        self.states
    }

    pub fn is_finite(&self) -> bool {
        self.states.iter().all(|v| v.is_finite())
    }

    /// Max over entries of `|a - b| / max(1, |b|)` for the states `x_1..x_T`.
    pub fn max_relative_diff(&self, other: &StateTrajectory) -> f64 {
        if self.dim != other.dim || self.states.len() != other.states.len() {
            return f64::INFINITY;
        }
        relative_diff(&self.states, &other.states)
    }
}

/// Largest `|a - b| / max(1, |b|)`.
pub fn relative_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs() / y.abs().max(1.0)))
}
