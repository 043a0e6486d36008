//! Gated recurrent unit with the reset gate inside the candidate:
//!
//! ```text
//! z  = σ(W_z [x, u] + b_z)
//! r  = σ(W_r [x, u] + b_r)
//! h  = tanh(W_h [r ⊙ x, u] + b_h)
//! x' = (1 - z) ⊙ x + z ⊙ h
//! ```

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::dense::{dot, DenseMatrix};
use crate::error::{check_dim, Error, Result};
use crate::jacobian::Dynamics;

#[derive(Debug, Clone)]
pub struct GruParameters {
    dim: usize,
    input_dim: usize,
    /// Each `dim x (dim + input_dim)`, state columns first.
    w_z: DenseMatrix,
    w_r: DenseMatrix,
    w_h: DenseMatrix,
    b_z: Vec<f64>,
    b_r: Vec<f64>,
    b_h: Vec<f64>,
    /// `T x input_dim`, row `t - 1` feeds step `t`.
    inputs: Vec<f64>,
}

struct Gates {
    z: Vec<f64>,
    r: Vec<f64>,
    h: Vec<f64>,
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl GruParameters {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        w_z: DenseMatrix,
        w_r: DenseMatrix,
        w_h: DenseMatrix,
        b_z: Vec<f64>,
        b_r: Vec<f64>,
        b_h: Vec<f64>,
        input_dim: usize,
        inputs: Vec<f64>,
    ) -> Result<Self> {
        let dim = b_z.len();
        if dim == 0 {
            return Err(Error::InvalidConfig("GRU state dimension must be positive".into()));
        }
        for w in [&w_z, &w_r, &w_h] {
            check_dim(dim, w.rows())?;
            check_dim(dim + input_dim, w.cols())?;
            if !w.is_finite() {
                return Err(Error::NonFinite("GRU weights"));
            }
        }
        check_dim(dim, b_r.len())?;
        check_dim(dim, b_h.len())?;
        let steps = if input_dim == 0 { 0 } else { inputs.len() / input_dim };
        if input_dim == 0 || inputs.len() != steps * input_dim || steps == 0 {
            return Err(Error::InvalidConfig("inputs must be a non-empty T x U array".into()));
        }
        if ![&b_z, &b_r, &b_h, &inputs].iter().all(|v| v.iter().all(|x| x.is_finite())) {
            return Err(Error::NonFinite("GRU parameters"));
        }
        Ok(Self { dim, input_dim, w_z, w_r, w_h, b_z, b_r, b_h, inputs })
    }

    /// Uniform `±1/sqrt(fan_in)` weights and biases, standard-normal inputs.
    pub fn random(dim: usize, input_dim: usize, steps: usize, rng: &mut impl Rng) -> Result<Self> {
        let fan_in = (dim + input_dim) as f64;
        let lim = 1.0 / fan_in.sqrt();
        let uni = Uniform::new_inclusive(-lim, lim).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let cols = dim + input_dim;
        let mat = |rng: &mut _| {
            DenseMatrix::from_row_major(dim, cols, (0..dim * cols).map(|_| uni.sample(rng)).collect())
        };
        let w_z = mat(rng)?;
        let w_r = mat(rng)?;
        let w_h = mat(rng)?;
        let vec = |rng: &mut _| (0..dim).map(|_| uni.sample(rng)).collect::<Vec<f64>>();
        let b_z = vec(rng);
        let b_r = vec(rng);
        let b_h = vec(rng);
        let inputs = (0..steps * input_dim).map(|_| StandardNormal.sample(rng)).collect();
        Self::new(w_z, w_r, w_h, b_z, b_r, b_h, input_dim, inputs)
    }

    /// All weights and biases zero.
    pub fn zeros(dim: usize, input_dim: usize, steps: usize) -> Self {
        let w = DenseMatrix::zeros(dim, dim + input_dim);
        Self::new(
            w.clone(),
            w.clone(),
            w,
            vec![0.0; dim],
            vec![0.0; dim],
            vec![0.0; dim],
            input_dim,
            vec![1.0; steps * input_dim],
        )
        .expect("consistent shapes")
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn input(&self, t: usize) -> &[f64] {
        &self.inputs[(t - 1) * self.input_dim..t * self.input_dim]
    }

    /// `W [x, u] + b` for one row.
    fn readout(w: &DenseMatrix, b: &[f64], x: &[f64], u: &[f64], row: usize) -> f64 {
        let d = x.len();
        let wr = w.row(row);
        dot(&wr[..d], x) + dot(&wr[d..], u) + b[row]
    }

    fn gates(&self, t: usize, x: &[f64]) -> Gates {
        let u = self.input(t);
        let n = self.dim;
        let z: Vec<f64> = (0..n).map(|i| logistic(Self::readout(&self.w_z, &self.b_z, x, u, i))).collect();
        let r: Vec<f64> = (0..n).map(|i| logistic(Self::readout(&self.w_r, &self.b_r, x, u, i))).collect();
        let rx: Vec<f64> = r.iter().zip(x).map(|(a, b)| a * b).collect();
        let h = (0..n).map(|i| Self::readout(&self.w_h, &self.b_h, &rx, u, i).tanh()).collect();
        Gates { z, r, h }
    }
}

/// The GRU as a dynamics family over its stored inputs.
pub fn gru_dynamics(params: GruParameters) -> GruParameters {
    params
}

impl Dynamics for GruParameters {
    fn dim(&self) -> usize {
        self.dim
    }

    fn steps(&self) -> usize {
        self.inputs.len() / self.input_dim
    }

    fn eval(&self, t: usize, x: &[f64]) -> Vec<f64> {
        let g = self.gates(t, x);
        (0..self.dim).map(|i| (1.0 - g.z[i]) * x[i] + g.z[i] * g.h[i]).collect()
    }

    fn jacobian(&self, t: usize, x: &[f64]) -> Option<DenseMatrix> {
        let n = self.dim;
        let Gates { z, r, h } = self.gates(t, x);
        // ∂(r_k x_k)/∂x_j = r_k δ_kj + x_k r_k (1 - r_k) Wr_kj
        let mut drx = DenseMatrix::zeros(n, n);
        for k in 0..n {
            let s = x[k] * r[k] * (1.0 - r[k]);
            for j in 0..n {
                drx[(k, j)] = s * self.w_r[(k, j)];
            }
            drx[(k, k)] += r[k];
        }
        let mut jac = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let dz = z[i] * (1.0 - z[i]);
            let dh = 1.0 - h[i] * h[i];
            for j in 0..n {
                let da: f64 = (0..n).map(|k| self.w_h[(i, k)] * drx[(k, j)]).sum();
                jac[(i, j)] = (h[i] - x[i]) * dz * self.w_z[(i, j)] + z[i] * dh * da;
            }
            jac[(i, i)] += 1.0 - z[i];
        }
        Some(jac)
    }

    fn jvp(&self, t: usize, x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        let n = self.dim;
        let Gates { z, r, h } = self.gates(t, x);
        let lin = |w: &DenseMatrix, v: &[f64], i: usize| dot(&w.row(i)[..n], v);
        let drx: Vec<f64> = (0..n)
            .map(|k| x[k] * r[k] * (1.0 - r[k]) * lin(&self.w_r, v, k) + r[k] * v[k])
            .collect();
        Some(
            (0..n)
                .map(|i| {
                    let dz = z[i] * (1.0 - z[i]) * lin(&self.w_z, v, i);
                    let dh = (1.0 - h[i] * h[i]) * lin(&self.w_h, &drx, i);
                    (1.0 - z[i]) * v[i] + (h[i] - x[i]) * dz + z[i] * dh
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobian::{full_jacobian, JacobianMode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_halve_the_state() {
        let g = GruParameters::zeros(3, 2, 4);
        assert_eq!(g.eval(2, &[2.0, -4.0, 0.5]), vec![1.0, -2.0, 0.25]);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = GruParameters::random(6, 3, 5, &mut rng).unwrap();
        for t in 1..=5 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let exact = full_jacobian(&g, t, &x, JacobianMode::Analytic).unwrap();
            let fd = full_jacobian(&g, t, &x, JacobianMode::central()).unwrap();
            assert!(exact.max_abs_diff(&fd) <= 1e-5);
            let v: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let jv = g.jvp(t, &x, &v).unwrap();
            let want = exact.matvec(&v).unwrap();
            for (a, b) in jv.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn states_stay_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = GruParameters::random(8, 8, 20, &mut rng).unwrap();
        for t in 1..=20 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
            for (y, xi) in g.eval(t, &x).iter().zip(&x) {
                assert!(y.abs() <= xi.abs().max(1.0) + 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let w = DenseMatrix::zeros(2, 3);
        let bad = DenseMatrix::zeros(2, 4);
        let b = vec![0.0; 2];
        assert!(GruParameters::new(w.clone(), w.clone(), bad, b.clone(), b.clone(), b.clone(), 1, vec![0.0; 3]).is_err());
        assert!(GruParameters::new(w.clone(), w.clone(), w, b.clone(), b.clone(), b, 1, vec![]).is_err());
    }
}
