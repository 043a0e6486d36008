//! Unadjusted Langevin dynamics on a Gaussian-mixture potential
//! `φ(x) = -log Σ_k π_k N(x; μ_k, Σ_k)`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::{dot, DenseMatrix};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::jacobian::Dynamics;

pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
struct Component {
    log_weight: f64,
    mean: Vec<f64>,
    precision: DenseMatrix,
    /// `-½ log det(2π Σ)`.
    log_norm: f64,
}

#[derive(Debug, Clone)]
pub struct GaussianMixturePotential {
    dim: usize,
    weights: Vec<f64>,
    covariances: Vec<DenseMatrix>,
    components: Vec<Component>,
}

/// Per-component quantities at one point.
struct Evaluated {
    /// Responsibilities, summing to one.
    gamma: Vec<f64>,
    /// `Λ_k (x - μ_k)`.
    g: Vec<Vec<f64>>,
    log_density: f64,
}

impl GaussianMixturePotential {
    /// Weights are normalized here; every covariance must be SPD.
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<DenseMatrix>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || covariances.len() != k {
            return Err(Error::InvalidConfig("mixture needs matching non-empty weights, means and covariances".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidConfig("mixture weights must be positive".into()));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::InvalidConfig("mixture dimension must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut components = Vec::with_capacity(k);
        for (i, ((w, mean), cov)) in weights.iter().zip(&means).zip(&covariances).enumerate() {
            check_dim(dim, mean.len())?;
            check_dim(dim, cov.rows())?;
            check_dim(dim, cov.cols())?;
            check_finite(mean, "mixture mean")?;
            let asym = (0..dim)
                .flat_map(|r| (0..dim).map(move |c| (r, c)))
                .any(|(r, c)| (cov[(r, c)] - cov[(c, r)]).abs() > 1e-12 * cov.max_abs().max(1.0));
            if asym || !cov.is_finite() {
                return Err(Error::NotPositiveDefinite(i));
            }
            let chol = cov.to_nalgebra().cholesky().ok_or(Error::NotPositiveDefinite(i))?;
            let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            let inv = chol.inverse();
            let precision = DenseMatrix::from_row_major(dim, dim, (0..dim * dim).map(|j| inv[(j / dim, j % dim)]).collect())?;
            components.push(Component {
                log_weight: w.ln(),
                mean: mean.clone(),
                precision,
                log_norm: -0.5 * (log_det + dim as f64 * (2.0 * std::f64::consts::PI).ln()),
            });
        }
        Ok(Self { dim, weights, covariances, components })
    }

    /// Equal weights, standard-normal means and covariances `LᵀL + 10⁻³·D·I`
    /// with `L` standard normal.
    pub fn random(k: usize, dim: usize, rng: &mut impl Rng) -> Result<Self> {
        let delta = 1e-3 * dim as f64;
        let mut means = Vec::with_capacity(k);
        let mut covs = Vec::with_capacity(k);
        for _ in 0..k {
            means.push((0..dim).map(|_| StandardNormal.sample(rng)).collect());
            let l = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
            let c = l.transpose() * &l + DMatrix::identity(dim, dim) * delta;
            // exact symmetry
            let data = (0..dim * dim)
                .map(|j| {
                    let (r, s) = (j / dim, j % dim);
                    0.5 * (c[(r, s)] + c[(s, r)])
                })
                .collect();
            covs.push(DenseMatrix::from_row_major(dim, dim, data)?);
        }
        Self::new(vec![1.0; k], means, covs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn covariances(&self) -> &[DenseMatrix] {
        &self.covariances
    }

    fn evaluate(&self, x: &[f64]) -> Evaluated {
        let mut g = Vec::with_capacity(self.components.len());
        let mut logp = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let diff: Vec<f64> = x.iter().zip(&c.mean).map(|(a, b)| a - b).collect();
            let gk = c.precision.matvec(&diff).expect("dimension");
            logp.push(c.log_weight + c.log_norm - 0.5 * dot(&diff, &gk));
            g.push(gk);
        }
        let top = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logp.iter().map(|l| (l - top).exp()).sum();
        let log_density = top + sum.ln();
        let gamma = logp.iter().map(|l| (l - log_density).exp()).collect();
        Evaluated { gamma, g, log_density }
    }

    /// `φ(x)`.
    pub fn neg_log_density(&self, x: &[f64]) -> f64 {
        -self.evaluate(x).log_density
    }

    /// `∇φ(x) = Σ γ_k Λ_k (x - μ_k)`.
    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let e = self.evaluate(x);
        let mut out = vec![0.0; self.dim];
        for (gamma, gk) in e.gamma.iter().zip(&e.g) {
            for (o, v) in out.iter_mut().zip(gk) {
                *o += gamma * v;
            }
        }
        out
    }

    /// `∇²φ(x) = Σ γ_k Λ_k - Σ γ_k g_k g_kᵀ + ḡ ḡᵀ`.
    pub fn hessian(&self, x: &[f64]) -> DenseMatrix {
        let d = self.dim;
        let e = self.evaluate(x);
        let mut gbar = vec![0.0; d];
        let mut h = DenseMatrix::zeros(d, d);
        for ((gamma, gk), c) in e.gamma.iter().zip(&e.g).zip(&self.components) {
            for r in 0..d {
                gbar[r] += gamma * gk[r];
                for s in 0..d {
                    h[(r, s)] += gamma * (c.precision[(r, s)] - gk[r] * gk[s]);
                }
            }
        }
        for r in 0..d {
            for s in 0..d {
                h[(r, s)] += gbar[r] * gbar[s];
            }
        }
        h
    }
}

/// Gradient of the mixture potential at `x`.
pub fn mixture_grad(potential: &GaussianMixturePotential, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(potential.dim, x.len())?;
    Ok(potential.grad(x))
}

/// `f_t(x) = x - ε ∇φ(x) + sqrt(2ε) w_t` with `w` drawn at construction.
#[derive(Debug, Clone)]
pub struct LangevinSpec {
    potential: GaussianMixturePotential,
    step: f64,
    /// `T x D`.
    noise: Vec<f64>,
    x0: Vec<f64>,
}

impl LangevinSpec {
    pub fn new(potential: GaussianMixturePotential, step: f64, noise: Vec<f64>, x0: Vec<f64>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidConfig(format!("Langevin step must be positive, got {step}")));
        }
        let d = potential.dim;
        check_dim(d, x0.len())?;
        if noise.is_empty() || noise.len() % d != 0 {
            return Err(Error::InvalidConfig("noise must be a non-empty T x D array".into()));
        }
        check_finite(&noise, "Langevin noise")?;
        check_finite(&x0, "Langevin x0")?;
        Ok(Self { potential, step, noise, x0 })
    }

    /// Standard-normal noise and a standard-normal starting point.
    pub fn random(potential: GaussianMixturePotential, step: f64, steps: usize, rng: &mut impl Rng) -> Result<Self> {
        let d = potential.dim;
        let noise = (0..steps * d).map(|_| StandardNormal.sample(rng)).collect();
        let x0 = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        Self::new(potential, step, noise, x0)
    }

    pub fn potential(&self) -> &GaussianMixturePotential {
        &self.potential
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }
}

/// The sampler as a dynamics family.
pub fn langevin_dynamics(spec: LangevinSpec) -> LangevinSpec {
    spec
}

impl Dynamics for LangevinSpec {
    fn dim(&self) -> usize {
        self.potential.dim
    }

    fn steps(&self) -> usize {
        self.noise.len() / self.potential.dim
    }

    fn eval(&self, t: usize, x: &[f64]) -> Vec<f64> {
        let d = self.potential.dim;
        let w = &self.noise[(t - 1) * d..t * d];
        let s = (2.0 * self.step).sqrt();
        self.potential
            .grad(x)
            .iter()
            .zip(x)
            .zip(w)
            .map(|((g, xi), wi)| xi - self.step * g + s * wi)
            .collect()
    }

    fn jacobian(&self, _t: usize, x: &[f64]) -> Option<DenseMatrix> {
        let d = self.potential.dim;
        let mut j = self.potential.hessian(x).scale(-self.step);
        for i in 0..d {
            j[(i, i)] += 1.0;
        }
        Some(j)
    }
}
