//! Dynamics functions and the ways we approximate their Jacobians.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::DenseMatrix;
use crate::error::{check_dim, Error, Result};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Default number of Hutchinson probes.
pub const DEFAULT_PROBES: usize = 4;

/// A family of step functions `x_t = f_t(x_{t-1})` for `t = 1..=steps()`.
///
/// `eval` must be deterministic in `(t, x)`; any noise or inputs are sampled
/// once at construction.
pub trait Dynamics: Sync {
    fn dim(&self) -> usize;

    /// Sequence length `T` the dynamics are defined for.
    fn steps(&self) -> usize;

    fn eval(&self, t: usize, x: &[f64]) -> Vec<f64>;

    /// `∂f_t/∂x` at `x`, if known in closed form.
    fn jacobian(&self, _t: usize, _x: &[f64]) -> Option<DenseMatrix> {
        None
    }

    /// `(∂f_t/∂x) v`, if it can be computed without forming the Jacobian.
    fn jvp(&self, _t: usize, _x: &[f64], _v: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

impl<D: Dynamics + ?Sized> Dynamics for &D {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn steps(&self) -> usize {
        (**self).steps()
    }
    fn eval(&self, t: usize, x: &[f64]) -> Vec<f64> {
        (**self).eval(t, x)
    }
    fn jacobian(&self, t: usize, x: &[f64]) -> Option<DenseMatrix> {
        (**self).jacobian(t, x)
    }
    fn jvp(&self, t: usize, x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        (**self).jvp(t, x, v)
    }
}

type EvalFn = Box<dyn Fn(usize, &[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Box<dyn Fn(usize, &[f64]) -> DenseMatrix + Send + Sync>;
type JvpFn = Box<dyn Fn(usize, &[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Dynamics assembled from closures.
pub struct FnDynamics {
    dim: usize,
    steps: usize,
    eval: EvalFn,
    jacobian: Option<JacFn>,
    jvp: Option<JvpFn>,
}

impl FnDynamics {
    pub fn new(
        dim: usize,
        steps: usize,
        eval: impl Fn(usize, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, steps, eval: Box::new(eval), jacobian: None, jvp: None }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(usize, &[f64]) -> DenseMatrix + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Box::new(jac));
        self
    }

    pub fn with_jvp(
        mut self,
        jvp: impl Fn(usize, &[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jvp = Some(Box::new(jvp));
        self
    }
}

impl Dynamics for FnDynamics {
    fn dim(&self) -> usize {
        self.dim
    }
    fn steps(&self) -> usize {
        self.steps
    }
    fn eval(&self, t: usize, x: &[f64]) -> Vec<f64> {
        (self.eval)(t, x)
    }
    fn jacobian(&self, t: usize, x: &[f64]) -> Option<DenseMatrix> {
        self.jacobian.as_ref().map(|j| j(t, x))
    }
    fn jvp(&self, t: usize, x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        self.jvp.as_ref().map(|j| j(t, x, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JacobianMode {
    Analytic,
    CentralDifference { step: f64 },
    /// Stochastic diagonal estimate from Rademacher probes.
    Hutchinson { probes: usize, seed: u64 },
}

impl Default for JacobianMode {
    fn default() -> Self {
        JacobianMode::Analytic
    }
}

impl JacobianMode {
    pub fn central() -> Self {
        JacobianMode::CentralDifference { step: DEFAULT_FD_STEP }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            JacobianMode::CentralDifference { step } if !(step > 0.0 && step.is_finite()) => {
                Err(Error::InvalidConfig(format!("finite-difference step must be positive, got {step}")))
            }
            JacobianMode::Hutchinson { probes: 0, .. } => {
                Err(Error::InvalidConfig("Hutchinson estimator needs at least one probe".into()))
            }
            _ => Ok(()),
        }
    }
}

pub fn full_jacobian<F: Dynamics + ?Sized>(
    f: &F,
    t: usize,
    x: &[f64],
    mode: JacobianMode,
) -> Result<DenseMatrix> {
    mode.validate()?;
    check_dim(f.dim(), x.len())?;
    let jac = match mode {
        JacobianMode::Analytic => f.jacobian(t, x).ok_or(Error::MissingJacobian)?,
        JacobianMode::CentralDifference { step } => central_difference(f, t, x, step),
        JacobianMode::Hutchinson { .. } => {
            return Err(Error::InvalidConfig(
                "Hutchinson mode only estimates the diagonal".into(),
            ))
        }
    };
    if jac.rows() != f.dim() || jac.cols() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: jac.rows() });
    }
    if !jac.is_finite() {
        return Err(Error::NonFinite("jacobian"));
    }
    Ok(jac)
}

pub fn diagonal_jacobian<F: Dynamics + ?Sized>(
    f: &F,
    t: usize,
    x: &[f64],
    mode: JacobianMode,
) -> Result<Vec<f64>> {
    let diag = match mode {
        JacobianMode::Analytic | JacobianMode::CentralDifference { .. } => {
            full_jacobian(f, t, x, mode)?.diagonal()
        }
        JacobianMode::Hutchinson { probes, seed } => {
            mode.validate()?;
            check_dim(f.dim(), x.len())?;
            hutchinson_diagonal(f, t, x, probes, seed)
        }
    };
    if diag.iter().all(|v| v.is_finite()) {
        Ok(diag)
    } else {
        Err(Error::NonFinite("jacobian diagonal"))
    }
}

/// Column `c` is `(f(x + h e_c) - f(x - h e_c)) / 2h`.
fn central_difference<F: Dynamics + ?Sized>(f: &F, t: usize, x: &[f64], h: f64) -> DenseMatrix {
    let n = x.len();
    let mut jac = DenseMatrix::zeros(n, n);
    let mut probe = x.to_vec();
    for c in 0..n {
        probe[c] = x[c] + h;
        let plus = f.eval(t, &probe);
        probe[c] = x[c] - h;
        let minus = f.eval(t, &probe);
        probe[c] = x[c];
        for r in 0..n {
            jac[(r, c)] = (plus[r] - minus[r]) / (2.0 * h);
        }
    }
    jac
}

/// Generator for probe `k` at step `t`; depends only on `(seed, t, k)`.
pub fn probe_rng(seed: u64, t: usize, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((t as u64) << 32) ^ k as u64);
    rng
}

pub fn rademacher(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

fn hutchinson_diagonal<F: Dynamics + ?Sized>(
    f: &F,
    t: usize,
    x: &[f64],
    probes: usize,
    seed: u64,
) -> Vec<f64> {
    let n = x.len();
    let mut dense: Option<Option<DenseMatrix>> = None;
    let mut acc = vec![0.0; n];
    for k in 0..probes {
        let z = rademacher(&mut probe_rng(seed, t, k), n);
        let jz = match f.jvp(t, x, &z) {
            Some(v) => v,
            None => match dense.get_or_insert_with(|| f.jacobian(t, x)) {
                Some(j) => j.matvec(&z).expect("square jacobian"),
                None => directional_difference(f, t, x, &z, DEFAULT_FD_STEP),
            },
        };
        for ((a, zi), jzi) in acc.iter_mut().zip(&z).zip(&jz) {
            *a += zi * jzi;
        }
    }
    acc.iter().map(|a| a / probes as f64).collect()
}

fn directional_difference<F: Dynamics + ?Sized>(f: &F, t: usize, x: &[f64], v: &[f64], h: f64) -> Vec<f64> {
    let plus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let minus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
    f.eval(t, &plus)
        .iter()
        .zip(f.eval(t, &minus))
        .map(|(p, m)| (p - m) / (2.0 * h))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(m: DenseMatrix) -> FnDynamics {
        let n = m.rows();
        let m2 = m.clone();
        FnDynamics::new(n, 1, move |_, x| m.matvec(x).unwrap()).with_jacobian(move |_, _| m2.clone())
    }

    #[test]
    fn identity_map() {
        let f = FnDynamics::new(3, 1, |_, x| x.to_vec());
        let j = full_jacobian(&f, 1, &[0.3, -1.0, 2.0], JacobianMode::central()).unwrap();
        assert!(j.max_abs_diff(&DenseMatrix::identity(3)) < 1e-9);
    }

    #[test]
    fn square_at_three() {
        let f = FnDynamics::new(1, 1, |_, x| vec![x[0] * x[0]]);
        let j = full_jacobian(&f, 1, &[3.0], JacobianMode::central()).unwrap();
        assert!((j[(0, 0)] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn linear_map_exact_and_fd() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let f = linear(m.clone());
        let x = [0.7, -0.2];
        assert_eq!(full_jacobian(&f, 1, &x, JacobianMode::Analytic).unwrap(), m);
        let fd = full_jacobian(&f, 1, &x, JacobianMode::central()).unwrap();
        assert!(fd.max_abs_diff(&m) < 1e-9);
        assert_eq!(diagonal_jacobian(&f, 1, &x, JacobianMode::Analytic).unwrap(), vec![1.0, 4.0]);
    }

    #[test]
    fn missing_analytic_jacobian() {
        let f = FnDynamics::new(1, 1, |_, x| x.to_vec());
        assert_eq!(full_jacobian(&f, 1, &[0.0], JacobianMode::Analytic), Err(Error::MissingJacobian));
    }

    #[test]
    fn non_finite_jacobian() {
        let f = FnDynamics::new(1, 1, |_, x| vec![x[0].ln()]);
        assert!(full_jacobian(&f, 1, &[0.0], JacobianMode::central()).is_err());
    }

    #[test]
    fn invalid_modes() {
        let f = FnDynamics::new(1, 1, |_, x| x.to_vec());
        let zero_probes = JacobianMode::Hutchinson { probes: 0, seed: 0 };
        assert!(diagonal_jacobian(&f, 1, &[0.0], zero_probes).is_err());
        let bad_step = JacobianMode::CentralDifference { step: 0.0 };
        assert!(full_jacobian(&f, 1, &[0.0], bad_step).is_err());
        let hutch = JacobianMode::Hutchinson { probes: 1, seed: 0 };
        assert!(full_jacobian(&f, 1, &[0.0], hutch).is_err());
    }

    #[test]
    fn hutchinson_exact_for_elementwise_maps() {
        // f(x) = sin(x) elementwise, no jacobian or jvp: probes go through finite differences.
        let f = FnDynamics::new(4, 1, |_, x| x.iter().map(|v| v.sin()).collect());
        let x = [0.1, -1.3, 2.0, 0.5];
        let est = diagonal_jacobian(&f, 1, &x, JacobianMode::Hutchinson { probes: 1, seed: 9 }).unwrap();
        for (e, xi) in est.iter().zip(&x) {
            assert!((e - xi.cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn hutchinson_converges_on_dense() {
        let f = linear(DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]));
        let est =
            diagonal_jacobian(&f, 1, &[0.0, 0.0], JacobianMode::Hutchinson { probes: 10_000, seed: 1 }).unwrap();
        assert!((est[0] - 1.0).abs() < 0.1 && (est[1] - 4.0).abs() < 0.1, "{est:?}");
    }

    #[test]
    fn hutchinson_is_deterministic() {
        let f = linear(DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]));
        let mode = JacobianMode::Hutchinson { probes: 7, seed: 42 };
        let a = diagonal_jacobian(&f, 3, &[0.0, 0.0], mode).unwrap();
        let b = diagonal_jacobian(&f, 3, &[0.0, 0.0], mode).unwrap();
        assert_eq!(a, b);
    }
}
