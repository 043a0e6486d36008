//! Parallel fixed-point evaluation of a nonlinear recursion.
//!
//! Each iteration linearizes every step around the current guess,
//!
//! ```text
//! x_t <- f_t(x_{t-1}^old) + A_t (x_{t-1} - x_{t-1}^old)
//! ```
//!
//! and evaluates the resulting affine recursion with a parallel scan. The
//! scheme only decides `A_t`. Whatever it picks, `x_1` is exact after the
//! first iteration and exactness spreads at least one step per iteration,
//! so `T` iterations always suffice.

mod scheme;

pub use scheme::{ElkBase, Scheme};

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::jacobian::{Dynamics, JacobianMode};
use crate::lds::{self, AffineElement, StateTrajectory};

pub const DEFAULT_TOLERANCE: f64 = 5e-4;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// `x_t = x_0` for every `t`.
    ReplicateX0,
    Zeros,
    /// Flattened `(x_1, .., x_T)`.
    Provided(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    ParallelScan,
    SequentialLds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop once the merit is at or below this.
    pub tolerance: f64,
    /// Defaults to the sequence length.
    pub max_iterations: Option<usize>,
    pub initial_guess: InitialGuess,
    pub jacobian_mode: JacobianMode,
    pub evaluation: Evaluation,
    /// Abort when the merit exceeds this. Non-finite merits always abort.
    pub divergence_limit: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: None,
            initial_guess: InitialGuess::ReplicateX0,
            jacobian_mode: JacobianMode::Analytic,
            evaluation: Evaluation::ParallelScan,
            divergence_limit: f64::INFINITY,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance must be >= 0, got {}", self.tolerance)));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.divergence_limit > 0.0) {
            return Err(Error::InvalidConfig("divergence limit must be positive".into()));
        }
        self.jacobian_mode.validate()
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub trajectory: StateTrajectory,
    pub iterations: usize,
    /// Merit of the initial guess followed by one entry per iteration.
    pub merit_history: Vec<f64>,
    pub converged: bool,
    pub per_iteration_nanos: Vec<u128>,
}

impl SolveReport {
    pub fn final_merit(&self) -> f64 {
        *self.merit_history.last().expect("history holds the initial merit")
    }

    pub fn total_nanos(&self) -> u128 {
        self.per_iteration_nanos.iter().sum()
    }
}

/// Plain left-to-right evaluation of the recursion.
pub fn rollout<F: Dynamics + ?Sized>(f: &F, x0: &[f64]) -> Result<StateTrajectory> {
    check_dim(f.dim(), x0.len())?;
    let mut states = Vec::with_capacity(f.steps() * x0.len());
    let mut x = x0.to_vec();
    for t in 1..=f.steps() {
        x = f.eval(t, &x);
        check_dim(x0.len(), x.len())?;
        states.extend_from_slice(&x);
    }
    StateTrajectory::new(x0.to_vec(), states)
}

/// Stepwise residuals `r_t = x_t - f_t(x_{t-1})` (flattened) and the merit
/// `½‖r‖²`.
pub fn residual_and_merit<F: Dynamics + ?Sized>(f: &F, traj: &StateTrajectory) -> Result<(Vec<f64>, f64)> {
    check_dim(f.dim(), traj.dim())?;
    if !traj.is_finite() {
        return Err(Error::NonFinite("trajectory"));
    }
    let d = traj.dim();
    let mut r = vec![0.0; traj.len() * d];
    r.par_chunks_mut(d).enumerate().for_each(|(i, ri)| {
        let t = i + 1;
        let fx = f.eval(t, traj.state(t - 1));
        for ((o, x), y) in ri.iter_mut().zip(traj.state(t)).zip(&fx) {
            *o = x - y;
        }
    });
    let merit = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
    Ok((r, merit))
}

/// One affine element per step, linearized around `guess`:
/// `A_t` from the scheme and `b_t = f_t(x_{t-1}) - A_t x_{t-1}`.
pub fn linearize<F: Dynamics + ?Sized>(
    scheme: Scheme,
    f: &F,
    guess: &StateTrajectory,
    mode: JacobianMode,
) -> Result<Vec<AffineElement>> {
    scheme.validate()?;
    check_dim(f.dim(), guess.dim())?;
    (1..=guess.len())
        .into_par_iter()
        .map(|t| {
            let x_prev = guess.state(t - 1);
            let a = scheme.transition(f, t, x_prev, mode)?;
            let fx = f.eval(t, x_prev);
            let ax = a.apply(x_prev)?;
            let b = fx.iter().zip(&ax).map(|(y, z)| y - z).collect();
            AffineElement::new(a, b)
        })
        .collect()
}

fn initial_trajectory(x0: &[f64], steps: usize, policy: &InitialGuess) -> Result<StateTrajectory> {
    match policy {
        InitialGuess::ReplicateX0 => StateTrajectory::replicate(x0, steps),
        InitialGuess::Zeros => StateTrajectory::new(x0.to_vec(), vec![0.0; steps * x0.len()]),
        InitialGuess::Provided(states) => {
            check_dim(steps * x0.len(), states.len())?;
            StateTrajectory::new(x0.to_vec(), states.clone())
        }
    }
}

/// Evaluate one linearized iteration from `guess`.
pub fn iterate<F: Dynamics + ?Sized>(
    f: &F,
    guess: &StateTrajectory,
    scheme: Scheme,
    mode: JacobianMode,
    evaluation: Evaluation,
) -> Result<StateTrajectory> {
    let elems = linearize(scheme, f, guess, mode)?;
    match evaluation {
        Evaluation::ParallelScan => lds::evaluate_lds_parallel(guess.x0(), &elems),
        Evaluation::SequentialLds => lds::evaluate_lds_sequential(guess.x0(), &elems),
    }
}

pub fn solve<F: Dynamics + ?Sized>(
    f: &F,
    x0: &[f64],
    config: &SolverConfig,
    scheme: Scheme,
) -> Result<SolveReport> {
    config.validate()?;
    scheme.validate()?;
    check_dim(f.dim(), x0.len())?;
    let steps = f.steps();
    if steps == 0 {
        return Err(Error::EmptyScan);
    }
    let max_iterations = config.max_iterations.unwrap_or(steps);

    let mut traj = initial_trajectory(x0, steps, &config.initial_guess)?;
    let (_, mut merit) = residual_and_merit(f, &traj)?;
    let mut merit_history = vec![merit];
    let mut per_iteration_nanos = Vec::new();
    let mut iterations = 0;

    while merit > config.tolerance && iterations < max_iterations {
        let start = Instant::now();
        iterations += 1;
        traj = match iterate(f, &traj, scheme, config.jacobian_mode, config.evaluation) {
            Ok(next) => next,
            Err(Error::ScanOverflow) | Err(Error::NonFinite(_)) => {
                return Err(Error::Diverged { iteration: iterations, merit: f64::INFINITY })
            }
            Err(e) => return Err(e),
        };
        merit = match residual_and_merit(f, &traj) {
            Ok((_, m)) => m,
            Err(Error::NonFinite(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        per_iteration_nanos.push(start.elapsed().as_nanos());
        merit_history.push(merit);
        if !merit.is_finite() || merit > config.divergence_limit {
            return Err(Error::Diverged { iteration: iterations, merit });
        }
    }

    Ok(SolveReport {
        trajectory: traj,
        iterations,
        merit_history,
        converged: merit <= config.tolerance,
        per_iteration_nanos,
    })
}

/// Independent solves over a batch of problems.
#[derive(Debug)]
pub struct BatchReport {
    pub members: Vec<Result<SolveReport>>,
}

impl BatchReport {
    pub fn converged(&self) -> bool {
        self.members.iter().all(|m| matches!(m, Ok(r) if r.converged))
    }

    /// Iterations until the slowest member converged.
    pub fn iterations(&self) -> Option<usize> {
        self.members.iter().map(|m| m.as_ref().ok().map(|r| r.iterations)).try_fold(0, |acc, it| {
            it.map(|i| acc.max(i))
        })
    }
}

pub fn solve_batch<F: Dynamics>(
    problems: &[(F, Vec<f64>)],
    config: &SolverConfig,
    scheme: Scheme,
) -> BatchReport {
    BatchReport {
        members: problems.par_iter().map(|(f, x0)| solve(f, x0, config, scheme)).collect(),
    }
}

/// Solve the same problem with each scheme.
pub fn compare_methods<F: Dynamics + ?Sized>(
    f: &F,
    x0: &[f64],
    schemes: &[Scheme],
    config: &SolverConfig,
) -> Vec<(Scheme, Result<SolveReport>)> {
    schemes.iter().map(|&s| (s, solve(f, x0, config, s))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use crate::jacobian::FnDynamics;
    use crate::lds::TransitionMatrix;

    fn plus_one(steps: usize) -> FnDynamics {
        FnDynamics::new(1, steps, |_, x| vec![x[0] + 1.0])
            .with_jacobian(|_, _| DenseMatrix::identity(1))
    }

    fn square(steps: usize) -> FnDynamics {
        FnDynamics::new(1, steps, |_, x| vec![x[0] * x[0]])
            .with_jacobian(|_, x| DenseMatrix::from_rows(&[[2.0 * x[0]]]))
    }

    #[test]
    fn merit_examples() {
        let f = plus_one(2);
        let zeros = StateTrajectory::new(vec![0.0], vec![0.0, 0.0]).unwrap();
        let (r, l) = residual_and_merit(&f, &zeros).unwrap();
        assert_eq!(r, vec![-1.0, -1.0]);
        assert_eq!(l, 1.0);

        let exact = rollout(&f, &[0.0]).unwrap();
        assert_eq!(residual_and_merit(&f, &exact).unwrap().1, 0.0);

        // residuals (-2, -2): twice those of the zero guess
        let doubled = StateTrajectory::new(vec![0.0], vec![-1.0, -2.0]).unwrap();
        let (r2, l2) = residual_and_merit(&f, &doubled).unwrap();
        assert_eq!(r2, vec![-2.0, -2.0]);
        assert_eq!(l2, 4.0 * l);

        let bad = StateTrajectory::new(vec![0.0], vec![f64::NAN, 0.0]).unwrap();
        assert!(residual_and_merit(&f, &bad).is_err());
    }

    #[test]
    fn linearize_examples() {
        let f = square(2);
        let guess = StateTrajectory::new(vec![1.0], vec![3.0, 0.0]).unwrap();
        let newton = linearize(Scheme::Newton, &f, &guess, JacobianMode::Analytic).unwrap();
        // step 2 leaves x_1 = 3: A = 6, b = 9 - 18
        assert_eq!(newton[1].a.densify()[(0, 0)], 6.0);
        assert_eq!(newton[1].b, vec![-9.0]);
        let fd = linearize(Scheme::Newton, &f, &guess, JacobianMode::central()).unwrap();
        assert!((fd[1].a.densify()[(0, 0)] - 6.0).abs() < 1e-6);

        let picard = linearize(Scheme::Picard, &f, &guess, JacobianMode::Analytic).unwrap();
        assert!(picard.iter().all(|e| e.a == TransitionMatrix::Identity(1)));

        let jacobi = linearize(Scheme::Jacobi, &f, &guess, JacobianMode::Analytic).unwrap();
        assert!(jacobi.iter().all(|e| e.a == TransitionMatrix::Zero(1)));
        assert_eq!(jacobi[0].b, vec![1.0]);
        assert_eq!(jacobi[1].b, vec![9.0]);
    }

    #[test]
    fn jacobi_counts_one_step_per_iteration() {
        let f = plus_one(3);
        let config = SolverConfig { initial_guess: InitialGuess::Zeros, ..Default::default() };
        let rep = solve(&f, &[0.0], &config, Scheme::Jacobi).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 3);
        assert_eq!(rep.trajectory.states(), &[1.0, 2.0, 3.0]);
        assert_eq!(rep.merit_history.len(), 4);
    }

    #[test]
    fn exact_guess_needs_no_iterations() {
        let f = square(4);
        let exact = rollout(&f, &[0.9]).unwrap();
        let config = SolverConfig {
            initial_guess: InitialGuess::Provided(exact.states().to_vec()),
            ..Default::default()
        };
        let rep = solve(&f, &[0.9], &config, Scheme::Newton).unwrap();
        assert_eq!((rep.iterations, rep.converged), (0, true));
        assert!(rep.per_iteration_nanos.is_empty());
    }

    #[test]
    fn max_iterations_caps_the_loop() {
        let f = plus_one(10);
        let config = SolverConfig { max_iterations: Some(4), ..Default::default() };
        let rep = solve(&f, &[0.0], &config, Scheme::Jacobi).unwrap();
        assert_eq!(rep.iterations, 4);
        assert!(!rep.converged);
    }

    #[test]
    fn config_errors() {
        let f = plus_one(2);
        let bad_tol = SolverConfig { tolerance: -1.0, ..Default::default() };
        assert!(solve(&f, &[0.0], &bad_tol, Scheme::Picard).is_err());
        let bad_iters = SolverConfig { max_iterations: Some(0), ..Default::default() };
        assert!(solve(&f, &[0.0], &bad_iters, Scheme::Picard).is_err());
        let bad_k = Scheme::ScaleElk { k: 1.5, base: ElkBase::Newton };
        assert!(solve(&f, &[0.0], &SolverConfig::default(), bad_k).is_err());
        assert!(solve(&f, &[0.0, 0.0], &SolverConfig::default(), Scheme::Picard).is_err());
        let short_guess = SolverConfig { initial_guess: InitialGuess::Provided(vec![0.0]), ..Default::default() };
        assert!(solve(&f, &[0.0], &short_guess, Scheme::Picard).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        // x -> 10 x with an identity approximation blows up the merit.
        let f = FnDynamics::new(1, 40, |_, x| vec![10.0 * x[0]]);
        let config = SolverConfig { divergence_limit: 1e12, ..Default::default() };
        let err = solve(&f, &[1.0], &config, Scheme::Picard).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err:?}");
    }

    #[test]
    fn batch_takes_the_slowest_member() {
        let problems = vec![(plus_one(3), vec![0.0]), (plus_one(5), vec![0.0])];
        let config = SolverConfig { initial_guess: InitialGuess::Zeros, ..Default::default() };
        let rep = solve_batch(&problems, &config, Scheme::Jacobi);
        assert!(rep.converged());
        assert_eq!(rep.iterations(), Some(5));
    }

    #[test]
    fn identity_dynamics_converge_immediately() {
        let f = FnDynamics::new(2, 6, |_, x| x.to_vec()).with_jacobian(|_, _| DenseMatrix::identity(2));
        for (s, rep) in compare_methods(&f, &[1.0, 2.0], &Scheme::all(), &SolverConfig::default()) {
            assert!(rep.unwrap().iterations <= 1, "{s}");
        }
    }
}
