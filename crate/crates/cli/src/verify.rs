//! Invariant suites run by `parseq verify` at fixed small sizes.

use anyhow::{ensure, Result};
use parseq::chordcheck::{build_block_system, sigma_factor};
use parseq::fixedpoint::{iterate, ElkBase, Evaluation, Scheme};
use parseq::lds::{evaluate_lds_parallel, evaluate_lds_sequential, relative_diff, AffineElement, Permutation, TransitionMatrix};
use parseq::models::{GaussianMixturePotential, GruParameters, LangevinSpec, PermutationWordProblem};
use parseq::{rollout, DenseMatrix, Dynamics, JacobianMode, StateTrajectory};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SCHEMES: [Scheme; 6] = [
    Scheme::Newton,
    Scheme::QuasiNewton,
    Scheme::Picard,
    Scheme::Jacobi,
    Scheme::ScaleElk { k: 0.5, base: ElkBase::Newton },
    Scheme::ClipElk,
];

pub struct SuiteResult {
    pub name: &'static str,
    pub outcome: Result<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.outcome.is_ok()
    }
}

type Problem = (&'static str, Box<dyn Dynamics>, Vec<f64>);

/// The three case-study families at small sizes.
fn case_studies(steps: usize, seed: u64) -> Result<Vec<Problem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = PermutationWordProblem::random(5, steps, &mut rng)?;
    let wx0 = word.x0().to_vec();
    let gru = GruParameters::random(3, 3, steps, &mut rng)?;
    let gx0 = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let pot = GaussianMixturePotential::random(2, 3, &mut rng)?;
    let lang = LangevinSpec::random(pot, 1e-3, steps, &mut rng)?;
    let lx0 = lang.x0().to_vec();
    Ok(vec![("s5", Box::new(word), wx0), ("gru", Box::new(gru), gx0), ("langevin", Box::new(lang), lx0)])
}

fn mode_for(scheme: Scheme) -> JacobianMode {
    if scheme.uses_jacobian() && !scheme.needs_full_jacobian() {
        JacobianMode::Hutchinson { probes: 4, seed: 0 }
    } else {
        JacobianMode::Analytic
    }
}

fn random_element(rng: &mut ChaCha8Rng, d: usize) -> Result<AffineElement> {
    let a = match rng.random_range(0..5) {
        0 => TransitionMatrix::Dense(DenseMatrix::from_row_major(
            d,
            d,
            (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )?),
        1 => TransitionMatrix::Diagonal((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()),
        2 => {
            let mut images: Vec<usize> = (0..d).collect();
            images.shuffle(rng);
            TransitionMatrix::Permutation(Permutation::new(images)?)
        }
        3 => TransitionMatrix::Identity(d),
        _ => TransitionMatrix::Zero(d),
    };
    Ok(AffineElement::new(a, (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())?)
}

/// Parallel scan against a left-to-right loop on random mixed-structure chains.
pub fn scan_vs_sequential() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for steps in 1..=70 {
        let d = rng.random_range(1..5);
        let elems: Vec<_> = (0..steps).map(|_| random_element(&mut rng, d)).collect::<Result<_>>()?;
        let x0: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let par = evaluate_lds_parallel(&x0, &elems)?;
        let seq = evaluate_lds_sequential(&x0, &elems)?;
        worst = worst.max(par.max_relative_diff(&seq));
    }
    ensure!(worst <= 1e-8, "max relative difference {worst:.2e} exceeds 1e-8");
    Ok(format!("70 chains, max relative difference {worst:.2e}"))
}

/// The chord iteration matrix vanishes at its `T`-th power at the solution.
pub fn chord_nilpotency() -> Result<String> {
    let steps = 6;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (name, f, x0) in case_studies(steps, 21)? {
        let truth = rollout(&*f, &x0)?;
        for s in SCHEMES {
            let sys = build_block_system(&*f, &truth, s, mode_for(s))?;
            let sigma = sigma_factor(&sys)?;
            ensure!(sigma.is_nilpotent(1e-8), "{name} {s}: |M^T| = {:.2e}", sigma.nilpotency_residual);
            worst = worst.max(sigma.nilpotency_residual);
            count += 1;
        }
    }
    Ok(format!("{count} scheme/dynamics pairs nilpotent, max |M^T| {worst:.2e}"))
}

/// After `i` iterations the first `i` states match the rollout.
pub fn prefix_exactness() -> Result<String> {
    let steps = 10;
    let mut count = 0;
    for (name, f, x0) in case_studies(steps, 5)? {
        let d = x0.len();
        let truth = rollout(&*f, &x0)?;
        for s in SCHEMES {
            let mut guess = StateTrajectory::replicate(&x0, steps)?;
            for i in 1..=steps {
                guess = iterate(&*f, &guess, s, mode_for(s), Evaluation::ParallelScan)?;
                let k = i * d;
                let err = relative_diff(&guess.states()[..k], &truth.states()[..k]);
                ensure!(err <= 1e-6, "{name} {s}: prefix {i} off by {err:.2e}");
            }
            count += 1;
        }
    }
    Ok(format!("{count} scheme/dynamics pairs exact on every prefix"))
}

pub fn run_all() -> Vec<SuiteResult> {
    vec![
        SuiteResult { name: "scan-vs-sequential", outcome: scan_vs_sequential() },
        SuiteResult { name: "chordcheck-nilpotency", outcome: chord_nilpotency() },
        SuiteResult { name: "prefix-exactness", outcome: prefix_exactness() },
    ]
}
