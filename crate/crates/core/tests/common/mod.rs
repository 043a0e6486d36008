#![allow(dead_code)]

use parseq::fixedpoint::{ElkBase, Scheme};
use parseq::models::{GaussianMixturePotential, GruParameters, LangevinSpec, LinearDynamics, PermutationWordProblem};
use parseq::{Dynamics, JacobianMode, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Word,
    Gru,
    Langevin,
    Linear,
}

pub const FAMILIES: [Family; 4] = [Family::Word, Family::Gru, Family::Langevin, Family::Linear];

/// The three case-study families.
pub const CASE_STUDIES: [Family; 3] = [Family::Word, Family::Gru, Family::Langevin];

/// One scheme per row of the transition table plus both ELK variants.
pub const SIX_SCHEMES: [Scheme; 6] = [
    Scheme::Newton,
    Scheme::QuasiNewton,
    Scheme::Picard,
    Scheme::Jacobi,
    Scheme::ScaleElk { k: 0.5, base: ElkBase::Newton },
    Scheme::ClipElk,
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub type Problem = (Box<dyn Dynamics>, Vec<f64>);

/// A seeded instance of `family`. The Langevin step is enlarged so the
/// dynamics are visibly nonlinear, yet `ε λ_max(Λ) < 2` keeps the rollout
/// stable since covariance eigenvalues are at least `10⁻³·D`.
pub fn build(family: Family, dim: usize, steps: usize, seed: u64) -> Problem {
    let mut r = rng(seed);
    match family {
        Family::Word => {
            let p = PermutationWordProblem::random(dim, steps, &mut r).unwrap();
            let x0 = p.x0().to_vec();
            (Box::new(p), x0)
        }
        Family::Gru => {
            let g = GruParameters::random(dim, dim, steps, &mut r).unwrap();
            let x0 = normal_vec(&mut r, dim);
            (Box::new(g), x0)
        }
        Family::Langevin => {
            let pot = GaussianMixturePotential::random(2, dim, &mut r).unwrap();
            let l = LangevinSpec::random(pot, 1e-3, steps, &mut r).unwrap();
            let x0 = l.x0().to_vec();
            (Box::new(l), x0)
        }
        Family::Linear => {
            let l = LinearDynamics::random(dim, steps, 0.9, &mut r).unwrap();
            let x0 = normal_vec(&mut r, dim);
            (Box::new(l), x0)
        }
    }
}

/// Hutchinson for diagonal schemes, exact Jacobians otherwise.
pub fn config_for(scheme: Scheme, seed: u64) -> SolverConfig {
    let jacobian_mode = if scheme.uses_jacobian() && !scheme.needs_full_jacobian() {
        JacobianMode::Hutchinson { probes: 4, seed }
    } else {
        JacobianMode::Analytic
    };
    SolverConfig { jacobian_mode, ..SolverConfig::default() }
}

pub fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// One line per criterion in a fixed format.
pub fn report(id: &str, ok: bool, detail: &str) {
    println!("[{}] criterion {id}: {detail}", if ok { "PASS" } else { "FAIL" });
}
