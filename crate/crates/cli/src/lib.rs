//! Experiment harness around the `parseq` solvers.
//!
//! One run solves every `(method, T, D, seed, batch member)` cell of an
//! [`ExperimentConfig`] and yields one [`ResultRow`] per solve.

pub mod verify;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Result};
use parseq::fixedpoint::{ElkBase, Evaluation, Scheme, SolverConfig};
use parseq::models::{GaussianMixturePotential, GruParameters, LangevinSpec, LinearDynamics, PermutationWordProblem};
use parseq::{rollout, solve, Dynamics, JacobianMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

/// Probes per Hutchinson diagonal estimate.
pub const HUTCHINSON_PROBES: usize = 4;
/// Gain of the random dense transitions in `custom-lds`.
pub const CUSTOM_LDS_GAIN: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    S5,
    Gru,
    Langevin,
    CustomLds,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::S5 => "s5",
            Experiment::Gru => "gru",
            Experiment::Langevin => "langevin",
            Experiment::CustomLds => "custom-lds",
        }
    }

    pub fn default_dims(self) -> Vec<usize> {
        match self {
            Experiment::S5 => vec![5],
            Experiment::Gru => vec![4, 16],
            Experiment::Langevin => vec![8, 32],
            Experiment::CustomLds => vec![4],
        }
    }

    pub fn default_seq_lens(self) -> Vec<usize> {
        match self {
            Experiment::Langevin => vec![64, 128, 256, 512],
            _ => vec![16, 32, 64, 128, 256],
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "s5" => Experiment::S5,
            "gru" => Experiment::Gru,
            "langevin" => Experiment::Langevin,
            "custom-lds" => Experiment::CustomLds,
            _ => return Err(format!("unknown experiment `{s}` (expected s5, gru, langevin, custom-lds)")),
        })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A fixed-point scheme or the plain sequential rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MethodName {
    Newton,
    QuasiNewton,
    Picard,
    Jacobi,
    ScaleElk,
    ClipElk,
    Sequential,
}

impl MethodName {
    pub const ALL: [MethodName; 7] = [
        MethodName::Newton,
        MethodName::QuasiNewton,
        MethodName::Picard,
        MethodName::Jacobi,
        MethodName::ScaleElk,
        MethodName::ClipElk,
        MethodName::Sequential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodName::Newton => "newton",
            MethodName::QuasiNewton => "quasi-newton",
            MethodName::Picard => "picard",
            MethodName::Jacobi => "jacobi",
            MethodName::ScaleElk => "scale-elk",
            MethodName::ClipElk => "clip-elk",
            MethodName::Sequential => "sequential",
        }
    }

    /// `None` for the sequential baseline.
    pub fn scheme(self, elk_k: f64) -> Option<Scheme> {
        Some(match self {
            MethodName::Newton => Scheme::Newton,
            MethodName::QuasiNewton => Scheme::QuasiNewton,
            MethodName::Picard => Scheme::Picard,
            MethodName::Jacobi => Scheme::Jacobi,
            MethodName::ScaleElk => Scheme::ScaleElk { k: elk_k, base: ElkBase::Newton },
            MethodName::ClipElk => Scheme::ClipElk,
            MethodName::Sequential => return None,
        })
    }
}

impl FromStr for MethodName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        MethodName::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub methods: Vec<MethodName>,
    pub seq_lens: Vec<usize>,
    pub dims: Vec<usize>,
    pub seeds: usize,
    pub batch: usize,
    pub tolerance: f64,
    /// Langevin step size.
    pub epsilon: f64,
    pub mixture_k: usize,
    pub elk_k: f64,
    pub evaluation: Evaluation,
    pub root_seed: u64,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            methods: MethodName::ALL.to_vec(),
            seq_lens: experiment.default_seq_lens(),
            dims: experiment.default_dims(),
            seeds: 10,
            batch: 16,
            tolerance: parseq::fixedpoint::DEFAULT_TOLERANCE,
            epsilon: parseq::models::DEFAULT_STEP,
            mixture_k: 2,
            elk_k: 0.5,
            evaluation: Evaluation::ParallelScan,
            root_seed: 0,
            format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lists = [("methods", self.methods.len()), ("seq-lens", self.seq_lens.len()), ("dims", self.dims.len())];
        for (name, len) in lists {
            if len == 0 {
                bail!("--{name} must not be empty");
            }
        }
        if self.seq_lens.contains(&0) || self.dims.contains(&0) {
            bail!("sequence lengths and dimensions must be positive");
        }
        if self.seeds == 0 || self.batch == 0 || self.mixture_k == 0 {
            bail!("seeds, batch and mixture-k must be positive");
        }
        if !(self.tolerance >= 0.0) || !self.tolerance.is_finite() {
            bail!("tolerance must be a finite number >= 0");
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            bail!("epsilon must be a finite positive number");
        }
        if !(0.0..=1.0).contains(&self.elk_k) {
            bail!("elk-k must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub method: String,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub seed: usize,
    pub batch_index: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_merit: f64,
    pub wall_nanos: u128,
}

impl ResultRow {
    /// Whether this row counts as a success for the exit status.
    pub fn is_expected(&self) -> bool {
        self.converged || (self.method == "jacobi" && self.iterations == self.t)
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// The splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive fold of `parts` through splitmix64.
pub fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0, |h, &p| splitmix64(h ^ p))
}

/// Seed of the problem instance. Every method sees the same instance.
pub fn problem_seed(root: u64, experiment: Experiment, t: usize, d: usize, seed: usize, batch_index: usize) -> u64 {
    mix(&[root, fnv1a(experiment.name()), t as u64, d as u64, seed as u64, batch_index as u64])
}

/// Seed of the method's own randomness, such as Hutchinson probes.
pub fn solver_seed(problem_seed: u64, method: MethodName) -> u64 {
    mix(&[problem_seed, fnv1a(method.name())])
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Seeded problem instance and its initial state.
pub fn build_problem(cfg: &ExperimentConfig, t: usize, d: usize, seed: u64) -> Result<(Box<dyn Dynamics>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match cfg.experiment {
        Experiment::S5 => {
            let p = PermutationWordProblem::random(d, t, &mut rng)?;
            let x0 = p.x0().to_vec();
            (Box::new(p), x0)
        }
        Experiment::Gru => {
            let g = GruParameters::random(d, d, t, &mut rng)?;
            let x0 = normal_vec(&mut rng, d);
            (Box::new(g), x0)
        }
        Experiment::Langevin => {
            let pot = GaussianMixturePotential::random(cfg.mixture_k, d, &mut rng)?;
            let l = LangevinSpec::random(pot, cfg.epsilon, t, &mut rng)?;
            let x0 = l.x0().to_vec();
            (Box::new(l), x0)
        }
        Experiment::CustomLds => {
            let l = LinearDynamics::random(d, t, CUSTOM_LDS_GAIN, &mut rng)?;
            let x0 = normal_vec(&mut rng, d);
            (Box::new(l), x0)
        }
    })
}

/// Solver settings for `scheme`: Hutchinson probes when only a diagonal is needed.
pub fn solver_config(cfg: &ExperimentConfig, scheme: Scheme, seed: u64) -> SolverConfig {
    let jacobian_mode = if scheme.uses_jacobian() && !scheme.needs_full_jacobian() {
        JacobianMode::Hutchinson { probes: HUTCHINSON_PROBES, seed }
    } else {
        JacobianMode::Analytic
    };
    SolverConfig { tolerance: cfg.tolerance, jacobian_mode, evaluation: cfg.evaluation, ..SolverConfig::default() }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    method: MethodName,
    t: usize,
    d: usize,
    seed: usize,
    batch_index: usize,
}

fn run_cell(cfg: &ExperimentConfig, c: Cell) -> Result<ResultRow> {
    let pseed = problem_seed(cfg.root_seed, cfg.experiment, c.t, c.d, c.seed, c.batch_index);
    let (f, x0) = build_problem(cfg, c.t, c.d, pseed)?;
    let row = |iterations, converged, final_merit, wall_nanos| ResultRow {
        experiment: cfg.experiment.name().into(),
        method: c.method.name().into(),
        t: c.t,
        d: c.d,
        seed: c.seed,
        batch_index: c.batch_index,
        iterations,
        converged,
        final_merit,
        wall_nanos,
    };
    let Some(scheme) = c.method.scheme(cfg.elk_k) else {
        let start = Instant::now();
        rollout(&*f, &x0)?;
        return Ok(row(c.t, true, 0.0, start.elapsed().as_nanos()));
    };
    let solver = solver_config(cfg, scheme, solver_seed(pseed, c.method));
    let start = Instant::now();
    Ok(match solve(&*f, &x0, &solver, scheme) {
        Ok(r) => row(r.iterations, r.converged, r.final_merit(), start.elapsed().as_nanos()),
        Err(parseq::Error::Diverged { iteration, merit }) => row(iteration, false, merit, start.elapsed().as_nanos()),
        Err(e) => return Err(e.into()),
    })
}

/// Every row of the experiment, sorted by method, `T`, `D`, seed and batch index.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    let mut cells = Vec::new();
    for &method in &methods {
        for &t in &cfg.seq_lens {
            for &d in &cfg.dims {
                for seed in 0..cfg.seeds {
                    for batch_index in 0..cfg.batch {
                        cells.push(Cell { method, t, d, seed, batch_index });
                    }
                }
            }
        }
    }
    let mut rows: Vec<(Cell, ResultRow)> =
        cells.into_par_iter().map(|c| run_cell(cfg, c).map(|r| (c, r))).collect::<Result<_>>()?;
    rows.sort_by_key(|(c, _)| (c.method, c.t, c.d, c.seed, c.batch_index));
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn write_rows(rows: &[ResultRow], format: OutputFormat, out: impl Write) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            if rows.is_empty() {
                w.write_record(CSV_HEADER.split(','))?;
            }
            w.flush()?;
        }
        OutputFormat::Jsonl => {
            let mut out = out;
            for r in rows {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

pub const CSV_HEADER: &str = "experiment,method,T,D,seed,batch_index,iterations,converged,final_merit,wall_nanos";

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryLine {
    pub method: String,
    pub t: usize,
    pub d: usize,
    /// Median over seeds of the slowest batch member's iterations.
    pub median_iterations: f64,
    pub converged_runs: usize,
    pub runs: usize,
}

pub fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2] as f64,
        _ => (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0,
    }
}

/// Groups sorted rows by `(method, T, D)`.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryLine> {
    let mut out: Vec<SummaryLine> = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let key = (&rows[i].method, rows[i].t, rows[i].d);
        let j = i + rows[i..].iter().take_while(|r| (&r.method, r.t, r.d) == key).count();
        let group = &rows[i..j];
        let mut per_seed: Vec<(usize, usize)> = Vec::new();
        for r in group {
            match per_seed.last_mut() {
                Some((s, it)) if *s == r.seed => *it = (*it).max(r.iterations),
                _ => per_seed.push((r.seed, r.iterations)),
            }
        }
        out.push(SummaryLine {
            method: key.0.clone(),
            t: key.1,
            d: key.2,
            median_iterations: median(per_seed.into_iter().map(|(_, it)| it).collect()),
            converged_runs: group.iter().filter(|r| r.converged).count(),
            runs: group.len(),
        });
        i = j;
    }
    out
}

pub fn print_summary(lines: &[SummaryLine], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{:<14} {:>6} {:>4} {:>12} {:>10}", "method", "T", "D", "median iters", "converged")?;
    for l in lines {
        writeln!(
            out,
            "{:<14} {:>6} {:>4} {:>12} {:>10}",
            l.method,
            l.t,
            l.d,
            l.median_iterations,
            format!("{}/{}", l.converged_runs, l.runs)
        )?;
    }
    Ok(())
}
