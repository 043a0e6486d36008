use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use parseq::fixedpoint::Evaluation;
use parseq_cli::{print_summary, run_experiment, summarize, verify, write_rows, Experiment, ExperimentConfig, MethodName, OutputFormat};

const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "parseq", version, about = "Parallel fixed-point evaluation of nonlinear recursions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every (method, T, D, seed, batch member) cell and write one row per solve.
    Run(RunArgs),
    /// Run the bundled invariant suites.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalArg {
    Scan,
    Sequential,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_experiment)]
    experiment: Experiment,
    /// Comma list of newton, quasi-newton, picard, jacobi, scale-elk, clip-elk, sequential.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<MethodName>>,
    #[arg(long, value_delimiter = ',')]
    seq_lens: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = parseq::fixedpoint::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Langevin step size.
    #[arg(long, default_value_t = parseq::models::DEFAULT_STEP)]
    epsilon: f64,
    #[arg(long, default_value_t = 2)]
    mixture_k: usize,
    /// Damping of scale-elk, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    elk_k: f64,
    #[arg(long, value_enum, default_value = "scan")]
    eval: EvalArg,
    /// Defaults to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long, default_value_t = 0)]
    root_seed: u64,
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse()
}

fn parse_method(s: &str) -> Result<MethodName, String> {
    s.parse()
}

impl RunArgs {
    fn into_config(self) -> ExperimentConfig {
        let base = ExperimentConfig::new(self.experiment);
        ExperimentConfig {
            methods: self.methods.unwrap_or(base.methods.clone()),
            seq_lens: self.seq_lens.unwrap_or(base.seq_lens.clone()),
            dims: self.dims.unwrap_or(base.dims.clone()),
            seeds: self.seeds,
            batch: self.batch,
            tolerance: self.tol,
            epsilon: self.epsilon,
            mixture_k: self.mixture_k,
            elk_k: self.elk_k,
            evaluation: match self.eval {
                EvalArg::Scan => Evaluation::ParallelScan,
                EvalArg::Sequential => Evaluation::SequentialLds,
            },
            root_seed: self.root_seed,
            format: match self.format {
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Jsonl => OutputFormat::Jsonl,
            },
            ..base
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("PARSEQ_THREADS") else { return Ok(()) };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or(format!("PARSEQ_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(args: RunArgs) -> ExitCode {
    let output = args.output.clone();
    let cfg = args.into_config();
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(USAGE);
    }
    let rows = match run_experiment(&cfg) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let written = match &output {
        Some(path) => File::create(path)
            .map_err(anyhow::Error::from)
            .and_then(|f| write_rows(&rows, cfg.format, BufWriter::new(f))),
        None => write_rows(&rows, cfg.format, io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    let summary = summarize(&rows);
    let printed = match output {
        Some(_) => print_summary(&summary, io::stdout().lock()),
        None => print_summary(&summary, io::stderr().lock()),
    };
    if let Err(e) = printed {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    let failed = rows.iter().filter(|r| !r.is_expected()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs diverged or failed to converge", rows.len());
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}

fn verify_all() -> ExitCode {
    let results = verify::run_all();
    let mut out = io::stdout().lock();
    for r in &results {
        let detail = match &r.outcome {
            Ok(d) => d.clone(),
            Err(e) => format!("{e:#}"),
        };
        let _ = writeln!(out, "[{}] {}: {detail}", if r.passed() { "PASS" } else { "FAIL" }, r.name);
    }
    if results.iter().all(|r| r.passed()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(USAGE);
    }
    match cli.command {
        Command::Run(args) => run(args),
        Command::Verify => verify_all(),
    }
}
