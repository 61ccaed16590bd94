use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gavg_core::experiment::{self, ExperimentConfig, HaarChoice, Mode};

/// Haar averaging of groupoid pseudo-representations and circle-action
/// connections.
///
/// Exit status: 0 success, 1 input or validation error, 2 a hypothesis or
/// convergence failure.
#[derive(Debug, Parser)]
#[command(name = "gavg", version)]
struct Args {
    /// validate, certify, average, iterate, lemma, conn-iterate or segment.
    #[arg(long)]
    mode: Mode,
    /// Groupoid JSON.
    #[arg(long)]
    groupoid: Option<PathBuf>,
    /// Haar weights JSON, or `uniform`, or `random` (drawn from --seed).
    #[arg(long, default_value = "uniform")]
    haar: HaarChoice,
    /// Pseudo-representation JSON.
    #[arg(long)]
    rep: Option<PathBuf>,
    /// Circle connection field JSON.
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 20)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Refuse to iterate from a start that fails the near-representation
    /// certificate.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    b0: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    /// Last index of the lemma table.
    #[arg(long, default_value_t = 10)]
    len: usize,
    /// Subdivisions of the segment scan.
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// Resample a series field at this quadrature order.
    #[arg(long)]
    order: Option<usize>,
}

impl From<Args> for ExperimentConfig {
    fn from(a: Args) -> Self {
        ExperimentConfig {
            mode: a.mode,
            groupoid: a.groupoid,
            haar: a.haar,
            rep: a.rep,
            field: a.field,
            tol: a.tol,
            max_iter: a.max_iter,
            seed: a.seed,
            out: a.out,
            strict: a.strict,
            b0: a.b0,
            c0: a.c0,
            len: a.len,
            steps: a.steps,
            order: a.order,
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("GAVG_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().map_err(|_| format!("GAVG_THREADS={raw:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let config = ExperimentConfig::from(args);
    let result = experiment::run(&config);
    match &result {
        Ok(report) => {
            for m in &report.messages {
                println!("{m}");
            }
            for a in &report.artifacts {
                println!("wrote {}", a.display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(experiment::exit_code(&result) as u8)
}
