//! Experiment orchestration behind the `gavg` command.
//!
//! Every mode writes its artifacts under the output directory and reports
//! whether the run passed. Exit codes: 0 success, 1 input or validation
//! error, 2 failure of a mathematical hypothesis or of convergence.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::averaging::{
    self, certify_near_rep, iterate, lemma_recursion, segment_scan, AveragingError, IterationOptions,
    DEFAULT_SEARCH_BUDGET,
};
use crate::circle::{certify_near_effective, connection_segment, iterate_connection, CircleError, ConnectionOptions};
use crate::groupoid::FiniteGroupoid;
use crate::haar::HaarSystem;
use crate::io::{self, FieldDoc, IoError, RepDoc};
use crate::pseudo_rep::PseudoRep;
use crate::report::ValidationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Validate,
    Certify,
    Average,
    Iterate,
    Lemma,
    ConnIterate,
    Segment,
}

impl Mode {
    pub const ALL: [Mode; 7] =
        [Mode::Validate, Mode::Certify, Mode::Average, Mode::Iterate, Mode::Lemma, Mode::ConnIterate, Mode::Segment];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Validate => "validate",
            Mode::Certify => "certify",
            Mode::Average => "average",
            Mode::Iterate => "iterate",
            Mode::Lemma => "lemma",
            Mode::ConnIterate => "conn-iterate",
            Mode::Segment => "segment",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ExperimentError::Input(format!("unknown mode {s:?}")))
    }
}

/// Where the Haar system comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HaarChoice {
    Uniform,
    /// Random positive weights drawn from the run seed.
    Random,
    File(PathBuf),
}

impl FromStr for HaarChoice {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "uniform" => HaarChoice::Uniform,
            "random" => HaarChoice::Random,
            path => HaarChoice::File(path.into()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub groupoid: Option<PathBuf>,
    pub haar: HaarChoice,
    pub rep: Option<PathBuf>,
    pub field: Option<PathBuf>,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Skip the certificate check in the iteration modes unless set.
    pub strict: bool,
    pub b0: Option<f64>,
    pub c0: Option<f64>,
    pub len: usize,
    pub steps: usize,
    /// Resample a series field at this quadrature order.
    pub order: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, out: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            mode,
            groupoid: None,
            haar: HaarChoice::Uniform,
            rep: None,
            field: None,
            tol: 1e-12,
            max_iter: 20,
            seed: 0,
            out: out.into(),
            strict: false,
            b0: None,
            c0: None,
            len: 10,
            steps: 20,
            order: None,
        }
    }

    pub fn check(&self) -> Result<(), ExperimentError> {
        if !(self.tol > 0.0) {
            return Err(ExperimentError::Input(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(ExperimentError::Input("max-iter must be at least 1".into()));
        }
        if self.steps == 0 {
            return Err(ExperimentError::Input("steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Hypothesis(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Input(_) | ExperimentError::Io(_) => 1,
            ExperimentError::Hypothesis(_) => 2,
        }
    }
}

impl From<AveragingError> for ExperimentError {
    fn from(e: AveragingError) -> Self {
        match e {
            AveragingError::FiberMismatch { .. } | AveragingError::Rep(_) => ExperimentError::Input(e.to_string()),
            _ => ExperimentError::Hypothesis(e.to_string()),
        }
    }
}

impl From<CircleError> for ExperimentError {
    fn from(e: CircleError) -> Self {
        match e {
            CircleError::Degenerate { .. } | CircleError::NotNearEffective { .. } | CircleError::Diverged { .. } => {
                ExperimentError::Hypothesis(e.to_string())
            }
            _ => ExperimentError::Input(e.to_string()),
        }
    }
}

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub passed: bool,
    pub artifacts: Vec<PathBuf>,
    pub messages: Vec<String>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            2
        }
    }
}

/// Exit status of a run result.
pub fn exit_code(result: &Result<RunReport, ExperimentError>) -> i32 {
    match result {
        Ok(r) => r.exit_code(),
        Err(e) => e.exit_code(),
    }
}

struct Run<'a> {
    config: &'a ExperimentConfig,
    report: RunReport,
}

impl Run<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.config.out.join(name);
        self.report.artifacts.push(p.clone());
        p
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), ExperimentError> {
        let p = self.path(name);
        Ok(io::write_json(&p, value)?)
    }

    fn say(&mut self, line: impl Into<String>) {
        self.report.messages.push(line.into());
    }

    fn required<'p>(&self, path: &'p Option<PathBuf>, flag: &str) -> Result<&'p Path, ExperimentError> {
        path.as_deref().ok_or_else(|| ExperimentError::Input(format!("mode {} needs --{flag}", self.config.mode)))
    }

    /// Loads the groupoid and refuses one that breaks a law.
    fn groupoid(&self) -> Result<FiniteGroupoid, ExperimentError> {
        let g = io::read_groupoid(self.required(&self.config.groupoid, "groupoid")?)?;
        match g.validate().first() {
            None => Ok(g),
            Some(v) => Err(ExperimentError::Input(format!("groupoid is invalid: {v}"))),
        }
    }

    fn haar(&self, groupoid: &FiniteGroupoid) -> Result<HaarSystem, ExperimentError> {
        match &self.config.haar {
            HaarChoice::Uniform => Ok(HaarSystem::uniform(groupoid)),
            HaarChoice::Random => {
                HaarSystem::random(groupoid, self.config.seed).map_err(|e| ExperimentError::Input(e.to_string()))
            }
            HaarChoice::File(p) => Ok(io::read_haar(p, groupoid)?),
        }
    }

    fn rep(&self, groupoid: &FiniteGroupoid) -> Result<PseudoRep, ExperimentError> {
        Ok(io::read_rep(self.required(&self.config.rep, "rep")?, groupoid)?)
    }

    fn field(&self) -> Result<FieldDoc, ExperimentError> {
        Ok(io::read_json(self.required(&self.config.field, "field")?)?)
    }
}

#[derive(Serialize)]
struct Validation {
    groupoid: ValidationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    haar: Option<ValidationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rep: Option<RepSummary>,
}

#[derive(Serialize)]
struct RepSummary {
    unital_deviation: f64,
    first_singular_arrow: Option<usize>,
}

/// Runs one experiment. Artifacts are written even when the run fails a
/// hypothesis, as long as there is something to write.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    config.check()?;
    fs::create_dir_all(&config.out).map_err(|source| IoError::Write { path: config.out.clone(), source })?;
    let mut run = Run { config, report: RunReport { passed: true, artifacts: Vec::new(), messages: Vec::new() } };
    match config.mode {
        Mode::Validate => validate(&mut run)?,
        Mode::Certify => certify(&mut run)?,
        Mode::Average => average(&mut run)?,
        Mode::Iterate => iterate_mode(&mut run)?,
        Mode::Lemma => lemma(&mut run)?,
        Mode::ConnIterate => conn_iterate(&mut run)?,
        Mode::Segment => segment(&mut run)?,
    }
    Ok(run.report)
}

fn validate(run: &mut Run) -> Result<(), ExperimentError> {
    let g = io::read_groupoid(run.required(&run.config.groupoid, "groupoid")?)?;
    let mut doc = Validation { groupoid: g.validate(), haar: None, rep: None };
    if doc.groupoid.is_empty() {
        if let HaarChoice::File(p) = &run.config.haar {
            let weights = io::read_json::<io::HaarDoc>(p)?.weights;
            let haar = HaarSystem::from_weights_unchecked(&g, weights).map_err(IoError::from)?;
            doc.haar = Some(haar.validate(&g));
        }
        if run.config.rep.is_some() {
            let rep = run.rep(&g)?;
            doc.rep = Some(RepSummary {
                unital_deviation: rep.unital_deviation(&g),
                first_singular_arrow: rep.first_singular_arrow(),
            });
        }
    }
    let violations: Vec<String> = doc
        .groupoid
        .violations
        .iter()
        .chain(doc.haar.iter().flat_map(|h| &h.violations))
        .map(|v| v.to_string())
        .collect();
    run.json("validation.json", &doc)?;
    if !violations.is_empty() {
        return Err(ExperimentError::Input(format!(
            "{} violation(s):\n  {}",
            violations.len(),
            violations.join("\n  ")
        )));
    }
    run.say(format!("valid: {} objects, {} arrows", g.num_objects(), g.num_arrows()));
    Ok(())
}

fn certify(run: &mut Run) -> Result<(), ExperimentError> {
    let g = run.groupoid()?;
    let rep = run.rep(&g)?;
    let cert = certify_near_rep(&g, &rep, DEFAULT_SEARCH_BUDGET);
    run.json("certificate.json", &cert)?;
    for o in &cert.orbits {
        let verdict = if o.pass { "pass" } else { "fail" };
        run.say(format!("orbit {}: b = {:e}, c = {:e}, threshold = {:e}: {verdict}", o.orbit, o.b, o.c, o.threshold));
    }
    if !cert.unital {
        run.say("start is not unital");
    }
    run.report.passed = cert.pass;
    Ok(())
}

fn average(run: &mut Run) -> Result<(), ExperimentError> {
    let g = run.groupoid()?;
    let haar = run.haar(&g)?;
    let rep = run.rep(&g)?;
    let avg = averaging::average(&g, &haar, &rep)?;
    run.json("averaged.json", &RepDoc::from(&avg))?;
    run.say(format!("unital deviation after averaging: {:e}", avg.unital_deviation(&g)));
    Ok(())
}

fn iterate_mode(run: &mut Run) -> Result<(), ExperimentError> {
    let g = run.groupoid()?;
    let haar = run.haar(&g)?;
    let rep = run.rep(&g)?;
    let options = IterationOptions {
        tol: run.config.tol,
        max_iter: run.config.max_iter,
        force: !run.config.strict,
        search_budget: DEFAULT_SEARCH_BUDGET,
    };
    let out = iterate(&g, &haar, &rep, options)?;
    let trace = run.path("trace.csv");
    io::write_trace_csv(&trace, &out.trace)?;
    run.json("rep.json", &RepDoc::from(&out.rep))?;
    if let Some(cert) = &out.certificate {
        run.json("certificate.json", cert)?;
    }
    let last = out.trace.last().expect("trace has a row");
    run.say(format!("{} iteration(s), final c = {:e}", last.iter, last.c));
    if !out.converged {
        run.say(format!("no convergence to tol = {:e} within {} iterations", run.config.tol, run.config.max_iter));
    }
    run.report.passed = out.converged;
    Ok(())
}

fn lemma(run: &mut Run) -> Result<(), ExperimentError> {
    let (b0, c0) = match (run.config.b0, run.config.c0) {
        (Some(b0), Some(c0)) => (b0, c0),
        _ => return Err(ExperimentError::Input("mode lemma needs --b0 and --c0".into())),
    };
    let table = lemma_recursion(b0, c0, run.config.len)?;
    let p = run.path("lemma.csv");
    io::write_lemma_csv(&p, &table)?;
    match table.first_failure() {
        None => run.say(format!("all {} rows pass", table.rows.len())),
        Some(r) => {
            run.say(format!("row {} fails: c = {:e}, bound = {:e}, ratio = {:e}", r.i, r.c, r.bound, r.ratio));
            run.report.passed = false;
        }
    }
    Ok(())
}

fn conn_iterate(run: &mut Run) -> Result<(), ExperimentError> {
    let start = run.field()?.sample(run.config.order)?;
    let options = ConnectionOptions { tol: run.config.tol, max_iter: run.config.max_iter, force: !run.config.strict };
    if !options.force {
        let certs = certify_near_effective(&start);
        run.json("certificates.json", &certs)?;
    }
    let out = iterate_connection(&start, options)?;
    let trace = run.path("trace.csv");
    io::write_trace_csv(&trace, &out.trace)?;
    run.json("field.json", &FieldDoc::Sampled(out.field.clone()))?;
    let last = out.trace.last().expect("trace has a row");
    run.say(format!(
        "{} iteration(s), final multiplicativity defect = {:e}",
        last.iter,
        last.mult_defect.unwrap_or(f64::NAN)
    ));
    if out.floor_reached {
        run.say("defect stopped halving above tol (quadrature floor)");
    }
    run.report.passed = out.converged;
    Ok(())
}

fn segment(run: &mut Run) -> Result<(), ExperimentError> {
    let p = run.config.out.join("segment.csv");
    if run.config.field.is_some() {
        let field = run.field()?.sample(run.config.order)?;
        let points = connection_segment(&field, run.config.steps)?;
        io::write_connection_segment_csv(&p, &points)?;
    } else {
        let g = run.groupoid()?;
        let haar = run.haar(&g)?;
        let rep = run.rep(&g)?;
        let points = segment_scan(&g, &haar, &rep, run.config.steps)?;
        io::write_segment_csv(&p, &points)?;
    }
    run.report.artifacts.push(p);
    run.say(format!("{} segment points", run.config.steps + 1));
    Ok(())
}
