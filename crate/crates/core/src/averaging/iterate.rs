use serde::{Deserialize, Serialize};

use super::{average, certify_near_rep, AveragingError, NearRepCertificate, DEFAULT_SEARCH_BUDGET};
use crate::groupoid::FiniteGroupoid;
use crate::haar::HaarSystem;
use crate::pseudo_rep::{FiberMetric, PseudoRep};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Skip the near-representation certificate.
    pub force: bool,
    pub search_budget: usize,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions { tol: 1e-12, max_iter: 60, force: false, search_budget: DEFAULT_SEARCH_BUDGET }
    }
}

/// One iterate. `b`, `c` and `bound` use identity metrics; `mult_defect` is
/// only filled in by the connection driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub b: f64,
    pub c: f64,
    pub bound: f64,
    pub unital_dev: f64,
    pub mult_defect: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Whether every row before the defect falls under `floor` satisfies
    /// `c_i <= bound_i`, up to a few ulps of the bound.
    pub fn within_envelope(&self, floor: f64) -> bool {
        self.rows.iter().take_while(|r| r.c >= floor).all(|r| r.c <= r.bound * (1.0 + 4.0 * f64::EPSILON))
    }
}

#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub rep: PseudoRep,
    pub trace: ConvergenceTrace,
    pub converged: bool,
    pub certificate: Option<NearRepCertificate>,
}

/// `eps^(2^i) / (6 b0^2)` with `eps = 6 b0^2 c0`.
pub fn envelope_bound(b0: f64, c0: f64, i: usize) -> f64 {
    if i == 0 {
        return c0;
    }
    let scale = 6.0 * b0 * b0;
    let mut e = scale * c0;
    for _ in 0..i {
        e *= e;
        if e == 0.0 || e.is_infinite() {
            break;
        }
    }
    e / scale
}

/// Repeated averaging until `c <= tol` or `max_iter` averaging steps.
///
/// Unless `force` is set the start must carry a passing near-representation
/// certificate. The divergence guard fires on a non-finite defect, or on a
/// defect `>= 1` after the first step that is either uncertified or not
/// decreasing.
pub fn iterate(
    groupoid: &FiniteGroupoid,
    haar: &HaarSystem,
    start: &PseudoRep,
    options: IterationOptions,
) -> Result<IterationOutcome, AveragingError> {
    let certificate = if options.force {
        None
    } else {
        let cert = certify_near_rep(groupoid, start, options.search_budget);
        if !cert.pass {
            let reason = match cert.orbits.iter().find(|o| !o.pass) {
                Some(o) => format!("orbit {} has c = {:e} above b^-2/9 = {:e}", o.orbit, o.c, o.threshold),
                None => "start is not unital".to_string(),
            };
            return Err(AveragingError::NotNearRepresentation(reason));
        }
        Some(cert)
    };
    let metric = FiberMetric::identity(&start.bundle());
    let mut rep = start.clone();
    let mut trace = ConvergenceTrace::default();
    let (mut b0, mut c0) = (0.0, 0.0);
    let mut prev_c = f64::INFINITY;
    for i in 0..=options.max_iter {
        let b = rep.defect_b(groupoid, &metric)?.value;
        let c = rep.defect_c(groupoid, &metric)?.value;
        if i == 0 {
            (b0, c0) = (b, c);
        }
        trace.rows.push(TraceRow {
            iter: i,
            b,
            c,
            bound: envelope_bound(b0, c0, i),
            unital_dev: rep.unital_deviation(groupoid),
            mult_defect: None,
        });
        if c <= options.tol {
            return Ok(IterationOutcome { rep, trace, converged: true, certificate });
        }
        if diverging(c, prev_c, i, options.force) {
            return Err(AveragingError::Diverged { iteration: i, c });
        }
        if i == options.max_iter {
            break;
        }
        prev_c = c;
        rep = average(groupoid, haar, &rep)?;
    }
    Ok(IterationOutcome { rep, trace, converged: false, certificate })
}

fn diverging(c: f64, prev_c: f64, i: usize, force: bool) -> bool {
    !c.is_finite() || (c >= 1.0 && i > 0 && (!force || c >= prev_c))
}
