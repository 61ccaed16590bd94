//! File formats: JSON documents for groupoids, Haar systems, pseudo-
//! representations and circle fields, and the CSV tables emitted by the
//! experiment driver.
//!
//! Groupoid documents are only checked for shape when parsed. The groupoid
//! laws are left to [`FiniteGroupoid::validate`] so that a corrupted table
//! can still be loaded and reported on.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::averaging::{ConvergenceTrace, LemmaTable, SegmentPoint};
use crate::circle::{
    AnalyticField, CircleActionGroupoid, CircleError, ConnectionSegmentPoint, FourierTerm, SampledField,
};
use crate::groupoid::{FiniteGroupoid, GroupoidError};
use crate::haar::{HaarError, HaarSystem};
use crate::pseudo_rep::{FiberBundle, PseudoRep, RepError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Groupoid(#[from] GroupoidError),
    #[error(transparent)]
    Haar(#[from] HaarError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error("matrix of arrow {arrow} is ragged or empty")]
    RaggedMatrix { arrow: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrowDoc {
    pub id: usize,
    pub src: usize,
    pub tgt: usize,
}

/// `comp` lists `[later, earlier, result]` triples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupoidDoc {
    pub objects: usize,
    pub arrows: Vec<ArrowDoc>,
    pub units: Vec<usize>,
    pub inv: Vec<usize>,
    pub comp: Vec<[usize; 3]>,
}

impl From<&FiniteGroupoid> for GroupoidDoc {
    fn from(g: &FiniteGroupoid) -> Self {
        GroupoidDoc {
            objects: g.num_objects(),
            arrows: g.arrows().map(|id| ArrowDoc { id, src: g.src(id), tgt: g.tgt(id) }).collect(),
            units: g.objects().map(|x| g.unit(x)).collect(),
            inv: g.arrows().map(|a| g.inv(a)).collect(),
            comp: g.composable_pairs().map(|(l, e, r)| [l, e, r]).collect(),
        }
    }
}

impl GroupoidDoc {
    pub fn build(&self) -> Result<FiniteGroupoid, GroupoidError> {
        let n = self.arrows.len();
        let mut src = vec![0; n];
        let mut tgt = vec![0; n];
        let mut seen = vec![false; n];
        for a in &self.arrows {
            if a.id >= n {
                return Err(GroupoidError::UnknownArrow(a.id));
            }
            if std::mem::replace(&mut seen[a.id], true) {
                return Err(GroupoidError::MalformedTable(format!("arrow id {} listed twice", a.id)));
            }
            src[a.id] = a.src;
            tgt[a.id] = a.tgt;
        }
        let comp: Vec<_> = self.comp.iter().map(|&[l, e, r]| (l, e, r)).collect();
        FiniteGroupoid::from_tables(self.objects, src, tgt, self.units.clone(), self.inv.clone(), &comp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarDoc {
    pub weights: Vec<f64>,
}

impl From<&HaarSystem> for HaarDoc {
    fn from(h: &HaarSystem) -> Self {
        HaarDoc { weights: h.weights().to_vec() }
    }
}

impl HaarDoc {
    pub fn build(&self, groupoid: &FiniteGroupoid) -> Result<HaarSystem, HaarError> {
        HaarSystem::from_weights(groupoid, self.weights.clone())
    }
}

/// Matrices are listed per arrow as arrays of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepDoc {
    pub ranks: Vec<usize>,
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl From<&PseudoRep> for RepDoc {
    fn from(rep: &PseudoRep) -> Self {
        let matrices = rep.mats().iter().map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect()).collect();
        RepDoc { ranks: rep.ranks().to_vec(), matrices }
    }
}

impl RepDoc {
    pub fn build(&self, groupoid: &FiniteGroupoid) -> Result<PseudoRep, IoError> {
        let bundle = FiberBundle::new(groupoid, self.ranks.clone())?;
        let mats = self
            .matrices
            .iter()
            .enumerate()
            .map(|(arrow, rows)| {
                let cols = rows.first().map_or(0, Vec::len);
                if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
                    return Err(IoError::RaggedMatrix { arrow });
                }
                Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PseudoRep::new(groupoid, &bundle, mats)?)
    }
}

/// A connection field on a circle-action groupoid, either as a Fourier
/// series or as node samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldDoc {
    Analytic { groupoid: CircleActionGroupoid, terms: Vec<FourierTerm> },
    Sampled(SampledField),
}

impl FieldDoc {
    /// Samples the field on its groupoid, or on a groupoid of quadrature
    /// order `order` for a series.
    pub fn sample(&self, order: Option<usize>) -> Result<SampledField, CircleError> {
        match self {
            FieldDoc::Analytic { groupoid, terms } => {
                let field = AnalyticField::new(terms.clone())?;
                let g = match order {
                    Some(n) => CircleActionGroupoid::new(n, groupoid.radii().to_vec(), groupoid.action())?,
                    None => groupoid.clone(),
                };
                SampledField::sample(&g, &field)
            }
            FieldDoc::Sampled(s) => match order {
                Some(n) if n != s.groupoid().order() => Err(CircleError::Mismatch(format!(
                    "sampled field has order {}, requested {n}",
                    s.groupoid().order()
                ))),
                _ => Ok(s.clone()),
            },
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.into(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    fs::write(path, text).map_err(|source| IoError::Write { path: path.into(), source })
}

pub fn read_groupoid(path: &Path) -> Result<FiniteGroupoid, IoError> {
    Ok(read_json::<GroupoidDoc>(path)?.build()?)
}

pub fn read_haar(path: &Path, groupoid: &FiniteGroupoid) -> Result<HaarSystem, IoError> {
    Ok(read_json::<HaarDoc>(path)?.build(groupoid)?)
}

pub fn read_rep(path: &Path, groupoid: &FiniteGroupoid) -> Result<PseudoRep, IoError> {
    read_json::<RepDoc>(path)?.build(groupoid)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|source| IoError::Write { path: path.into(), source })?;
    Ok(())
}

/// `iter,b,c,bound,unital_dev`, plus `mult_defect` when any row has one.
pub fn write_trace_csv(path: &Path, trace: &ConvergenceTrace) -> Result<(), IoError> {
    let with_mult = trace.rows.iter().any(|r| r.mult_defect.is_some());
    let mut header = vec!["iter", "b", "c", "bound", "unital_dev"];
    if with_mult {
        header.push("mult_defect");
    }
    let rows = trace.rows.iter().map(|r| {
        let mut rec =
            vec![r.iter.to_string(), fmt_float(r.b), fmt_float(r.c), fmt_float(r.bound), fmt_float(r.unital_dev)];
        if with_mult {
            rec.push(r.mult_defect.map_or_else(String::new, fmt_float));
        }
        rec
    });
    write_table(path, &header, rows)
}

pub fn write_lemma_csv(path: &Path, table: &LemmaTable) -> Result<(), IoError> {
    let header = ["i", "b", "c", "bound", "ratio", "sqrt3_b0", "c_ok", "b_ok"];
    let rows = table.rows.iter().map(|r| {
        vec![
            r.i.to_string(),
            fmt_float(r.b),
            fmt_float(r.c),
            fmt_float(r.bound),
            fmt_float(r.ratio),
            fmt_float(r.sqrt3_b0),
            r.c_ok.to_string(),
            r.b_ok.to_string(),
        ]
    });
    write_table(path, &header, rows)
}

pub fn write_segment_csv(path: &Path, points: &[SegmentPoint]) -> Result<(), IoError> {
    write_table(path, &["t", "c"], points.iter().map(|p| vec![fmt_float(p.t), fmt_float(p.c)]))
}

pub fn write_connection_segment_csv(path: &Path, points: &[ConnectionSegmentPoint]) -> Result<(), IoError> {
    write_table(path, &["t", "c"], points.iter().map(|p| vec![fmt_float(p.t), fmt_float(p.c)]))
}

/// Appends one line to a text file, creating it if needed.
pub fn append_line(path: &Path, line: &str) -> Result<(), IoError> {
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|source| IoError::Write { path: path.into(), source })?;
    writeln!(f, "{line}").map_err(|source| IoError::Write { path: path.into(), source })
}
