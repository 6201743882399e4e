//! Ctf-consistency verdicts for counterfactual editors ("proxies").
//!
//! A proxy is judged only through its log of (factual, edited) label pairs.
//! It is consistent when (1) its factual labels follow the reference
//! observational distribution, up to a total-variation tolerance `ε`, and
//! (2) every observed feature counterfactual `P̂(W[x'] = w' | W = w)` lies in
//! the optimal bound for that query, widened by a slack `δ`. Bounds that are
//! not certified optimal can only yield a `conditional` verdict.

mod log;
mod proxies;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Value};

pub use log::{empirical_distribution, empirical_from_csv, ProxyLog, SampleRecord};
pub use proxies::{fit_markovian, proxy_conditional, proxy_markovian, proxy_preserve, MarkovFit};

use crate::bounds::{optimal_bounds, BoundOptions, BoundsError, Method};
use crate::engine::{CtfEvent, CtfQuery, Distribution, EngineError};
use crate::model::{CausalDiagram, Intervention, ModelError};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, thiserror::Error)]
pub enum ConsistencyError {
    #[error("no records")]
    Empty,
    #[error("record {record} assigns a different set of variables than the first record")]
    Ragged { record: usize },
    #[error("record {record} has a different intervention than the first record")]
    MixedInterventions { record: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("conditioning context has probability zero: {0}")]
    ZeroContext(String),
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("row {row}: column `{column}` is not an integer")]
    BadCell { row: usize, column: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Three-valued outcome of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Pass,
    Fail,
    /// No violation was found, but some cell was judged against bounds that
    /// are not certified optimal (or could not be computed).
    Conditional,
}

impl Verdict {
    /// Process exit code: 0 pass, 1 fail, 2 conditional.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Conditional => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Conditional => "conditional",
        })
    }
}

/// Bound used to judge one cell.
#[derive(Debug, Clone, PartialEq)]
pub enum CellBound {
    Computed {
        lower: Rational,
        upper: Rational,
        certified: bool,
        method: Method,
    },
    /// The bound could not be computed; the cell counts as unverified.
    Failed(String),
}

/// One observed `(w, w')` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCheck {
    pub factual: BTreeMap<String, i64>,
    pub counterfactual: BTreeMap<String, i64>,
    /// Records with this `(w, w')`.
    pub count: usize,
    /// Records with factual `w`.
    pub factual_count: usize,
    /// `count / factual_count`.
    pub empirical: Rational,
    pub bound: CellBound,
    /// `None` when the bound is unavailable.
    pub in_bound: Option<bool>,
}

impl CellCheck {
    fn to_json(&self) -> Value {
        let mut v = json!({
            "factual": self.factual,
            "counterfactual": self.counterfactual,
            "count": self.count,
            "factual_count": self.factual_count,
            "empirical": self.empirical.to_json_string(),
            "in_bound": self.in_bound,
        });
        match &self.bound {
            CellBound::Computed { lower, upper, certified, method } => {
                v["lower"] = json!(lower.to_json_string());
                v["upper"] = json!(upper.to_json_string());
                v["certified"] = json!(certified);
                v["method"] = json!(method.to_string());
            }
            CellBound::Failed(e) => v["error"] = json!(e),
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub intervention: BTreeMap<String, i64>,
    pub care_set: Vec<String>,
    pub records: usize,
    pub epsilon: Rational,
    pub delta: Rational,
    /// TV between the log's factual labels and the reference distribution.
    pub tv: Rational,
    pub obs_fit: bool,
    pub cells: Vec<CellCheck>,
    /// Factual `w` with positive reference mass that the log never visits;
    /// listed for information, they do not affect the verdict.
    pub unobserved: Vec<BTreeMap<String, i64>>,
    pub verdict: Verdict,
}

impl ConsistencyReport {
    pub fn to_json(&self) -> Value {
        json!({
            "verdict": self.verdict.to_string(),
            "intervention": self.intervention,
            "care_set": self.care_set,
            "records": self.records,
            "epsilon": self.epsilon.to_json_string(),
            "delta": self.delta.to_json_string(),
            "tv": self.tv.to_json_string(),
            "obs_fit": self.obs_fit,
            "cells": self.cells.iter().map(CellCheck::to_json).collect::<Vec<_>>(),
            "unobserved": self.unobserved,
        })
    }

    /// Cells whose certified bound excludes the empirical value.
    pub fn violations(&self) -> impl Iterator<Item = &CellCheck> {
        self.cells.iter().filter(|c| c.in_bound == Some(false))
    }
}

/// Default observational tolerance, 1/50.
pub fn default_epsilon() -> Rational {
    Rational::new(BigInt::from(1), BigInt::from(50))
}

/// Default bound slack, 1/100.
pub fn default_delta() -> Rational {
    Rational::new(BigInt::from(1), BigInt::from(100))
}

fn restrict(assignment: &BTreeMap<String, i64>, vars: &[String]) -> Result<Vec<i64>, ConsistencyError> {
    vars.iter()
        .map(|v| assignment.get(v).copied().ok_or_else(|| ConsistencyError::UnknownVariable(v.clone())))
        .collect()
}

fn named(vars: &[String], values: &[i64]) -> BTreeMap<String, i64> {
    vars.iter().cloned().zip(values.iter().copied()).collect()
}

/// Bounds for each query, computed on scoped threads.
fn bound_all(
    obs: &Distribution<Rational>,
    diagram: &CausalDiagram,
    queries: &[CtfQuery],
    opts: &BoundOptions,
) -> Vec<Result<crate::bounds::BoundResult, BoundsError>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(queries.len()).max(1);
    let chunk = queries.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = queries
            .chunks(chunk)
            .map(|qs| s.spawn(move || qs.iter().map(|q| optimal_bounds(obs, diagram, q, opts)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("bound worker panicked")).collect()
    })
}

/// Judges a proxy log against the reference distribution and diagram.
///
/// The records must share one intervention. Cells are the distinct `(w, w')`
/// pairs (restricted to `care_set`) present in the log.
pub fn check_ctf_consistency(
    obs_ref: &Distribution<Rational>,
    log: &ProxyLog,
    diagram: &CausalDiagram,
    care_set: &[String],
    epsilon: &Rational,
    delta: &Rational,
) -> Result<ConsistencyReport, ConsistencyError> {
    check_with_options(obs_ref, log, diagram, care_set, epsilon, delta, &BoundOptions::default())
}

/// [`check_ctf_consistency`] with explicit bound options.
pub fn check_with_options(
    obs_ref: &Distribution<Rational>,
    log: &ProxyLog,
    diagram: &CausalDiagram,
    care_set: &[String],
    epsilon: &Rational,
    delta: &Rational,
    opts: &BoundOptions,
) -> Result<ConsistencyReport, ConsistencyError> {
    let x = log.intervention()?;
    for v in care_set.iter().chain(x.keys()) {
        if obs_ref.position(v).is_none() {
            return Err(ConsistencyError::UnknownVariable(v.clone()));
        }
    }

    // condition (1): factual labels against the reference
    let vars = obs_ref.variables().to_vec();
    let factual = log.factual_distribution()?;
    let factual = factual.marginal(&vars).map_err(|e| match e {
        EngineError::UnknownVariable(v) => ConsistencyError::UnknownVariable(v),
        e => e.into(),
    })?;
    let tv = factual.total_variation(obs_ref)?;
    let obs_fit = tv <= *epsilon;

    // condition (2): per observed cell
    let mut counts: BTreeMap<Vec<i64>, BTreeMap<Vec<i64>, usize>> = BTreeMap::new();
    for r in &log.records {
        let w = restrict(&r.factual, care_set)?;
        let w2 = restrict(&r.counterfactual, care_set)?;
        *counts.entry(w).or_default().entry(w2).or_default() += 1;
    }
    let context = Intervention(x.clone());
    let mut keys = Vec::new();
    let mut queries = Vec::new();
    for (w, row) in &counts {
        for w2 in row.keys() {
            let events =
                care_set.iter().zip(w2).map(|(v, val)| CtfEvent::new(v.clone(), *val, context.clone())).collect();
            let conditioning = care_set.iter().cloned().zip(w.iter().copied()).collect();
            keys.push((w.clone(), w2.clone()));
            queries.push(CtfQuery::new(events, conditioning));
        }
    }
    let results = bound_all(obs_ref, diagram, &queries, opts);

    let mut cells = Vec::with_capacity(keys.len());
    for ((w, w2), res) in keys.into_iter().zip(results) {
        let factual_count: usize = counts[&w].values().sum();
        let count = counts[&w][&w2];
        let empirical = Rational::new(BigInt::from(count), BigInt::from(factual_count));
        let (bound, in_bound) = match res {
            Ok(b) => {
                let inside = empirical >= b.lower.clone() - delta && empirical <= b.upper.clone() + delta;
                (
                    CellBound::Computed { lower: b.lower, upper: b.upper, certified: b.certified, method: b.method },
                    Some(inside),
                )
            }
            Err(e) => (CellBound::Failed(e.to_string()), None),
        };
        cells.push(CellCheck {
            factual: named(care_set, &w),
            counterfactual: named(care_set, &w2),
            count,
            factual_count,
            empirical,
            bound,
            in_bound,
        });
    }

    let unobserved = obs_ref
        .marginal(care_set)?
        .iter()
        .filter(|(w, p)| !p.is_zero() && !counts.contains_key(*w))
        .map(|(w, _)| named(care_set, w))
        .collect();

    let certified_violation = cells
        .iter()
        .any(|c| c.in_bound == Some(false) && matches!(c.bound, CellBound::Computed { certified: true, .. }));
    let unverified = cells.iter().any(|c| !matches!(c.bound, CellBound::Computed { certified: true, .. }));
    let verdict = if !obs_fit || certified_violation {
        Verdict::Fail
    } else if unverified {
        Verdict::Conditional
    } else {
        Verdict::Pass
    };

    Ok(ConsistencyReport {
        intervention: x,
        care_set: care_set.to_vec(),
        records: log.records.len(),
        epsilon: epsilon.clone(),
        delta: delta.clone(),
        tv,
        obs_fit,
        cells,
        unobserved,
        verdict,
    })
}
