//! Exact evaluation of observational, interventional and counterfactual
//! quantities by enumeration over the exogenous joint support.

mod distribution;
mod query;

use std::collections::BTreeMap;

pub use distribution::Distribution;
pub use query::{CtfEvent, CtfQuery, FeatureQuery};

use crate::model::{CausalDiagram, Intervention, ModelError, Scm};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("value {value} is outside the domain of `{variable}`")]
    OutOfDomain { variable: String, value: i64 },
    #[error("more than one event for `{variable}` in the {context} world")]
    DuplicateEvent { variable: String, context: String },
    #[error("conditioning event has probability zero")]
    ZeroConditioning,
    #[error("models differ in their endogenous signature: {0}")]
    SignatureMismatch(String),
    #[error("malformed distribution: {0}")]
    Malformed(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn indices<T: Scalar>(scm: &Scm<T>, vars: &[String]) -> Result<Vec<usize>, EngineError> {
    vars.iter().map(|v| scm.var_index(v).ok_or_else(|| EngineError::UnknownVariable(v.clone()))).collect()
}

/// `P(vars)` induced by the model.
pub fn observational<T: Scalar>(scm: &Scm<T>, vars: &[String]) -> Result<Distribution<T>, EngineError> {
    interventional(scm, &Intervention::new(), vars)
}

/// `P(vars_x)`, the distribution in the submodel `M_x`.
pub fn interventional<T: Scalar>(
    scm: &Scm<T>,
    x: &Intervention,
    vars: &[String],
) -> Result<Distribution<T>, EngineError> {
    let idx = indices(scm, vars)?;
    let overrides = scm.overrides(x)?;
    let mut table: BTreeMap<Vec<i64>, T> = BTreeMap::new();
    for (atom, p) in scm.atoms() {
        if p.is_zero() {
            continue;
        }
        let vals = scm.solve_with(&atom, &overrides);
        let key: Vec<i64> = idx.iter().map(|&i| vals[i]).collect();
        let e = table.entry(key).or_insert_with(T::zero);
        *e = e.clone() + p;
    }
    let domains = idx.iter().map(|&i| scm.endogenous()[i].domain.clone()).collect();
    Ok(Distribution::from_parts(vars.to_vec(), domains, table))
}

/// Per-atom evaluator for a fixed set of events: solves every distinct world
/// once per atom.
struct EventChecker {
    /// (override vector, [(variable index, value)]) per world.
    worlds: Vec<(Vec<Option<i64>>, Vec<(usize, i64)>)>,
}

impl EventChecker {
    fn new<T: Scalar>(scm: &Scm<T>, query: &CtfQuery) -> Result<Self, EngineError> {
        query.check(scm)?;
        let mut by_ctx: BTreeMap<Intervention, Vec<(usize, i64)>> = BTreeMap::new();
        for e in query.joint_events() {
            let i = scm.var_index(&e.variable).ok_or_else(|| EngineError::UnknownVariable(e.variable.clone()))?;
            by_ctx.entry(e.context.clone()).or_default().push((i, e.value));
        }
        let worlds = by_ctx
            .into_iter()
            .map(|(ctx, evs)| Ok((scm.overrides(&ctx)?, evs)))
            .collect::<Result<Vec<_>, EngineError>>()?;
        Ok(EventChecker { worlds })
    }

    fn holds<T: Scalar>(&self, scm: &Scm<T>, atom: &[i64]) -> bool {
        self.worlds.iter().all(|(ov, evs)| {
            let vals = scm.solve_with(atom, ov);
            evs.iter().all(|&(i, x)| vals[i] == x)
        })
    }
}

/// Unnormalized joint: mass of the atoms on which every event (including the
/// conditioning events, read factually) holds.
pub fn counterfactual_joint<T: Scalar>(scm: &Scm<T>, query: &CtfQuery) -> Result<T, EngineError> {
    let checker = EventChecker::new(scm, query)?;
    let mut total = T::zero();
    for (atom, p) in scm.atoms() {
        if !p.is_zero() && checker.holds(scm, &atom) {
            total = total + p;
        }
    }
    Ok(total)
}

/// Probability of the factual conditioning events alone.
pub fn conditioning_probability<T: Scalar>(scm: &Scm<T>, query: &CtfQuery) -> Result<T, EngineError> {
    counterfactual_joint(scm, &CtfQuery::new(Vec::new(), query.conditioning.clone()))
}

/// `P(events | conditioning)`; errors when the conditioning has mass zero.
pub fn conditional_ctf<T: Scalar>(scm: &Scm<T>, query: &CtfQuery) -> Result<T, EngineError> {
    let denom = conditioning_probability(scm, query)?;
    if denom.is_negligible() {
        return Err(EngineError::ZeroConditioning);
    }
    Ok(counterfactual_joint(scm, query)? / denom)
}

/// Unnormalized feature counterfactual `P(W = w, W[x'] = w')`.
pub fn feature_ctf_joint<T: Scalar>(scm: &Scm<T>, q: &FeatureQuery) -> Result<T, EngineError> {
    counterfactual_joint(scm, &q.to_query())
}

/// Conditional feature counterfactual `P(W[x'] = w' | W = w)`.
pub fn feature_ctf<T: Scalar>(scm: &Scm<T>, q: &FeatureQuery) -> Result<T, EngineError> {
    conditional_ctf(scm, &q.to_query())
}

/// Posterior over exogenous atoms given factual evidence: abduction.
pub fn abduction<T: Scalar>(scm: &Scm<T>, evidence: &[(String, i64)]) -> Result<Vec<(Vec<i64>, T)>, EngineError> {
    let checker = EventChecker::new(scm, &CtfQuery::new(Vec::new(), evidence.to_vec()))?;
    let mut out = Vec::new();
    let mut total = T::zero();
    for (atom, p) in scm.atoms() {
        if !p.is_zero() && checker.holds(scm, &atom) {
            total = total + p.clone();
            out.push((atom, p));
        }
    }
    if total.is_negligible() {
        return Err(EngineError::ZeroConditioning);
    }
    Ok(out.into_iter().map(|(a, p)| (a, p / total.clone())).collect())
}

/// Side-by-side evaluation of two models over the same endogenous variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport<T> {
    pub observational_equal: bool,
    pub diagrams_equal: bool,
    pub diagrams: (CausalDiagram, CausalDiagram),
    /// Query and its value under each model.
    pub queries: Vec<(CtfQuery, T, T)>,
}

impl<T: Scalar> ComparisonReport<T> {
    /// Observationally equivalent yet distinguishable by some query.
    pub fn witnesses_non_identifiability(&self) -> bool {
        self.observational_equal && self.queries.iter().any(|(_, a, b)| !a.approx_eq(b))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let queries: Vec<serde_json::Value> = self
            .queries
            .iter()
            .map(|(q, a, b)| {
                serde_json::json!({
                    "query": q.to_string(),
                    "m1": a.to_json_string(),
                    "m2": b.to_json_string(),
                    "equal": a.approx_eq(b),
                })
            })
            .collect();
        serde_json::json!({
            "observational_equal": self.observational_equal,
            "diagrams_equal": self.diagrams_equal,
            "diagram_m1": self.diagrams.0.to_string(),
            "diagram_m2": self.diagrams.1.to_string(),
            "queries": queries,
        })
    }
}

/// Compares L1 distributions, induced diagrams and conditional query values.
pub fn compare_models<T: Scalar>(
    m1: &Scm<T>,
    m2: &Scm<T>,
    queries: &[CtfQuery],
) -> Result<ComparisonReport<T>, EngineError> {
    let sig = |m: &Scm<T>| -> Vec<(String, Vec<i64>)> {
        let mut s: Vec<_> = m.endogenous().iter().map(|v| (v.name.clone(), v.domain.values().to_vec())).collect();
        s.sort();
        s
    };
    if sig(m1) != sig(m2) {
        let names = |m: &Scm<T>| m.variable_names().join(",");
        return Err(EngineError::SignatureMismatch(format!("{} vs {}", names(m1), names(m2))));
    }
    let vars = m1.variable_names();
    let p1 = observational(m1, &vars)?;
    let p2 = observational(m2, &vars)?;
    let (g1, g2) = (m1.induce_diagram(), m2.induce_diagram());
    let mut values = Vec::with_capacity(queries.len());
    for q in queries {
        values.push((q.clone(), conditional_ctf(m1, q)?, conditional_ctf(m2, q)?));
    }
    Ok(ComparisonReport {
        observational_equal: p1.same_as(&p2),
        diagrams_equal: g1 == g2,
        diagrams: (g1, g2),
        queries: values,
    })
}
