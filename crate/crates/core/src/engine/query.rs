use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::EngineError;
use crate::model::{Intervention, Scm};
use crate::scalar::Scalar;

/// `variable = value` in the world described by `context` (empty = factual).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CtfEvent {
    pub variable: String,
    pub value: i64,
    pub context: Intervention,
}

impl CtfEvent {
    pub fn new(variable: impl Into<String>, value: i64, context: Intervention) -> Self {
        CtfEvent { variable: variable.into(), value, context }
    }

    pub fn factual(variable: impl Into<String>, value: i64) -> Self {
        CtfEvent::new(variable, value, Intervention::new())
    }
}

impl fmt::Display for CtfEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.context.is_empty() {
            write!(f, "{}={}", self.variable, self.value)
        } else {
            write!(f, "{}[{}]={}", self.variable, self.context, self.value)
        }
    }
}

/// Joint counterfactual event with optional factual conditioning.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct CtfQuery {
    pub events: Vec<CtfEvent>,
    pub conditioning: Vec<(String, i64)>,
}

impl CtfQuery {
    pub fn new(events: Vec<CtfEvent>, conditioning: Vec<(String, i64)>) -> Self {
        CtfQuery { events, conditioning }
    }

    /// Events followed by the conditioning events as factual events: the
    /// conjunction whose probability is the unnormalized joint.
    pub fn joint_events(&self) -> Vec<CtfEvent> {
        let mut all = self.events.clone();
        all.extend(self.conditioning.iter().map(|(v, x)| CtfEvent::factual(v.clone(), *x)));
        all
    }

    /// Distinct intervention contexts, factual world first.
    pub fn contexts(&self) -> Vec<Intervention> {
        let mut seen: BTreeSet<Intervention> = BTreeSet::new();
        seen.insert(Intervention::new());
        for e in &self.events {
            seen.insert(e.context.clone());
        }
        seen.into_iter().collect()
    }

    /// Checks names, domains and at most one event per (variable, context).
    pub fn check<T: Scalar>(&self, scm: &Scm<T>) -> Result<(), EngineError> {
        let mut seen: BTreeMap<(&str, &Intervention), i64> = BTreeMap::new();
        let empty = Intervention::new();
        let pairs = self
            .events
            .iter()
            .map(|e| (e.variable.as_str(), e.value, &e.context))
            .chain(self.conditioning.iter().map(|(v, x)| (v.as_str(), *x, &empty)));
        for (var, value, ctx) in pairs {
            check_value(scm, var, value)?;
            for (cv, cx) in ctx.iter() {
                check_value(scm, cv, *cx)?;
            }
            if seen.insert((var, ctx), value).is_some() {
                let ctx = if ctx.is_empty() { "factual".to_string() } else { format!("[{ctx}]") };
                return Err(EngineError::DuplicateEvent { variable: var.to_string(), context: ctx });
            }
        }
        Ok(())
    }
}

fn check_value<T: Scalar>(scm: &Scm<T>, var: &str, value: i64) -> Result<(), EngineError> {
    let dom = scm.domain(var).ok_or_else(|| EngineError::UnknownVariable(var.to_string()))?;
    if !dom.contains(value) {
        return Err(EngineError::OutOfDomain { variable: var.to_string(), value });
    }
    Ok(())
}

impl fmt::Display for CtfQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ev: Vec<String> = self.events.iter().map(ToString::to_string).collect();
        write!(f, "P({}", ev.join(", "))?;
        if !self.conditioning.is_empty() {
            let c: Vec<String> = self.conditioning.iter().map(|(v, x)| format!("{v}={x}")).collect();
            write!(f, " | {}", c.join(", "))?;
        }
        write!(f, ")")
    }
}

/// Feature counterfactual over a care set `W`: `P(W[x'] = w' | W = w)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureQuery {
    pub care_set: Vec<String>,
    pub intervention: Intervention,
    /// Factual values of the care set.
    pub factual: Vec<i64>,
    /// Counterfactual values of the care set.
    pub counterfactual: Vec<i64>,
}

impl FeatureQuery {
    pub fn new(care_set: Vec<String>, intervention: Intervention, factual: Vec<i64>, counterfactual: Vec<i64>) -> Self {
        FeatureQuery { care_set, intervention, factual, counterfactual }
    }

    /// Label-level counterfactual query the image-level one reduces to.
    pub fn to_query(&self) -> CtfQuery {
        let events = self
            .care_set
            .iter()
            .zip(&self.counterfactual)
            .map(|(v, x)| CtfEvent::new(v.clone(), *x, self.intervention.clone()))
            .collect();
        let conditioning = self.care_set.iter().cloned().zip(self.factual.iter().copied()).collect();
        CtfQuery::new(events, conditioning)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_form() {
        let y0 = Intervention::single("Y", 0);
        let q = CtfQuery::new(
            vec![CtfEvent::new("F", 0, y0.clone()), CtfEvent::new("H", 1, y0)],
            vec![("F".into(), 0), ("Y".into(), 1), ("H".into(), 0)],
        );
        assert_eq!(q.to_string(), "P(F[Y=0]=0, H[Y=0]=1 | F=0, Y=1, H=0)");
        assert_eq!(q.contexts().len(), 2);
    }
}
