use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::EngineError;
use crate::model::FiniteDomain;
use crate::scalar::Scalar;

/// Probability table over a fixed, ordered list of variables.
///
/// Zero-mass rows may be absent; lookups treat them as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T> {
    variables: Vec<String>,
    domains: Vec<FiniteDomain>,
    table: BTreeMap<Vec<i64>, T>,
}

impl<T: Scalar> Distribution<T> {
    /// Builds a table; rows must be in-domain, masses non-negative.
    /// Exact scalars additionally require the masses to sum to exactly 1.
    pub fn new(
        variables: Vec<String>,
        domains: Vec<FiniteDomain>,
        table: BTreeMap<Vec<i64>, T>,
    ) -> Result<Self, EngineError> {
        if variables.len() != domains.len() {
            return Err(EngineError::Malformed("variables and domains differ in length".into()));
        }
        let mut total = T::zero();
        for (row, p) in &table {
            if row.len() != variables.len() {
                return Err(EngineError::Malformed(format!("row {row:?} has wrong arity")));
            }
            for ((v, d), name) in row.iter().zip(&domains).zip(&variables) {
                if !d.contains(*v) {
                    return Err(EngineError::OutOfDomain { variable: name.clone(), value: *v });
                }
            }
            if *p < T::zero() && !p.is_negligible() {
                return Err(EngineError::Malformed(format!("negative mass at {row:?}")));
            }
            total = total + p.clone();
        }
        if !total.approx_eq(&T::one()) {
            return Err(EngineError::Malformed(format!("masses sum to {total}, expected 1")));
        }
        let table = table.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        Ok(Distribution { variables, domains, table })
    }

    /// Internal constructor for tables known to be well formed.
    pub(crate) fn from_parts(variables: Vec<String>, domains: Vec<FiniteDomain>, table: BTreeMap<Vec<i64>, T>) -> Self {
        let table = table.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        Distribution { variables, domains, table }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn domains(&self) -> &[FiniteDomain] {
        &self.domains
    }

    pub fn domain(&self, var: &str) -> Option<&FiniteDomain> {
        self.position(var).map(|i| &self.domains[i])
    }

    pub fn position(&self, var: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == var)
    }

    /// Rows with non-zero mass, in ascending key order.
    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &T)> {
        self.table.iter()
    }

    pub fn support_len(&self) -> usize {
        self.table.len()
    }

    /// Mass of a full row (zero when absent).
    pub fn prob(&self, row: &[i64]) -> T {
        self.table.get(row).cloned().unwrap_or_else(T::zero)
    }

    pub fn total(&self) -> T {
        self.table.values().fold(T::zero(), |a, p| a + p.clone())
    }

    /// Probability of a partial assignment.
    pub fn prob_of(&self, assignment: &[(String, i64)]) -> Result<T, EngineError> {
        let idx = assignment
            .iter()
            .map(|(v, x)| self.position(v).map(|i| (i, *x)).ok_or_else(|| EngineError::UnknownVariable(v.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self
            .table
            .iter()
            .filter(|(row, _)| idx.iter().all(|&(i, x)| row[i] == x))
            .fold(T::zero(), |a, (_, p)| a + p.clone()))
    }

    /// Marginal over `vars`, in the given order.
    pub fn marginal(&self, vars: &[String]) -> Result<Distribution<T>, EngineError> {
        let idx = vars
            .iter()
            .map(|v| self.position(v).ok_or_else(|| EngineError::UnknownVariable(v.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let mut table: BTreeMap<Vec<i64>, T> = BTreeMap::new();
        for (row, p) in &self.table {
            let key: Vec<i64> = idx.iter().map(|&i| row[i]).collect();
            let e = table.entry(key).or_insert_with(T::zero);
            *e = e.clone() + p.clone();
        }
        let domains = idx.iter().map(|&i| self.domains[i].clone()).collect();
        Ok(Distribution { variables: vars.to_vec(), domains, table })
    }

    /// Same variables (as a set) and identical masses on every row.
    pub fn same_as(&self, other: &Distribution<T>) -> bool {
        if self.variables.len() != other.variables.len() {
            return false;
        }
        let Ok(aligned) = other.marginal(&self.variables) else {
            return false;
        };
        let keys: std::collections::BTreeSet<&Vec<i64>> = self.table.keys().chain(aligned.table.keys()).collect();
        let same = keys.into_iter().all(|k| self.prob(k).approx_eq(&aligned.prob(k)));
        same
    }

    /// Total-variation distance `½ Σ |p − q|` over the union of supports.
    /// `other` is aligned to this table's variable order.
    pub fn total_variation(&self, other: &Distribution<T>) -> Result<T, EngineError> {
        if self.variables.len() != other.variables.len() {
            return Err(EngineError::Malformed("distributions range over different variables".into()));
        }
        let aligned = other.marginal(&self.variables)?;
        let keys: std::collections::BTreeSet<&Vec<i64>> = self.table.keys().chain(aligned.table.keys()).collect();
        let sum = keys.into_iter().fold(T::zero(), |acc, k| {
            let d = self.prob(k) - aligned.prob(k);
            acc + num_traits::Signed::abs(&d)
        });
        Ok(sum / T::from_int(2))
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Distribution<U> {
        Distribution {
            variables: self.variables.clone(),
            domains: self.domains.clone(),
            table: self.table.iter().map(|(k, p)| (k.clone(), f(p))).collect(),
        }
    }

    /// `{"variables": [...], "table": {"0,1,0": "16/125", ...}}` with sorted keys.
    pub fn to_json(&self) -> Value {
        let table: serde_json::Map<String, Value> = self
            .table
            .iter()
            .map(|(row, p)| {
                let key: Vec<String> = row.iter().map(i64::to_string).collect();
                (key.join(","), Value::String(p.to_json_string()))
            })
            .collect();
        json!({ "variables": self.variables, "table": table })
    }
}
