use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::ConsistencyError;
use crate::engine::Distribution;
use crate::model::FiniteDomain;
use crate::scalar::Rational;

/// One edit produced by a proxy: the factual labels, the edited labels, the
/// requested intervention and the seed that produced the record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub factual: BTreeMap<String, i64>,
    pub counterfactual: BTreeMap<String, i64>,
    #[serde(rename = "do")]
    pub intervention: BTreeMap<String, i64>,
    pub seed: u64,
}

/// Ordered collection of records, stored as JSON lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProxyLog {
    pub records: Vec<SampleRecord>,
}

impl ProxyLog {
    pub fn new(records: Vec<SampleRecord>) -> Self {
        ProxyLog { records }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, ConsistencyError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: SampleRecord = serde_json::from_str(line)
                .map_err(|e| ConsistencyError::Json { line: i + 1, message: e.to_string() })?;
            records.push(r);
        }
        Ok(ProxyLog { records })
    }

    pub fn read(path: &Path) -> Result<Self, ConsistencyError> {
        let text =
            fs::read_to_string(path).map_err(|source| ConsistencyError::Io { path: path.to_path_buf(), source })?;
        Self::parse_jsonl(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), ConsistencyError> {
        fs::write(path, self.to_jsonl()).map_err(|source| ConsistencyError::Io { path: path.to_path_buf(), source })
    }

    /// The intervention shared by every record.
    pub fn intervention(&self) -> Result<BTreeMap<String, i64>, ConsistencyError> {
        let first = self.records.first().ok_or(ConsistencyError::Empty)?;
        if let Some(i) = self.records.iter().position(|r| r.intervention != first.intervention) {
            return Err(ConsistencyError::MixedInterventions { record: i });
        }
        Ok(first.intervention.clone())
    }

    /// Relative frequencies of the factual assignments.
    pub fn factual_distribution(&self) -> Result<Distribution<Rational>, ConsistencyError> {
        let rows: Vec<&BTreeMap<String, i64>> = self.records.iter().map(|r| &r.factual).collect();
        empirical_distribution(&rows)
    }
}

/// Relative-frequency table of complete assignments. Every row must assign
/// the same variables; domains are the observed values.
pub fn empirical_distribution(rows: &[&BTreeMap<String, i64>]) -> Result<Distribution<Rational>, ConsistencyError> {
    let first = rows.first().ok_or(ConsistencyError::Empty)?;
    let vars: Vec<String> = first.keys().cloned().collect();
    let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != vars.len() || !vars.iter().all(|v| row.contains_key(v)) {
            return Err(ConsistencyError::Ragged { record: i });
        }
        *counts.entry(vars.iter().map(|v| row[v]).collect()).or_default() += 1;
    }
    from_counts(vars, counts, rows.len())
}

fn from_counts(
    vars: Vec<String>,
    counts: BTreeMap<Vec<i64>, u64>,
    n: usize,
) -> Result<Distribution<Rational>, ConsistencyError> {
    let mut seen: Vec<BTreeSet<i64>> = vec![BTreeSet::new(); vars.len()];
    for key in counts.keys() {
        for (s, v) in seen.iter_mut().zip(key) {
            s.insert(*v);
        }
    }
    let domains = seen.into_iter().map(|s| FiniteDomain::new(s).expect("observed values")).collect();
    let n = BigInt::from(n);
    let table = counts.into_iter().map(|(k, c)| (k, Rational::new(BigInt::from(c), n.clone()))).collect();
    Distribution::new(vars, domains, table).map_err(ConsistencyError::from)
}

/// Columns of label CSVs and manifests that are bookkeeping, not variables.
const NON_VARIABLE_COLUMNS: [&str; 7] = ["id", "model", "seed", "x_offset", "y_offset", "thickness", "image_path"];

/// Empirical distribution of a label CSV (as written by `sample`/`gen`).
pub fn empirical_from_csv(path: &Path) -> Result<Distribution<Rational>, ConsistencyError> {
    let csv_err = |source| ConsistencyError::Csv { path: path.to_path_buf(), source };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.clone();
    let cols: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| !NON_VARIABLE_COLUMNS.contains(h))
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let key = cols
            .iter()
            .map(|(c, name)| {
                rec.get(*c)
                    .and_then(|s| s.trim().parse::<i64>().ok())
                    .ok_or_else(|| ConsistencyError::BadCell { row: i + 1, column: name.clone() })
            })
            .collect::<Result<Vec<i64>, _>>()?;
        *counts.entry(key).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return Err(ConsistencyError::Empty);
    }
    from_counts(cols.into_iter().map(|(_, h)| h).collect(), counts, n)
}
