use std::fmt;

use serde::{Deserialize, Serialize};

/// Ordered set of integer codes a variable may take.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct FiniteDomain {
    values: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("domain must contain at least one value")]
    Empty,
    #[error("domain lists value {0} more than once")]
    Duplicate(i64),
}

impl FiniteDomain {
    /// Sorts ascending; rejects empty input and duplicates.
    pub fn new(values: impl IntoIterator<Item = i64>) -> Result<Self, DomainError> {
        let mut values: Vec<i64> = values.into_iter().collect();
        if values.is_empty() {
            return Err(DomainError::Empty);
        }
        values.sort_unstable();
        if let Some(w) = values.windows(2).find(|w| w[0] == w[1]) {
            return Err(DomainError::Duplicate(w[0]));
        }
        Ok(FiniteDomain { values })
    }

    /// `{lo, lo+1, ..., hi}`.
    pub fn range(lo: i64, hi: i64) -> Result<Self, DomainError> {
        Self::new(lo..=hi)
    }

    pub fn binary() -> Self {
        FiniteDomain { values: vec![0, 1] }
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: i64) -> bool {
        self.values.binary_search(&v).is_ok()
    }

    pub fn index_of(&self, v: i64) -> Option<usize> {
        self.values.binary_search(&v).ok()
    }
}

impl TryFrom<Vec<i64>> for FiniteDomain {
    type Error = DomainError;
    fn try_from(v: Vec<i64>) -> Result<Self, Self::Error> {
        FiniteDomain::new(v)
    }
}

impl From<FiniteDomain> for Vec<i64> {
    fn from(d: FiniteDomain) -> Self {
        d.values
    }
}

impl fmt::Display for FiniteDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(i64::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order() {
        let d = FiniteDomain::new([3, 1, 2]).unwrap();
        assert_eq!(d.values(), &[1, 2, 3]);
        assert_eq!(d.index_of(2), Some(1));
        assert_eq!(d.to_string(), "{1,2,3}");
    }

    #[test]
    fn invariants_enforced() {
        assert_eq!(FiniteDomain::new([]), Err(DomainError::Empty));
        assert_eq!(FiniteDomain::new([0, 1, 0]), Err(DomainError::Duplicate(0)));
    }
}
