//! Turns a canonical parameterization back into an ordinary SCM.
//!
//! Each component becomes one exogenous factor over its joint types (only
//! types with positive mass are kept). A projected variable additionally gets
//! a "rest" factor that drives its non-retained cells comonotonically through
//! the inverse CDF of `P(v | cell)`; those cells never influence the query.

use std::collections::BTreeMap;

use super::canonical::{CompSpace, VarInfo};
use crate::model::{Endogenous, ExogenousFactor, Expr, FiniteDomain, ModelError, Scm, ScmDef, Table};
use crate::scalar::{Rational, Scalar};

/// Per variable and cell, `P(v | cell)` (`None` for zero-mass contexts).
pub(crate) type CellConditionals = Vec<Vec<Option<Vec<Rational>>>>;

/// Inverse-CDF coupling of several cell distributions over one uniform
/// factor: atom masses and, per cell, the value index at each atom.
pub(crate) fn comonotone<T: Scalar>(dists: &[Vec<T>]) -> (Vec<T>, Vec<Vec<usize>>) {
    let cums: Vec<Vec<T>> = dists
        .iter()
        .map(|d| {
            let mut acc = T::zero();
            d.iter()
                .map(|p| {
                    acc = acc.clone() + p.clone();
                    acc.clone()
                })
                .collect()
        })
        .collect();
    let mut breaks: Vec<T> = cums.iter().flatten().filter(|c| !c.is_negligible()).cloned().collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    breaks.dedup_by(|a, b| a.approx_eq(b));
    if let Some(last) = breaks.last_mut() {
        *last = T::one();
    }
    let mut masses = Vec::with_capacity(breaks.len());
    let mut prev = T::zero();
    for b in &breaks {
        masses.push(b.clone() - prev.clone());
        prev = b.clone();
    }
    let values = cums
        .iter()
        .map(|cum| {
            breaks
                .iter()
                .map(|b| cum.iter().position(|c| *c >= *b || c.approx_eq(b)).unwrap_or(cum.len() - 1))
                .collect()
        })
        .collect();
    (masses, values)
}

fn factor_name(comp: &CompSpace, vars: &[VarInfo]) -> String {
    format!("R_{}", comp.names(vars).join("_"))
}

/// Builds the SCM realizing `params` (one mass vector per component).
pub(crate) fn reconstruct<T: Scalar>(
    name: &str,
    vars: &[VarInfo],
    comps: &[CompSpace],
    conditionals: &CellConditionals,
    params: &[Vec<T>],
) -> Result<Scm<T>, ModelError> {
    let mut exogenous = Vec::new();
    let mut mech: BTreeMap<usize, Expr> = BTreeMap::new();
    for (comp, q) in comps.iter().zip(params) {
        let support: Vec<usize> = (0..comp.size).filter(|&t| !q[t].is_negligible() && q[t] > T::zero()).collect();
        let total = support.iter().fold(T::zero(), |a, &t| a + q[t].clone());
        let pmf: Vec<T> = support.iter().map(|&t| q[t].clone() / total.clone()).collect();
        let fname = factor_name(comp, vars);
        let dom = FiniteDomain::new(support.iter().map(|&t| t as i64)).map_err(|_| ModelError::BadAtom)?;
        exogenous.push(ExogenousFactor::new(fname.clone(), dom, pmf));

        for m in &comp.members {
            let v = &vars[m.var];
            let rest_cells: Vec<usize> = (0..v.n_cells).filter(|c| m.cells.binary_search(c).is_err()).collect();
            let rest = if rest_cells.is_empty() {
                None
            } else {
                let dists: Vec<Vec<T>> = rest_cells
                    .iter()
                    .map(|&c| match &conditionals[m.var][c] {
                        Some(p) => p.iter().map(T::from_rational).collect(),
                        None => (0..m.d).map(|k| if k == 0 { T::one() } else { T::zero() }).collect(),
                    })
                    .collect();
                let (masses, values) = comonotone(&dists);
                let rname = format!("R_{}_rest", v.name);
                let dom = FiniteDomain::range(0, masses.len() as i64 - 1).map_err(|_| ModelError::BadAtom)?;
                exogenous.push(ExogenousFactor::new(rname.clone(), dom, masses));
                let by_cell: BTreeMap<usize, Vec<usize>> = rest_cells.iter().copied().zip(values).collect();
                Some((rname, by_cell))
            };

            let mut inputs = vec![fname.clone()];
            let rest_atoms: Vec<Option<usize>> = match &rest {
                Some((rname, by_cell)) => {
                    inputs.push(rname.clone());
                    (0..by_cell.values().next().map_or(0, Vec::len)).map(Some).collect()
                }
                None => vec![None],
            };
            inputs.extend(v.parents.iter().map(|&p| vars[p].name.clone()));
            let mut entries = BTreeMap::new();
            for &t in &support {
                for &k in &rest_atoms {
                    for cell in 0..v.n_cells {
                        let x = match m.value(t, cell) {
                            Some(x) => x,
                            None => {
                                rest.as_ref().expect("unrepresented cells have a rest factor").1[&cell]
                                    [k.expect("rest atom")]
                            }
                        };
                        let mut key = vec![t as i64];
                        if let Some(k) = k {
                            key.push(k as i64);
                        }
                        key.extend(v.cell_values(cell, vars).iter().zip(&v.parents).map(|(&i, &p)| vars[p].domain[i]));
                        entries.insert(key, v.domain[x]);
                    }
                }
            }
            mech.insert(m.var, Expr::Table(Table { inputs, entries }));
        }
    }
    let endogenous = vars
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let dom = FiniteDomain::new(v.domain.iter().copied()).expect("observed domain");
            Endogenous::new(v.name.clone(), dom, mech.remove(&i).expect("every variable belongs to a component"))
        })
        .collect();
    Scm::build(ScmDef { name: name.to_string(), exogenous, endogenous })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn comonotone_reproduces_marginals() {
        let dists = vec![vec![ratio(1, 4), ratio(3, 4)], vec![ratio(1, 2), ratio(1, 2)]];
        let (masses, values) = comonotone(&dists);
        assert_eq!(masses, vec![ratio(1, 4), ratio(1, 4), ratio(1, 2)]);
        assert_eq!(values[0], vec![0, 1, 1]);
        assert_eq!(values[1], vec![0, 0, 1]);
    }
}
