//! Canonical (response-function) parameterization of the SCMs compatible
//! with a diagram, and the c-factor constraints tying it to `P(V)`.

use std::collections::BTreeMap;

use super::BoundsError;
use crate::engine::Distribution;
use crate::model::CausalDiagram;
use crate::scalar::Rational;

/// Largest response-type space built for a single variable or component.
pub const MAX_TYPES: u128 = 1_000_000;

/// One endogenous variable, in topological position.
#[derive(Debug, Clone)]
pub(crate) struct VarInfo {
    pub name: String,
    pub domain: Vec<i64>,
    /// Indices of the endogenous parents (into the variable list).
    pub parents: Vec<usize>,
    pub n_cells: usize,
}

impl VarInfo {
    /// Cell index of a parent assignment (value indices, first parent most
    /// significant).
    pub fn cell_of(&self, parent_values: impl Iterator<Item = usize>, vars: &[VarInfo]) -> usize {
        let mut cell = 0;
        for (&p, v) in self.parents.iter().zip(parent_values) {
            cell = cell * vars[p].domain.len() + v;
        }
        cell
    }

    /// Inverse of [`VarInfo::cell_of`].
    pub fn cell_values(&self, mut cell: usize, vars: &[VarInfo]) -> Vec<usize> {
        let mut out = vec![0; self.parents.len()];
        for (k, &p) in self.parents.iter().enumerate().rev() {
            let d = vars[p].domain.len();
            out[k] = cell % d;
            cell /= d;
        }
        out
    }
}

/// Variables of the diagram in topological order, domains taken from `obs`.
pub(crate) fn variables(diagram: &CausalDiagram, obs: &Distribution<Rational>) -> Result<Vec<VarInfo>, BoundsError> {
    let order = diagram.topological_order();
    let pos: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut vars: Vec<VarInfo> = Vec::with_capacity(order.len());
    for name in &order {
        let dom = obs.domain(name).ok_or_else(|| BoundsError::MissingVariable(name.clone()))?;
        let parents: Vec<usize> = diagram.parents(name).iter().map(|p| pos[p.as_str()]).collect();
        let n_cells = parents.iter().map(|&p| vars[p].domain.len()).product();
        vars.push(VarInfo { name: name.clone(), domain: dom.values().to_vec(), parents, n_cells });
    }
    Ok(vars)
}

/// Number of response types of a variable: `|X_V|^(∏|X_Pa|)`.
pub(crate) fn type_count(d: usize, cells: usize) -> u128 {
    let mut n: u128 = 1;
    for _ in 0..cells {
        n = n.saturating_mul(d as u128);
        if n > u64::MAX as u128 {
            break;
        }
    }
    n
}

/// A member's slice of a component's type index: the cells it represents
/// and the radix position it occupies.
#[derive(Debug, Clone)]
pub(crate) struct Member {
    pub var: usize,
    /// Represented parent cells, ascending. All cells unless projected.
    pub cells: Vec<usize>,
    pub d: usize,
    pub count: usize,
    pub stride: usize,
}

impl Member {
    /// Value index the type assigns at `cell`, when the cell is represented.
    pub fn value(&self, t: usize, cell: usize) -> Option<usize> {
        let pos = self.cells.binary_search(&cell).ok()?;
        let code = (t / self.stride) % self.count;
        Some((code / self.d.pow(pos as u32)) % self.d)
    }
}

/// Parameter space of one c-component: a distribution over joint types.
#[derive(Debug, Clone)]
pub(crate) struct CompSpace {
    pub members: Vec<Member>,
    pub size: usize,
    pub projected: bool,
}

impl CompSpace {
    /// `cells[i]` lists the represented cells of member `i`.
    pub fn new(
        vars: &[VarInfo],
        members: &[usize],
        cells: Vec<Vec<usize>>,
        projected: bool,
    ) -> Result<Self, BoundsError> {
        let mut total: u128 = 1;
        let mut out = Vec::with_capacity(members.len());
        for (&v, cells) in members.iter().zip(cells) {
            let d = vars[v].domain.len();
            let count = type_count(d, cells.len());
            let stride = total;
            total = total.saturating_mul(count);
            if total > MAX_TYPES {
                let names: Vec<&str> = members.iter().map(|&m| vars[m].name.as_str()).collect();
                return Err(BoundsError::TooManyTypes { component: names.join(","), count: total });
            }
            out.push(Member { var: v, cells, d, count: count as usize, stride: stride as usize });
        }
        Ok(CompSpace { members: out, size: total as usize, projected })
    }

    pub fn names(&self, vars: &[VarInfo]) -> Vec<String> {
        self.members.iter().map(|m| vars[m.var].name.clone()).collect()
    }

    pub fn member_of(&self, var: usize) -> Option<usize> {
        self.members.iter().position(|m| m.var == var)
    }
}

/// All response functions of a variable, each a table cell → value, in
/// lexicographic order of the index (first cell varies fastest).
pub fn response_types(
    variable: &str,
    diagram: &CausalDiagram,
    domains: &BTreeMap<String, Vec<i64>>,
) -> Result<Vec<Vec<i64>>, BoundsError> {
    let dom = domains.get(variable).ok_or_else(|| BoundsError::MissingVariable(variable.to_string()))?;
    let mut cells: usize = 1;
    for p in diagram.parents(variable) {
        let pd = domains.get(&p).ok_or_else(|| BoundsError::MissingVariable(p.clone()))?;
        cells = cells.saturating_mul(pd.len());
    }
    let count = type_count(dom.len(), cells);
    if count > MAX_TYPES {
        return Err(BoundsError::TooManyTypes { component: variable.to_string(), count });
    }
    let d = dom.len();
    Ok((0..count as usize)
        .map(|mut t| {
            (0..cells)
                .map(|_| {
                    let v = dom[t % d];
                    t /= d;
                    v
                })
                .collect()
        })
        .collect())
}

/// Observational table re-keyed by value indices in variable order.
pub(crate) struct ObsIndex {
    rows: Vec<(Vec<usize>, Rational)>,
}

impl ObsIndex {
    pub fn new(vars: &[VarInfo], obs: &Distribution<Rational>) -> Result<Self, BoundsError> {
        let names: Vec<String> = vars.iter().map(|v| v.name.clone()).collect();
        let m = obs.marginal(&names).map_err(|e| BoundsError::Malformed(e.to_string()))?;
        let rows = m
            .iter()
            .map(|(row, p)| {
                let idx = row
                    .iter()
                    .zip(vars)
                    .map(|(x, v)| v.domain.iter().position(|y| y == x).expect("in domain"))
                    .collect();
                (idx, p.clone())
            })
            .collect();
        Ok(ObsIndex { rows })
    }

    /// Mass of a partial assignment `(variable, value index)`.
    pub fn prob(&self, assignment: &[(usize, usize)]) -> Rational {
        let mut total = Rational::from_integer(0.into());
        for (row, p) in &self.rows {
            if assignment.iter().all(|&(v, x)| row[v] == x) {
                total += p;
            }
        }
        total
    }

    /// `P(var = val | given)`, `None` when the context has mass zero.
    pub fn conditional(&self, var: usize, val: usize, given: &[(usize, usize)]) -> Option<Rational> {
        let den = self.prob(given);
        if den == Rational::from_integer(0.into()) {
            return None;
        }
        let mut joint: Vec<(usize, usize)> = given.to_vec();
        joint.push((var, val));
        Some(self.prob(&joint) / den)
    }
}

/// Equality constraints of one component: each row is a set of type indices
/// whose total mass is fixed.
#[derive(Debug, Clone, Default)]
pub(crate) struct Constraints {
    pub rows: Vec<(Vec<usize>, Rational)>,
    /// Human-readable contexts whose c-factor could not be identified.
    pub unidentified: Vec<String>,
}

fn fmt_assignment(vars: &[VarInfo], a: &[(usize, usize)]) -> String {
    let parts: Vec<String> = a.iter().map(|&(v, x)| format!("{}={}", vars[v].name, vars[v].domain[x])).collect();
    parts.join(",")
}

/// Mixed-radix odometer over the domains of `over`.
fn assignments(vars: &[VarInfo], over: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &v in over {
        let d = vars[v].domain.len();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..d).map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

/// c-factor constraints for a component.
///
/// Full spaces: for every outside-parent context `p` and component value `c`,
/// the types producing `c` under `p` carry `Q(c | p) = ∏ P(c_i | cond_i)` with
/// `cond_i = (T_i ∪ Pa(T_i)) \ {V_i}`, `T_i` the members up to `V_i`.
/// Projected singletons: one marginal per retained cell and value.
pub(crate) fn build_constraints(vars: &[VarInfo], comp: &CompSpace, obs: &ObsIndex) -> Constraints {
    let one = Rational::from_integer(1.into());
    let zero = Rational::from_integer(0.into());
    let mut out = Constraints { rows: vec![((0..comp.size).collect(), one.clone())], unidentified: Vec::new() };
    if comp.projected {
        let m = &comp.members[0];
        let v = &vars[m.var];
        for &cell in &m.cells {
            let ctx: Vec<(usize, usize)> = v.parents.iter().copied().zip(v.cell_values(cell, vars)).collect();
            for val in 0..m.d {
                match obs.conditional(m.var, val, &ctx) {
                    Some(p) => {
                        let types = (0..comp.size).filter(|&t| m.value(t, cell) == Some(val)).collect();
                        out.rows.push((types, p));
                    }
                    None => {
                        out.unidentified.push(fmt_assignment(vars, &ctx));
                        break;
                    }
                }
            }
        }
        return out;
    }

    let members: Vec<usize> = comp.members.iter().map(|m| m.var).collect();
    let mut outside: Vec<usize> = Vec::new();
    for &v in &members {
        for &p in &vars[v].parents {
            if !members.contains(&p) && !outside.contains(&p) {
                outside.push(p);
            }
        }
    }
    outside.sort_unstable();
    // conditioning sets per prefix
    let cond_sets: Vec<Vec<usize>> = (0..members.len())
        .map(|i| {
            let mut s: Vec<usize> = members[..=i].to_vec();
            for &m in &members[..=i] {
                s.extend(vars[m].parents.iter().copied());
            }
            s.sort_unstable();
            s.dedup();
            s.retain(|&x| x != members[i]);
            s
        })
        .collect();

    for p in assignments(vars, &outside) {
        let mut value_of: BTreeMap<usize, usize> = outside.iter().copied().zip(p.iter().copied()).collect();
        // types grouped by the component value they produce under p
        let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for t in 0..comp.size {
            let mut local = value_of.clone();
            let mut c = Vec::with_capacity(members.len());
            for m in &comp.members {
                let v = &vars[m.var];
                let cell = v.cell_of(v.parents.iter().map(|q| local[q]), vars);
                let x = m.value(t, cell).expect("full space represents every cell");
                local.insert(m.var, x);
                c.push(x);
            }
            groups.entry(c).or_default().push(t);
        }
        let mut rows = Vec::new();
        let mut identified = true;
        for c in assignments(vars, &members) {
            for (&m, &x) in members.iter().zip(&c) {
                value_of.insert(m, x);
            }
            let mut q = one.clone();
            for (i, &m) in members.iter().enumerate() {
                let ctx: Vec<(usize, usize)> = cond_sets[i].iter().map(|&s| (s, value_of[&s])).collect();
                match obs.conditional(m, value_of[&m], &ctx) {
                    Some(f) => {
                        q *= f;
                        if q == zero {
                            break;
                        }
                    }
                    None => {
                        identified = false;
                        break;
                    }
                }
            }
            if !identified {
                break;
            }
            rows.push((groups.remove(&c).unwrap_or_default(), q));
        }
        if identified {
            out.rows.extend(rows);
        } else {
            let ctx: Vec<(usize, usize)> = outside.iter().copied().zip(p.iter().copied()).collect();
            out.unidentified.push(fmt_assignment(vars, &ctx));
        }
    }
    out
}
