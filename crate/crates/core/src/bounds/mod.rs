//! Optimal counterfactual bounds from an observational distribution and a
//! causal diagram.
//!
//! Every SCM compatible with the diagram is represented canonically: each
//! c-component carries a distribution over the joint response functions of
//! its members. `P(V)` fixes linear (c-factor) constraints on each of these
//! distributions, and a counterfactual joint is a sum over cell assignments
//! of products of per-component linear forms. Components whose forms are
//! constant over their polytope ("pinned") drop out; what remains decides the
//! method:
//!
//! | free components | method |
//! |---|---|
//! | 0 or 1 | exact LP |
//! | 2 | vertices of the smaller polytope × one LP each |
//! | ≥ 3 | alternating LPs from random starts (not certified) |
//!
//! Singleton components are projected onto the parent cells the query can
//! reach: their constraints are per-cell marginals, so any joint law of the
//! retained cells extends to a full response-function distribution.

mod canonical;
mod oracle;
mod paths;
pub mod simplex;
mod vertices;
pub(crate) mod witness;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub use canonical::{response_types, MAX_TYPES};
pub use oracle::oracle_inner_bounds;
pub use simplex::{simplex_solve, LinearProgram, LpError, LpSolution, Sense};

use crate::engine::{CtfQuery, Distribution, EngineError};
use crate::model::{CausalDiagram, ModelError, Scm};
use crate::scalar::Rational;
use canonical::{CompSpace, Constraints, ObsIndex, VarInfo};
use paths::{Path, World};
use simplex::Tableau;
use witness::CellConditionals;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundsError {
    #[error("variable `{0}` is not covered by the observational distribution")]
    MissingVariable(String),
    #[error("unknown variable `{0}` in query")]
    UnknownVariable(String),
    #[error("value {value} is outside the domain of `{variable}`")]
    OutOfDomain { variable: String, value: i64 },
    #[error("conditioning event has probability zero")]
    ZeroConditioning,
    #[error("unidentified c-factor for component {{{component}}}: context {context} has probability zero")]
    Unidentified { component: String, context: String },
    #[error(
        "observational distribution incompatible with diagram (no feasible parameterization for component {{{0}}})"
    )]
    Incompatible(String),
    #[error("component {{{component}}} has {count} response types (limit {MAX_TYPES})")]
    TooManyTypes { component: String, count: u128 },
    #[error("query does not match the single-variable two-cell pattern ({0}); use optimal_bounds")]
    PatternMismatch(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    Lp,
    Bilinear,
    Heuristic,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Analytic => "analytic",
            Method::Lp => "lp",
            Method::Bilinear => "bilinear",
            Method::Heuristic => "heuristic",
        })
    }
}

#[derive(Debug, Clone)]
pub struct BoundOptions {
    /// Project singleton components onto query-relevant cells.
    pub project: bool,
    /// Random starts for the alternating heuristic (at least 32 are used).
    pub starts: usize,
    pub seed: u64,
    /// Basis budget for vertex enumeration before falling back to the
    /// heuristic.
    pub vertex_limit: usize,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions { project: true, starts: 32, seed: 0, vertex_limit: 50_000 }
    }
}

/// Canonical parameterization attaining one endpoint, plus the SCM it
/// defines.
#[derive(Debug, Clone)]
pub struct Witness {
    /// One mass vector per c-component, over its (projected) joint types.
    pub params: Vec<Vec<Rational>>,
    pub model: Scm<Rational>,
}

#[derive(Debug, Clone)]
pub struct BoundResult {
    pub query: String,
    pub lower: Rational,
    pub upper: Rational,
    pub certified: bool,
    pub method: Method,
    /// Witnesses for `(lower, upper)`; present for LP-based certified
    /// results other than queries their interventions already decide.
    pub witnesses: Option<(Witness, Witness)>,
    /// Components whose linear forms are not constant over their polytope.
    pub free_components: usize,
}

impl BoundResult {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "query": self.query,
            "method": self.method.to_string(),
            "lower": crate::scalar::format_ratio(&self.lower),
            "upper": crate::scalar::format_ratio(&self.upper),
            "certified": self.certified,
            "witness_available": self.witnesses.is_some(),
        })
    }

    /// `[lower, upper]` contains `x`.
    pub fn contains(&self, x: &Rational) -> bool {
        self.lower <= *x && *x <= self.upper
    }
}

/// Connected components of the bidirected part of the diagram.
pub fn c_components(diagram: &CausalDiagram) -> Vec<Vec<String>> {
    diagram.c_components()
}

/// The optimization problem for one query.
pub(crate) struct Problem {
    pub vars: Vec<VarInfo>,
    pub comps: Vec<CompSpace>,
    pub constraints: Vec<Constraints>,
    pub conditionals: CellConditionals,
    pub paths: Vec<Path>,
    /// Distinct linear forms (sets of type indices) per component.
    pub forms: Vec<Vec<Vec<usize>>>,
    /// Per path, per component: index into `forms`.
    pub path_forms: Vec<Vec<Option<usize>>>,
    pub pcond: Rational,
    pub query: String,
}

fn value_index(vars: &[VarInfo], v: usize, value: i64) -> Result<usize, BoundsError> {
    vars[v]
        .domain
        .iter()
        .position(|&x| x == value)
        .ok_or_else(|| BoundsError::OutOfDomain { variable: vars[v].name.clone(), value })
}

impl Problem {
    pub fn build(
        obs: &Distribution<Rational>,
        diagram: &CausalDiagram,
        query: &CtfQuery,
        project: bool,
    ) -> Result<Self, BoundsError> {
        let vars = canonical::variables(diagram, obs)?;
        let obs_idx = ObsIndex::new(&vars, obs)?;
        let pos: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
        let lookup = |name: &str| pos.get(name).copied().ok_or_else(|| BoundsError::UnknownVariable(name.to_string()));

        // worlds, factual first
        let mut by_ctx: BTreeMap<_, World> = BTreeMap::new();
        let mut contradictory = false;
        for e in query.joint_events() {
            let mut fixed = vec![None; vars.len()];
            for (x, val) in e.context.iter() {
                let i = lookup(x)?;
                fixed[i] = Some(value_index(&vars, i, *val)?);
            }
            let v = lookup(&e.variable)?;
            let x = value_index(&vars, v, e.value)?;
            let w = by_ctx.entry(e.context.clone()).or_insert_with(|| World { fixed, events: vec![None; vars.len()] });
            match w.events[v] {
                Some(prev) if prev != x => contradictory = true,
                _ => w.events[v] = Some(x),
            }
        }
        let worlds: Vec<World> = by_ctx.into_values().collect();

        let mut cond = Vec::new();
        for (name, val) in &query.conditioning {
            let v = lookup(name)?;
            cond.push((v, value_index(&vars, v, *val)?));
        }
        let pcond = obs_idx.prob(&cond);
        if pcond.is_zero() {
            return Err(BoundsError::ZeroConditioning);
        }
        let paths = if contradictory { Vec::new() } else { paths::enumerate_paths(&vars, &worlds) };

        let mut comps = Vec::new();
        for members in diagram.c_components() {
            let idx: Vec<usize> = members.iter().map(|m| pos[m.as_str()]).collect();
            let projected = project && idx.len() == 1;
            let cells: Vec<Vec<usize>> = idx
                .iter()
                .map(|&v| {
                    if projected {
                        let mut c: Vec<usize> =
                            paths.iter().flatten().filter(|((pv, _), _)| *pv == v).map(|((_, c), _)| *c).collect();
                        c.sort_unstable();
                        c.dedup();
                        c
                    } else {
                        (0..vars[v].n_cells).collect()
                    }
                })
                .collect();
            comps.push(CompSpace::new(&vars, &idx, cells, projected)?);
        }

        let mut forms: Vec<Vec<Vec<usize>>> = vec![Vec::new(); comps.len()];
        let mut form_ids: Vec<BTreeMap<Vec<usize>, usize>> = vec![BTreeMap::new(); comps.len()];
        let mut path_forms = Vec::with_capacity(paths.len());
        let mut touched = vec![false; comps.len()];
        for path in &paths {
            let mut row = Vec::with_capacity(comps.len());
            for (ci, comp) in comps.iter().enumerate() {
                let fixes: Vec<(usize, usize, usize)> =
                    path.iter().filter_map(|&((v, cell), x)| comp.member_of(v).map(|m| (m, cell, x))).collect();
                if fixes.is_empty() {
                    row.push(None);
                    continue;
                }
                touched[ci] = true;
                let set: Vec<usize> = (0..comp.size)
                    .filter(|&t| fixes.iter().all(|&(m, cell, x)| comp.members[m].value(t, cell) == Some(x)))
                    .collect();
                let next = forms[ci].len();
                let id = *form_ids[ci].entry(set.clone()).or_insert(next);
                if id == next {
                    forms[ci].push(set);
                }
                row.push(Some(id));
            }
            path_forms.push(row);
        }

        let mut constraints = Vec::with_capacity(comps.len());
        for (ci, comp) in comps.iter().enumerate() {
            let c = canonical::build_constraints(&vars, comp, &obs_idx);
            if touched[ci] {
                if let Some(ctx) = c.unidentified.first() {
                    return Err(BoundsError::Unidentified {
                        component: comp.names(&vars).join(","),
                        context: ctx.clone(),
                    });
                }
            }
            constraints.push(c);
        }

        let mut conditionals: CellConditionals = vec![Vec::new(); vars.len()];
        for comp in comps.iter().filter(|c| c.projected) {
            let m = &comp.members[0];
            let v = &vars[m.var];
            conditionals[m.var] = (0..v.n_cells)
                .map(|cell| {
                    let ctx: Vec<(usize, usize)> = v.parents.iter().copied().zip(v.cell_values(cell, &vars)).collect();
                    (0..m.d).map(|x| obs_idx.conditional(m.var, x, &ctx)).collect::<Option<Vec<_>>>()
                })
                .collect();
        }

        Ok(Problem {
            vars,
            comps,
            constraints,
            conditionals,
            paths,
            forms,
            path_forms,
            pcond,
            query: query.to_string(),
        })
    }

    fn component_name(&self, c: usize) -> String {
        self.comps[c].names(&self.vars).join(",")
    }

    pub fn reconstruct<T: crate::Scalar>(&self, params: &[Vec<T>]) -> Result<Scm<T>, ModelError> {
        witness::reconstruct("witness", &self.vars, &self.comps, &self.conditionals, params)
    }
}

/// Feasible region of one component, kept as a phase-1 tableau.
struct Polytope {
    tableau: Tableau<Rational>,
    n: usize,
}

impl Polytope {
    fn new(size: usize, c: &Constraints) -> Result<Self, LpError> {
        let rows: Vec<Vec<Rational>> = c
            .rows
            .iter()
            .map(|(set, _)| {
                let mut r = vec![Rational::zero(); size];
                for &t in set {
                    r[t] = Rational::one();
                }
                r
            })
            .collect();
        let rhs: Vec<Rational> = c.rows.iter().map(|(_, b)| b.clone()).collect();
        Ok(Polytope { tableau: simplex::feasible_tableau(&rows, &rhs, size)?, n: size })
    }

    fn point(&self) -> Vec<Rational> {
        self.tableau.solution(self.n)
    }

    fn optimize(&self, c: &[Rational], sense: Sense) -> Result<(Rational, Vec<Rational>), LpError> {
        let mut t = self.tableau.clone();
        let cost: Vec<Rational> = match sense {
            Sense::Minimize => c.to_vec(),
            Sense::Maximize => c.iter().map(|v| -v).collect(),
        };
        t.minimize(&cost, self.n)?;
        let x = t.solution(self.n);
        let value = x.iter().zip(c).fold(Rational::zero(), |a, (xi, ci)| a + xi * ci);
        Ok((value, x))
    }
}

fn indicator(size: usize, set: &[usize]) -> Vec<Rational> {
    let mut c = vec![Rational::zero(); size];
    for &t in set {
        c[t] = Rational::one();
    }
    c
}

/// Polytopes, pinned form values and free components of a problem.
struct Prepared<'a> {
    p: &'a Problem,
    polys: Vec<Polytope>,
    /// Per component, per form: the constant value when pinned.
    pinned: Vec<Vec<Option<Rational>>>,
    free: Vec<usize>,
}

impl<'a> Prepared<'a> {
    fn new(p: &'a Problem) -> Result<Self, BoundsError> {
        let mut polys = Vec::with_capacity(p.comps.len());
        for (ci, comp) in p.comps.iter().enumerate() {
            polys.push(Polytope::new(comp.size, &p.constraints[ci]).map_err(|e| match e {
                LpError::Infeasible => BoundsError::Incompatible(p.component_name(ci)),
                other => BoundsError::Lp(other),
            })?);
        }
        let mut pinned = Vec::with_capacity(p.comps.len());
        let mut free = Vec::new();
        for (ci, comp) in p.comps.iter().enumerate() {
            let mut vals = Vec::with_capacity(p.forms[ci].len());
            for set in &p.forms[ci] {
                if set.len() == comp.size {
                    vals.push(Some(Rational::one()));
                    continue;
                }
                let c = indicator(comp.size, set);
                let (lo, _) = polys[ci].optimize(&c, Sense::Minimize)?;
                let (hi, _) = polys[ci].optimize(&c, Sense::Maximize)?;
                vals.push(if lo == hi { Some(lo) } else { None });
            }
            if vals.iter().any(Option::is_none) {
                free.push(ci);
            }
            pinned.push(vals);
        }
        Ok(Prepared { p, polys, pinned, free })
    }

    /// Value of the form of path `k` on component `c`.
    fn form_value(&self, k: usize, c: usize, qs: &[Option<Vec<Rational>>]) -> Rational {
        match self.p.path_forms[k][c] {
            None => Rational::one(),
            Some(f) => match &self.pinned[c][f] {
                Some(v) => v.clone(),
                None => {
                    let q = qs[c].as_ref().expect("free component has a parameter");
                    self.p.forms[c][f].iter().fold(Rational::zero(), |a, &t| a + &q[t])
                }
            },
        }
    }

    /// Unnormalized objective at the given free-component parameters.
    fn objective(&self, qs: &[Option<Vec<Rational>>]) -> Rational {
        (0..self.p.paths.len()).fold(Rational::zero(), |acc, k| {
            acc + (0..self.p.comps.len()).fold(Rational::one(), |prod, c| prod * self.form_value(k, c, qs))
        })
    }

    /// Objective as a linear function of component `i` with the others held
    /// at `qs`: coefficients and constant offset.
    fn linear_in(&self, i: usize, qs: &[Option<Vec<Rational>>]) -> (Vec<Rational>, Rational) {
        let mut coef = vec![Rational::zero(); self.p.comps[i].size];
        let mut offset = Rational::zero();
        for k in 0..self.p.paths.len() {
            let factor = (0..self.p.comps.len())
                .filter(|&c| c != i)
                .fold(Rational::one(), |prod, c| prod * self.form_value(k, c, qs));
            if factor.is_zero() {
                continue;
            }
            match self.p.path_forms[k][i] {
                None => offset += factor,
                Some(f) => match &self.pinned[i][f] {
                    Some(v) => offset += factor * v,
                    None => {
                        for &t in &self.p.forms[i][f] {
                            coef[t] += &factor;
                        }
                    }
                },
            }
        }
        (coef, offset)
    }

    fn base_params(&self) -> Vec<Option<Vec<Rational>>> {
        vec![None; self.p.comps.len()]
    }

    /// Full parameter vectors: the given free parts, a feasible point elsewhere.
    fn complete(&self, qs: &[Option<Vec<Rational>>]) -> Vec<Vec<Rational>> {
        qs.iter().enumerate().map(|(c, q)| q.clone().unwrap_or_else(|| self.polys[c].point())).collect()
    }

    /// Alternating per-component LPs from random vertices.
    fn alternating(
        &self,
        sense: Sense,
        starts: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Rational, Vec<Option<Vec<Rational>>>), BoundsError> {
        let better = |a: &Rational, b: &Rational| match sense {
            Sense::Maximize => a > b,
            Sense::Minimize => a < b,
        };
        let mut best: Option<(Rational, Vec<Option<Vec<Rational>>>)> = None;
        for _ in 0..starts {
            let mut qs = self.base_params();
            for &c in &self.free {
                let dir: Vec<Rational> = (0..self.p.comps[c].size)
                    .map(|_| Rational::from_integer(rng.random_range(-1000i64..=1000).into()))
                    .collect();
                qs[c] = Some(self.polys[c].optimize(&dir, Sense::Minimize)?.1);
            }
            let mut cur = self.objective(&qs);
            for _ in 0..200 {
                let mut improved = false;
                for &i in &self.free {
                    let (coef, off) = self.linear_in(i, &qs);
                    let (v, x) = self.polys[i].optimize(&coef, sense)?;
                    let cand = v + off;
                    if better(&cand, &cur) {
                        cur = cand;
                        qs[i] = Some(x);
                        improved = true;
                    }
                }
                if !improved {
                    break;
                }
            }
            if best.as_ref().map_or(true, |(b, _)| better(&cur, b)) {
                best = Some((cur, qs));
            }
        }
        Ok(best.expect("at least one start"))
    }
}

fn finish(
    p: &Problem,
    prep: &Prepared,
    lo: (Rational, Vec<Option<Vec<Rational>>>),
    hi: (Rational, Vec<Option<Vec<Rational>>>),
    method: Method,
) -> Result<BoundResult, BoundsError> {
    let certified = method != Method::Heuristic;
    let witnesses = if certified {
        let mk = |qs: &[Option<Vec<Rational>>]| -> Result<Witness, BoundsError> {
            let params = prep.complete(qs);
            let model = p.reconstruct(&params)?;
            Ok(Witness { params, model })
        };
        Some((mk(&lo.1)?, mk(&hi.1)?))
    } else {
        None
    };
    Ok(BoundResult {
        query: p.query.clone(),
        lower: lo.0 / &p.pcond,
        upper: hi.0 / &p.pcond,
        certified,
        method,
        witnesses,
        free_components: prep.free.len(),
    })
}

/// Queries settled by their own interventions: every event names a variable
/// its context fixes, so the value is 1 (all agree) or 0 (one contradicts)
/// in every model, identified or not. Returns `None` for other queries.
fn decided_by_interventions(
    obs: &Distribution<Rational>,
    diagram: &CausalDiagram,
    query: &CtfQuery,
) -> Result<Option<BoundResult>, BoundsError> {
    let mut contradicted = false;
    for e in &query.events {
        match e.context.get(&e.variable) {
            Some(x) => contradicted |= x != e.value,
            None if contradicted => {}
            None => return Ok(None),
        }
    }
    let vars = canonical::variables(diagram, obs)?;
    let check = |name: &str, value: i64| -> Result<(), BoundsError> {
        let i =
            vars.iter().position(|v| v.name == name).ok_or_else(|| BoundsError::UnknownVariable(name.to_string()))?;
        value_index(&vars, i, value).map(|_| ())
    };
    for e in query.joint_events() {
        check(&e.variable, e.value)?;
        for (x, v) in e.context.iter() {
            check(x, *v)?;
        }
    }
    if obs.prob_of(&query.conditioning)?.is_zero() {
        return Err(BoundsError::ZeroConditioning);
    }
    let value = if contradicted { Rational::zero() } else { Rational::one() };
    Ok(Some(BoundResult {
        query: query.to_string(),
        lower: value.clone(),
        upper: value,
        certified: true,
        method: Method::Analytic,
        witnesses: None,
        free_components: 0,
    }))
}

/// Sharp bounds `[l, r]` of `P(events | conditioning)` over all SCMs
/// compatible with `diagram` that induce `obs`.
pub fn optimal_bounds(
    obs: &Distribution<Rational>,
    diagram: &CausalDiagram,
    query: &CtfQuery,
    opts: &BoundOptions,
) -> Result<BoundResult, BoundsError> {
    if let Some(r) = decided_by_interventions(obs, diagram, query)? {
        return Ok(r);
    }
    let p = Problem::build(obs, diagram, query, opts.project)?;
    let prep = Prepared::new(&p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts = opts.starts.max(32);
    match prep.free.as_slice() {
        [] => {
            let v = prep.objective(&prep.base_params());
            finish(&p, &prep, (v.clone(), prep.base_params()), (v, prep.base_params()), Method::Lp)
        }
        &[i] => {
            let (coef, off) = prep.linear_in(i, &prep.base_params());
            let mut ends = Vec::new();
            for sense in [Sense::Minimize, Sense::Maximize] {
                let (v, x) = prep.polys[i].optimize(&coef, sense)?;
                let mut qs = prep.base_params();
                qs[i] = Some(x);
                ends.push((v + &off, qs));
            }
            let hi = ends.pop().expect("two ends");
            let lo = ends.pop().expect("two ends");
            finish(&p, &prep, lo, hi, Method::Lp)
        }
        &[a, b] => {
            let (small, other) = if p.comps[a].size <= p.comps[b].size { (a, b) } else { (b, a) };
            match vertices::enumerate_vertices(&prep.polys[small].tableau, opts.vertex_limit) {
                Some(verts) => {
                    let mut lo: Option<(Rational, Vec<Option<Vec<Rational>>>)> = None;
                    let mut hi: Option<(Rational, Vec<Option<Vec<Rational>>>)> = None;
                    for v in verts {
                        let mut qs = prep.base_params();
                        qs[small] = Some(v);
                        let (coef, off) = prep.linear_in(other, &qs);
                        let (vmin, xmin) = prep.polys[other].optimize(&coef, Sense::Minimize)?;
                        let (vmax, xmax) = prep.polys[other].optimize(&coef, Sense::Maximize)?;
                        let (vmin, vmax) = (vmin + &off, vmax + &off);
                        if lo.as_ref().map_or(true, |(l, _)| vmin < *l) {
                            let mut q = qs.clone();
                            q[other] = Some(xmin);
                            lo = Some((vmin, q));
                        }
                        if hi.as_ref().map_or(true, |(h, _)| vmax > *h) {
                            let mut q = qs;
                            q[other] = Some(xmax);
                            hi = Some((vmax, q));
                        }
                    }
                    finish(
                        &p,
                        &prep,
                        lo.expect("non-empty polytope"),
                        hi.expect("non-empty polytope"),
                        Method::Bilinear,
                    )
                }
                None => {
                    let lo = prep.alternating(Sense::Minimize, starts, &mut rng)?;
                    let hi = prep.alternating(Sense::Maximize, starts, &mut rng)?;
                    finish(&p, &prep, lo, hi, Method::Heuristic)
                }
            }
        }
        _ => {
            let lo = prep.alternating(Sense::Minimize, starts, &mut rng)?;
            let hi = prep.alternating(Sense::Maximize, starts, &mut rng)?;
            finish(&p, &prep, lo, hi, Method::Heuristic)
        }
    }
}

/// Closed-form Fréchet bounds for queries whose only non-constant part is
/// one variable observed at two parent configurations:
/// `[max(0, p1 + p2 − 1), min(p1, p2)] · K / P(conditioning)`.
pub fn analytic_bounds(
    obs: &Distribution<Rational>,
    diagram: &CausalDiagram,
    query: &CtfQuery,
) -> Result<BoundResult, BoundsError> {
    let p = Problem::build(obs, diagram, query, true)?;
    let prep = Prepared::new(&p)?;
    if p.paths.is_empty() {
        return Err(BoundsError::PatternMismatch("the event is impossible".into()));
    }
    let candidates: Vec<usize> = (0..p.comps.len())
        .filter(|&c| {
            p.comps[c].projected
                && p.comps[c].members[0].cells.len() == 2
                && prep.free.iter().all(|&f| f == c)
                && p.path_forms.iter().all(|row| row[c].is_some())
        })
        .collect();
    let Some(&c) = candidates.first() else {
        return Err(BoundsError::PatternMismatch(format!(
            "{} free component(s), no single variable read at exactly two parent configurations",
            prep.free.len()
        )));
    };
    let m = &p.comps[c].members[0];
    let mut pair: Option<Vec<((usize, usize), usize)>> = None;
    for path in &p.paths {
        let own: Vec<((usize, usize), usize)> = path.iter().filter(|((v, _), _)| *v == m.var).copied().collect();
        if own.len() != 2 || pair.as_ref().is_some_and(|prev| *prev != own) {
            return Err(BoundsError::PatternMismatch(
                "the variable's two cells take differing values across paths".into(),
            ));
        }
        pair = Some(own);
    }
    let pair = pair.expect("non-empty paths");
    let cond = |((_, cell), x): ((usize, usize), usize)| -> Result<Rational, BoundsError> {
        let q = p.conditionals[m.var][cell].as_ref().ok_or_else(|| BoundsError::Unidentified {
            component: p.vars[m.var].name.clone(),
            context: format!("cell {cell}"),
        })?;
        Ok(q[x].clone())
    };
    let (p1, p2) = (cond(pair[0])?, cond(pair[1])?);
    let qs = prep.base_params();
    let k = (0..p.paths.len()).fold(Rational::zero(), |acc, k| {
        acc + (0..p.comps.len()).filter(|&o| o != c).fold(Rational::one(), |prod, o| prod * prep.form_value(k, o, &qs))
    });
    let one = Rational::one();
    let lower_raw = (&p1 + &p2 - &one).max(Rational::zero());
    let upper_raw = p1.clone().min(p2.clone());
    debug_assert!(!lower_raw.is_negative());
    Ok(BoundResult {
        query: p.query.clone(),
        lower: lower_raw * &k / &p.pcond,
        upper: upper_raw * &k / &p.pcond,
        certified: true,
        method: Method::Analytic,
        witnesses: None,
        free_components: prep.free.len(),
    })
}
