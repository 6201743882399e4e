use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::diagram::CausalDiagram;
use super::domain::FiniteDomain;
use super::expr::{CompiledExpr, EvalError, Expr};
use crate::scalar::Scalar;

/// Independent exogenous factor with a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousFactor<T> {
    pub name: String,
    pub support: FiniteDomain,
    /// Mass of each support value, aligned with `support.values()`.
    pub pmf: Vec<T>,
}

impl<T: Scalar> ExogenousFactor<T> {
    pub fn new(name: impl Into<String>, support: FiniteDomain, pmf: Vec<T>) -> Self {
        ExogenousFactor { name: name.into(), support, pmf }
    }

    /// `P(1) = p`, `P(0) = 1 - p`.
    pub fn bernoulli(name: impl Into<String>, p: T) -> Self {
        let q = T::one() - p.clone();
        ExogenousFactor::new(name, FiniteDomain::binary(), vec![q, p])
    }

    /// Uniform over `{lo..=hi}`.
    pub fn uniform(name: impl Into<String>, lo: i64, hi: i64) -> Self {
        let support = FiniteDomain::range(lo, hi).expect("lo <= hi");
        let n = T::from_int(support.len() as i64);
        let pmf = vec![T::one() / n; support.len()];
        ExogenousFactor::new(name, support, pmf)
    }

    pub fn mass(&self, value: i64) -> Option<&T> {
        self.support.index_of(value).map(|i| &self.pmf[i])
    }

    pub fn map_scalar<U: Scalar>(&self, f: &impl Fn(&T) -> U) -> ExogenousFactor<U> {
        ExogenousFactor {
            name: self.name.clone(),
            support: self.support.clone(),
            pmf: self.pmf.iter().map(f).collect(),
        }
    }
}

/// Endogenous variable with its domain and mechanism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endogenous {
    pub name: String,
    pub domain: FiniteDomain,
    pub mechanism: Expr,
}

impl Endogenous {
    pub fn new(name: impl Into<String>, domain: FiniteDomain, mechanism: Expr) -> Self {
        Endogenous { name: name.into(), domain, mechanism }
    }
}

/// Unvalidated model description, as produced by the parser or by hand.
#[derive(Debug, Clone, PartialEq)]
pub struct ScmDef<T> {
    pub name: String,
    pub exogenous: Vec<ExogenousFactor<T>>,
    pub endogenous: Vec<Endogenous>,
}

/// Hard intervention `do(X = x)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Intervention(pub BTreeMap<String, i64>);

impl Intervention {
    pub fn new() -> Self {
        Intervention::default()
    }

    pub fn single(var: impl Into<String>, value: i64) -> Self {
        Intervention([(var.into(), value)].into_iter().collect())
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, i64)>) -> Self {
        Intervention(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, var: &str) -> Option<i64> {
        self.0.get(var).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &i64)> {
        self.0.iter()
    }
}

impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// One problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoVariables,
    DuplicateName(String),
    PmfShape { factor: String },
    NegativeMass { factor: String, value: i64 },
    NotNormalized { factor: String, total: String },
    UnknownReference { variable: String, name: String },
    Cycle(Vec<String>),
    OutOfDomain { variable: String, value: i64, inputs: Vec<(String, i64)> },
    Evaluation { variable: String, message: String, inputs: Vec<(String, i64)> },
}

fn fmt_inputs(inputs: &[(String, i64)]) -> String {
    let parts: Vec<String> = inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    parts.join(", ")
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoVariables => write!(f, "at least one variable required"),
            Violation::DuplicateName(n) => write!(f, "name `{n}` declared more than once"),
            Violation::PmfShape { factor } => write!(f, "factor `{factor}`: pmf does not match its support"),
            Violation::NegativeMass { factor, value } => {
                write!(f, "factor `{factor}`: negative mass at value {value}")
            }
            Violation::NotNormalized { factor, total } => {
                write!(f, "factor `{factor}`: pmf sums to {total}, expected 1")
            }
            Violation::UnknownReference { variable, name } => {
                write!(f, "mechanism of `{variable}` references undeclared `{name}`")
            }
            Violation::Cycle(c) => write!(f, "cyclic dependency: {}", c.join(" -> ")),
            Violation::OutOfDomain { variable, value, inputs } => {
                write!(f, "mechanism of `{variable}` yields {value} outside its domain at {}", fmt_inputs(inputs))
            }
            Violation::Evaluation { variable, message, inputs } => {
                write!(f, "mechanism of `{variable}` fails at {}: {message}", fmt_inputs(inputs))
            }
        }
    }
}

/// Outcome of [`validate`]; `ok()` iff no violations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model:\n{0}")]
    Invalid(ValidationReport),
    #[error("unknown endogenous variable `{0}`")]
    UnknownVariable(String),
    #[error("value {value} is outside the domain of `{variable}`")]
    OutOfDomain { variable: String, value: i64 },
    #[error("exogenous assignment is incomplete or outside a support")]
    BadAtom,
}

/// Checks names, exogenous pmfs, reference resolution, acyclicity and closure
/// of every mechanism over all inputs it can receive (any exogenous atom and
/// any in-domain parent values, so closure survives interventions).
pub fn validate<T: Scalar>(def: &ScmDef<T>) -> ValidationReport {
    let mut violations = Vec::new();
    if def.endogenous.is_empty() {
        violations.push(Violation::NoVariables);
    }
    let mut names = BTreeSet::new();
    for n in def.exogenous.iter().map(|f| &f.name).chain(def.endogenous.iter().map(|v| &v.name)) {
        if !names.insert(n.clone()) {
            violations.push(Violation::DuplicateName(n.clone()));
        }
    }
    for factor in &def.exogenous {
        if factor.pmf.len() != factor.support.len() {
            violations.push(Violation::PmfShape { factor: factor.name.clone() });
            continue;
        }
        for (v, m) in factor.support.values().iter().zip(&factor.pmf) {
            if *m < T::zero() && !m.is_negligible() {
                violations.push(Violation::NegativeMass { factor: factor.name.clone(), value: *v });
            }
        }
        let total = factor.pmf.iter().fold(T::zero(), |acc, m| acc + m.clone());
        if !total.approx_eq(&T::one()) {
            violations.push(Violation::NotNormalized { factor: factor.name.clone(), total: total.to_string() });
        }
    }
    let exo: BTreeSet<&str> = def.exogenous.iter().map(|f| f.name.as_str()).collect();
    let endo: BTreeMap<&str, usize> = def.endogenous.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let mut resolved = true;
    for var in &def.endogenous {
        for r in var.mechanism.references() {
            if !exo.contains(r.as_str()) && !endo.contains_key(r.as_str()) {
                resolved = false;
                violations.push(Violation::UnknownReference { variable: var.name.clone(), name: r });
            }
        }
    }
    if !resolved {
        return ValidationReport { violations };
    }
    if let Some(cycle) = find_cycle(def, &endo) {
        violations.push(Violation::Cycle(cycle));
        return ValidationReport { violations };
    }
    if violations.iter().any(|v| matches!(v, Violation::DuplicateName(_) | Violation::PmfShape { .. })) {
        return ValidationReport { violations };
    }
    violations.extend(closure_violations(def));
    ValidationReport { violations }
}

fn find_cycle<T>(def: &ScmDef<T>, endo: &BTreeMap<&str, usize>) -> Option<Vec<String>> {
    let n = def.endogenous.len();
    let deps: Vec<Vec<usize>> = def
        .endogenous
        .iter()
        .map(|v| v.mechanism.references().iter().filter_map(|r| endo.get(r.as_str()).copied()).collect())
        .collect();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let mut stack: Vec<usize> = Vec::new();
    fn dfs(u: usize, deps: &[Vec<usize>], state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        state[u] = 1;
        stack.push(u);
        for &w in &deps[u] {
            if state[w] == 1 {
                let start = stack.iter().position(|&s| s == w).expect("on stack");
                let mut cyc = stack[start..].to_vec();
                cyc.push(w);
                return Some(cyc);
            }
            if state[w] == 0 {
                if let Some(c) = dfs(w, deps, state, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        state[u] = 2;
        None
    }
    for u in 0..n {
        if state[u] == 0 {
            if let Some(c) = dfs(u, &deps, &mut state, &mut stack) {
                // report in dependency direction: parent -> child
                let mut names: Vec<String> = c.iter().map(|&i| def.endogenous[i].name.clone()).collect();
                names.reverse();
                return Some(names);
            }
        }
    }
    None
}

struct Layout {
    names: Vec<String>,
    domains: Vec<Vec<i64>>,
}

fn layout<T>(def: &ScmDef<T>) -> Layout {
    let mut names = Vec::new();
    let mut domains = Vec::new();
    for f in &def.exogenous {
        names.push(f.name.clone());
        domains.push(f.support.values().to_vec());
    }
    for v in &def.endogenous {
        names.push(v.name.clone());
        domains.push(v.domain.values().to_vec());
    }
    Layout { names, domains }
}

fn compile_all<T>(def: &ScmDef<T>, lay: &Layout) -> Vec<CompiledExpr> {
    let slot_of = |n: &str| lay.names.iter().position(|m| m == n);
    let domain_of = |s: usize| lay.domains[s].clone();
    def.endogenous
        .iter()
        .map(|v| CompiledExpr::compile(&v.mechanism, &slot_of, &domain_of).expect("references resolved"))
        .collect()
}

fn closure_violations<T>(def: &ScmDef<T>) -> Vec<Violation> {
    let lay = layout(def);
    let compiled = compile_all(def, &lay);
    let mut out = Vec::new();
    let mut buf = vec![0i64; lay.names.len()];
    for (var, code) in def.endogenous.iter().zip(&compiled) {
        let slots: Vec<usize> = var
            .mechanism
            .references()
            .iter()
            .map(|r| lay.names.iter().position(|m| m == r).expect("resolved"))
            .collect();
        let radices: Vec<usize> = slots.iter().map(|&s| lay.domains[s].len()).collect();
        let mut idx = vec![0usize; slots.len()];
        'outer: loop {
            for (k, &s) in slots.iter().enumerate() {
                buf[s] = lay.domains[s][idx[k]];
            }
            let inputs = || slots.iter().map(|&s| (lay.names[s].clone(), buf[s])).collect::<Vec<_>>();
            match code.eval(&buf) {
                Ok(v) if var.domain.contains(v) => {}
                Ok(v) => {
                    out.push(Violation::OutOfDomain { variable: var.name.clone(), value: v, inputs: inputs() });
                    break 'outer;
                }
                Err(e) => {
                    out.push(Violation::Evaluation {
                        variable: var.name.clone(),
                        message: e.to_string(),
                        inputs: inputs(),
                    });
                    break 'outer;
                }
            }
            // odometer increment
            let mut k = slots.len();
            loop {
                if k == 0 {
                    break 'outer;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < radices[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
    out
}

/// Validated finite SCM. Exogenous factors are kept sorted by name;
/// endogenous variables keep declaration order.
#[derive(Debug, Clone)]
pub struct Scm<T> {
    def: ScmDef<T>,
    order: Vec<usize>,
    compiled: Vec<CompiledExpr>,
}

impl<T: Scalar> PartialEq for Scm<T> {
    fn eq(&self, other: &Self) -> bool {
        self.def == other.def
    }
}

impl<T: Scalar> Scm<T> {
    /// Canonicalizes exogenous order and validates.
    pub fn build(mut def: ScmDef<T>) -> Result<Self, ModelError> {
        def.exogenous.sort_by(|a, b| a.name.cmp(&b.name));
        let report = validate(&def);
        if !report.ok() {
            return Err(ModelError::Invalid(report));
        }
        let lay = layout(&def);
        let compiled = compile_all(&def, &lay);
        let order = topo_order(&def);
        Ok(Scm { def, order, compiled })
    }

    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn def(&self) -> &ScmDef<T> {
        &self.def
    }

    pub fn into_def(self) -> ScmDef<T> {
        self.def
    }

    pub fn exogenous(&self) -> &[ExogenousFactor<T>] {
        &self.def.exogenous
    }

    pub fn endogenous(&self) -> &[Endogenous] {
        &self.def.endogenous
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.def.endogenous.iter().map(|v| v.name.clone()).collect()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.def.endogenous.iter().position(|v| v.name == name)
    }

    pub fn domain(&self, name: &str) -> Option<&FiniteDomain> {
        self.def.endogenous.iter().find(|v| v.name == name).map(|v| &v.domain)
    }

    /// Endogenous indices in evaluation order.
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// Size of the exogenous joint support.
    pub fn atom_count(&self) -> usize {
        self.def.exogenous.iter().map(|f| f.support.len()).product()
    }

    /// Evaluates all endogenous variables for an exogenous atom given as
    /// support values aligned with [`Scm::exogenous`].
    pub fn solve(&self, atom: &[i64]) -> Vec<i64> {
        let overrides = vec![None; self.def.endogenous.len()];
        self.solve_with(atom, &overrides)
    }

    /// Like [`Scm::solve`] but with some endogenous values forced (the
    /// submodel of a hard intervention, without rebuilding the model).
    pub fn solve_with(&self, atom: &[i64], overrides: &[Option<i64>]) -> Vec<i64> {
        let ne = self.def.exogenous.len();
        let mut slots = vec![0i64; ne + self.def.endogenous.len()];
        self.solve_into(atom, overrides, &mut slots);
        slots[ne..].to_vec()
    }

    pub(crate) fn solve_into(&self, atom: &[i64], overrides: &[Option<i64>], slots: &mut [i64]) {
        let ne = self.def.exogenous.len();
        slots[..ne].copy_from_slice(atom);
        for &i in &self.order {
            slots[ne + i] = match overrides[i] {
                Some(v) => v,
                None => self.compiled[i].eval(slots).unwrap_or_else(|e: EvalError| {
                    panic!("validated mechanism of `{}` failed: {e}", self.def.endogenous[i].name)
                }),
            };
        }
    }

    /// Solves from a named exogenous assignment; returns name -> value.
    pub fn solve_named(&self, u: &BTreeMap<String, i64>) -> Result<BTreeMap<String, i64>, ModelError> {
        let mut atom = Vec::with_capacity(self.def.exogenous.len());
        for f in &self.def.exogenous {
            let v = *u.get(&f.name).ok_or(ModelError::BadAtom)?;
            if !f.support.contains(v) {
                return Err(ModelError::BadAtom);
            }
            atom.push(v);
        }
        let vals = self.solve(&atom);
        Ok(self.def.endogenous.iter().map(|v| v.name.clone()).zip(vals).collect())
    }

    /// Per-variable override vector for an intervention.
    pub fn overrides(&self, x: &Intervention) -> Result<Vec<Option<i64>>, ModelError> {
        let mut out = vec![None; self.def.endogenous.len()];
        for (var, &value) in x.iter() {
            let i = self.var_index(var).ok_or_else(|| ModelError::UnknownVariable(var.clone()))?;
            if !self.def.endogenous[i].domain.contains(value) {
                return Err(ModelError::OutOfDomain { variable: var.clone(), value });
            }
            out[i] = Some(value);
        }
        Ok(out)
    }

    /// Submodel `M_x`: intervened mechanisms replaced by constants.
    pub fn mutilate(&self, x: &Intervention) -> Result<Scm<T>, ModelError> {
        let overrides = self.overrides(x)?;
        if x.is_empty() {
            return Ok(self.clone());
        }
        let mut def = self.def.clone();
        for (v, o) in def.endogenous.iter_mut().zip(&overrides) {
            if let Some(value) = o {
                v.mechanism = Expr::Const(*value);
            }
        }
        Scm::build(def)
    }

    /// Directed edge `A -> B` iff `A` appears in `B`'s mechanism; bidirected
    /// edge iff two mechanisms read a common exogenous factor.
    pub fn induce_diagram(&self) -> CausalDiagram {
        let endo: BTreeSet<&str> = self.def.endogenous.iter().map(|v| v.name.as_str()).collect();
        let mut directed = Vec::new();
        let mut exo_users: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for v in &self.def.endogenous {
            for r in v.mechanism.references() {
                if endo.contains(r.as_str()) {
                    directed.push((r, v.name.clone()));
                } else {
                    exo_users.entry(r).or_default().push(v.name.clone());
                }
            }
        }
        let mut bidirected = Vec::new();
        for users in exo_users.values() {
            for (i, a) in users.iter().enumerate() {
                for b in &users[i + 1..] {
                    bidirected.push((a.clone(), b.clone()));
                }
            }
        }
        CausalDiagram::new(self.variable_names(), directed, bidirected).expect("acyclic by validation")
    }

    /// Converts the exogenous masses to another scalar type.
    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Scm<U> {
        let def = ScmDef {
            name: self.def.name.clone(),
            exogenous: self.def.exogenous.iter().map(|x| x.map_scalar(&f)).collect(),
            endogenous: self.def.endogenous.clone(),
        };
        Scm { def, order: self.order.clone(), compiled: self.compiled.clone() }
    }

    /// Iterates every exogenous atom with its probability.
    pub fn atoms(&self) -> AtomIter<'_, T> {
        AtomIter::new(&self.def.exogenous)
    }
}

fn topo_order<T>(def: &ScmDef<T>) -> Vec<usize> {
    let n = def.endogenous.len();
    let idx: BTreeMap<&str, usize> = def.endogenous.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let deps: Vec<Vec<usize>> = def
        .endogenous
        .iter()
        .map(|v| v.mechanism.references().iter().filter_map(|r| idx.get(r.as_str()).copied()).collect())
        .collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n).find(|&i| !done[i] && deps[i].iter().all(|&d| done[d])).expect("acyclic by validation");
        done[next] = true;
        order.push(next);
    }
    order
}

/// Odometer over the exogenous joint support.
pub struct AtomIter<'a, T> {
    factors: &'a [ExogenousFactor<T>],
    idx: Vec<usize>,
    done: bool,
}

impl<'a, T: Scalar> AtomIter<'a, T> {
    fn new(factors: &'a [ExogenousFactor<T>]) -> Self {
        AtomIter { factors, idx: vec![0; factors.len()], done: false }
    }
}

impl<T: Scalar> Iterator for AtomIter<'_, T> {
    type Item = (Vec<i64>, T);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut p = T::one();
        let mut atom = Vec::with_capacity(self.factors.len());
        for (f, &i) in self.factors.iter().zip(&self.idx) {
            atom.push(f.support.values()[i]);
            p = p * f.pmf[i].clone();
        }
        let mut k = self.factors.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.idx[k] += 1;
            if self.idx[k] < self.factors[k].support.len() {
                break;
            }
            self.idx[k] = 0;
        }
        Some((atom, p))
    }
}

impl<T: Scalar> fmt::Display for Scm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::dsl::format_model(self))
    }
}
