//! Label-level stand-ins for common editing baselines.
//!
//! * `proxy_conditional` edits by resampling the non-intervened labels from
//!   `P(V | X = x')`, ignoring the factual input: a purely correlational editor.
//! * `proxy_preserve` copies every label except the intervened ones.
//! * `proxy_markovian` fits a model that ignores latent confounding (every
//!   bidirected edge dropped) and edits by abduction, action and prediction.
//!
//! Every record draws from its own seed stream, so logs are reproducible and
//! record `i` does not depend on `n`.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ConsistencyError, ProxyLog, SampleRecord};
use crate::bounds::witness::comonotone;
use crate::datasets::{record_seed, Categorical};
use crate::engine::{abduction, observational, Distribution};
use crate::model::{CausalDiagram, Endogenous, ExogenousFactor, Expr, FiniteDomain, Intervention, Scm, ScmDef, Table};
use crate::scalar::{Rational, Scalar};

/// Rows of a distribution with a sampler over them.
struct RowSampler {
    rows: Vec<Vec<i64>>,
    sampler: Categorical,
}

impl RowSampler {
    fn new<'a>(rows: impl Iterator<Item = (&'a Vec<i64>, &'a Rational)>) -> Option<Self> {
        let (rows, pmf): (Vec<Vec<i64>>, Vec<Rational>) = rows.map(|(r, p)| (r.clone(), p.clone())).unzip();
        let total = pmf.iter().fold(Rational::from_int(0), |a, p| a + p);
        if total.is_zero() {
            return None;
        }
        let pmf: Vec<Rational> = pmf.into_iter().map(|p| p / &total).collect();
        Some(RowSampler { rows, sampler: Categorical::new(&pmf) })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> &[i64] {
        &self.rows[self.sampler.draw(rng)]
    }
}

fn check_intervention(obs: &Distribution<Rational>, x: &Intervention) -> Result<Vec<(usize, i64)>, ConsistencyError> {
    x.iter()
        .map(|(v, val)| {
            let i = obs.position(v).ok_or_else(|| ConsistencyError::UnknownVariable(v.clone()))?;
            if !obs.domains()[i].contains(*val) {
                return Err(ConsistencyError::Engine(crate::engine::EngineError::OutOfDomain {
                    variable: v.clone(),
                    value: *val,
                }));
            }
            Ok((i, *val))
        })
        .collect()
}

fn record(vars: &[String], factual: &[i64], counterfactual: &[i64], x: &Intervention, seed: u64) -> SampleRecord {
    SampleRecord {
        factual: vars.iter().cloned().zip(factual.iter().copied()).collect(),
        counterfactual: vars.iter().cloned().zip(counterfactual.iter().copied()).collect(),
        intervention: x.0.clone(),
        seed,
    }
}

/// Factual labels from `obs`; edited labels drawn from `P(V | X = x')`.
pub fn proxy_conditional(
    obs: &Distribution<Rational>,
    x: &Intervention,
    n: usize,
    seed: u64,
) -> Result<ProxyLog, ConsistencyError> {
    let fixed = check_intervention(obs, x)?;
    let factual = RowSampler::new(obs.iter()).ok_or(ConsistencyError::Empty)?;
    let edited = RowSampler::new(obs.iter().filter(|(r, _)| fixed.iter().all(|&(i, v)| r[i] == v)))
        .ok_or_else(|| ConsistencyError::ZeroContext(x.to_string()))?;
    let vars = obs.variables();
    let records = (0..n)
        .map(|i| {
            let s = record_seed(seed, i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let f = factual.draw(&mut rng).to_vec();
            let c = edited.draw(&mut rng).to_vec();
            record(vars, &f, &c, x, s)
        })
        .collect();
    Ok(ProxyLog::new(records))
}

/// Factual labels from `obs`; the edit changes only the intervened labels.
pub fn proxy_preserve(
    obs: &Distribution<Rational>,
    x: &Intervention,
    n: usize,
    seed: u64,
) -> Result<ProxyLog, ConsistencyError> {
    let fixed = check_intervention(obs, x)?;
    let factual = RowSampler::new(obs.iter()).ok_or(ConsistencyError::Empty)?;
    let vars = obs.variables();
    let records = (0..n)
        .map(|i| {
            let s = record_seed(seed, i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let f = factual.draw(&mut rng).to_vec();
            let mut c = f.clone();
            for &(j, v) in &fixed {
                c[j] = v;
            }
            record(vars, &f, &c, x, s)
        })
        .collect();
    Ok(ProxyLog::new(records))
}

/// The Markovian model behind [`proxy_markovian`] and how well it fits.
#[derive(Debug, Clone)]
pub struct MarkovFit {
    pub model: Scm<Rational>,
    /// `TV(P_markov(V), obs)`.
    pub tv: Rational,
    /// Parent contexts with zero observed mass, filled with a uniform
    /// conditional: `(variable, parent assignment)`.
    pub filled: Vec<(String, BTreeMap<String, i64>)>,
}

/// Fits `P(v | pa(v))` tables on the diagram with bidirected edges removed.
/// Each variable `V` gets one exogenous `U_V` driving all of its parent
/// contexts through the inverse CDF (values in domain order).
pub fn fit_markovian(obs: &Distribution<Rational>, diagram: &CausalDiagram) -> Result<MarkovFit, ConsistencyError> {
    let mut exogenous = Vec::new();
    let mut endogenous = Vec::new();
    let mut filled = Vec::new();
    for v in diagram.topological_order() {
        let dom = obs.domain(&v).ok_or_else(|| ConsistencyError::UnknownVariable(v.clone()))?.clone();
        let parents = diagram.parents(&v);
        let pdoms: Vec<FiniteDomain> = parents
            .iter()
            .map(|p| obs.domain(p).cloned().ok_or_else(|| ConsistencyError::UnknownVariable(p.clone())))
            .collect::<Result<_, _>>()?;
        let mut scope = parents.clone();
        scope.push(v.clone());
        let joint = obs.marginal(&scope)?;

        // parent contexts in mixed-radix order, first parent most significant
        let mut contexts: Vec<Vec<i64>> = vec![Vec::new()];
        for d in &pdoms {
            contexts = contexts
                .into_iter()
                .flat_map(|c| d.values().iter().map(move |&x| [c.clone(), vec![x]].concat()))
                .collect();
        }
        let mut dists = Vec::with_capacity(contexts.len());
        for ctx in &contexts {
            let masses: Vec<Rational> =
                dom.values().iter().map(|&x| joint.prob(&[ctx.clone(), vec![x]].concat())).collect();
            let total = masses.iter().fold(Rational::from_int(0), |a, p| a + p);
            if total.is_zero() {
                filled.push((v.clone(), parents.iter().cloned().zip(ctx.iter().copied()).collect()));
                let u = Rational::new(1.into(), (dom.len() as i64).into());
                dists.push(vec![u; dom.len()]);
            } else {
                dists.push(masses.into_iter().map(|p| p / &total).collect());
            }
        }
        let (masses, values) = comonotone(&dists);
        let uname = format!("U_{v}");
        let udom = FiniteDomain::range(0, masses.len() as i64 - 1).map_err(|_| crate::model::ModelError::BadAtom)?;
        exogenous.push(ExogenousFactor::new(uname.clone(), udom, masses));
        let mut inputs = vec![uname];
        inputs.extend(parents.iter().cloned());
        let mut entries = BTreeMap::new();
        for (ctx, vals) in contexts.iter().zip(&values) {
            for (k, &xi) in vals.iter().enumerate() {
                entries.insert([vec![k as i64], ctx.clone()].concat(), dom.values()[xi]);
            }
        }
        endogenous.push(Endogenous::new(v.clone(), dom, Expr::Table(Table { inputs, entries })));
    }
    let model = Scm::build(ScmDef { name: "markovian_fit".into(), exogenous, endogenous })?;
    let fitted = observational(&model, obs.variables())?;
    let tv = fitted.total_variation(obs)?;
    Ok(MarkovFit { model, tv, filled })
}

/// Factual labels from the Markovian fit; edits by abduction on the factual
/// labels, the intervention, and prediction in the fitted model.
pub fn proxy_markovian(
    obs: &Distribution<Rational>,
    diagram: &CausalDiagram,
    x: &Intervention,
    n: usize,
    seed: u64,
) -> Result<(ProxyLog, MarkovFit), ConsistencyError> {
    check_intervention(obs, x)?;
    let fit = fit_markovian(obs, diagram)?;
    let scm = &fit.model;
    let vars = obs.variables();
    let idx: Vec<usize> = vars.iter().map(|v| scm.var_index(v).expect("fit covers obs")).collect();
    let overrides = scm.overrides(x)?;
    let samplers: Vec<Categorical> = scm.exogenous().iter().map(|f| Categorical::new(&f.pmf)).collect();
    let mut posteriors: BTreeMap<Vec<i64>, (Vec<Vec<i64>>, Categorical)> = BTreeMap::new();
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let s = record_seed(seed, i);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let atom: Vec<i64> =
            scm.exogenous().iter().zip(&samplers).map(|(f, smp)| f.support.values()[smp.draw(&mut rng)]).collect();
        let all = scm.solve(&atom);
        let f: Vec<i64> = idx.iter().map(|&j| all[j]).collect();
        if !posteriors.contains_key(&f) {
            let evidence: Vec<(String, i64)> = vars.iter().cloned().zip(f.iter().copied()).collect();
            let post = abduction(scm, &evidence)?;
            let (atoms, pmf): (Vec<Vec<i64>>, Vec<Rational>) = post.into_iter().unzip();
            posteriors.insert(f.clone(), (atoms, Categorical::new(&pmf)));
        }
        let (atoms, smp) = &posteriors[&f];
        let u = &atoms[smp.draw(&mut rng)];
        let edited = scm.solve_with(u, &overrides);
        let c: Vec<i64> = idx.iter().map(|&j| edited[j]).collect();
        records.push(record(vars, &f, &c, x, s));
    }
    Ok((ProxyLog::new(records), fit))
}
