//! Random small models and queries shared by the property tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ctf_core::engine::{observational, CtfEvent, CtfQuery};
use ctf_core::model::{Endogenous, ExogenousFactor, Expr, FiniteDomain, Intervention, Scm, ScmDef, Table};
use ctf_core::scalar::ratio;
use ctf_core::{ExactScm, Rational};

fn random_pmf(rng: &mut ChaCha8Rng, k: usize) -> Vec<Rational> {
    let w: Vec<i64> = (0..k).map(|_| rng.random_range(1..=6)).collect();
    let total: i64 = w.iter().sum();
    w.into_iter().map(|x| ratio(x, total)).collect()
}

/// A model over `max_vars` or fewer endogenous variables named `V0, V1, …`
/// (in causal order). Each variable has a private exogenous factor; some
/// pairs also share one. Mechanisms are random tables.
pub fn random_scm(rng: &mut ChaCha8Rng, name: &str, max_vars: usize, max_domain: usize) -> ExactScm {
    let n = rng.random_range(2..=max_vars);
    let domains: Vec<usize> = (0..n).map(|_| rng.random_range(2..=max_domain)).collect();
    let mut exogenous = Vec::new();
    let mut exo_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, exo) in exo_of.iter_mut().enumerate() {
        let k = rng.random_range(2..=3);
        exogenous.push(ExogenousFactor::new(
            format!("U{i}"),
            FiniteDomain::range(0, k as i64 - 1).unwrap(),
            random_pmf(rng, k),
        ));
        exo.push(exogenous.len() - 1);
    }
    if rng.random_bool(0.6) {
        let mut pair: Vec<usize> = (0..n).collect();
        pair.shuffle(rng);
        let k = rng.random_range(2..=3);
        exogenous.push(ExogenousFactor::new("S0", FiniteDomain::range(0, k as i64 - 1).unwrap(), random_pmf(rng, k)));
        exo_of[pair[0]].push(exogenous.len() - 1);
        exo_of[pair[1]].push(exogenous.len() - 1);
    }
    let mut endogenous = Vec::new();
    for i in 0..n {
        let parents: Vec<usize> = (0..i).filter(|_| rng.random_bool(0.6)).collect();
        let mut inputs: Vec<String> = exo_of[i].iter().map(|&e| exogenous[e].name.clone()).collect();
        let mut sizes: Vec<usize> = exo_of[i].iter().map(|&e| exogenous[e].support.len()).collect();
        for &p in &parents {
            inputs.push(format!("V{p}"));
            sizes.push(domains[p]);
        }
        let mut keys: Vec<Vec<i64>> = vec![Vec::new()];
        for &s in &sizes {
            keys = keys.into_iter().flat_map(|k| (0..s as i64).map(move |x| [k.clone(), vec![x]].concat())).collect();
        }
        let entries: BTreeMap<Vec<i64>, i64> =
            keys.into_iter().map(|k| (k, rng.random_range(0..domains[i] as i64))).collect();
        endogenous.push(Endogenous::new(
            format!("V{i}"),
            FiniteDomain::range(0, domains[i] as i64 - 1).unwrap(),
            Expr::Table(Table { inputs, entries }),
        ));
    }
    Scm::build(ScmDef { name: name.to_string(), exogenous, endogenous }).expect("generated model is valid")
}

/// A conditional query `P(W[x] = w' | evidence)` whose evidence has positive
/// probability: one intervened variable, one or two target events, and a
/// factual conditioning set drawn from a supported row.
pub fn random_query(rng: &mut ChaCha8Rng, scm: &ExactScm) -> CtfQuery {
    let vars = scm.variable_names();
    let obs = observational(scm, &vars).unwrap();
    let rows: Vec<Vec<i64>> = obs.iter().map(|(r, _)| r.clone()).collect();
    let row = &rows[rng.random_range(0..rows.len())];
    let xi = rng.random_range(0..vars.len());
    let xdom = scm.domain(&vars[xi]).unwrap().values().to_vec();
    let ctx = Intervention::single(vars[xi].clone(), xdom[rng.random_range(0..xdom.len())]);
    let mut targets: Vec<usize> = (0..vars.len()).filter(|&i| i != xi).collect();
    targets.shuffle(rng);
    targets.truncate(rng.random_range(1..=2).min(targets.len()));
    let events = targets
        .iter()
        .map(|&i| {
            let d = scm.domain(&vars[i]).unwrap().values();
            CtfEvent::new(vars[i].clone(), d[rng.random_range(0..d.len())], ctx.clone())
        })
        .collect();
    let conditioning = (0..vars.len()).filter(|_| rng.random_bool(0.7)).map(|i| (vars[i].clone(), row[i])).collect();
    CtfQuery::new(events, conditioning)
}
