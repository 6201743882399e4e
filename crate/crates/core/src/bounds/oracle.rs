//! Randomized inner approximation of the optimal bounds.
//!
//! Draws random canonical parameterizations (heavy-tailed, sparse weights),
//! rakes each onto its component's constraint set by iterative proportional
//! fitting, rebuilds the SCM and evaluates the query with the engine. Every
//! accepted sample is a model in the feasible set, so `[min, max]` over
//! samples lies inside the optimal bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::canonical::Constraints;
use super::{BoundsError, Problem};
use crate::engine::{conditional_ctf, CtfQuery, Distribution};
use crate::model::CausalDiagram;
use crate::scalar::{Rational, Scalar};

const MAX_SWEEPS: usize = 2000;
const TOLERANCE: f64 = 1e-11;

/// Raking onto `Σ_{t∈S} q_t = b` for every row; `None` if it does not
/// converge (the random support admits no feasible point).
fn rake(mut w: Vec<f64>, rows: &[(Vec<usize>, f64)]) -> Option<Vec<f64>> {
    for _ in 0..MAX_SWEEPS {
        for (set, target) in rows {
            let cur: f64 = set.iter().map(|&t| w[t]).sum();
            if cur <= 0.0 {
                if *target > TOLERANCE {
                    return None;
                }
                continue;
            }
            let f = target / cur;
            for &t in set {
                w[t] *= f;
            }
        }
        let worst = rows
            .iter()
            .map(|(set, target)| (set.iter().map(|&t| w[t]).sum::<f64>() - target).abs())
            .fold(0.0, f64::max);
        if worst < TOLERANCE {
            return Some(w);
        }
    }
    None
}

fn random_weights(size: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let scale: f64 = rng.random_range(0.0..30.0);
    let sparsity: f64 = rng.random_range(0.0..0.7);
    let logs: Vec<Option<f64>> = (0..size)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            (rng.random::<f64>() >= sparsity).then_some(scale * g)
        })
        .collect();
    let top = logs.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    logs.into_iter().map(|l| l.map_or(0.0, |l| (l - top).exp())).collect()
}

fn sample_component(size: usize, c: &Constraints, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let rows: Vec<(Vec<usize>, f64)> = c.rows.iter().map(|(s, b)| (s.clone(), b.to_f64_lossy())).collect();
    for _ in 0..50 {
        if let Some(q) = rake(random_weights(size, rng), &rows) {
            return q;
        }
    }
    // the uniform start always has full support
    rake(vec![1.0; size], &rows).unwrap_or_else(|| vec![1.0 / size as f64; size])
}

/// `[min, max]` of the query over `n` random feasible models (`f64`).
pub fn oracle_inner_bounds(
    obs: &Distribution<Rational>,
    diagram: &CausalDiagram,
    query: &CtfQuery,
    n: usize,
    seed: u64,
) -> Result<(f64, f64), BoundsError> {
    let p = Problem::build(obs, diagram, query, true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..n.max(1) {
        let params: Vec<Vec<f64>> =
            p.comps.iter().zip(&p.constraints).map(|(comp, c)| sample_component(comp.size, c, &mut rng)).collect();
        let scm = p.reconstruct(&params)?;
        let v = conditional_ctf(&scm, query)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}
