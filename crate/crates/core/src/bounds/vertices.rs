//! Vertex enumeration of `{x >= 0 : A x = b}` by breadth-first search over
//! feasible bases.

use std::collections::{BTreeSet, VecDeque};

use super::simplex::Tableau;
use crate::scalar::Rational;
use num_traits::Zero;

/// Every vertex reachable from the starting basis (all of them: the
/// feasible-basis graph of a polytope is connected). `None` when more than
/// `limit` bases would have to be visited.
pub(crate) fn enumerate_vertices(start: &Tableau<Rational>, limit: usize) -> Option<Vec<Vec<Rational>>> {
    let n = start.cols;
    let key = |t: &Tableau<Rational>| {
        let mut b = t.basis.clone();
        b.sort_unstable();
        b
    };
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut vertices: BTreeSet<Vec<Rational>> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(key(start));
    queue.push_back(start.clone());
    while let Some(t) = queue.pop_front() {
        vertices.insert(t.solution(n));
        for j in 0..n {
            if t.basis.contains(&j) {
                continue;
            }
            let mut best: Option<Rational> = None;
            let mut rows = Vec::new();
            for i in 0..t.a.len() {
                if t.a[i][j] > Rational::zero() {
                    let r = &t.b[i] / &t.a[i][j];
                    match &best {
                        Some(b) if r > *b => {}
                        Some(b) if r == *b => rows.push(i),
                        _ => {
                            best = Some(r);
                            rows = vec![i];
                        }
                    }
                }
            }
            for i in rows {
                let mut next = t.clone();
                next.pivot(i, j);
                if seen.insert(key(&next)) {
                    if seen.len() > limit {
                        return None;
                    }
                    queue.push_back(next);
                }
            }
        }
    }
    Some(vertices.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::simplex::feasible_tableau;
    use crate::scalar::{ratio, rint};

    #[test]
    fn square_transportation_polytope_has_two_vertices() {
        let h = ratio(1, 2);
        let (o, z) = (rint(1), rint(0));
        let rows = vec![
            vec![o.clone(), o.clone(), z.clone(), z.clone()],
            vec![z.clone(), z.clone(), o.clone(), o.clone()],
            vec![o.clone(), z.clone(), o.clone(), z.clone()],
            vec![z.clone(), o.clone(), z.clone(), o.clone()],
        ];
        let t = feasible_tableau(&rows, &[h.clone(), h.clone(), h.clone(), h.clone()], 4).unwrap();
        let v = enumerate_vertices(&t, 1000).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v.contains(&vec![h.clone(), z.clone(), z.clone(), h.clone()]));
        assert!(v.contains(&vec![z.clone(), h.clone(), h.clone(), z]));
    }

    #[test]
    fn simplex_vertices() {
        let o = rint(1);
        let t = feasible_tableau(&[vec![o.clone(), o.clone(), o.clone()]], &[o.clone()], 3).unwrap();
        assert_eq!(enumerate_vertices(&t, 100).unwrap().len(), 3);
    }
}
