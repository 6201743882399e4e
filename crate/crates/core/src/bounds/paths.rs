//! Enumeration of the response-cell assignments under which a joint
//! counterfactual event holds.
//!
//! Worlds are evaluated in turn, each over the ancestors of its events in
//! the mutilated graph. A variable's value in a world is the value its
//! response function takes at the cell selected by its parents; shared cells
//! across worlds are assigned once, which is what couples the worlds.

use std::collections::BTreeMap;

use super::canonical::VarInfo;

/// One world: intervened value index per variable, required value index per
/// variable.
#[derive(Debug, Clone)]
pub(crate) struct World {
    pub fixed: Vec<Option<usize>>,
    pub events: Vec<Option<usize>>,
}

/// Disjoint cell assignments `(variable, cell) -> value index`.
pub(crate) type Path = Vec<((usize, usize), usize)>;

struct Search<'a> {
    vars: &'a [VarInfo],
    worlds: &'a [World],
    steps: Vec<(usize, usize)>,
    values: Vec<Vec<Option<usize>>>,
    assigned: BTreeMap<(usize, usize), usize>,
    out: Vec<Path>,
}

impl Search<'_> {
    fn run(&mut self, k: usize) {
        if k == self.steps.len() {
            self.out.push(self.assigned.iter().map(|(&c, &v)| (c, v)).collect());
            return;
        }
        let (w, v) = self.steps[k];
        let world = &self.worlds[w];
        if let Some(x) = world.fixed[v] {
            if world.events[v].is_some_and(|e| e != x) {
                return;
            }
            self.values[w][v] = Some(x);
            self.run(k + 1);
            self.values[w][v] = None;
            return;
        }
        let info = &self.vars[v];
        let cell =
            info.cell_of(info.parents.iter().map(|&p| self.values[w][p].expect("parent evaluated first")), self.vars);
        let candidates: Vec<usize> = match (self.assigned.get(&(v, cell)), world.events[v]) {
            (Some(&x), Some(e)) if x != e => return,
            (Some(&x), _) => {
                self.values[w][v] = Some(x);
                self.run(k + 1);
                self.values[w][v] = None;
                return;
            }
            (None, Some(e)) => vec![e],
            (None, None) => (0..info.domain.len()).collect(),
        };
        for x in candidates {
            self.assigned.insert((v, cell), x);
            self.values[w][v] = Some(x);
            self.run(k + 1);
            self.values[w][v] = None;
            self.assigned.remove(&(v, cell));
        }
    }
}

/// All minimal cell assignments making every world's events hold. The
/// returned paths are mutually exclusive.
pub(crate) fn enumerate_paths(vars: &[VarInfo], worlds: &[World]) -> Vec<Path> {
    let n = vars.len();
    let mut steps = Vec::new();
    for (w, world) in worlds.iter().enumerate() {
        let mut needed = vec![false; n];
        for v in (0..n).rev() {
            if world.events[v].is_some() {
                needed[v] = true;
            }
        }
        // reverse topological sweep: parents of needed, non-intervened nodes
        for v in (0..n).rev() {
            if needed[v] && world.fixed[v].is_none() {
                for &p in &vars[v].parents {
                    needed[p] = true;
                }
            }
        }
        steps.extend((0..n).filter(|&v| needed[v]).map(|v| (w, v)));
    }
    let mut s = Search {
        vars,
        worlds,
        steps,
        values: vec![vec![None; n]; worlds.len()],
        assigned: BTreeMap::new(),
        out: Vec::new(),
    };
    s.run(0);
    s.out
}
