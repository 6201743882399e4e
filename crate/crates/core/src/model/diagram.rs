//! Causal diagrams: directed edges for direct causation, bidirected edges for
//! shared exogenous factors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiagramError {
    #[error("edge references undeclared node `{0}`")]
    UnknownNode(String),
    #[error("self loop on `{0}`")]
    SelfLoop(String),
    #[error("directed cycle through {0:?}")]
    Cycle(Vec<String>),
    #[error("node `{0}` declared twice")]
    DuplicateNode(String),
    #[error("line {line}: cannot parse `{text}`")]
    Syntax { line: usize, text: String },
}

/// Acyclic directed mixed graph over named variables.
#[derive(Debug, Clone)]
pub struct CausalDiagram {
    nodes: Vec<String>,
    directed: BTreeSet<(String, String)>,
    bidirected: BTreeSet<(String, String)>,
}

fn unordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl CausalDiagram {
    pub fn new(
        nodes: impl IntoIterator<Item = impl Into<String>>,
        directed: impl IntoIterator<Item = (String, String)>,
        bidirected: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, DiagramError> {
        let nodes: Vec<String> = nodes.into_iter().map(Into::into).collect();
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.as_str()) {
                return Err(DiagramError::DuplicateNode(n.clone()));
            }
        }
        let check = |n: &String| {
            if seen.contains(n.as_str()) {
                Ok(())
            } else {
                Err(DiagramError::UnknownNode(n.clone()))
            }
        };
        let mut d = BTreeSet::new();
        for (a, b) in directed {
            check(&a)?;
            check(&b)?;
            if a == b {
                return Err(DiagramError::SelfLoop(a));
            }
            d.insert((a, b));
        }
        let mut bi = BTreeSet::new();
        for (a, b) in bidirected {
            check(&a)?;
            check(&b)?;
            if a == b {
                return Err(DiagramError::SelfLoop(a));
            }
            bi.insert(unordered(&a, &b));
        }
        let diagram = CausalDiagram { nodes, directed: d, bidirected: bi };
        diagram.try_topological_order()?;
        Ok(diagram)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn directed_edges(&self) -> &BTreeSet<(String, String)> {
        &self.directed
    }

    /// Bidirected edges, each stored once with endpoints in lexical order.
    pub fn bidirected_edges(&self) -> &BTreeSet<(String, String)> {
        &self.bidirected
    }

    pub fn contains(&self, node: &str) -> bool {
        self.nodes.iter().any(|n| n == node)
    }

    pub fn has_directed(&self, from: &str, to: &str) -> bool {
        self.directed.contains(&(from.to_string(), to.to_string()))
    }

    pub fn has_bidirected(&self, a: &str, b: &str) -> bool {
        self.bidirected.contains(&unordered(a, b))
    }

    /// Parents of `node`, in node declaration order.
    pub fn parents(&self, node: &str) -> Vec<String> {
        self.nodes.iter().filter(|p| self.directed.contains(&((*p).clone(), node.to_string()))).cloned().collect()
    }

    /// Kahn's algorithm, ties broken by declaration order.
    pub fn topological_order(&self) -> Vec<String> {
        self.try_topological_order().expect("diagram validated at construction")
    }

    fn try_topological_order(&self) -> Result<Vec<String>, DiagramError> {
        let mut indeg: BTreeMap<&str, usize> = self.nodes.iter().map(|n| (n.as_str(), 0)).collect();
        for (_, b) in &self.directed {
            *indeg.get_mut(b.as_str()).expect("validated") += 1;
        }
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut done = BTreeSet::new();
        while order.len() < self.nodes.len() {
            let next = self.nodes.iter().find(|n| !done.contains(n.as_str()) && indeg[n.as_str()] == 0);
            let Some(next) = next else {
                let cycle = self.nodes.iter().filter(|n| !done.contains(n.as_str())).cloned().collect();
                return Err(DiagramError::Cycle(cycle));
            };
            done.insert(next.as_str());
            for (a, b) in &self.directed {
                if a == next {
                    *indeg.get_mut(b.as_str()).expect("validated") -= 1;
                }
            }
            order.push(next.clone());
        }
        Ok(order)
    }

    /// Connected components of the bidirected subgraph, each listed in
    /// topological order; components ordered by their first member.
    pub fn c_components(&self) -> Vec<Vec<String>> {
        let order = self.topological_order();
        let pos: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut parent: Vec<usize> = (0..order.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let next = p[c];
                p[c] = r;
                c = next;
            }
            r
        }
        for (a, b) in &self.bidirected {
            let (ra, rb) = (find(&mut parent, pos[a.as_str()]), find(&mut parent, pos[b.as_str()]));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (i, n) in order.iter().enumerate() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(n.clone());
        }
        groups.into_values().collect()
    }

    /// Same diagram without bidirected edges.
    pub fn markovian(&self) -> CausalDiagram {
        CausalDiagram { nodes: self.nodes.clone(), directed: self.directed.clone(), bidirected: BTreeSet::new() }
    }

    /// Parses `A -> B`, `A <-> B` and bare node lines, separated by newlines
    /// or `;`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, DiagramError> {
        let mut nodes: Vec<String> = Vec::new();
        let add = |n: &str, nodes: &mut Vec<String>| {
            if !nodes.iter().any(|m| m == n) {
                nodes.push(n.to_string());
            }
        };
        let mut directed = Vec::new();
        let mut bidirected = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for item in line.split(';') {
                let item = item.trim();
                if item.is_empty() {
                    continue;
                }
                let syntax = || DiagramError::Syntax { line: lineno + 1, text: item.to_string() };
                let ident_ok = |s: &str| {
                    !s.is_empty()
                        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                        && !s.starts_with(|c: char| c.is_ascii_digit())
                };
                if let Some((a, b)) = item.split_once("<->") {
                    let (a, b) = (a.trim(), b.trim());
                    if !ident_ok(a) || !ident_ok(b) {
                        return Err(syntax());
                    }
                    add(a, &mut nodes);
                    add(b, &mut nodes);
                    bidirected.push((a.to_string(), b.to_string()));
                } else if let Some((a, b)) = item.split_once("->") {
                    let (a, b) = (a.trim(), b.trim());
                    if !ident_ok(a) || !ident_ok(b) {
                        return Err(syntax());
                    }
                    add(a, &mut nodes);
                    add(b, &mut nodes);
                    directed.push((a.to_string(), b.to_string()));
                } else if ident_ok(item) {
                    add(item, &mut nodes);
                } else {
                    return Err(syntax());
                }
            }
        }
        CausalDiagram::new(nodes, directed, bidirected)
    }
}

impl PartialEq for CausalDiagram {
    fn eq(&self, other: &Self) -> bool {
        let a: BTreeSet<&String> = self.nodes.iter().collect();
        let b: BTreeSet<&String> = other.nodes.iter().collect();
        a == b && self.directed == other.directed && self.bidirected == other.bidirected
    }
}

impl Eq for CausalDiagram {}

impl fmt::Display for CausalDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut items: Vec<String> = Vec::new();
        let mut mentioned = BTreeSet::new();
        for (a, b) in &self.directed {
            items.push(format!("{a} -> {b}"));
            mentioned.insert(a);
            mentioned.insert(b);
        }
        for (a, b) in &self.bidirected {
            items.push(format!("{a} <-> {b}"));
            mentioned.insert(a);
            mentioned.insert(b);
        }
        let isolated: Vec<String> = self.nodes.iter().filter(|n| !mentioned.contains(n)).cloned().collect();
        let mut all = isolated;
        all.extend(items);
        write!(f, "{}", all.join("; "))
    }
}
