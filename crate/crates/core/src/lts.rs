//! Labelled transition systems built by breadth-first exploration.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Display, Write as _};
use std::hash::Hash;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge<L> {
    pub from: usize,
    pub label: L,
    pub to: usize,
}

/// A finite labelled transition system. States are numbered in discovery
/// order; `names[i]` is the canonical printed form of state `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lts<L> {
    pub names: Vec<String>,
    pub initial: usize,
    pub edges: Vec<Edge<L>>,
    /// Set when a state or depth limit cut the exploration short.
    pub truncated: bool,
}

impl<L> Lts<L> {
    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn successors(&self, s: usize) -> impl Iterator<Item = &Edge<L>> {
        self.edges.iter().filter(move |e| e.from == s)
    }

    pub fn map_labels<M>(&self, mut f: impl FnMut(&L) -> M) -> Lts<M> {
        Lts {
            names: self.names.clone(),
            initial: self.initial,
            edges: self.edges.iter().map(|e| Edge { from: e.from, label: f(&e.label), to: e.to }).collect(),
            truncated: self.truncated,
        }
    }

    /// True if some state can reach itself.
    pub fn has_cycle(&self) -> bool {
        let n = self.num_states();
        let mut indeg = vec![0usize; n];
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.from].push(e.to);
            indeg[e.to] += 1;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| indeg[s] == 0).collect();
        let mut removed = 0;
        while let Some(s) = queue.pop_front() {
            removed += 1;
            for &t in &adj[s] {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    queue.push_back(t);
                }
            }
        }
        removed < n
    }
}

impl<L: Display> Lts<L> {
    /// Graphviz rendering. `edge_label` formats one transition label.
    pub fn to_dot_with(&self, name: &str, edge_label: impl Fn(&L) -> String) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
        let _ = writeln!(out, "  rankdir=LR;");
        let _ = writeln!(out, "  node [shape=circle, label=\"\", width=0.15, style=filled, fillcolor=black];");
        let _ = writeln!(out, "  start [shape=none, label=\"\", width=0];");
        let _ = writeln!(out, "  start -> s{};", self.initial);
        for (i, n) in self.names.iter().enumerate() {
            let _ = writeln!(out, "  s{i} [tooltip=\"{}\"];", escape(n));
        }
        for e in &self.edges {
            let _ = writeln!(out, "  s{} -> s{} [label=\"{}\"];", e.from, e.to, escape(&edge_label(&e.label)));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_dot(&self, name: &str) -> String {
        self.to_dot_with(name, |l| l.to_string())
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Limits for [`explore`]. `max_depth` stops expansion of states at that
/// BFS distance from the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: Option<usize>,
}

impl Limits {
    pub fn states(max_states: usize) -> Self {
        Limits { max_states, max_depth: None }
    }
}

/// Result of an exploration: the LTS plus per-state bookkeeping.
#[derive(Debug, Clone)]
pub struct Exploration<S, L> {
    pub lts: Lts<L>,
    pub nodes: Vec<S>,
    /// BFS distance from the initial state.
    pub depth: Vec<usize>,
    /// Index into `lts.edges` of the BFS-tree edge reaching each state.
    pub parent: Vec<Option<usize>>,
    /// Whether a state's successors were computed in full.
    pub expanded: Vec<bool>,
}

impl<S, L: Clone> Exploration<S, L> {
    /// Labels along the BFS tree path from the initial state; minimal length.
    pub fn path_to(&self, mut s: usize) -> Vec<L> {
        let mut labels = Vec::new();
        while let Some(e) = self.parent[s] {
            let edge = &self.lts.edges[e];
            labels.push(edge.label.clone());
            s = edge.from;
        }
        labels.reverse();
        labels
    }

    /// Fully expanded states without successors.
    pub fn stuck_states(&self) -> impl Iterator<Item = usize> + '_ {
        let mut has_succ = vec![false; self.nodes.len()];
        for e in &self.lts.edges {
            has_succ[e.from] = true;
        }
        (0..self.nodes.len()).filter(move |&s| self.expanded[s] && !has_succ[s])
    }
}

/// Breadth-first closure of `successors` from `initial`, deduplicating
/// states by equality. `name` renders the canonical key of a state.
pub fn explore<S, L, F, N>(initial: S, limits: Limits, mut successors: F, name: N) -> Exploration<S, L>
where
    S: Clone + Eq + Hash,
    F: FnMut(&S) -> Vec<(L, S)>,
    N: Fn(&S) -> String,
{
    assert!(limits.max_states > 0, "state limit must be positive");
    let mut index: HashMap<S, usize> = HashMap::new();
    let mut ex = Exploration {
        lts: Lts { names: vec![name(&initial)], initial: 0, edges: Vec::new(), truncated: false },
        nodes: vec![initial.clone()],
        depth: vec![0],
        parent: vec![None],
        expanded: vec![false],
    };
    index.insert(initial, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        if limits.max_depth.is_some_and(|d| ex.depth[s] >= d) {
            ex.lts.truncated = true;
            continue;
        }
        let mut complete = true;
        for (label, next) in successors(&ex.nodes[s]) {
            let target = match index.entry(next) {
                Entry::Occupied(o) => *o.get(),
                Entry::Vacant(v) => {
                    if ex.nodes.len() >= limits.max_states {
                        complete = false;
                        ex.lts.truncated = true;
                        continue;
                    }
                    let t = ex.nodes.len();
                    ex.lts.names.push(name(v.key()));
                    ex.nodes.push(v.key().clone());
                    ex.depth.push(ex.depth[s] + 1);
                    ex.parent.push(Some(ex.lts.edges.len()));
                    ex.expanded.push(false);
                    v.insert(t);
                    queue.push_back(t);
                    t
                }
            };
            ex.lts.edges.push(Edge { from: s, label, to: target });
        }
        ex.expanded[s] = complete;
    }
    ex
}

impl<L: Display> Display for Lts<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.edges {
            writeln!(f, "{} --{}--> {}", self.names[e.from], e.label, self.names[e.to])?;
        }
        Ok(())
    }
}
