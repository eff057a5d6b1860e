//! Variable elimination on an undirected interaction graph.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::VarId;

/// Undirected graph over variable ids.
#[derive(Clone, Debug, Default)]
pub struct InteractionGraph {
    adjacent: BTreeMap<VarId, BTreeSet<VarId>>,
}

impl InteractionGraph {
    pub fn new() -> Self {
        InteractionGraph::default()
    }

    pub fn add_node(&mut self, v: VarId) {
        self.adjacent.entry(v).or_default();
    }

    /// Connects every pair in `vars`.
    pub fn add_clique(&mut self, vars: &[VarId]) {
        for &a in vars {
            self.add_node(a);
            for &b in vars {
                if a != b {
                    self.adjacent.entry(a).or_default().insert(b);
                }
            }
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = VarId> + '_ {
        self.adjacent.keys().copied()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.adjacent.contains_key(&v)
    }

    pub fn neighbors(&self, v: VarId) -> &BTreeSet<VarId> {
        &self.adjacent[&v]
    }

    fn fill_in(&self, v: VarId) -> usize {
        let nb: Vec<VarId> = self.adjacent[&v].iter().copied().collect();
        let mut missing = 0;
        for (i, a) in nb.iter().enumerate() {
            for b in &nb[i + 1..] {
                if !self.adjacent[a].contains(b) {
                    missing += 1;
                }
            }
        }
        missing
    }

    fn eliminate(&mut self, v: VarId) -> Vec<VarId> {
        let nb: Vec<VarId> = self.adjacent.remove(&v).unwrap_or_default().into_iter().collect();
        for a in &nb {
            let set = self.adjacent.get_mut(a).expect("neighbor present");
            set.remove(&v);
        }
        for a in &nb {
            for b in &nb {
                if a != b {
                    self.adjacent.get_mut(a).expect("neighbor present").insert(*b);
                }
            }
        }
        nb
    }
}

/// Result of eliminating every node: the order and, per step, the eliminated
/// variable together with its neighbors at that moment (sorted by id).
#[derive(Clone, Debug)]
pub struct Elimination {
    pub order: Vec<VarId>,
    pub cliques: Vec<Vec<VarId>>,
}

/// Eliminates the groups one after another; inside a group the node with
/// the fewest fill-in edges goes first, ties to the lowest id. Nodes of the
/// graph missing from every group are eliminated last as one more group.
pub fn eliminate(graph: &InteractionGraph, groups: &[Vec<VarId>]) -> Elimination {
    let mut g = graph.clone();
    let mut order = Vec::new();
    let mut cliques = Vec::new();
    let mut all_groups: Vec<BTreeSet<VarId>> = groups
        .iter()
        .map(|grp| grp.iter().copied().filter(|v| g.contains(*v)).collect())
        .collect();
    let listed: BTreeSet<VarId> = all_groups.iter().flatten().copied().collect();
    let rest: BTreeSet<VarId> = g.nodes().filter(|v| !listed.contains(v)).collect();
    all_groups.push(rest);

    for mut group in all_groups {
        while !group.is_empty() {
            let v = *group
                .iter()
                .min_by_key(|v| (g.fill_in(**v), **v))
                .expect("nonempty group");
            group.remove(&v);
            let mut clique = g.eliminate(v);
            clique.push(v);
            clique.sort();
            order.push(v);
            cliques.push(clique);
        }
    }
    Elimination { order, cliques }
}

/// Min-fill elimination over the whole graph.
pub fn min_fill(graph: &InteractionGraph) -> Elimination {
    eliminate(graph, &[])
}

/// Elimination tree: step `i` points at the step that eliminates the first
/// (earliest) remaining neighbor of its variable, or `None` for a component root.
pub fn elimination_parents(elim: &Elimination) -> Vec<Option<usize>> {
    let step: BTreeMap<VarId, usize> = elim.order.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    elim.cliques
        .iter()
        .zip(&elim.order)
        .map(|(clique, v)| clique.iter().filter(|u| *u != v).map(|u| step[u]).min())
        .collect()
}
