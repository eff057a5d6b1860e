//! Exact inference on probabilistic networks by message passing in a cluster
//! tree: moralization, min-fill triangulation, join-tree construction,
//! potential initialization and collect.

mod triangulate;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

pub use triangulate::{eliminate, elimination_parents, min_fill, Elimination, InteractionGraph};

use crate::error::{Error, Result};
use crate::factor::{Assignment, Factor};
use crate::model::{InfluenceDiagram, Kind, VarId};

/// A set of tables over discrete variables. Each table is a conditional
/// distribution or a likelihood; its scope is one family of the network.
#[derive(Clone, Debug)]
pub struct Network {
    /// Cardinality per variable id (ids not in the network may hold anything).
    pub cards: Vec<usize>,
    pub names: Vec<String>,
    pub variables: Vec<VarId>,
    pub tables: Vec<Factor>,
}

impl Network {
    /// The chance part of a diagram: every live chance variable with its CPT.
    pub fn from_chance_nodes(d: &InfluenceDiagram) -> Network {
        let variables = d.nodes_of(Kind::Chance);
        let tables = variables.iter().map(|v| d.cpts[v].clone()).collect();
        Network {
            cards: d.cards(),
            names: d.variables.iter().map(|v| v.name.clone()).collect(),
            variables,
            tables,
        }
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.0]
    }

    /// Moral graph plus one clique per constraint set.
    pub fn interaction_graph(&self, constraints: &[Vec<VarId>]) -> InteractionGraph {
        let mut g = InteractionGraph::new();
        for &v in &self.variables {
            g.add_node(v);
        }
        for t in &self.tables {
            g.add_clique(t.scope());
        }
        for c in constraints {
            g.add_clique(c);
        }
        g
    }

    /// Tables plus one indicator likelihood per observed variable.
    pub fn with_indicators(&self, evidence: &Assignment) -> Result<Vec<Factor>> {
        let mut out = self.tables.clone();
        for (&v, &i) in evidence {
            out.push(Factor::indicator(v, self.cards[v.0], i)?);
        }
        Ok(out)
    }
}

/// How observations enter the potentials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EvidenceMode {
    /// Multiply an indicator likelihood into a cluster holding the variable.
    #[default]
    Indicator,
    /// Slice every table and drop observed variables from the potentials.
    Reduce,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterTree {
    /// Variable sets, each sorted by id.
    pub clusters: Vec<Vec<VarId>>,
    /// Undirected edges, stored as (upstream, downstream) from the elimination.
    pub edges: Vec<(usize, usize)>,
    pub cards: Vec<usize>,
}

impl ClusterTree {
    pub fn separator(&self, a: usize, b: usize) -> Vec<VarId> {
        self.clusters[a].iter().copied().filter(|v| self.clusters[b].contains(v)).collect()
    }

    pub fn neighbors(&self, c: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == c {
                    Some(b)
                } else if b == c {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Smallest cluster containing every variable in `vars`, ties to the lowest index.
    pub fn covering(&self, vars: &[VarId]) -> Option<usize> {
        self.clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| vars.iter().all(|v| c.contains(v)))
            .min_by_key(|(i, c)| (c.len(), *i))
            .map(|(i, _)| i)
    }

    pub fn is_tree(&self) -> bool {
        let n = self.clusters.len();
        if n == 0 {
            return self.edges.is_empty();
        }
        if self.edges.len() != n - 1 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(c) = stack.pop() {
            for nb in self.neighbors(c) {
                if !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        seen.iter().all(|s| *s)
    }

    /// Every variable induces a connected subtree.
    pub fn has_running_intersection(&self) -> bool {
        let vars: BTreeSet<VarId> = self.clusters.iter().flatten().copied().collect();
        vars.into_iter().all(|v| {
            let holding: Vec<usize> = (0..self.clusters.len()).filter(|c| self.clusters[*c].contains(&v)).collect();
            let mut seen = BTreeSet::from([holding[0]]);
            let mut stack = vec![holding[0]];
            while let Some(c) = stack.pop() {
                for nb in self.neighbors(c) {
                    if self.clusters[nb].contains(&v) && seen.insert(nb) {
                        stack.push(nb);
                    }
                }
            }
            seen.len() == holding.len()
        })
    }

    /// Every scope fits inside at least one cluster.
    pub fn covers_families(&self, scopes: &[&[VarId]]) -> bool {
        scopes.iter().all(|s| self.covering(s).is_some())
    }

    /// Cluster index per table: the smallest covering cluster.
    pub fn assign(&self, tables: &[Factor]) -> Result<Vec<usize>> {
        tables
            .iter()
            .map(|t| self.covering(t.scope()).ok_or_else(|| Error::UncoveredTable(t.scope().to_vec())))
            .collect()
    }

    pub fn to_dot(&self, name: impl Fn(VarId) -> String) -> String {
        let mut out = String::from("graph cluster_tree {\n");
        for (i, c) in self.clusters.iter().enumerate() {
            let label: Vec<String> = c.iter().map(|v| name(*v)).collect();
            let _ = writeln!(out, "  c{i} [shape=box, label=\"{}\"];", label.join(", "));
        }
        for &(a, b) in &self.edges {
            let sep: Vec<String> = self.separator(a, b).iter().map(|v| name(*v)).collect();
            let _ = writeln!(out, "  c{a} -- c{b} [label=\"{}\"];", sep.join(", "));
        }
        out.push_str("}\n");
        out
    }
}

/// Clusters of an elimination after absorbing every cluster that is a subset
/// of a neighbor. Returns cluster scopes, the variables each one eliminates
/// and the parent pointer of each cluster.
pub fn join_forest(
    elim: &Elimination,
    may_absorb: impl Fn(usize, usize) -> bool,
) -> (Vec<Vec<VarId>>, Vec<Vec<VarId>>, Vec<Option<usize>>) {
    let n = elim.order.len();
    let mut parent = elimination_parents(elim);
    let mut scope = elim.cliques.clone();
    let mut eliminated: Vec<Vec<VarId>> = elim.order.iter().map(|v| vec![*v]).collect();
    let mut alive = vec![true; n];
    loop {
        let mut merged = false;
        for c in 0..n {
            if !alive[c] {
                continue;
            }
            let Some(p) = parent[c] else { continue };
            if !scope[p].iter().all(|v| scope[c].contains(v)) || !may_absorb(c, p) {
                continue;
            }
            // the child takes the parent's place
            alive[p] = false;
            let moved = std::mem::take(&mut eliminated[p]);
            eliminated[c].extend(moved);
            parent[c] = parent[p];
            for (other, slot) in parent.iter_mut().enumerate() {
                if other != c && *slot == Some(p) {
                    *slot = Some(c);
                }
            }
            scope[p].clear();
            merged = true;
        }
        if !merged {
            break;
        }
    }
    let index: Vec<Option<usize>> = {
        let mut next = 0;
        alive
            .iter()
            .map(|a| {
                a.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };
    let mut clusters = Vec::new();
    let mut elim_vars = Vec::new();
    let mut parents = Vec::new();
    for c in 0..n {
        if alive[c] {
            clusters.push(scope[c].clone());
            elim_vars.push(eliminated[c].clone());
            parents.push(parent[c].map(|p| index[p].expect("parent survives")));
        }
    }
    (clusters, elim_vars, parents)
}

/// Builds a cluster tree for the network such that every table scope and
/// every constraint set lies inside some cluster.
pub fn build_cluster_tree(net: &Network, constraints: &[Vec<VarId>]) -> ClusterTree {
    let graph = net.interaction_graph(constraints);
    let elim = min_fill(&graph);
    let (clusters, _, parents) = join_forest(&elim, |_, _| true);
    let mut edges = Vec::new();
    let roots: Vec<usize> = (0..clusters.len()).filter(|c| parents[*c].is_none()).collect();
    for (c, p) in parents.iter().enumerate() {
        if let Some(p) = p {
            edges.push((c, *p));
        }
    }
    // link the components of a disconnected network through empty separators
    for r in roots.iter().skip(1) {
        edges.push((*r, roots[0]));
    }
    ClusterTree { clusters, edges, cards: net.cards.clone() }
}

/// Cluster potentials and memoized messages for one evaluation.
///
/// Messages are cached per directed edge. Replacing a table invalidates only
/// the messages whose sending side contains the affected cluster, so a
/// sequence of collects recomputes each stale message once.
pub struct Propagation<'t> {
    tree: &'t ClusterTree,
    tables: Vec<Factor>,
    assignment: Vec<usize>,
    potentials: Vec<Factor>,
    cache: HashMap<(usize, usize), Factor>,
    sends: usize,
    mode: EvidenceMode,
    evidence: Assignment,
}

impl<'t> Propagation<'t> {
    pub fn new(tree: &'t ClusterTree, tables: Vec<Factor>, evidence: &Assignment, mode: EvidenceMode) -> Result<Self> {
        let tables = match mode {
            EvidenceMode::Indicator => {
                let mut t = tables;
                for (&v, &i) in evidence {
                    t.push(Factor::indicator(v, tree.cards[v.0], i)?);
                }
                t
            }
            EvidenceMode::Reduce => tables.iter().map(|t| t.reduce_present(evidence)).collect::<Result<_>>()?,
        };
        let assignment = tree.assign(&tables)?;
        let mut p = Propagation {
            tree,
            tables,
            assignment,
            potentials: Vec::new(),
            cache: HashMap::new(),
            sends: 0,
            mode,
            evidence: evidence.clone(),
        };
        p.potentials = (0..tree.clusters.len()).map(|c| p.build_potential(c)).collect::<Result<_>>()?;
        Ok(p)
    }

    fn build_potential(&self, c: usize) -> Result<Factor> {
        let scope: Vec<VarId> = self.tree.clusters[c]
            .iter()
            .copied()
            .filter(|v| self.mode == EvidenceMode::Indicator || !self.evidence.contains_key(v))
            .collect();
        let cards = scope.iter().map(|v| self.tree.cards[v.0]).collect();
        let mut pot = Factor::ones(scope, cards);
        for (t, &a) in self.tables.iter().zip(&self.assignment) {
            if a == c {
                pot = pot.multiply(t)?;
            }
        }
        Ok(pot)
    }

    pub fn tables(&self) -> &[Factor] {
        &self.tables
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn potential(&self, c: usize) -> &Factor {
        &self.potentials[c]
    }

    /// Messages computed so far (cache hits are not counted).
    pub fn messages_sent(&self) -> usize {
        self.sends
    }

    /// Replaces table `index` (same scope) and refreshes its cluster.
    pub fn replace_table(&mut self, index: usize, table: Factor) -> Result<()> {
        let table = match self.mode {
            EvidenceMode::Indicator => table,
            EvidenceMode::Reduce => table.reduce_present(&self.evidence)?,
        };
        let c = self.assignment[index];
        if !table.scope().iter().all(|v| self.tree.clusters[c].contains(v)) {
            return Err(Error::UncoveredTable(table.scope().to_vec()));
        }
        self.tables[index] = table;
        self.potentials[c] = self.build_potential(c)?;
        self.invalidate_from(c);
        Ok(())
    }

    /// Drops every cached message directed away from cluster `c`.
    fn invalidate_from(&mut self, c: usize) {
        let mut stack = vec![(c, usize::MAX)];
        while let Some((x, from)) = stack.pop() {
            for nb in self.tree.neighbors(x) {
                if nb != from {
                    self.cache.remove(&(x, nb));
                    stack.push((nb, x));
                }
            }
        }
    }

    fn message(&mut self, from: usize, to: usize) -> Result<Factor> {
        if let Some(m) = self.cache.get(&(from, to)) {
            return Ok(m.clone());
        }
        let mut f = self.potentials[from].clone();
        for nb in self.tree.neighbors(from) {
            if nb != to {
                let m = self.message(nb, from)?;
                f = f.multiply(&m)?;
            }
        }
        let sep: Vec<VarId> = self
            .tree
            .separator(from, to)
            .into_iter()
            .filter(|v| f.contains(*v))
            .collect();
        let m = f.sum_onto(&sep)?;
        self.sends += 1;
        self.cache.insert((from, to), m.clone());
        Ok(m)
    }

    /// Potential at `target` after absorbing messages from the whole tree.
    pub fn collect(&mut self, target: usize) -> Result<Factor> {
        let mut f = self.potentials[target].clone();
        for nb in self.tree.neighbors(target) {
            let m = self.message(nb, target)?;
            f = f.multiply(&m)?;
        }
        Ok(f)
    }

    /// Unnormalized joint over `vars`, collected at the smallest covering cluster.
    pub fn joint(&mut self, vars: &[VarId]) -> Result<Factor> {
        let c = self.tree.covering(vars).ok_or_else(|| Error::QueryNotCovered(vars.to_vec()))?;
        let f = self.collect(c)?;
        f.sum_onto(vars)?.permute(vars)
    }

    /// Total mass of the product of all tables.
    pub fn total(&mut self) -> Result<f64> {
        if self.tree.clusters.is_empty() {
            return Ok(self.tables.iter().map(|t| t.total()).product());
        }
        Ok(self.collect(0)?.total())
    }
}

/// Posterior over a query together with the probability of the evidence.
#[derive(Clone, Debug)]
pub struct Marginal {
    pub posterior: Factor,
    pub evidence_probability: f64,
}

/// `P{query | E=e}` in query order, with `P{E=e}` as the normalizer.
pub fn marginal(tree: &ClusterTree, net: &Network, query: &[VarId], evidence: &Assignment) -> Result<Marginal> {
    let mut p = Propagation::new(tree, net.tables.clone(), evidence, EvidenceMode::Indicator)?;
    let mut joint = p.joint(query)?;
    let z = joint.normalize();
    if z <= 0.0 {
        return Err(Error::ZeroEvidenceProbability);
    }
    Ok(Marginal { posterior: joint, evidence_probability: z })
}
