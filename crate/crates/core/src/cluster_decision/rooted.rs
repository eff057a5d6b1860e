//! Rooted, one-directional cluster trees evaluated in a single pass.
//!
//! Variables are eliminated in reverse temporal order: chance variables no
//! decision observes, then the last decision, then what it observes that no
//! earlier decision does, and so on back to the first decision, and finally
//! the value variable. Each elimination step contributes a cluster whose
//! single outgoing edge points at the step that eliminates its earliest
//! remaining neighbor, so messages only ever flow toward the value cluster.
//! A decision is maximized out in the message leaving its cluster, before
//! any chance variable of the same message is summed out, and the argmax
//! recorded there is the decision's policy.
//!
//! The construction is one way of meeting the structural conditions; the
//! checker in [`RootedClusterTree::check`] is what the solver relies on.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::backend::{cluster_sizes, degenerate_result};
use crate::error::{Error, Result};
use crate::factor::{argmax_first, Assignment, Configurations, Factor};
use crate::inference::{eliminate, join_forest, ClusterTree, EvidenceMode, InteractionGraph, Propagation};
use crate::model::{InfluenceDiagram, Kind, VarId};
use crate::policy::{DecisionPolicy, Diagnostics, EvaluationResult};
use crate::transform::{belief_network, prepare, valuation_network, PreparedDiagram, TransformOptions, ValueEncoding};

/// Which clusters carry the value variable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ValuePlacement {
    /// Only the clusters between the value table and the root.
    #[default]
    RootPath,
    /// Every cluster.
    Everywhere,
}

/// Encoding of the value variable at the root.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OneDirectionalMode {
    /// Table rows `[1, v(a)]`; MEV is the ratio of the root entries.
    #[default]
    Valuation,
    /// Table rows `[1 - u(a), u(a)]`; MEU is the share of the `v = 1` entry.
    Rescaled,
}

#[derive(Clone, Debug)]
pub struct RootedClusterTree {
    /// Clusters with edges stored as (cluster, next cluster toward the root).
    pub tree: ClusterTree,
    /// Next cluster toward the root; `None` only at the root.
    pub toward_root: Vec<Option<usize>>,
    pub root: usize,
    /// Variables removed by the message leaving each cluster, in elimination order.
    pub eliminated: Vec<Vec<VarId>>,
    /// Live decisions in decision order with their designated cluster.
    pub decision_clusters: Vec<(VarId, usize)>,
    pub value: VarId,
    pub mode: OneDirectionalMode,
    pub placement: ValuePlacement,
    /// Chance and value tables with the evidence already sliced in.
    pub tables: Vec<Factor>,
    pub assignment: Vec<usize>,
    pub prepared: PreparedDiagram,
    scale: Option<(f64, f64)>,
}

/// Builds the rooted tree for a diagram and checks it.
pub fn build_one_directional_tree(
    d: &InfluenceDiagram,
    mode: OneDirectionalMode,
    placement: ValuePlacement,
) -> Result<RootedClusterTree> {
    let p = prepare(d, TransformOptions::default())?;
    RootedClusterTree::from_prepared(p, mode, placement)
}

impl RootedClusterTree {
    pub fn from_prepared(p: PreparedDiagram, mode: OneDirectionalMode, placement: ValuePlacement) -> Result<Self> {
        let net = match mode {
            OneDirectionalMode::Valuation => valuation_network(&p)?,
            OneDirectionalMode::Rescaled => belief_network(&p)?,
        };
        let scale = match net.encoding {
            ValueEncoding::Rescaled { min, max } => Some((min, max)),
            _ => None,
        };
        let value = net.value.expect("binary value node");
        let evidence = &p.diagram.evidence;
        let decision_tables: Vec<usize> = net.decision_tables.values().copied().collect();
        let tables: Vec<Factor> = net
            .network
            .tables
            .iter()
            .enumerate()
            .filter(|(i, _)| !decision_tables.contains(i))
            .map(|(_, t)| t.reduce_present(evidence))
            .collect::<Result<_>>()?;
        let decisions = net.decisions.clone();

        let mut graph = InteractionGraph::new();
        for &v in &net.network.variables {
            if !evidence.contains_key(&v) {
                graph.add_node(v);
            }
        }
        for t in &tables {
            graph.add_clique(t.scope());
        }
        for (dec, r) in &decisions {
            let mut family = r.clone();
            family.push(*dec);
            graph.add_clique(&family);
        }

        // chance variables grouped by the first decision that observes them
        let mut first_seen: BTreeMap<VarId, usize> = BTreeMap::new();
        for (i, (_, r)) in decisions.iter().enumerate() {
            for v in r {
                if p.diagram.kind(*v) == Kind::Chance {
                    first_seen.entry(*v).or_insert(i);
                }
            }
        }
        let chance: Vec<VarId> = graph.nodes().filter(|v| *v != value && p.diagram.kind(*v) == Kind::Chance).collect();
        let mut groups = vec![chance.iter().copied().filter(|v| !first_seen.contains_key(v)).collect::<Vec<_>>()];
        for (i, (dec, _)) in decisions.iter().enumerate().rev() {
            groups.push(vec![*dec]);
            groups.push(chance.iter().copied().filter(|v| first_seen.get(v) == Some(&i)).collect());
        }
        groups.push(vec![value]);
        let elim = eliminate(&graph, &groups);

        let blocks_merge: Vec<bool> = elim.order.iter().map(|v| *v == value || p.diagram.is_decision(*v)).collect();
        let (mut clusters, eliminated, parents) = join_forest(&elim, |_, parent| !blocks_merge[parent]);
        let root = eliminated
            .iter()
            .position(|e| e.contains(&value))
            .expect("value variable is eliminated last");
        let toward_root: Vec<Option<usize>> = parents
            .iter()
            .enumerate()
            .map(|(c, p)| if c == root { None } else { Some(p.unwrap_or(root)) })
            .collect();
        if placement == ValuePlacement::Everywhere {
            for c in &mut clusters {
                if !c.contains(&value) {
                    c.push(value);
                    c.sort();
                }
            }
        }
        let edges = toward_root.iter().enumerate().filter_map(|(c, p)| p.map(|p| (c, p))).collect();
        let tree = ClusterTree { clusters, edges, cards: net.network.cards.clone() };
        let decision_clusters = decisions
            .iter()
            .map(|(dec, _)| (*dec, eliminated.iter().position(|e| e.contains(dec)).expect("decision eliminated")))
            .collect();
        let assignment = tree.assign(&tables)?;
        let out = RootedClusterTree {
            tree,
            toward_root,
            root,
            eliminated,
            decision_clusters,
            value,
            mode,
            placement,
            tables,
            assignment,
            prepared: p,
            scale,
        };
        out.check()?;
        Ok(out)
    }

    fn fail(msg: String) -> Error {
        Error::OneDirectionalCheckFailed(msg)
    }

    /// Verifies the structural conditions the single pass depends on.
    pub fn check(&self) -> Result<()> {
        let clusters = &self.tree.clusters;
        let n = clusters.len();
        if !self.tree.is_tree() {
            return Err(Self::fail("clusters do not form a tree".into()));
        }
        // rooted: one outgoing edge per cluster except the root
        if self.toward_root.len() != n || self.toward_root[self.root].is_some() {
            return Err(Self::fail("root has an outgoing edge".into()));
        }
        for (c, p) in self.toward_root.iter().enumerate() {
            match p {
                None if c != self.root => return Err(Self::fail(format!("cluster {c} is a second root"))),
                Some(p) if !self.tree.edges.contains(&(c, *p)) => {
                    return Err(Self::fail(format!("edge {c}->{p} missing")))
                }
                _ => {}
            }
        }
        for c in 0..n {
            let mut x = c;
            let mut steps = 0;
            while let Some(p) = self.toward_root[x] {
                x = p;
                steps += 1;
                if steps > n {
                    return Err(Self::fail("directed cycle".into()));
                }
            }
        }
        if clusters[self.root].iter().any(|v| *v != self.value) {
            return Err(Self::fail(format!("root cluster {:?} holds more than the value", clusters[self.root])));
        }
        if !self.tree.has_running_intersection() {
            return Err(Self::fail("running intersection violated".into()));
        }
        for (t, &c) in self.tables.iter().zip(&self.assignment) {
            if !t.scope().iter().all(|v| clusters[c].contains(v)) {
                return Err(Self::fail(format!("table {:?} not covered by its cluster", t.scope())));
            }
        }
        for (c, p) in self.toward_root.iter().enumerate() {
            if let Some(p) = p {
                if clusters[c].contains(&self.value) && !clusters[*p].contains(&self.value) {
                    return Err(Self::fail(format!("value summed out between clusters {c} and {p}")));
                }
            }
        }
        let mut previous: Option<usize> = None;
        for &(dec, k) in self.decision_clusters.iter().rev() {
            let scope = self.prepared.scope_of(dec);
            let cluster = &clusters[k];
            if !cluster.contains(&dec) || !scope.iter().all(|v| cluster.contains(v)) {
                return Err(Self::fail(format!("cluster {k} misses the family of {dec:?}")));
            }
            let observed = self.prepared.information.get(&dec).cloned().unwrap_or_default();
            if let Some(v) = cluster.iter().find(|v| **v != dec && **v != self.value && !observed.contains(v)) {
                return Err(Self::fail(format!("cluster {k} of {dec:?} holds unobserved {v:?}")));
            }
            match self.toward_root[k] {
                Some(next) if clusters[next].contains(&dec) => {
                    return Err(Self::fail(format!("{dec:?} survives past its cluster {k}")))
                }
                None => return Err(Self::fail(format!("decision cluster {k} is the root"))),
                _ => {}
            }
            if let Some(later) = previous {
                let mut x = later;
                let mut found = false;
                while let Some(next) = self.toward_root[x] {
                    if next == k {
                        found = true;
                        break;
                    }
                    x = next;
                }
                if !found {
                    return Err(Self::fail(format!("cluster {k} of {dec:?} is not downstream of cluster {later}")));
                }
            }
            previous = Some(k);
        }
        Ok(())
    }

    /// Variables dropped on the way out of a cluster: decisions first, then
    /// chance variables in elimination order.
    fn dropped(&self, c: usize, scope: &[VarId]) -> Vec<VarId> {
        let next = self.toward_root[c].map_or(&[][..], |p| self.tree.clusters[p].as_slice());
        let mut out: Vec<VarId> = self.eliminated[c]
            .iter()
            .copied()
            .filter(|v| scope.contains(v) && !next.contains(v))
            .collect();
        for v in scope {
            if !next.contains(v) && !out.contains(v) {
                out.push(*v);
            }
        }
        out.sort_by_key(|v| !self.prepared.diagram.is_decision(*v));
        out
    }

    pub fn to_dot(&self) -> String {
        let name = |v: VarId| self.prepared.original.name(v).to_string();
        let mut out = String::from("digraph rooted_cluster_tree {\n");
        for (i, c) in self.tree.clusters.iter().enumerate() {
            let label: Vec<String> = c.iter().map(|v| name(*v)).collect();
            let shape = if i == self.root { "doubleoctagon" } else { "box" };
            let _ = writeln!(out, "  c{i} [shape={shape}, label=\"{}\"];", label.join(", "));
        }
        for (c, p) in self.toward_root.iter().enumerate() {
            if let Some(p) = p {
                let ops: Vec<String> = self
                    .dropped(c, &self.tree.clusters[c])
                    .into_iter()
                    .map(|v| {
                        let op = if self.prepared.diagram.is_decision(v) { "max" } else { "sum" };
                        format!("{op} {}", name(v))
                    })
                    .collect();
                let _ = writeln!(out, "  c{c} -> c{p} [label=\"{}\"];", ops.join(" then "));
            }
        }
        out.push_str("}\n");
        out
    }

    /// Clusters ordered so that each one comes after every cluster sending to
    /// it; ready clusters are taken lowest index first.
    pub fn leaves_first(&self) -> Vec<usize> {
        let n = self.tree.clusters.len();
        let mut waiting = vec![0usize; n];
        for p in self.toward_root.iter().flatten() {
            waiting[*p] += 1;
        }
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|c| waiting[*c] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(c) = ready.pop_first() {
            order.push(c);
            if let Some(p) = self.toward_root[c] {
                waiting[p] -= 1;
                if waiting[p] == 0 {
                    ready.insert(p);
                }
            }
        }
        order
    }

    fn initial_potential(&self, c: usize) -> Result<Factor> {
        let scope = self.tree.clusters[c].clone();
        let cards = scope.iter().map(|v| self.tree.cards[v.0]).collect();
        let mut f = Factor::ones(scope, cards);
        for (t, &a) in self.tables.iter().zip(&self.assignment) {
            if a == c {
                f = f.multiply(t)?;
            }
        }
        Ok(f)
    }
}

/// One elimination inside a message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MessageOp {
    Max(VarId),
    Sum(VarId),
}

#[derive(Clone, Debug)]
pub struct MessageTrace {
    pub from: usize,
    pub to: usize,
    pub ops: Vec<MessageOp>,
    pub message: Factor,
}

/// Everything a single pass produces.
#[derive(Clone, Debug)]
pub struct SinglePass {
    /// Root potential over the value variable.
    pub root: Factor,
    /// Potential at each decision cluster when its message was computed.
    pub decision_potentials: Vec<(VarId, Factor)>,
    /// Decision rules over each decision cluster minus the decision and the value.
    pub rules: Vec<DecisionPolicy>,
    pub messages: Vec<MessageTrace>,
}

/// Maximizes `decision` out of `psi`, choosing by the `value = 1` slice when
/// the value is in scope.
fn max_out(psi: &Factor, decision: VarId, value: VarId, mode: OneDirectionalMode) -> Result<(Factor, DecisionPolicy)> {
    let rest: Vec<VarId> = psi.scope().iter().copied().filter(|v| *v != decision && *v != value).collect();
    let rest_cards: Vec<usize> = rest.iter().map(|v| psi.cardinality_of(*v).expect("in scope")).collect();
    let alts = psi.cardinality_of(decision).expect("decision in scope");
    let carries = psi.contains(value);
    let mut order = rest.clone();
    order.push(decision);
    if carries {
        order.push(value);
    }
    let aligned = psi.permute(&order)?;
    let width = if carries { 2 } else { 1 };
    let mut out = Vec::new();
    let mut choices = Vec::new();
    let mut flagged = Vec::new();
    for block in aligned.values().chunks(alts * width) {
        let (score, mass): (Vec<f64>, Vec<f64>) = (0..alts)
            .map(|d| {
                let e = &block[d * width..(d + 1) * width];
                match (carries, mode) {
                    (false, _) => (e[0], e[0]),
                    (true, OneDirectionalMode::Valuation) => (e[1], e[0]),
                    (true, OneDirectionalMode::Rescaled) => (e[1], e[0] + e[1]),
                }
            })
            .unzip();
        let empty = mass.iter().all(|m| *m == 0.0);
        let best = if empty { 0 } else { argmax_first(score.iter().copied()).expect("alternatives") };
        choices.push(best);
        flagged.push(empty);
        out.extend_from_slice(&block[best * width..(best + 1) * width]);
    }
    let mut scope = rest.clone();
    let mut cards = rest_cards.clone();
    if carries {
        scope.push(value);
        cards.push(2);
    }
    let message = Factor::new(scope, cards, out, psi.semantics())?;
    let rule = DecisionPolicy { decision, scope: rest, scope_cards: rest_cards, choices, flagged };
    Ok((message, rule))
}

/// Runs the single pass: one message per edge from the leaves to the root.
pub fn single_pass_evaluate(tree: &RootedClusterTree) -> Result<SinglePass> {
    tree.check()?;
    let n = tree.tree.clusters.len();
    let mut inbox: Vec<Vec<Factor>> = vec![Vec::new(); n];
    let mut messages = Vec::new();
    let mut decision_potentials = Vec::new();
    let mut rules = Vec::new();
    let mut root = None;
    for c in tree.leaves_first() {
        let mut psi = tree.initial_potential(c)?;
        for m in std::mem::take(&mut inbox[c]) {
            psi = psi.multiply(&m)?;
        }
        let Some(to) = tree.toward_root[c] else {
            root = Some(psi);
            continue;
        };
        let mut ops = Vec::new();
        for v in tree.dropped(c, &tree.tree.clusters[c]) {
            if tree.prepared.diagram.is_decision(v) {
                decision_potentials.push((v, psi.clone()));
                let (next, rule) = max_out(&psi, v, tree.value, tree.mode)?;
                psi = next;
                rules.push(rule);
                ops.push(MessageOp::Max(v));
            } else {
                psi = psi.marginalize_sum(&[v])?;
                ops.push(MessageOp::Sum(v));
            }
        }
        inbox[to].push(psi.clone());
        messages.push(MessageTrace { from: c, to, ops, message: psi });
    }
    if messages.len() != tree.tree.edges.len() {
        return Err(RootedClusterTree::fail(format!(
            "{} messages for {} edges",
            messages.len(),
            tree.tree.edges.len()
        )));
    }
    let root = root.expect("tree has a root");
    let root = if root.contains(tree.value) { root.sum_onto(&[tree.value])? } else { root };
    Ok(SinglePass { root, decision_potentials, rules, messages })
}

/// Single pass plus recovery of the value and of policies over relevant information.
pub fn single_pass_solve(tree: &RootedClusterTree) -> Result<EvaluationResult> {
    let pass = single_pass_evaluate(tree)?;
    let (s0, s1) = match pass.root.values() {
        [a, b] => (*a, *b),
        other => return Err(RootedClusterTree::fail(format!("root potential {other:?} is not over the value"))),
    };
    let (meu, mev, evidence_probability) = match tree.mode {
        OneDirectionalMode::Valuation => {
            if s0 <= 0.0 {
                return Err(Error::ZeroEvidenceProbability);
            }
            (None, s1 / s0, s0)
        }
        OneDirectionalMode::Rescaled => {
            let z = s0 + s1;
            if z <= 0.0 {
                return Err(Error::ZeroEvidenceProbability);
            }
            let (min, max) = tree.scale.expect("rescaled tree keeps its scale");
            (Some(s1 / z), min + (max - min) * s1 / z, z)
        }
    };
    let mut notes = Vec::new();
    let rules = pass
        .rules
        .iter()
        .map(|rule| {
            let scope = tree.prepared.scope_of(rule.decision);
            rule.project(scope).unwrap_or_else(|| {
                notes.push(format!("policy for {:?} kept over its whole cluster", rule.decision));
                rule.clone()
            })
        })
        .collect();
    Ok(EvaluationResult {
        policy: tree.prepared.complete_policy(rules),
        meu,
        mev,
        evidence_probability,
        diagnostics: Diagnostics {
            backend: match tree.mode {
                OneDirectionalMode::Valuation => "onedir/valuation".into(),
                OneDirectionalMode::Rescaled => "onedir/rescaled".into(),
            },
            messages: pass.messages.len(),
            cluster_sizes: cluster_sizes(&tree.tree),
            merged_value_scope: tree.prepared.merged_value_scope.clone(),
            notes,
        },
    })
}

/// Builds the rooted tree and solves in one pass; constant values short-circuit.
pub fn solve_one_directional(
    d: &InfluenceDiagram,
    mode: OneDirectionalMode,
    placement: ValuePlacement,
) -> Result<EvaluationResult> {
    let p = prepare(d, TransformOptions::default())?;
    match RootedClusterTree::from_prepared(p.clone(), mode, placement) {
        Err(Error::DegenerateValue(_)) => degenerate_result(&p, "onedir/rescaled"),
        Err(e) => Err(e),
        Ok(tree) => single_pass_solve(&tree),
    }
}

/// Potential at a decision cluster after an ordinary sum-collect over the
/// whole tree, with the single-pass rules of all later decisions installed
/// as deterministic tables.
pub fn full_collect(tree: &RootedClusterTree, pass: &SinglePass, decision: VarId) -> Result<Factor> {
    let position = tree
        .decision_clusters
        .iter()
        .position(|(d, _)| *d == decision)
        .ok_or(Error::NotADecision(decision))?;
    let mut tables = tree.tables.clone();
    for (later, _) in &tree.decision_clusters[position + 1..] {
        let rule = pass.rules.iter().find(|r| r.decision == *later).expect("rule per decision");
        tables.push(rule.as_table(tree.tree.cards[later.0]));
    }
    let mut prop = Propagation::new(&tree.tree, tables, &Assignment::new(), EvidenceMode::Indicator)?;
    prop.collect(tree.decision_clusters[position].1)
}

/// Compares, for every decision, the single-pass choice with the argmax of
/// the full-collect potential at every information state with mass.
/// Returns the decisions where they differ by more than `tol` (relative).
pub fn partial_vs_full(tree: &RootedClusterTree, pass: &SinglePass, tol: f64) -> Result<Vec<VarId>> {
    let mut bad = Vec::new();
    for (dec, _) in &tree.decision_clusters {
        let full = full_collect(tree, pass, *dec)?;
        if !full.contains(tree.value) {
            // a decision that never meets the value cannot influence it
            continue;
        }
        let rule = pass.rules.iter().find(|r| r.decision == *dec).expect("rule per decision");
        let mut order = rule.scope.clone();
        order.push(*dec);
        order.push(tree.value);
        let aligned = full.permute(&order)?;
        let alts = tree.tree.cards[dec.0];
        let scale = aligned.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (i, (block, config)) in aligned.values().chunks(alts * 2).zip(Configurations::new(&rule.scope_cards)).enumerate() {
            let mass: f64 = match tree.mode {
                OneDirectionalMode::Valuation => (0..alts).map(|d| block[2 * d]).sum(),
                OneDirectionalMode::Rescaled => block.iter().sum(),
            };
            if mass <= tol * scale {
                continue;
            }
            let scores: Vec<f64> = (0..alts).map(|d| block[2 * d + 1]).collect();
            let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let picked = scores[rule.choice_at(&config)];
            debug_assert_eq!(rule.choice_at(&config), rule.choices[i]);
            if picked < best - tol * scale.max(1e-300) {
                bad.push(*dec);
                break;
            }
        }
    }
    Ok(bad)
}
