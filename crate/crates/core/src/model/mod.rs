//! Influence-diagram data model.
//!
//! Variables are addressed by a dense [`VarId`]. Graph surgery (pruning,
//! information-arc reduction) never renumbers variables: removed nodes are
//! recorded in [`InfluenceDiagram::pruned`] so that policies and factors keep
//! referring to the same ids as the source model.

mod graph;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

pub use graph::{
    ancestors, d_separated, d_separated_sets, dependent_values, descendants, prune, reachable,
    reduce_information, relevant_information, relevant_sets, remove_barren, topological_order,
};
pub use validate::{validate, Issue, IssueCode, ValidationReport};

use crate::error::{Error, Result};
use crate::factor::{Assignment, Factor, Semantics};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Chance,
    Decision,
    Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    /// Unique identifier.
    pub name: String,
    /// Display string.
    pub label: String,
    pub kind: Kind,
    /// Outcomes for chance variables, alternatives for decisions, empty for values.
    pub outcomes: Vec<String>,
}

impl Variable {
    pub fn cardinality(&self) -> usize {
        self.outcomes.len()
    }
}

/// How several local value nodes combine into the total value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Combination {
    #[default]
    None,
    Sum,
    Product,
}

/// A value node and its real-valued table over the value attributes.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueNode {
    pub var: VarId,
    pub table: Factor,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InfluenceDiagram {
    pub variables: Vec<Variable>,
    pub arcs: Vec<(VarId, VarId)>,
    /// Conditional tables with scope `parents ++ [variable]`.
    pub cpts: BTreeMap<VarId, Factor>,
    pub values: Vec<ValueNode>,
    pub combination: Combination,
    pub decision_order: Vec<VarId>,
    pub evidence: Assignment,
    pub pruned: BTreeSet<VarId>,
}

impl InfluenceDiagram {
    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn lookup(&self, name: &str) -> Result<VarId> {
        self.find(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.variables[id.0].name
    }

    pub fn contains(&self, id: VarId) -> bool {
        id.0 < self.variables.len() && !self.pruned.contains(&id)
    }

    pub fn check_var(&self, id: VarId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::UnknownVariable(format!("{id:?}")))
        }
    }

    pub fn kind(&self, id: VarId) -> Kind {
        self.variables[id.0].kind
    }

    pub fn is_decision(&self, id: VarId) -> bool {
        self.kind(id) == Kind::Decision
    }

    pub fn card(&self, id: VarId) -> usize {
        self.variables[id.0].cardinality()
    }

    /// Cardinalities indexed by variable id.
    pub fn cards(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
    }

    /// Live variable ids in id order.
    pub fn nodes(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.variables.len()).map(VarId).filter(|v| !self.pruned.contains(v))
    }

    pub fn nodes_of(&self, kind: Kind) -> Vec<VarId> {
        self.nodes().filter(|v| self.kind(*v) == kind).collect()
    }

    pub fn value_vars(&self) -> Vec<VarId> {
        self.values.iter().map(|v| v.var).collect()
    }

    /// Parents in arc insertion order.
    pub fn parents(&self, id: VarId) -> Vec<VarId> {
        self.arcs.iter().filter(|(_, c)| *c == id).map(|(p, _)| *p).collect()
    }

    pub fn children(&self, id: VarId) -> Vec<VarId> {
        self.arcs.iter().filter(|(p, _)| *p == id).map(|(_, c)| *c).collect()
    }

    pub fn has_arc(&self, from: VarId, to: VarId) -> bool {
        self.arcs.contains(&(from, to))
    }

    /// Information set of a decision: its parents, excluding evidence, sorted by id.
    pub fn information_set(&self, decision: VarId) -> Vec<VarId> {
        let mut out: Vec<VarId> = self
            .parents(decision)
            .into_iter()
            .filter(|p| !self.evidence.contains_key(p))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn value_node(&self, var: VarId) -> Option<&ValueNode> {
        self.values.iter().find(|v| v.var == var)
    }

    /// Adds the memory arcs implied by no-forgetting: every earlier decision
    /// and its parents become parents of each later decision.
    pub fn complete_no_forgetting(&mut self) {
        let order = self.decision_order.clone();
        for (j, &later) in order.iter().enumerate() {
            for &earlier in &order[..j] {
                let mut needed = self.parents(earlier);
                needed.push(earlier);
                for p in needed {
                    if p != later && !self.has_arc(p, later) {
                        self.arcs.push((p, later));
                    }
                }
            }
        }
    }

    /// Copy with each value table replaced by `alpha * v + beta` (per node).
    pub fn with_affine_values(&self, alpha: f64, beta: f64) -> InfluenceDiagram {
        let mut out = self.clone();
        for v in &mut out.values {
            v.table = v.table.map(|x| alpha * x + beta);
        }
        out
    }
}

/// Incremental construction of diagrams, mainly for fixtures and tests.
///
/// Table-setting methods add the implied arcs; nothing is validated until
/// [`validate`] is called on the result.
#[derive(Debug, Default)]
pub struct DiagramBuilder {
    diagram: InfluenceDiagram,
    pending: Vec<(VarId, Vec<VarId>, Vec<f64>, bool)>,
}

impl DiagramBuilder {
    pub fn new() -> Self {
        DiagramBuilder::default()
    }

    fn add(&mut self, name: &str, kind: Kind, outcomes: &[&str]) -> VarId {
        let id = VarId(self.diagram.variables.len());
        self.diagram.variables.push(Variable {
            name: name.to_string(),
            label: name.to_string(),
            kind,
            outcomes: outcomes.iter().map(|s| s.to_string()).collect(),
        });
        id
    }

    pub fn chance(&mut self, name: &str, outcomes: &[&str]) -> VarId {
        self.add(name, Kind::Chance, outcomes)
    }

    /// Adds a decision and appends it to the decision order.
    pub fn decision(&mut self, name: &str, alternatives: &[&str]) -> VarId {
        let id = self.add(name, Kind::Decision, alternatives);
        self.diagram.decision_order.push(id);
        id
    }

    pub fn value(&mut self, name: &str) -> VarId {
        self.add(name, Kind::Value, &[])
    }

    pub fn cardinality(&self, var: VarId) -> usize {
        self.diagram.card(var)
    }

    pub fn arc(&mut self, from: VarId, to: VarId) -> &mut Self {
        if !self.diagram.has_arc(from, to) {
            self.diagram.arcs.push((from, to));
        }
        self
    }

    pub fn informed_by(&mut self, decision: VarId, parents: &[VarId]) -> &mut Self {
        for &p in parents {
            self.arc(p, decision);
        }
        self
    }

    /// Conditional table in row-major order over `parents ++ [var]`.
    pub fn cpt(&mut self, var: VarId, parents: &[VarId], probabilities: &[f64]) -> &mut Self {
        for &p in parents {
            self.arc(p, var);
        }
        self.pending.push((var, parents.to_vec(), probabilities.to_vec(), false));
        self
    }

    /// Value table in row-major order over `attributes`.
    pub fn utility(&mut self, var: VarId, attributes: &[VarId], table: &[f64]) -> &mut Self {
        for &p in attributes {
            self.arc(p, var);
        }
        self.pending.push((var, attributes.to_vec(), table.to_vec(), true));
        self
    }

    pub fn combination(&mut self, c: Combination) -> &mut Self {
        self.diagram.combination = c;
        self
    }

    pub fn order(&mut self, decisions: &[VarId]) -> &mut Self {
        self.diagram.decision_order = decisions.to_vec();
        self
    }

    pub fn observe(&mut self, var: VarId, outcome: usize) -> &mut Self {
        self.diagram.evidence.insert(var, outcome);
        self
    }

    pub fn complete_no_forgetting(&mut self) -> &mut Self {
        self.diagram.complete_no_forgetting();
        self
    }

    pub fn build(mut self) -> Result<InfluenceDiagram> {
        let cards = self.diagram.cards();
        for (var, parents, table, is_value) in self.pending {
            let mut scope = parents.clone();
            if !is_value {
                scope.push(var);
            }
            let scope_cards = scope.iter().map(|v| cards[v.0]).collect();
            if is_value {
                let table = Factor::new(scope, scope_cards, table, Semantics::Utility)?;
                self.diagram.values.retain(|v| v.var != var);
                self.diagram.values.push(ValueNode { var, table });
            } else {
                let f = Factor::new(scope, scope_cards, table, Semantics::Probability)?;
                self.diagram.cpts.insert(var, f);
            }
        }
        Ok(self.diagram)
    }
}
