//! Decision policies and solver results.

use crate::error::{Error, Result};
use crate::factor::{linear_index, Assignment, Configurations, Factor, Semantics};
use crate::model::{InfluenceDiagram, VarId};

/// Deterministic decision rule: one alternative per configuration of the scope.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionPolicy {
    pub decision: VarId,
    pub scope: Vec<VarId>,
    pub scope_cards: Vec<usize>,
    /// Alternative index per scope configuration, row-major over `scope`.
    pub choices: Vec<usize>,
    /// Configurations whose choice was arbitrary because they carry no mass.
    pub flagged: Vec<bool>,
}

impl DecisionPolicy {
    /// Policy that always picks alternative 0.
    pub fn constant(decision: VarId, scope: Vec<VarId>, scope_cards: Vec<usize>) -> Self {
        let n = scope_cards.iter().product();
        DecisionPolicy { decision, scope, scope_cards, choices: vec![0; n], flagged: vec![false; n] }
    }

    pub fn choice_at(&self, config: &[usize]) -> usize {
        self.choices[linear_index(&self.scope_cards, config)]
    }

    /// Choice for an assignment that covers the scope.
    pub fn choose(&self, assignment: &Assignment) -> Result<usize> {
        let mut config = Vec::with_capacity(self.scope.len());
        for v in &self.scope {
            config.push(*assignment.get(v).ok_or(Error::VarNotInScope(*v))?);
        }
        Ok(self.choice_at(&config))
    }

    /// The rule as a conditional table over `scope ++ [decision]`.
    pub fn as_table(&self, alternatives: usize) -> Factor {
        let mut scope = self.scope.clone();
        scope.push(self.decision);
        let mut cards = self.scope_cards.clone();
        cards.push(alternatives);
        Factor::from_fn(scope, cards, Semantics::Probability, |idx| {
            let (d, r) = idx.split_last().expect("decision axis");
            if self.choice_at(r) == *d {
                1.0
            } else {
                0.0
            }
        })
        .expect("policy table is well formed")
    }

    /// Rule over a smaller scope, if the choice never depends on the dropped variables.
    pub fn project(&self, keep: &[VarId]) -> Option<DecisionPolicy> {
        let pos: Vec<usize> = keep.iter().map(|v| self.scope.iter().position(|s| s == v)).collect::<Option<_>>()?;
        let cards: Vec<usize> = pos.iter().map(|&p| self.scope_cards[p]).collect();
        let n: usize = cards.iter().product();
        let mut choices: Vec<Option<usize>> = vec![None; n];
        let mut flagged = vec![true; n];
        for (i, config) in Configurations::new(&self.scope_cards).enumerate() {
            let sub: Vec<usize> = pos.iter().map(|&p| config[p]).collect();
            let j = linear_index(&cards, &sub);
            if self.flagged[i] {
                continue;
            }
            flagged[j] = false;
            match choices[j] {
                None => choices[j] = Some(self.choices[i]),
                Some(c) if c != self.choices[i] => return None,
                _ => {}
            }
        }
        Some(DecisionPolicy {
            decision: self.decision,
            scope: keep.to_vec(),
            scope_cards: cards,
            choices: choices.into_iter().map(|c| c.unwrap_or(0)).collect(),
            flagged,
        })
    }
}

/// One rule per decision, in decision order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Policy {
    pub decisions: Vec<DecisionPolicy>,
}

impl Policy {
    pub fn get(&self, decision: VarId) -> Option<&DecisionPolicy> {
        self.decisions.iter().find(|p| p.decision == decision)
    }

    /// Checks that every decision of the diagram has a rule with a well-formed table.
    pub fn check(&self, d: &InfluenceDiagram) -> Result<()> {
        for &dec in &d.decision_order {
            let p = self.get(dec).ok_or(Error::IncompletePolicy(dec))?;
            let expected: usize = p.scope_cards.iter().product();
            if p.choices.len() != expected || p.scope.len() != p.scope_cards.len() {
                return Err(Error::ShapeMismatch { expected, got: p.choices.len() });
            }
            for (v, c) in p.scope.iter().zip(&p.scope_cards) {
                d.check_var(*v)?;
                if d.card(*v) != *c {
                    return Err(Error::CardinalityMismatch { var: *v, left: d.card(*v), right: *c });
                }
            }
            if let Some(&bad) = p.choices.iter().find(|c| **c >= d.card(dec)) {
                return Err(Error::IndexOutOfRange { var: dec, index: bad, cardinality: d.card(dec) });
            }
        }
        Ok(())
    }
}

/// Bookkeeping reported by a solver.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub backend: String,
    pub messages: usize,
    pub cluster_sizes: Vec<usize>,
    /// Attributes of the merged value node, when local values were merged.
    pub merged_value_scope: Option<Vec<VarId>>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationResult {
    pub policy: Policy,
    /// Maximal expected utility on the rescaled `[0, 1]` scale, when the solver used it.
    pub meu: Option<f64>,
    /// Maximal expected value in the units of the value table.
    pub mev: f64,
    pub evidence_probability: f64,
    pub diagnostics: Diagnostics,
}
