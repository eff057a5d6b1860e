//! JSON model and policy files.
//!
//! A model lists its variables, arcs, conditional tables and value tables by
//! name. Table axes follow the listed parent (or attribute) order with the
//! variable itself last for conditional tables, in row-major order. Loading
//! resolves names and shapes only; structural checks are left to
//! [`crate::model::validate`] so that a broken model can still be reported on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{Configurations, Factor, Semantics};
use crate::model::{Combination, InfluenceDiagram, Kind, ValueNode, VarId, Variable};
use crate::policy::{DecisionPolicy, EvaluationResult, Policy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindSpec {
    Chance,
    Decision,
    Value,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinationSpec {
    #[default]
    None,
    Sum,
    Product,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub id: String,
    pub kind: KindSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptSpec {
    pub variable: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub probabilities: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueSpec {
    pub variable: String,
    #[serde(default)]
    pub attributes: Vec<String>,
    pub table: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub variables: Vec<VariableSpec>,
    #[serde(default)]
    pub arcs: Vec<(String, String)>,
    #[serde(default)]
    pub cpts: Vec<CptSpec>,
    #[serde(default)]
    pub values: Vec<ValueSpec>,
    #[serde(default)]
    pub combination: CombinationSpec,
    /// Defaults to the order in which decisions are declared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_order: Option<Vec<String>>,
    /// Observed outcome by variable.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub evidence: BTreeMap<String, String>,
}

fn resolve(names: &BTreeMap<&str, VarId>, name: &str) -> Result<VarId> {
    names.get(name).copied().ok_or_else(|| Error::UnknownVariable(name.to_string()))
}

/// Outcome index by name, or by decimal index when no outcome has that name.
pub fn outcome_index(d: &InfluenceDiagram, var: VarId, outcome: &str) -> Result<usize> {
    let outcomes = &d.var(var).outcomes;
    if let Some(i) = outcomes.iter().position(|o| o == outcome) {
        return Ok(i);
    }
    match outcome.parse::<usize>() {
        Ok(i) if i < outcomes.len() => Ok(i),
        _ => Err(Error::InvalidArgument(format!("{} has no outcome {outcome:?}", d.name(var)))),
    }
}

impl ModelFile {
    pub fn to_diagram(&self) -> Result<InfluenceDiagram> {
        let mut d = InfluenceDiagram::default();
        let mut names = BTreeMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            if names.insert(v.id.as_str(), VarId(i)).is_some() {
                return Err(Error::Parse(format!("variable {} declared twice", v.id)));
            }
            d.variables.push(Variable {
                name: v.id.clone(),
                label: v.label.clone().unwrap_or_else(|| v.id.clone()),
                kind: match v.kind {
                    KindSpec::Chance => Kind::Chance,
                    KindSpec::Decision => Kind::Decision,
                    KindSpec::Value => Kind::Value,
                },
                outcomes: v.outcomes.clone(),
            });
        }
        let cards = d.cards();
        let add_arc = |d: &mut InfluenceDiagram, from: VarId, to: VarId| {
            if !d.has_arc(from, to) {
                d.arcs.push((from, to));
            }
        };
        for (from, to) in &self.arcs {
            let (from, to) = (resolve(&names, from)?, resolve(&names, to)?);
            add_arc(&mut d, from, to);
        }
        for c in &self.cpts {
            let var = resolve(&names, &c.variable)?;
            let mut scope = c.parents.iter().map(|p| resolve(&names, p)).collect::<Result<Vec<_>>>()?;
            for &p in &scope {
                add_arc(&mut d, p, var);
            }
            scope.push(var);
            let scope_cards = scope.iter().map(|v| cards[v.0]).collect();
            let table = Factor::new(scope, scope_cards, c.probabilities.clone(), Semantics::Probability)
                .map_err(|e| Error::Parse(format!("table of {}: {e}", c.variable)))?;
            if d.cpts.insert(var, table).is_some() {
                return Err(Error::Parse(format!("two tables for {}", c.variable)));
            }
        }
        for v in &self.values {
            let var = resolve(&names, &v.variable)?;
            let scope = v.attributes.iter().map(|p| resolve(&names, p)).collect::<Result<Vec<_>>>()?;
            for &p in &scope {
                add_arc(&mut d, p, var);
            }
            let scope_cards = scope.iter().map(|v| cards[v.0]).collect();
            let table = Factor::new(scope, scope_cards, v.table.clone(), Semantics::Utility)
                .map_err(|e| Error::Parse(format!("table of {}: {e}", v.variable)))?;
            if d.values.iter().any(|x| x.var == var) {
                return Err(Error::Parse(format!("two tables for {}", v.variable)));
            }
            d.values.push(ValueNode { var, table });
        }
        d.combination = match self.combination {
            CombinationSpec::None => Combination::None,
            CombinationSpec::Sum => Combination::Sum,
            CombinationSpec::Product => Combination::Product,
        };
        d.decision_order = match &self.decision_order {
            Some(order) => order.iter().map(|n| resolve(&names, n)).collect::<Result<_>>()?,
            None => d.nodes_of(Kind::Decision),
        };
        for (name, outcome) in &self.evidence {
            let var = resolve(&names, name)?;
            let i = outcome_index(&d, var, outcome)?;
            d.evidence.insert(var, i);
        }
        Ok(d)
    }

    pub fn from_diagram(d: &InfluenceDiagram) -> ModelFile {
        let name = |v: &VarId| d.name(*v).to_string();
        let variables = d
            .variables
            .iter()
            .map(|v| VariableSpec {
                id: v.name.clone(),
                kind: match v.kind {
                    Kind::Chance => KindSpec::Chance,
                    Kind::Decision => KindSpec::Decision,
                    Kind::Value => KindSpec::Value,
                },
                outcomes: v.outcomes.clone(),
                label: (v.label != v.name).then(|| v.label.clone()),
            })
            .collect();
        let cpts = d
            .cpts
            .iter()
            .map(|(var, t)| CptSpec {
                variable: name(var),
                parents: t.scope()[..t.scope().len() - 1].iter().map(name).collect(),
                probabilities: t.values().to_vec(),
            })
            .collect();
        let values = d
            .values
            .iter()
            .map(|v| ValueSpec {
                variable: name(&v.var),
                attributes: v.table.scope().iter().map(name).collect(),
                table: v.table.values().to_vec(),
            })
            .collect();
        // arcs implied by tables are left out
        let arcs = d
            .arcs
            .iter()
            .filter(|(p, c)| match d.kind(*c) {
                Kind::Decision => true,
                Kind::Chance => !d.cpts.get(c).is_some_and(|t| t.contains(*p)),
                Kind::Value => !d.value_node(*c).is_some_and(|v| v.table.contains(*p)),
            })
            .map(|(p, c)| (name(p), name(c)))
            .collect();
        ModelFile {
            variables,
            arcs,
            cpts,
            values,
            combination: match d.combination {
                Combination::None => CombinationSpec::None,
                Combination::Sum => CombinationSpec::Sum,
                Combination::Product => CombinationSpec::Product,
            },
            decision_order: Some(d.decision_order.iter().map(name).collect()),
            evidence: d.evidence.iter().map(|(v, i)| (name(v), d.var(*v).outcomes[*i].clone())).collect(),
        }
    }
}

pub fn parse_model(text: &str) -> Result<InfluenceDiagram> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_diagram()
}

pub fn load_model(path: &std::path::Path) -> Result<InfluenceDiagram> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

pub fn model_to_json(d: &InfluenceDiagram) -> String {
    let mut s = serde_json::to_string_pretty(&ModelFile::from_diagram(d)).expect("model serializes");
    s.push('\n');
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRuleSpec {
    pub decision: String,
    pub scope: Vec<String>,
    /// Chosen alternative per scope configuration, row-major over `scope`.
    pub choices: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence_probability: Option<f64>,
    pub decisions: Vec<DecisionRuleSpec>,
}

impl PolicyFile {
    pub fn from_policy(d: &InfluenceDiagram, policy: &Policy) -> PolicyFile {
        let decisions = policy
            .decisions
            .iter()
            .map(|r| DecisionRuleSpec {
                decision: d.name(r.decision).to_string(),
                scope: r.scope.iter().map(|v| d.name(*v).to_string()).collect(),
                choices: r.choices.iter().map(|c| d.var(r.decision).outcomes[*c].clone()).collect(),
            })
            .collect();
        PolicyFile { method: None, mev: None, meu: None, evidence_probability: None, decisions }
    }

    pub fn from_result(d: &InfluenceDiagram, result: &EvaluationResult) -> PolicyFile {
        PolicyFile {
            method: Some(result.diagnostics.backend.clone()),
            mev: Some(result.mev),
            meu: result.meu,
            evidence_probability: Some(result.evidence_probability),
            ..PolicyFile::from_policy(d, &result.policy)
        }
    }

    pub fn to_policy(&self, d: &InfluenceDiagram) -> Result<Policy> {
        let mut decisions = Vec::new();
        for rule in &self.decisions {
            let decision = d.lookup(&rule.decision)?;
            if !d.is_decision(decision) {
                return Err(Error::NotADecision(decision));
            }
            let scope = rule.scope.iter().map(|n| d.lookup(n)).collect::<Result<Vec<_>>>()?;
            let scope_cards: Vec<usize> = scope.iter().map(|v| d.card(*v)).collect();
            let rows = Configurations::new(&scope_cards).count();
            if rows != rule.choices.len() {
                return Err(Error::Parse(format!(
                    "policy for {} has {} choices for {rows} configurations",
                    rule.decision,
                    rule.choices.len()
                )));
            }
            let choices = rule.choices.iter().map(|c| outcome_index(d, decision, c)).collect::<Result<Vec<_>>>()?;
            decisions.push(DecisionPolicy { decision, scope, scope_cards, flagged: vec![false; rows], choices });
        }
        Ok(Policy { decisions })
    }
}

pub fn policy_to_json(file: &PolicyFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("policy serializes");
    s.push('\n');
    s
}

pub fn parse_policy(text: &str) -> Result<PolicyFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}
