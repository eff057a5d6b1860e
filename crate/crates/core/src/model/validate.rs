use std::collections::BTreeSet;
use std::fmt;

use super::graph::{descendants, topological_order};
use super::{Combination, InfluenceDiagram, Kind, VarId};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IssueCode {
    UnknownVariable,
    DuplicateName,
    DuplicateOutcome,
    EmptyOutcomes,
    ValueHasOutcomes,
    Cycle,
    MissingCpt,
    UnexpectedCpt,
    CptScopeMismatch,
    CptNotNormalized,
    NegativeProbability,
    NonFinite,
    NoValueNode,
    MissingValueTable,
    ValueScopeMismatch,
    ValueHasChildren,
    MultipleValuesWithoutCombination,
    NegativeProductFactor,
    DecisionOrderIncomplete,
    DecisionOrderInconsistent,
    NoForgetting,
    EvidenceNotChance,
    EvidenceOutOfRange,
    EvidenceAfterDecision,
    IrrelevantDecision,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        use IssueCode::*;
        match self {
            UnknownVariable => "UNKNOWN_VARIABLE",
            DuplicateName => "DUPLICATE_NAME",
            DuplicateOutcome => "DUPLICATE_OUTCOME",
            EmptyOutcomes => "EMPTY_OUTCOMES",
            ValueHasOutcomes => "VALUE_HAS_OUTCOMES",
            Cycle => "CYCLE",
            MissingCpt => "MISSING_CPT",
            UnexpectedCpt => "UNEXPECTED_CPT",
            CptScopeMismatch => "CPT_SCOPE_MISMATCH",
            CptNotNormalized => "CPT_NOT_NORMALIZED",
            NegativeProbability => "NEGATIVE_PROBABILITY",
            NonFinite => "NON_FINITE",
            NoValueNode => "NO_VALUE_NODE",
            MissingValueTable => "MISSING_VALUE_TABLE",
            ValueScopeMismatch => "VALUE_SCOPE_MISMATCH",
            ValueHasChildren => "VALUE_HAS_CHILDREN",
            MultipleValuesWithoutCombination => "MULTIPLE_VALUES_WITHOUT_COMBINATION",
            NegativeProductFactor => "NEGATIVE_FACTOR",
            DecisionOrderIncomplete => "DECISION_ORDER_INCOMPLETE",
            DecisionOrderInconsistent => "DECISION_ORDER_INCONSISTENT",
            NoForgetting => "NO_FORGETTING",
            EvidenceNotChance => "EVIDENCE_NOT_CHANCE",
            EvidenceOutOfRange => "EVIDENCE_OUT_OF_RANGE",
            EvidenceAfterDecision => "EVIDENCE_AFTER_DECISION",
            IrrelevantDecision => "IRRELEVANT_DECISION",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Issue {
    pub code: IssueCode,
    pub message: String,
    pub ids: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.errors.iter().any(|i| i.code == code)
    }

    fn error(&mut self, code: IssueCode, message: impl Into<String>, ids: Vec<String>) {
        self.errors.push(Issue { code, message: message.into(), ids });
    }

    fn warn(&mut self, code: IssueCode, message: impl Into<String>, ids: Vec<String>) {
        self.warnings.push(Issue { code, message: message.into(), ids });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (tag, list) in [("error", &self.errors), ("warning", &self.warnings)] {
            for i in list {
                if i.ids.is_empty() {
                    writeln!(f, "{tag} {}: {}", i.code, i.message)?;
                } else {
                    writeln!(f, "{tag} {}: {} [{}]", i.code, i.message, i.ids.join(", "))?;
                }
            }
        }
        Ok(())
    }
}

/// Nodes left after repeatedly removing nodes with no remaining parents or
/// no remaining children: the cycles and whatever links them.
fn cyclic_core(d: &InfluenceDiagram) -> Vec<VarId> {
    let mut left: Vec<VarId> = d.nodes().collect();
    loop {
        let arcs: Vec<&(VarId, VarId)> = d.arcs.iter().filter(|(p, c)| left.contains(p) && left.contains(c)).collect();
        let before = left.len();
        left.retain(|v| arcs.iter().any(|(_, c)| c == v) && arcs.iter().any(|(p, _)| p == v));
        if left.len() == before {
            return left;
        }
    }
}

pub fn validate(d: &InfluenceDiagram) -> ValidationReport {
    let mut r = ValidationReport::default();
    let n = d.variables.len();
    let name = |v: VarId| -> String { d.variables.get(v.0).map_or_else(|| format!("#{}", v.0), |x| x.name.clone()) };

    // references
    let mut dangling = false;
    for &(p, c) in &d.arcs {
        for v in [p, c] {
            if v.0 >= n {
                r.error(IssueCode::UnknownVariable, "arc refers to an unknown variable", vec![name(v)]);
                dangling = true;
            }
        }
    }
    for v in d.cpts.keys().chain(d.decision_order.iter()).chain(d.evidence.keys()) {
        if v.0 >= n {
            r.error(IssueCode::UnknownVariable, "reference to an unknown variable", vec![name(*v)]);
            dangling = true;
        }
    }
    for v in &d.values {
        if v.var.0 >= n || v.table.scope().iter().any(|a| a.0 >= n) {
            r.error(IssueCode::UnknownVariable, "value table refers to an unknown variable", vec![name(v.var)]);
            dangling = true;
        }
    }
    if dangling {
        return r;
    }

    // variables
    let mut seen = BTreeSet::new();
    for v in d.nodes() {
        let var = d.var(v);
        if !seen.insert(var.name.as_str()) {
            r.error(IssueCode::DuplicateName, "variable name is not unique", vec![var.name.clone()]);
        }
        match var.kind {
            Kind::Value if !var.outcomes.is_empty() => {
                r.error(IssueCode::ValueHasOutcomes, "value variables carry a table, not outcomes", vec![var.name.clone()])
            }
            Kind::Chance | Kind::Decision if var.outcomes.is_empty() => {
                r.error(IssueCode::EmptyOutcomes, "variable needs at least one outcome", vec![var.name.clone()])
            }
            _ => {}
        }
        let labels: BTreeSet<&str> = var.outcomes.iter().map(String::as_str).collect();
        if labels.len() != var.outcomes.len() {
            r.error(IssueCode::DuplicateOutcome, "outcome labels must be unique", vec![var.name.clone()]);
        }
    }

    let acyclic = topological_order(d).is_some();
    if !acyclic {
        let ids = cyclic_core(d).into_iter().map(name).collect();
        r.error(IssueCode::Cycle, "arcs contain a directed cycle", ids);
    }

    // chance tables
    for v in d.nodes() {
        let kind = d.kind(v);
        let cpt = d.cpts.get(&v);
        match (kind, cpt) {
            (Kind::Chance, None) => r.error(IssueCode::MissingCpt, "chance variable has no table", vec![name(v)]),
            (Kind::Decision | Kind::Value, Some(_)) => {
                r.error(IssueCode::UnexpectedCpt, "only chance variables carry probability tables", vec![name(v)])
            }
            (Kind::Chance, Some(f)) => {
                let parents: BTreeSet<VarId> = d.parents(v).into_iter().collect();
                let scope = f.scope();
                let scope_parents: BTreeSet<VarId> = scope[..scope.len().saturating_sub(1)].iter().copied().collect();
                let cards_ok = scope.iter().zip(f.cards()).all(|(s, c)| d.card(*s) == *c);
                if scope.last() != Some(&v) || scope_parents != parents || scope_parents.len() + 1 != scope.len() || !cards_ok {
                    r.error(IssueCode::CptScopeMismatch, "table scope must be the parents followed by the variable", vec![name(v)]);
                    continue;
                }
                if f.values().iter().any(|x| !x.is_finite()) {
                    r.error(IssueCode::NonFinite, "table has non-finite entries", vec![name(v)]);
                    continue;
                }
                if f.values().iter().any(|x| *x < 0.0) {
                    r.error(IssueCode::NegativeProbability, "table has negative probabilities", vec![name(v)]);
                }
                let card = d.card(v);
                for (row, chunk) in f.values().chunks(card).enumerate() {
                    let s: f64 = chunk.iter().sum();
                    if (s - 1.0).abs() > NORMALIZATION_TOLERANCE {
                        r.error(
                            IssueCode::CptNotNormalized,
                            format!("row {row} sums to {s}"),
                            vec![name(v)],
                        );
                        break;
                    }
                }
            }
            _ => {}
        }
    }

    // value nodes
    let value_vars = d.nodes_of(Kind::Value);
    if value_vars.is_empty() {
        r.error(IssueCode::NoValueNode, "diagram has no value node", Vec::new());
    }
    if value_vars.len() > 1 && d.combination == Combination::None {
        r.error(
            IssueCode::MultipleValuesWithoutCombination,
            "several value nodes need a sum or product combination",
            value_vars.iter().map(|v| name(*v)).collect(),
        );
    }
    for &v in &value_vars {
        if !d.children(v).is_empty() {
            r.error(IssueCode::ValueHasChildren, "value nodes must be sinks", vec![name(v)]);
        }
        let Some(node) = d.value_node(v) else {
            r.error(IssueCode::MissingValueTable, "value node has no table", vec![name(v)]);
            continue;
        };
        let parents: BTreeSet<VarId> = d.parents(v).into_iter().collect();
        let scope: BTreeSet<VarId> = node.table.scope().iter().copied().collect();
        let cards_ok = node.table.scope().iter().zip(node.table.cards()).all(|(s, c)| d.card(*s) == *c);
        if parents != scope || !cards_ok {
            r.error(IssueCode::ValueScopeMismatch, "value table scope must equal the value node's parents", vec![name(v)]);
        }
        if node.table.values().iter().any(|x| !x.is_finite()) {
            r.error(IssueCode::NonFinite, "value table has non-finite entries", vec![name(v)]);
        }
        if d.combination == Combination::Product && node.table.values().iter().any(|x| *x < 0.0) {
            r.error(IssueCode::NegativeProductFactor, "product combination needs nonnegative local values", vec![name(v)]);
        }
    }

    // decisions
    let decisions = d.nodes_of(Kind::Decision);
    let order_set: BTreeSet<VarId> = d.decision_order.iter().copied().collect();
    if order_set.len() != d.decision_order.len()
        || order_set != decisions.iter().copied().collect()
        || d.decision_order.iter().any(|v| d.kind(*v) != Kind::Decision)
    {
        r.error(
            IssueCode::DecisionOrderIncomplete,
            "decision order must list every decision exactly once",
            d.decision_order.iter().map(|v| name(*v)).collect(),
        );
    } else if acyclic {
        for (i, &earlier) in d.decision_order.iter().enumerate() {
            let below = descendants(d, earlier);
            for &later in &d.decision_order[..i] {
                if below.contains(&later) {
                    r.error(
                        IssueCode::DecisionOrderInconsistent,
                        "decision order contradicts the arcs",
                        vec![name(later), name(earlier)],
                    );
                }
            }
        }
        for (j, &later) in d.decision_order.iter().enumerate() {
            let parents = d.parents(later);
            for &earlier in &d.decision_order[..j] {
                let mut needed = d.parents(earlier);
                needed.push(earlier);
                for p in needed {
                    if !parents.contains(&p) && !d.evidence.contains_key(&p) {
                        r.error(
                            IssueCode::NoForgetting,
                            "a later decision must observe earlier decisions and their information",
                            vec![name(p), name(later)],
                        );
                    }
                }
            }
        }
    }

    // evidence
    for (&v, &i) in &d.evidence {
        if !d.contains(v) {
            continue;
        }
        if d.kind(v) != Kind::Chance {
            r.error(IssueCode::EvidenceNotChance, "only chance variables can be observed", vec![name(v)]);
        } else if i >= d.card(v) {
            r.error(IssueCode::EvidenceOutOfRange, format!("outcome index {i} out of range"), vec![name(v)]);
        }
    }
    if acyclic {
        for &dec in &decisions {
            let below = descendants(d, dec);
            for v in d.evidence.keys() {
                if below.contains(v) {
                    r.error(
                        IssueCode::EvidenceAfterDecision,
                        "evidence cannot depend on a decision",
                        vec![name(*v), name(dec)],
                    );
                }
            }
        }
        for &dec in &decisions {
            let below = descendants(d, dec);
            if !value_vars.iter().any(|v| below.contains(v)) {
                r.warn(IssueCode::IrrelevantDecision, "decision cannot affect any value node", vec![name(dec)]);
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fixtures_are_valid() {
        for d in [
            fixtures::umbrella(),
            fixtures::umbrella_tv(),
            fixtures::mdp(2, Combination::Sum, 1),
            fixtures::mdp(3, Combination::Product, 2),
        ] {
            let r = validate(&d);
            assert!(r.is_ok(), "{r}");
        }
    }

    #[test]
    fn cycle_is_reported() {
        let mut d = fixtures::umbrella();
        let w = d.lookup("weather").unwrap();
        let f = d.lookup("forecast").unwrap();
        d.arcs.push((f, w));
        let report = validate(&d);
        assert!(report.has(IssueCode::Cycle));
        let cycle = report.errors.iter().find(|i| i.code == IssueCode::Cycle).unwrap();
        assert_eq!(cycle.ids, vec!["weather", "forecast"]);
    }

    #[test]
    fn unnormalized_row_is_reported() {
        let mut d = fixtures::umbrella();
        let w = d.lookup("weather").unwrap();
        d.cpts.get_mut(&w).unwrap().values_mut().copy_from_slice(&[0.6, 0.3]);
        assert!(validate(&d).has(IssueCode::CptNotNormalized));
    }

    #[test]
    fn no_forgetting_is_enforced() {
        let mut d = fixtures::umbrella_tv();
        let tv = d.lookup("tv_station").unwrap();
        let b = d.lookup("bring_umbrella").unwrap();
        d.arcs.retain(|a| *a != (tv, b));
        assert!(validate(&d).has(IssueCode::NoForgetting));
        d.complete_no_forgetting();
        assert!(validate(&d).is_ok());
    }

    #[test]
    fn evidence_rules() {
        let mut d = fixtures::umbrella();
        let b = d.lookup("bring_umbrella").unwrap();
        d.evidence.insert(b, 0);
        assert!(validate(&d).has(IssueCode::EvidenceNotChance));

        let mut d = fixtures::umbrella();
        let f = d.lookup("forecast").unwrap();
        d.evidence.insert(f, 5);
        assert!(validate(&d).has(IssueCode::EvidenceOutOfRange));
    }

    #[test]
    fn value_rules() {
        let mut d = fixtures::mdp(2, Combination::Sum, 1);
        d.combination = Combination::None;
        assert!(validate(&d).has(IssueCode::MultipleValuesWithoutCombination));

        let mut d = fixtures::mdp(2, Combination::Product, 1);
        d.values[0].table.values_mut()[0] = -1.0;
        assert!(validate(&d).has(IssueCode::NegativeProductFactor));
    }
}
