//! Conversions from an influence diagram to the networks the solvers consume.
//!
//! Every solver starts from [`prepare`], which validates the diagram, trims
//! each decision's information arcs to its relevant set, merges separable
//! values when asked to, and removes barren nodes. The prepared diagram is
//! then encoded in one of three ways: decisions become chance nodes with a
//! uniform table over their relevant information, and the value becomes a
//! rescaled binary utility, a valuation, or a plain likelihood factor.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::factor::{Assignment, Factor, Semantics};
use crate::inference::Network;
use crate::model::{
    reduce_information, relevant_sets, remove_barren, validate, Combination, InfluenceDiagram, Kind, ValueNode,
    VarId,
};
use crate::policy::{DecisionPolicy, Policy};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransformOptions {
    /// Keep every information arc instead of reducing to relevant information.
    pub full_information: bool,
    /// Merge local value nodes into one.
    pub merge_values: bool,
    /// Drop childless nodes that are neither values nor evidence.
    pub remove_barren: bool,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions { full_information: false, merge_values: true, remove_barren: true }
    }
}

/// A validated diagram ready for a solver.
#[derive(Clone, Debug)]
pub struct PreparedDiagram {
    pub original: InfluenceDiagram,
    /// Reduced information arcs, merged values (when requested), no barren nodes.
    pub diagram: InfluenceDiagram,
    /// Policy scope of every decision of the original, in decision order.
    pub relevant: Vec<(VarId, Vec<VarId>)>,
    /// Information sets of the original, evidence excluded.
    pub information: BTreeMap<VarId, Vec<VarId>>,
    pub merged_value_scope: Option<Vec<VarId>>,
}

impl PreparedDiagram {
    /// Decisions still present after pruning, with their policy scopes.
    pub fn live_decisions(&self) -> Vec<(VarId, Vec<VarId>)> {
        self.relevant.iter().filter(|(d, _)| self.diagram.contains(*d)).cloned().collect()
    }

    pub fn scope_of(&self, decision: VarId) -> &[VarId] {
        self.relevant
            .iter()
            .find(|(d, _)| *d == decision)
            .map_or(&[], |(_, r)| r.as_slice())
    }

    /// The only value node; callers ensure values were merged.
    pub fn value(&self) -> &ValueNode {
        &self.diagram.values[0]
    }

    /// Orders solver rules by decision and fills pruned decisions with alternative 0.
    pub fn complete_policy(&self, mut rules: Vec<DecisionPolicy>) -> Policy {
        let mut out = Vec::new();
        for (dec, scope) in &self.relevant {
            match rules.iter().position(|r| r.decision == *dec) {
                Some(i) => out.push(rules.swap_remove(i)),
                None => {
                    let cards = scope.iter().map(|v| self.original.card(*v)).collect();
                    out.push(DecisionPolicy::constant(*dec, scope.clone(), cards));
                }
            }
        }
        Policy { decisions: out }
    }
}

pub fn check_valid(d: &InfluenceDiagram) -> Result<()> {
    let report = validate(d);
    if report.is_ok() {
        Ok(())
    } else {
        Err(Error::InvalidDiagram(report.to_string()))
    }
}

pub fn prepare(d: &InfluenceDiagram, options: TransformOptions) -> Result<PreparedDiagram> {
    check_valid(d)?;
    let information: BTreeMap<VarId, Vec<VarId>> =
        d.decision_order.iter().map(|&dec| (dec, d.information_set(dec))).collect();
    let sets = if options.full_information {
        information.clone()
    } else if d.combination == Combination::Product && d.values.len() > 1 {
        // products are not additive across value nodes, so relevance is
        // judged against the merged value
        relevant_sets(&merge_values(d)?)?
    } else {
        relevant_sets(d)?
    };
    let mut diagram = reduce_information(d, &sets);
    let mut merged_value_scope = None;
    if options.merge_values && diagram.values.len() > 1 {
        diagram = merge_values(&diagram)?;
        merged_value_scope = Some(diagram.values[0].table.scope().to_vec());
    }
    if options.remove_barren {
        let targets = diagram.value_vars();
        diagram = remove_barren(&diagram, &targets);
    }
    let relevant = d.decision_order.iter().map(|dec| (*dec, sets[dec].clone())).collect();
    Ok(PreparedDiagram { original: d.clone(), diagram, relevant, information, merged_value_scope })
}

/// Replaces the local value nodes by one node whose table is their sum or
/// product over the union of their attributes. The first value node keeps
/// its id; the others are marked as pruned.
pub fn merge_values(d: &InfluenceDiagram) -> Result<InfluenceDiagram> {
    if d.values.len() <= 1 {
        return Ok(d.clone());
    }
    let combination = d.combination;
    if combination == Combination::None {
        return Err(Error::MultipleValues);
    }
    if combination == Combination::Product {
        if let Some(v) = d.values.iter().find(|v| v.table.values().iter().any(|x| *x < 0.0)) {
            return Err(Error::NegativeFactor(d.name(v.var).to_string()));
        }
    }
    let mut scope: Vec<VarId> = Vec::new();
    let mut cards = Vec::new();
    for v in &d.values {
        for (s, c) in v.table.scope().iter().zip(v.table.cards()) {
            if !scope.contains(s) {
                scope.push(*s);
                cards.push(*c);
            }
        }
    }
    let mut merged = match combination {
        Combination::Product => Factor::constant(scope.clone(), cards.clone(), 1.0, Semantics::Utility),
        _ => Factor::constant(scope.clone(), cards.clone(), 0.0, Semantics::Utility),
    };
    for v in &d.values {
        let wide = v.table.broadcast(&scope, &cards)?;
        for (m, x) in merged.values_mut().iter_mut().zip(wide.values()) {
            match combination {
                Combination::Product => *m *= x,
                _ => *m += x,
            }
        }
    }
    let keep = d.values[0].var;
    let gone: Vec<VarId> = d.values[1..].iter().map(|v| v.var).collect();
    let mut out = d.clone();
    out.arcs.retain(|(_, c)| *c != keep && !gone.contains(c));
    for &s in &scope {
        out.arcs.push((s, keep));
    }
    out.values = vec![ValueNode { var: keep, table: merged }];
    out.pruned.extend(gone);
    out.combination = Combination::None;
    let names: Vec<&str> = d.values.iter().map(|v| d.name(v.var)).collect();
    out.variables[keep.0].label = names.join("+");
    Ok(out)
}

/// How the value enters the network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ValueEncoding {
    /// Binary utility node with `P{U=1|a} = (v(a) - min) / (max - min)`.
    Rescaled { min: f64, max: f64 },
    /// Binary node with table rows `[1, v(a)]`, values unchanged.
    Valuation,
    /// Each value table multiplied in as a likelihood over its attributes.
    Likelihood,
}

/// A prepared diagram recast as a network of tables.
#[derive(Clone, Debug)]
pub struct DecisionNetwork {
    pub network: Network,
    /// Binary value variable (reuses the value node's id); `None` for likelihood encoding.
    pub value: Option<VarId>,
    pub encoding: ValueEncoding,
    /// Live decisions in order with their parents in the network.
    pub decisions: Vec<(VarId, Vec<VarId>)>,
    /// Index of each decision's table in `network.tables`.
    pub decision_tables: BTreeMap<VarId, usize>,
    pub evidence: Assignment,
}

impl DecisionNetwork {
    /// Recovers the value scale from a quantity on the encoded scale.
    pub fn unscale(&self, meu: f64) -> f64 {
        match self.encoding {
            ValueEncoding::Rescaled { min, max } => min + (max - min) * meu,
            _ => meu,
        }
    }
}

/// Smallest and largest entries of the value table.
pub fn value_range(table: &Factor) -> (f64, f64) {
    table
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

pub(crate) fn base_network(p: &PreparedDiagram) -> (Network, Vec<(VarId, Vec<VarId>)>, BTreeMap<VarId, usize>) {
    let d = &p.diagram;
    let mut cards = d.cards();
    for v in d.value_vars() {
        cards[v.0] = 2;
    }
    let mut net = Network {
        cards,
        names: d.variables.iter().map(|v| v.name.clone()).collect(),
        variables: Vec::new(),
        tables: Vec::new(),
    };
    let mut decision_tables = BTreeMap::new();
    let decisions = p.live_decisions();
    for v in d.nodes() {
        match d.kind(v) {
            Kind::Chance => {
                net.variables.push(v);
                net.tables.push(d.cpts[&v].clone());
            }
            Kind::Decision => {
                let parents = p.scope_of(v).to_vec();
                let mut scope = parents.clone();
                scope.push(v);
                let sc: Vec<usize> = scope.iter().map(|s| d.card(*s)).collect();
                let n = d.card(v) as f64;
                net.variables.push(v);
                decision_tables.insert(v, net.tables.len());
                net.tables.push(Factor::constant(scope, sc, 1.0 / n, Semantics::Probability));
            }
            Kind::Value => {}
        }
    }
    (net, decisions, decision_tables)
}

pub(crate) fn binary_value_table(table: &Factor, var: VarId, row: impl Fn(f64) -> [f64; 2], semantics: Semantics) -> Factor {
    let mut scope = table.scope().to_vec();
    scope.push(var);
    let mut cards = table.cards().to_vec();
    cards.push(2);
    let mut values = Vec::with_capacity(table.len() * 2);
    for &v in table.values() {
        values.extend(row(v));
    }
    Factor::new(scope, cards, values, semantics).expect("value table shape")
}

fn single_value(p: &PreparedDiagram) -> Result<&ValueNode> {
    match p.diagram.values.len() {
        1 => Ok(p.value()),
        _ => Err(Error::MultipleValues),
    }
}

/// Decisions as uniform chance nodes and the value as a binary utility node.
/// Fails with `DEGENERATE_VALUE` when the value table is constant.
pub fn belief_network(p: &PreparedDiagram) -> Result<DecisionNetwork> {
    let value = single_value(p)?;
    let (min, max) = value_range(&value.table);
    if max <= min {
        return Err(Error::DegenerateValue(min));
    }
    let (mut network, decisions, decision_tables) = base_network(p);
    let u = binary_value_table(
        &value.table,
        value.var,
        |v| {
            let x = (v - min) / (max - min);
            [1.0 - x, x]
        },
        Semantics::Probability,
    );
    network.variables.push(value.var);
    network.tables.push(u);
    Ok(DecisionNetwork {
        network,
        value: Some(value.var),
        encoding: ValueEncoding::Rescaled { min, max },
        decisions,
        decision_tables,
        evidence: p.diagram.evidence.clone(),
    })
}

/// Decisions as uniform chance nodes and the value as a valuation node.
pub fn valuation_network(p: &PreparedDiagram) -> Result<DecisionNetwork> {
    let value = single_value(p)?;
    let (mut network, decisions, decision_tables) = base_network(p);
    let t = binary_value_table(&value.table, value.var, |v| [1.0, v], Semantics::Valuation);
    network.variables.push(value.var);
    network.tables.push(t);
    Ok(DecisionNetwork {
        network,
        value: Some(value.var),
        encoding: ValueEncoding::Valuation,
        decisions,
        decision_tables,
        evidence: p.diagram.evidence.clone(),
    })
}

/// Decisions as uniform chance nodes and every value table as a likelihood
/// factor. Several value nodes are multiplied, so each must be nonnegative;
/// a single value table may carry any sign.
pub fn likelihood_network(p: &PreparedDiagram) -> Result<DecisionNetwork> {
    let d = &p.diagram;
    if d.values.len() > 1 {
        if d.combination != Combination::Product {
            return Err(Error::Unsupported(
                "several value nodes can enter as likelihoods only under product combination".into(),
            ));
        }
        if let Some(v) = d.values.iter().find(|v| v.table.values().iter().any(|x| *x < 0.0)) {
            return Err(Error::NegativeFactor(d.name(v.var).to_string()));
        }
    }
    let (mut network, decisions, decision_tables) = base_network(p);
    for v in &d.values {
        network.tables.push(v.table.clone().with_semantics(Semantics::Likelihood));
    }
    Ok(DecisionNetwork {
        network,
        value: None,
        encoding: ValueEncoding::Likelihood,
        decisions,
        decision_tables,
        evidence: d.evidence.clone(),
    })
}

/// Default preparation followed by [`belief_network`].
pub fn to_belief_network(d: &InfluenceDiagram) -> Result<DecisionNetwork> {
    belief_network(&prepare(d, TransformOptions::default())?)
}

/// Default preparation followed by [`valuation_network`].
pub fn to_valuation_network(d: &InfluenceDiagram) -> Result<DecisionNetwork> {
    valuation_network(&prepare(d, TransformOptions::default())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::DiagramBuilder;

    #[test]
    fn umbrella_belief_network_shape() {
        let d = fixtures::umbrella();
        let bn = to_belief_network(&d).unwrap();
        let bring = d.lookup("bring_umbrella").unwrap();
        let forecast = d.lookup("forecast").unwrap();
        let weather = d.lookup("weather").unwrap();
        let u = bn.value.unwrap();
        let dt = &bn.network.tables[bn.decision_tables[&bring]];
        assert_eq!(dt.scope(), &[forecast, bring]);
        assert!(dt.values().iter().all(|x| *x == 0.5));
        let ut = bn.network.tables.last().unwrap();
        assert_eq!(ut.scope(), &[weather, bring, u]);
        assert_eq!(bn.encoding, ValueEncoding::Rescaled { min: 0.0, max: 100.0 });
        let raw = [100.0, 80.0, 0.0, 70.0];
        for (row, v) in ut.values().chunks(2).zip(raw) {
            assert!((row[1] - v / 100.0).abs() < 1e-15);
            assert!((row[0] + row[1] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rescale_endpoints() {
        let mut b = DiagramBuilder::new();
        let x = b.decision("x", &["a", "b"]);
        let v = b.value("v");
        b.utility(v, &[x], &[0.0, 100.0]);
        let bn = to_belief_network(&b.build().unwrap()).unwrap();
        assert_eq!(bn.network.tables.last().unwrap().values(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_value_is_degenerate() {
        let mut b = DiagramBuilder::new();
        let x = b.decision("x", &["a", "b"]);
        let v = b.value("v");
        b.utility(v, &[x], &[5.0, 5.0]);
        let err = to_belief_network(&b.build().unwrap()).unwrap_err();
        assert_eq!(err.code(), "DEGENERATE_VALUE");
    }

    #[test]
    fn valuation_rows() {
        let d = fixtures::umbrella();
        let vn = to_valuation_network(&d).unwrap();
        let t = vn.network.tables.last().unwrap();
        assert_eq!(t.values(), &[1.0, 100.0, 1.0, 80.0, 1.0, 0.0, 1.0, 70.0]);
        assert_eq!(t.semantics(), Semantics::Valuation);
    }

    #[test]
    fn valuation_keeps_negative_values() {
        let d = fixtures::umbrella().with_affine_values(1.0, -150.0);
        let vn = to_valuation_network(&d).unwrap();
        let t = vn.network.tables.last().unwrap();
        assert_eq!(t.values()[1], -50.0);
    }

    #[test]
    fn single_attribute_valuation_shape() {
        let mut b = DiagramBuilder::new();
        let a = b.chance("a", &["0", "1"]);
        let x = b.decision("x", &["p", "q"]);
        let v = b.value("v");
        b.cpt(a, &[], &[0.5, 0.5]).informed_by(x, &[a]).utility(v, &[a], &[1.0, 2.0]);
        let vn = to_valuation_network(&b.build().unwrap()).unwrap();
        assert_eq!(vn.network.tables.last().unwrap().cards(), &[2, 2]);
    }

    fn two_values(c: Combination) -> InfluenceDiagram {
        let mut b = DiagramBuilder::new();
        let s1 = b.chance("s1", &["0", "1"]);
        let d1 = b.decision("d1", &["0", "1"]);
        let s2 = b.chance("s2", &["0", "1"]);
        let d2 = b.decision("d2", &["0", "1"]);
        let v1 = b.value("v1");
        let v2 = b.value("v2");
        b.cpt(s1, &[], &[0.5, 0.5])
            .cpt(s2, &[s1, d1], &[0.5, 0.5, 0.2, 0.8, 0.6, 0.4, 0.1, 0.9])
            .informed_by(d1, &[s1])
            .informed_by(d2, &[s1, d1, s2])
            .utility(v1, &[s1, d1], &[1.0, 2.0, 3.0, 4.0])
            .utility(v2, &[s2, d2], &[10.0, 20.0, 30.0, 40.0])
            .combination(c);
        b.build().unwrap()
    }

    #[test]
    fn merge_sum() {
        let d = two_values(Combination::Sum);
        let m = merge_values(&d).unwrap();
        assert_eq!(m.values.len(), 1);
        let t = &m.values[0].table;
        assert_eq!(t.scope(), &[VarId(0), VarId(1), VarId(2), VarId(3)]);
        assert_eq!(t.get(&[1, 0, 1, 1]), 3.0 + 40.0);
        assert!(crate::model::validate(&m).is_ok());
    }

    #[test]
    fn merge_product_of_ones() {
        let mut d = two_values(Combination::Product);
        for v in &mut d.values {
            v.table = v.table.map(|_| 1.0);
        }
        let m = merge_values(&d).unwrap();
        assert!(m.values[0].table.values().iter().all(|x| *x == 1.0));
    }

    #[test]
    fn merge_product_rejects_negative() {
        let mut d = two_values(Combination::Product);
        d.values[1].table.values_mut()[0] = -1.0;
        assert_eq!(merge_values(&d).unwrap_err().code(), "NEGATIVE_FACTOR");
    }

    #[test]
    fn prepare_reduces_mdp_information() {
        let d = fixtures::mdp(2, Combination::Sum, 3);
        let p = prepare(&d, TransformOptions::default()).unwrap();
        let s2 = d.lookup("state_2").unwrap();
        assert_eq!(p.relevant[1].1, vec![s2]);
        assert_eq!(p.diagram.values.len(), 1);
        assert!(p.merged_value_scope.is_some());
    }
}
