//! Decisions evaluated inside the cluster tree.
//!
//! [`solve_by_clustering`] keeps one cluster per decision that holds the
//! decision and its relevant information, collects to those clusters in
//! reverse decision order, reads the policy off the cluster potential and
//! multiplies it back in. The [`rooted`] submodule builds one-directional
//! trees that evaluate every decision in a single pass.

pub mod rooted;

use crate::backend::{cluster_sizes, degenerate_result, network_evidence_probability};
use crate::error::{Error, Result};
use crate::factor::{argmax_first, Assignment, Factor};
use crate::inference::{build_cluster_tree, ClusterTree, EvidenceMode, Network, Propagation};
use crate::model::{Combination, InfluenceDiagram, VarId};
use crate::policy::{DecisionPolicy, Diagnostics, EvaluationResult};
use crate::transform::{
    belief_network, likelihood_network, prepare, valuation_network, DecisionNetwork, TransformOptions,
};

pub use rooted::{
    build_one_directional_tree, full_collect, partial_vs_full, single_pass_evaluate, single_pass_solve,
    solve_one_directional, MessageOp, MessageTrace, OneDirectionalMode, RootedClusterTree, SinglePass, ValuePlacement,
};

/// How the value enters the cluster tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterMode {
    /// Binary utility observed at `U=1`; probabilities throughout.
    Rescaled,
    /// Valuation node kept in the decision clusters; MEV as a ratio at the end.
    Valuation,
    /// Value tables multiplied in as likelihoods; MEV divided by a separate `P{E=e}`.
    Likelihood,
}

/// Negative masses smaller than this (relative) are treated as round-off.
const WEIGHT_SLACK: f64 = 1e-12;

/// Policy from a decision cluster potential over `{decision} ∪ scope ∪ Z`.
///
/// With `value` in the potential's scope, the `value = 1` slice is summed
/// over the remaining variables and maximized, and the `value = 0` slice
/// supplies the probability mass of each information state. Without it the
/// potential itself is summed and maximized.
pub fn decision_from_cluster(
    potential: &Factor,
    decision: VarId,
    scope: &[VarId],
    value: Option<VarId>,
) -> Result<DecisionPolicy> {
    let mut keep = scope.to_vec();
    keep.push(decision);
    let (scores, mass) = match value.filter(|v| potential.contains(*v)) {
        Some(v) => {
            let weight = potential.reduce(&Assignment::from([(v, 0)]))?;
            let scale = weight.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if weight.values().iter().any(|x| *x < -WEIGHT_SLACK * scale.max(f64::MIN_POSITIVE)) {
                return Err(Error::NegativeWeight(format!("decision {decision:?}")));
            }
            let scores = potential.reduce(&Assignment::from([(v, 1)]))?.sum_onto(&keep)?.permute(&keep)?;
            let mass = weight.sum_onto(&keep)?.permute(&keep)?;
            (scores, Some(mass))
        }
        None => (potential.sum_onto(&keep)?.permute(&keep)?, None),
    };
    let (alts, scope_cards) = scores.cards().split_last().expect("decision axis");
    let mut choices = Vec::new();
    let mut flagged = Vec::new();
    for (i, row) in scores.values().chunks(*alts).enumerate() {
        let empty = match &mass {
            Some(m) => m.values()[i * alts..(i + 1) * alts].iter().all(|x| *x <= 0.0),
            None => row.iter().all(|x| *x == 0.0),
        };
        if empty {
            choices.push(0);
            flagged.push(true);
        } else {
            choices.push(argmax_first(row.iter().copied()).expect("alternatives"));
            flagged.push(false);
        }
    }
    Ok(DecisionPolicy { decision, scope: scope.to_vec(), scope_cards: scope_cards.to_vec(), choices, flagged })
}

/// One clique constraint per decision: the decision, its policy scope and
/// the carried value variable, if any.
fn decision_constraints(net: &DecisionNetwork, carried: Option<VarId>) -> Vec<Vec<VarId>> {
    net.decisions
        .iter()
        .map(|(dec, r)| {
            let mut c = r.clone();
            c.push(*dec);
            c.extend(carried);
            c
        })
        .collect()
}

/// The cluster tree [`solve_by_clustering`] runs on, with the network it was
/// built from. Rescaled mode also covers the query backend.
pub fn decision_cluster_tree(d: &InfluenceDiagram, mode: ClusterMode) -> Result<(ClusterTree, DecisionNetwork)> {
    let native_product = mode == ClusterMode::Likelihood && d.combination == Combination::Product;
    let p = prepare(d, TransformOptions { merge_values: !native_product, ..TransformOptions::default() })?;
    let net = match mode {
        // a constant value has the same structure under either encoding
        ClusterMode::Rescaled => belief_network(&p).or_else(|_| valuation_network(&p))?,
        ClusterMode::Valuation => valuation_network(&p)?,
        ClusterMode::Likelihood => likelihood_network(&p)?,
    };
    let carried = (mode == ClusterMode::Valuation).then(|| net.value.expect("valuation node"));
    let tree = build_cluster_tree(&net.network, &decision_constraints(&net, carried));
    Ok((tree, net))
}

pub fn solve_by_clustering(d: &InfluenceDiagram, mode: ClusterMode) -> Result<EvaluationResult> {
    solve_by_clustering_with(d, mode, TransformOptions::default())
}

pub fn solve_by_clustering_with(
    d: &InfluenceDiagram,
    mode: ClusterMode,
    options: TransformOptions,
) -> Result<EvaluationResult> {
    let native_product = mode == ClusterMode::Likelihood && d.combination == Combination::Product;
    let p = prepare(d, TransformOptions { merge_values: !native_product, ..options })?;
    let backend = match mode {
        ClusterMode::Rescaled => "cluster/rescaled",
        ClusterMode::Valuation => "cluster/valuation",
        ClusterMode::Likelihood => "cluster/likelihood",
    };
    let net = match mode {
        ClusterMode::Rescaled => match belief_network(&p) {
            Err(Error::DegenerateValue(_)) => return degenerate_result(&p, backend),
            other => other?,
        },
        ClusterMode::Valuation => valuation_network(&p)?,
        ClusterMode::Likelihood => likelihood_network(&p)?,
    };
    let carried = (mode == ClusterMode::Valuation).then(|| net.value.expect("valuation node"));
    let constraints = decision_constraints(&net, carried);
    let tree = build_cluster_tree(&net.network, &constraints);

    let mut evidence = net.evidence.clone();
    if mode == ClusterMode::Rescaled {
        evidence.insert(net.value.expect("utility node"), 1);
    }
    let mut prop = Propagation::new(&tree, net.network.tables.clone(), &evidence, EvidenceMode::Indicator)?;
    let mut extra_messages = 0;
    // value-free normalizer for the modes that cannot read it off the tree
    let separate_evidence_probability = match mode {
        ClusterMode::Valuation => None,
        ClusterMode::Rescaled => {
            let mut plain = Propagation::new(&tree, net.network.tables.clone(), &net.evidence, EvidenceMode::Indicator)?;
            let z = plain.total()?;
            extra_messages += plain.messages_sent();
            Some(z)
        }
        ClusterMode::Likelihood => {
            let value_free = Network {
                tables: net.network.tables[..net.network.tables.len() - p.diagram.values.len()].to_vec(),
                ..net.network.clone()
            };
            Some(network_evidence_probability(&value_free, &net.evidence)?)
        }
    };
    if separate_evidence_probability.is_some_and(|z| z <= 0.0) {
        return Err(Error::ZeroEvidenceProbability);
    }

    let mut rules = Vec::new();
    for (k, (dec, r)) in net.decisions.iter().enumerate().rev() {
        let c = tree.covering(&constraints[k]).expect("constraint cluster");
        let psi = prop.collect(c)?;
        let rule = decision_from_cluster(&psi, *dec, r, carried)?;
        prop.replace_table(net.decision_tables[dec], rule.as_table(p.diagram.card(*dec)))?;
        rules.push(rule);
    }

    let (meu, mev, evidence_probability) = match mode {
        ClusterMode::Valuation => {
            let v = carried.expect("valuation node");
            let c = tree.covering(&[v]).expect("value cluster");
            let root = prop.collect(c)?.sum_onto(&[v])?;
            let (s0, s1) = (root.values()[0], root.values()[1]);
            if s0 <= 0.0 {
                return Err(Error::ZeroEvidenceProbability);
            }
            (None, s1 / s0, s0)
        }
        _ => {
            let z = separate_evidence_probability.expect("normalizer");
            let ratio = prop.total()? / z;
            match mode {
                ClusterMode::Rescaled => (Some(ratio), net.unscale(ratio), z),
                _ => (None, ratio, z),
            }
        }
    };
    Ok(EvaluationResult {
        policy: p.complete_policy(rules),
        meu,
        mev,
        evidence_probability,
        diagnostics: Diagnostics {
            backend: backend.into(),
            messages: prop.messages_sent() + extra_messages,
            cluster_sizes: cluster_sizes(&tree),
            merged_value_scope: p.merged_value_scope.clone(),
            notes: Vec::new(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::Semantics;
    use crate::fixtures;
    use crate::oracle::{brute_solve, expected_value, ScopeMode};

    const MODES: [ClusterMode; 3] = [ClusterMode::Rescaled, ClusterMode::Valuation, ClusterMode::Likelihood];

    #[test]
    fn fixtures_match_oracle_in_every_mode() {
        let cases = [
            fixtures::umbrella(),
            fixtures::umbrella_tv(),
            fixtures::mdp(2, Combination::Sum, 1),
            fixtures::mdp(3, Combination::Sum, 2),
        ];
        for d in &cases {
            let o = brute_solve(d, ScopeMode::Relevant).unwrap();
            for mode in MODES {
                let r = solve_by_clustering(d, mode).unwrap();
                assert!((r.mev - o.mev).abs() < 1e-9, "{mode:?}: {} vs {}", r.mev, o.mev);
                assert!((expected_value(d, &r.policy).unwrap().0 - o.mev).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn umbrella_decision_potential() {
        // the potential over (bring, forecast) after collecting; take iff rainy
        let d = fixtures::umbrella();
        let r = solve_by_clustering(&d, ClusterMode::Rescaled).unwrap();
        assert_eq!(r.policy.decisions[0].choices, vec![0, 1]);
        assert!((r.meu.unwrap() - 0.84).abs() < 1e-12);
    }

    #[test]
    fn shifted_values_keep_policy() {
        let d = fixtures::umbrella();
        let shifted = d.with_affine_values(1.0, -50.0);
        let a = solve_by_clustering(&d, ClusterMode::Rescaled).unwrap();
        let b = solve_by_clustering(&shifted, ClusterMode::Valuation).unwrap();
        assert_eq!(a.policy, b.policy);
        assert!((b.mev - (a.mev - 50.0)).abs() < 1e-9);
    }

    #[test]
    fn likelihood_without_evidence_has_unit_normalizer() {
        let d = fixtures::umbrella();
        let r = solve_by_clustering(&d, ClusterMode::Likelihood).unwrap();
        assert!((r.evidence_probability - 1.0).abs() < 1e-12);
        assert!((r.mev - 84.0).abs() < 1e-9);
    }

    #[test]
    fn constant_potential_prefers_first_alternative() {
        let psi = Factor::constant(vec![VarId(0), VarId(1)], vec![2, 2], 0.25, Semantics::Probability);
        let rule = decision_from_cluster(&psi, VarId(1), &[VarId(0)], None).unwrap();
        assert_eq!(rule.choices, vec![0, 0]);
    }

    #[test]
    fn negative_weight_is_rejected() {
        // scope (d, v): the v = 0 slice is negative for d = 1
        let psi = Factor::new(vec![VarId(1), VarId(2)], vec![2, 2], vec![0.5, 1.0, -0.5, 2.0], Semantics::Valuation)
            .unwrap();
        let err = decision_from_cluster(&psi, VarId(1), &[], Some(VarId(2))).unwrap_err();
        assert_eq!(err.code(), "NEGATIVE_WEIGHT");
    }

    #[test]
    fn valuation_slice_drives_choice() {
        // scope (d, v): values 3 and 5 with equal weight
        let psi = Factor::new(vec![VarId(1), VarId(2)], vec![2, 2], vec![0.5, 1.5, 0.5, 2.5], Semantics::Valuation)
            .unwrap();
        let rule = decision_from_cluster(&psi, VarId(1), &[], Some(VarId(2))).unwrap();
        assert_eq!(rule.choices, vec![1]);
    }
}
