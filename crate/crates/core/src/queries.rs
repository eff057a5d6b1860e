//! Decisions evaluated by posterior queries on the transformed belief network.
//!
//! Decisions are handled last to first. For each one the joint of the
//! decision and its relevant information is queried given `U=1`, the
//! evidence and the policies already fixed for later decisions; the
//! maximizing alternative per information state becomes a deterministic
//! table in place of the uniform one.

use crate::backend::{cluster_sizes, degenerate_result};
use crate::error::{Error, Result};
use crate::factor::{argmax_first, Factor};
use crate::inference::{build_cluster_tree, EvidenceMode, Propagation};
use crate::model::{InfluenceDiagram, VarId};
use crate::policy::{DecisionPolicy, Diagnostics, EvaluationResult};
use crate::transform::{belief_network, prepare, TransformOptions};

/// Per-configuration argmax of a nonnegative joint over `scope ++ [decision]`.
/// Configurations without mass get alternative 0 and are flagged.
pub fn extract_policy(joint: &Factor, decision: VarId, scope: &[VarId]) -> Result<DecisionPolicy> {
    if let Some(x) = joint.values().iter().find(|x| **x < 0.0 || x.is_nan()) {
        return Err(Error::NegativeEntry(format!("joint entry {x} for decision {decision:?}")));
    }
    let mut order = scope.to_vec();
    order.push(decision);
    let aligned = joint.permute(&order)?;
    let (alts, scope_cards) = aligned.cards().split_last().expect("decision axis");
    let mut choices = Vec::new();
    let mut flagged = Vec::new();
    for row in aligned.values().chunks(*alts) {
        if row.iter().all(|x| *x == 0.0) {
            choices.push(0);
            flagged.push(true);
        } else {
            choices.push(argmax_first(row.iter().copied()).expect("alternatives"));
            flagged.push(false);
        }
    }
    Ok(DecisionPolicy { decision, scope: scope.to_vec(), scope_cards: scope_cards.to_vec(), choices, flagged })
}

pub fn solve_by_queries(d: &InfluenceDiagram) -> Result<EvaluationResult> {
    solve_by_queries_with(d, TransformOptions::default())
}

pub fn solve_by_queries_with(d: &InfluenceDiagram, options: TransformOptions) -> Result<EvaluationResult> {
    let p = prepare(d, TransformOptions { merge_values: true, ..options })?;
    let bn = match belief_network(&p) {
        Err(Error::DegenerateValue(_)) => return degenerate_result(&p, "queries"),
        other => other?,
    };
    let u = bn.value.expect("rescaled network has a utility node");
    let constraints: Vec<Vec<VarId>> = bn
        .decisions
        .iter()
        .map(|(dec, r)| {
            let mut c = r.clone();
            c.push(*dec);
            c
        })
        .collect();
    let tree = build_cluster_tree(&bn.network, &constraints);

    let mut plain = Propagation::new(&tree, bn.network.tables.clone(), &bn.evidence, EvidenceMode::Indicator)?;
    let evidence_probability = plain.total()?;
    if evidence_probability <= 0.0 {
        return Err(Error::ZeroEvidenceProbability);
    }

    let mut with_utility = bn.evidence.clone();
    with_utility.insert(u, 1);
    let mut prop = Propagation::new(&tree, bn.network.tables.clone(), &with_utility, EvidenceMode::Indicator)?;
    let mut rules = Vec::new();
    for (dec, r) in bn.decisions.iter().rev() {
        let mut vars = r.clone();
        vars.push(*dec);
        let joint = prop.joint(&vars)?;
        let rule = extract_policy(&joint, *dec, r)?;
        prop.replace_table(bn.decision_tables[dec], rule.as_table(p.diagram.card(*dec)))?;
        rules.push(rule);
    }
    let meu = prop.total()? / evidence_probability;
    Ok(EvaluationResult {
        policy: p.complete_policy(rules),
        meu: Some(meu),
        mev: bn.unscale(meu),
        evidence_probability,
        diagnostics: Diagnostics {
            backend: "queries".into(),
            messages: prop.messages_sent() + plain.messages_sent(),
            cluster_sizes: cluster_sizes(&tree),
            merged_value_scope: p.merged_value_scope.clone(),
            notes: Vec::new(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{Combination, DiagramBuilder};
    use crate::oracle::{brute_solve, expected_value, ScopeMode};

    #[test]
    fn umbrella_takes_iff_rainy() {
        let d = fixtures::umbrella();
        let r = solve_by_queries(&d).unwrap();
        assert_eq!(r.policy.decisions[0].choices, vec![0, 1]);
        assert!((r.mev - 84.0).abs() < 1e-9);
        assert!((r.mev - (0.0 + 100.0 * r.meu.unwrap())).abs() < 1e-9);
    }

    #[test]
    fn two_decision_umbrella_matches_oracle() {
        let d = fixtures::umbrella_tv();
        let r = solve_by_queries(&d).unwrap();
        let o = brute_solve(&d, ScopeMode::Relevant).unwrap();
        assert!((r.mev - o.mev).abs() < 1e-9);
        assert!((expected_value(&d, &r.policy).unwrap().0 - o.mev).abs() < 1e-9);
    }

    #[test]
    fn mdp_matches_oracle() {
        for periods in [2, 3] {
            let d = fixtures::mdp(periods, Combination::Sum, 9);
            let r = solve_by_queries(&d).unwrap();
            let o = brute_solve(&d, ScopeMode::Relevant).unwrap();
            assert!((r.mev - o.mev).abs() < 1e-9, "{periods}: {} vs {}", r.mev, o.mev);
        }
    }

    #[test]
    fn certain_world_picks_global_argmax() {
        let mut b = DiagramBuilder::new();
        let x = b.decision("x", &["a", "b", "c"]);
        let v = b.value("v");
        b.utility(v, &[x], &[3.0, 9.0, 4.0]);
        let r = solve_by_queries(&b.build().unwrap()).unwrap();
        assert_eq!(r.policy.decisions[0].choices, vec![1]);
        assert!((r.mev - 9.0).abs() < 1e-12);
    }

    #[test]
    fn constant_utility_prefers_first_alternative() {
        let joint = Factor::new(vec![VarId(0), VarId(1)], vec![2, 3], vec![0.2; 6], crate::factor::Semantics::Probability)
            .unwrap();
        let rule = extract_policy(&joint, VarId(1), &[VarId(0)]).unwrap();
        assert_eq!(rule.choices, vec![0, 0]);
    }

    #[test]
    fn zero_column_is_flagged() {
        let joint = Factor::new(
            vec![VarId(0), VarId(1)],
            vec![2, 2],
            vec![0.0, 0.0, 0.1, 0.3],
            crate::factor::Semantics::Probability,
        )
        .unwrap();
        let rule = extract_policy(&joint, VarId(1), &[VarId(0)]).unwrap();
        assert_eq!(rule.choices, vec![0, 1]);
        assert_eq!(rule.flagged, vec![true, false]);
    }

    #[test]
    fn negative_joint_is_rejected() {
        let joint =
            Factor::new(vec![VarId(1)], vec![2], vec![-0.1, 0.3], crate::factor::Semantics::Probability).unwrap();
        assert_eq!(extract_policy(&joint, VarId(1), &[]).unwrap_err().code(), "NEGATIVE_ENTRY");
    }

    #[test]
    fn degenerate_value_short_circuits() {
        let mut d = fixtures::umbrella();
        d.values[0].table = d.values[0].table.map(|_| 42.0);
        let r = solve_by_queries(&d).unwrap();
        assert_eq!(r.mev, 42.0);
        assert_eq!(r.policy.decisions[0].choices, vec![0, 0]);
    }
}
