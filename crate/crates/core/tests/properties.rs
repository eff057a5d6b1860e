mod common;

use std::collections::BTreeSet;

use infdiag::cluster_decision::{
    build_one_directional_tree, partial_vs_full, single_pass_evaluate, solve_by_clustering_with, ClusterMode,
    OneDirectionalMode, ValuePlacement,
};
use infdiag::dp::solve_product_decomposition;
use infdiag::fixtures;
use infdiag::inference::{build_cluster_tree, EvidenceMode, Network, Propagation};
use infdiag::model::{d_separated, prune, Combination, InfluenceDiagram};
use infdiag::oracle::{brute_solve, expected_value, rollback, ScopeMode};
use infdiag::policy::{DecisionPolicy, Policy};
use infdiag::queries::{extract_policy, solve_by_queries_with};
use infdiag::random::{random_diagram, random_network, DiagramShape};
use infdiag::solve::{solve, Method};
use infdiag::transform::{merge_values, to_belief_network, value_range, TransformOptions};
use infdiag::{Assignment, Error, VarId};
use proptest::prelude::*;
use rand::Rng;

use common::*;

fn diagram(seed: u64, shape: &DiagramShape) -> InfluenceDiagram {
    random_diagram(&mut rng(seed), shape)
}

/// Best value over full information, falling back to backward induction
/// when the policy space is too large to enumerate.
fn full_information_mev(d: &InfluenceDiagram) -> f64 {
    match brute_solve(d, ScopeMode::FullInformation) {
        Ok(o) => o.mev,
        Err(Error::PolicySpaceTooLarge(_)) => rollback(d).unwrap(),
        Err(e) => panic!("{e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn d_separation_matches_measured_independence(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=6);
        let d = random_network(&mut r, n, 3, 0.05);
        let joint = joint_table(&d);
        let x = r.gen_range(0..n);
        let y = (x + r.gen_range(1..n)) % n;
        let given: Vec<usize> = (0..n).filter(|v| *v != x && *v != y && r.gen_bool(0.4)).collect();
        let set: BTreeSet<VarId> = given.iter().map(|v| VarId(*v)).collect();
        let separated = d_separated(&d, VarId(x), VarId(y), &set).unwrap();
        let gap = dependence(&joint, x, y, &given);
        if separated {
            prop_assert!(gap <= 1e-10, "separated but dependent by {gap}");
        } else {
            prop_assert!(gap > 1e-10, "connected but independent");
        }
    }

    #[test]
    fn relevant_information_suffices(seed in any::<u64>()) {
        let d = diagram(seed, &DiagramShape::default());
        let relevant = brute_solve(&d, ScopeMode::Relevant).unwrap();
        prop_assert!(close(relevant.mev, full_information_mev(&d), 1e-9));
    }

    #[test]
    fn pruning_keeps_value_and_attainability(seed in any::<u64>()) {
        let d = diagram(seed, &DiagramShape { evidence: true, ..DiagramShape::default() });
        let pruned = prune(&d, &d.value_vars()).unwrap();
        let before = brute_solve(&d, ScopeMode::Relevant).unwrap();
        let after = brute_solve(&pruned, ScopeMode::Relevant).unwrap();
        prop_assert!(close(before.mev, after.mev, 1e-9));
        let mut rules = after.best().decisions;
        for dec in &d.decision_order {
            if !rules.iter().any(|r| r.decision == *dec) {
                rules.push(DecisionPolicy::constant(*dec, Vec::new(), Vec::new()));
            }
        }
        let (ev, _) = expected_value(&d, &Policy { decisions: rules }).unwrap();
        prop_assert!(close(ev, before.mev, 1e-9));
    }

    #[test]
    fn decision_rows_start_uniform(seed in any::<u64>()) {
        let d = diagram(seed, &DiagramShape::default());
        let Ok(net) = to_belief_network(&d) else { return Ok(()) };
        for (dec, index) in &net.decision_tables {
            let n = d.card(*dec) as f64;
            prop_assert!(net.network.tables[*index].values().iter().all(|x| *x == 1.0 / n));
        }
    }

    #[test]
    fn rescaled_utility_maps_back_to_value(seed in any::<u64>()) {
        let d = diagram(seed, &DiagramShape::default());
        let r = solve(&d, Method::Queries).unwrap();
        let o = brute_solve(&d, ScopeMode::Relevant).unwrap();
        if let Some(meu) = r.meu {
            let (min, max) = value_range(&d.values[0].table);
            prop_assert!(close(min + (max - min) * meu, o.mev, 1e-9));
        }
    }

    #[test]
    fn affine_maps_keep_every_backend_policy(seed in any::<u64>(), alpha in 1e-3f64..10.0, beta in -10.0f64..10.0) {
        let d = diagram(seed, &DiagramShape::default());
        let shifted = d.with_affine_values(alpha, beta);
        for m in Method::all() {
            let a = solve(&d, m).unwrap();
            let b = solve(&shifted, m).unwrap();
            let target = alpha * a.mev + beta;
            prop_assert!(close(b.mev, target, 1e-9 * target.abs().max(1.0)), "{m:?}");
            prop_assert_eq!(&a.policy, &b.policy);
        }
    }

    #[test]
    fn barren_removal_does_not_change_the_answer(seed in any::<u64>(), evidence in any::<bool>()) {
        let d = diagram(seed, &DiagramShape { evidence, ..DiagramShape::default() });
        let kept = TransformOptions { remove_barren: false, ..TransformOptions::default() };
        let o = brute_solve(&d, ScopeMode::Relevant).unwrap();
        let a = solve_by_queries_with(&d, kept).unwrap();
        let b = solve_by_clustering_with(&d, ClusterMode::Valuation, kept).unwrap();
        for r in [a, b] {
            prop_assert!(close(r.mev, o.mev, 1e-9));
            prop_assert!(close(expected_value(&d, &r.policy).unwrap().0, o.mev, 1e-9));
        }
    }

    #[test]
    fn collect_agrees_across_targets(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=6);
        let d = random_network(&mut r, n, 3, 0.01);
        let net = Network::from_chance_nodes(&d);
        let tree = build_cluster_tree(&net, &[]);
        let mut evidence = Assignment::new();
        if r.gen_bool(0.5) {
            evidence.insert(VarId(r.gen_range(0..n)), r.gen_range(0..2));
        }
        for v in 0..n {
            let holders: Vec<usize> = (0..tree.clusters.len()).filter(|c| tree.clusters[*c].contains(&VarId(v))).collect();
            let mut seen: Option<Vec<f64>> = None;
            for c in holders {
                let mut prop = Propagation::new(&tree, net.tables.clone(), &evidence, EvidenceMode::Indicator).unwrap();
                let psi = prop.collect(c).unwrap();
                prop_assert_eq!(prop.messages_sent(), tree.edges.len());
                let m = psi.sum_onto(&[VarId(v)]).unwrap().values().to_vec();
                if let Some(prev) = &seen {
                    for (a, b) in prev.iter().zip(&m) {
                        prop_assert!(close(*a, *b, 1e-12));
                    }
                }
                seen = Some(m);
            }
        }
    }

    #[test]
    fn installing_a_policy_never_lowers_utility(seed in any::<u64>()) {
        let d = diagram(seed, &single_decision());
        let Ok(net) = to_belief_network(&d) else { return Ok(()) };
        let Some((dec, scope)) = net.decisions.first().cloned() else { return Ok(()) };
        let mut vars = scope.clone();
        vars.push(dec);
        let tree = build_cluster_tree(&net.network, &[vars.clone()]);
        let mut evidence = net.evidence.clone();
        evidence.insert(net.value.unwrap(), 1);
        let mut prop = Propagation::new(&tree, net.network.tables.clone(), &evidence, EvidenceMode::Indicator).unwrap();
        let before = prop.total().unwrap();
        let rule = extract_policy(&prop.joint(&vars).unwrap(), dec, &scope).unwrap();
        prop.replace_table(net.decision_tables[&dec], rule.as_table(d.card(dec))).unwrap();
        prop_assert!(prop.total().unwrap() >= before - 1e-12);
    }

    #[test]
    fn single_pass_matches_full_collect(seed in any::<u64>(), evidence in any::<bool>(), everywhere in any::<bool>()) {
        let d = diagram(seed, &DiagramShape { evidence, ..DiagramShape::default() });
        let placement = if everywhere { ValuePlacement::Everywhere } else { ValuePlacement::RootPath };
        let tree = build_one_directional_tree(&d, OneDirectionalMode::Valuation, placement).unwrap();
        tree.check().unwrap();
        let order = tree.leaves_first();
        prop_assert_eq!(order.len(), tree.tree.clusters.len());
        let pass = single_pass_evaluate(&tree).unwrap();
        prop_assert_eq!(pass.messages.len(), tree.tree.edges.len());
        prop_assert!(partial_vs_full(&tree, &pass, 1e-9).unwrap().is_empty());
        let o = brute_solve(&d, ScopeMode::Relevant).unwrap();
        let (s0, s1) = (pass.root.values()[0], pass.root.values()[1]);
        prop_assert!(close(s0, o.evidence_probability, 1e-12));
        prop_assert!(close(s1 / s0, o.mev, 1e-9));
    }

    #[test]
    fn installed_policies_attain_the_optimum(seed in any::<u64>()) {
        let d = diagram(seed, &DiagramShape { evidence: seed % 2 == 0, ..DiagramShape::default() });
        let o = brute_solve(&d, ScopeMode::Relevant).unwrap();
        for m in Method::all() {
            let r = solve(&d, m).unwrap();
            prop_assert!(close(expected_value(&d, &r.policy).unwrap().0, o.mev, 1e-9), "{m:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn markov_chains_need_only_the_current_state(seed in any::<u64>(), periods in 2usize..=3) {
        let d = fixtures::mdp(periods, Combination::Sum, seed);
        let relevant = brute_solve(&d, ScopeMode::Relevant).unwrap();
        prop_assert!(close(relevant.mev, full_information_mev(&d), 1e-9));
    }

    #[test]
    fn product_values_match_merged_solves(seed in any::<u64>(), periods in 2usize..=3) {
        let d = fixtures::mdp(periods, Combination::Product, seed);
        let native = solve_product_decomposition(&d).unwrap();
        let merged = merge_values(&d).unwrap();
        for m in Method::all() {
            prop_assert!(close(solve(&merged, m).unwrap().mev, native.mev, 1e-9), "{m:?}");
        }
    }
}
