//! Separable value functions.
//!
//! A product of nonnegative local values is handled natively: each factor
//! enters the cluster tree as its own likelihood. A sum is merged into a
//! single value node first and then solved by any backend. Finite-horizon
//! Markov decision processes are available as [`crate::fixtures::mdp`].

use crate::cluster_decision::{solve_by_clustering_with, ClusterMode};
use crate::error::{Error, Result};
use crate::model::{dependent_values, Combination, InfluenceDiagram, VarId};
use crate::policy::EvaluationResult;
use crate::solve::{solve, Method};
use crate::transform::{check_valid, merge_values, TransformOptions};

/// Local value nodes of a diagram and the values each decision can influence.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableValueModel {
    /// Value node with its attributes in table order.
    pub locals: Vec<(VarId, Vec<VarId>)>,
    pub combination: Combination,
    /// Per decision, the local values not d-separated from it by its information.
    pub dependent: Vec<(VarId, Vec<VarId>)>,
}

impl SeparableValueModel {
    pub fn of(d: &InfluenceDiagram) -> Result<Self> {
        check_valid(d)?;
        let locals = d.values.iter().map(|v| (v.var, v.table.scope().to_vec())).collect();
        let dependent = d
            .decision_order
            .iter()
            .map(|&dec| Ok((dec, dependent_values(d, dec, &d.information_set(dec))?)))
            .collect::<Result<_>>()?;
        Ok(SeparableValueModel { locals, combination: d.combination, dependent })
    }
}

fn require_nonnegative(d: &InfluenceDiagram) -> Result<()> {
    match d.values.iter().find(|v| v.table.values().iter().any(|x| *x < 0.0)) {
        Some(v) => Err(Error::NegativeFactor(d.name(v.var).to_string())),
        None => Ok(()),
    }
}

/// Product of local values, each multiplied into its own covering cluster.
pub fn solve_product_decomposition(d: &InfluenceDiagram) -> Result<EvaluationResult> {
    if d.values.len() > 1 && d.combination != Combination::Product {
        return Err(Error::InvalidArgument("value combination is not a product".into()));
    }
    require_nonnegative(d)?;
    solve_by_clustering_with(d, ClusterMode::Likelihood, TransformOptions::default())
}

/// Sum of local values: merged into one node, then solved with `method`.
///
/// Relevant information is found on the unmerged diagram, where the terms a
/// decision cannot influence are still separate, and the merge happens after
/// the information arcs are reduced.
pub fn solve_additive_decomposition(d: &InfluenceDiagram, method: Method) -> Result<EvaluationResult> {
    if d.values.len() > 1 && d.combination != Combination::Sum {
        return Err(Error::InvalidArgument("value combination is not a sum".into()));
    }
    check_valid(d)?;
    let merged = merge_values(d)?;
    let mut result = solve(d, method)?;
    if d.values.len() > 1 {
        let scope = merged.values[0].table.scope().to_vec();
        let size: usize = scope.iter().map(|v| merged.card(*v)).product();
        result.diagnostics.notes.push(format!("merged {} value nodes into one table of {size} entries", d.values.len()));
        result.diagnostics.merged_value_scope = Some(scope);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{DiagramBuilder, Kind};
    use crate::oracle::{brute_solve, expected_value, ScopeMode};

    fn with_unit_factor(d: &InfluenceDiagram) -> InfluenceDiagram {
        // same variables in the same order, so ids carry over
        let mut b = DiagramBuilder::new();
        for v in &d.variables {
            let outcomes: Vec<&str> = v.outcomes.iter().map(String::as_str).collect();
            match v.kind {
                Kind::Chance => b.chance(&v.name, &outcomes),
                Kind::Decision => b.decision(&v.name, &outcomes),
                Kind::Value => b.value(&v.name),
            };
        }
        for (&var, cpt) in &d.cpts {
            let parents = &cpt.scope()[..cpt.scope().len() - 1];
            b.cpt(var, parents, cpt.values());
        }
        for &dec in &d.decision_order {
            b.informed_by(dec, &d.parents(dec));
        }
        for v in &d.values {
            b.utility(v.var, v.table.scope(), v.table.values());
        }
        let one = b.value("one");
        b.utility(one, &[], &[1.0]).combination(Combination::Product);
        b.build().unwrap()
    }

    #[test]
    fn unit_factor_changes_nothing() {
        let d = fixtures::umbrella();
        let plain = solve_by_clustering_with(&d, ClusterMode::Likelihood, TransformOptions::default()).unwrap();
        let r = solve_product_decomposition(&with_unit_factor(&d)).unwrap();
        assert!((r.mev - plain.mev).abs() < 1e-12);
        assert_eq!(r.policy, plain.policy);
    }

    #[test]
    fn product_mdp_matches_merged_oracle() {
        let d = fixtures::mdp(2, Combination::Product, 11);
        let r = solve_product_decomposition(&d).unwrap();
        let merged = merge_values(&d).unwrap();
        let o = brute_solve(&merged, ScopeMode::Relevant).unwrap();
        assert!((r.mev - o.mev).abs() < 1e-9);
        assert!((expected_value(&d, &r.policy).unwrap().0 - o.mev).abs() < 1e-9);
        for m in Method::all() {
            assert!((solve(&merged, m).unwrap().mev - r.mev).abs() < 1e-9, "{m:?}");
        }
    }

    #[test]
    fn negative_factor_is_rejected() {
        let mut d = fixtures::mdp(2, Combination::Product, 3);
        d.values[1].table.values_mut()[0] = -0.5;
        assert_eq!(solve_product_decomposition(&d).unwrap_err().code(), "NEGATIVE_FACTOR");
    }

    #[test]
    fn additive_mdp_depends_on_current_state() {
        let d = fixtures::mdp(2, Combination::Sum, 5);
        let r = solve_additive_decomposition(&d, Method::Queries).unwrap();
        let o = brute_solve(&d, ScopeMode::Relevant).unwrap();
        assert!((r.mev - o.mev).abs() < 1e-9);
        let second = d.lookup("decision_2").unwrap();
        let state = d.lookup("state_2").unwrap();
        assert_eq!(r.policy.get(second).unwrap().scope, vec![state]);
        assert!(r.diagnostics.merged_value_scope.is_some());
    }

    #[test]
    fn single_value_is_standard_solve() {
        let d = fixtures::umbrella();
        let a = solve_additive_decomposition(&d, Method::Queries).unwrap();
        let b = solve(&d, Method::Queries).unwrap();
        assert_eq!(a.policy, b.policy);
        assert_eq!(a.mev, b.mev);
        assert!(a.diagnostics.merged_value_scope.is_none());
    }

    #[test]
    fn dependent_values_per_decision() {
        let d = fixtures::mdp(3, Combination::Sum, 1);
        let m = SeparableValueModel::of(&d).unwrap();
        assert_eq!(m.locals.len(), 3);
        let (first, w) = &m.dependent[0];
        assert_eq!(*first, d.lookup("decision_1").unwrap());
        assert_eq!(w.len(), 3);
        let (_, w3) = &m.dependent[2];
        assert_eq!(w3, &vec![d.lookup("value_3").unwrap()]);
    }
}
