//! One entry point over every solver.

use crate::cluster_decision::{solve_by_clustering, solve_one_directional, ClusterMode, OneDirectionalMode, ValuePlacement};
use crate::error::Result;
use crate::model::InfluenceDiagram;
use crate::oracle::{brute_solve, ScopeMode};
use crate::policy::{Diagnostics, EvaluationResult};
use crate::queries::solve_by_queries;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Backward probabilistic queries on the belief network.
    Queries,
    /// Decision clusters collected in reverse order.
    Cluster(ClusterMode),
    /// Rooted one-directional tree, single pass.
    OneDirectional(OneDirectionalMode, ValuePlacement),
    /// Exhaustive policy enumeration over relevant information.
    Oracle,
}

impl Method {
    /// Every solver configuration, for cross-checking.
    pub fn all() -> Vec<Method> {
        vec![
            Method::Queries,
            Method::Cluster(ClusterMode::Rescaled),
            Method::Cluster(ClusterMode::Valuation),
            Method::Cluster(ClusterMode::Likelihood),
            Method::OneDirectional(OneDirectionalMode::Valuation, ValuePlacement::RootPath),
            Method::OneDirectional(OneDirectionalMode::Rescaled, ValuePlacement::Everywhere),
        ]
    }
}

pub fn solve(d: &InfluenceDiagram, method: Method) -> Result<EvaluationResult> {
    match method {
        Method::Queries => solve_by_queries(d),
        Method::Cluster(mode) => solve_by_clustering(d, mode),
        Method::OneDirectional(mode, placement) => solve_one_directional(d, mode, placement),
        Method::Oracle => {
            let o = brute_solve(d, ScopeMode::Relevant)?;
            let notes = if o.optimal.len() > 1 {
                vec![format!("{} optimal policies; reporting the first", o.optimal.len())]
            } else {
                Vec::new()
            };
            Ok(EvaluationResult {
                policy: o.best(),
                meu: None,
                mev: o.mev,
                evidence_probability: o.evidence_probability,
                diagnostics: Diagnostics { backend: "oracle".into(), notes, ..Diagnostics::default() },
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn every_method_agrees_on_umbrella() {
        let d = fixtures::umbrella();
        let reference = solve(&d, Method::Oracle).unwrap();
        for m in Method::all() {
            let r = solve(&d, m).unwrap();
            assert!((r.mev - reference.mev).abs() < 1e-9, "{m:?}");
            assert_eq!(r.policy, reference.policy, "{m:?}");
        }
    }
}
