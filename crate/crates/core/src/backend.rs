//! Pieces shared by the solvers.

use crate::error::{Error, Result};
use crate::inference::{build_cluster_tree, ClusterTree, EvidenceMode, Network, Propagation};
use crate::policy::{Diagnostics, EvaluationResult};
use crate::transform::{base_network, value_range, PreparedDiagram};

/// `P{E=e}` from the chance part of the prepared diagram (decisions uniform).
pub(crate) fn evidence_probability(p: &PreparedDiagram) -> Result<f64> {
    let (network, _, _) = base_network(p);
    network_evidence_probability(&network, &p.diagram.evidence)
}

pub(crate) fn network_evidence_probability(network: &Network, evidence: &crate::factor::Assignment) -> Result<f64> {
    let tree = build_cluster_tree(network, &[]);
    let mut prop = Propagation::new(&tree, network.tables.clone(), evidence, EvidenceMode::Indicator)?;
    let z = prop.total()?;
    if z <= 0.0 {
        return Err(Error::ZeroEvidenceProbability);
    }
    Ok(z)
}

/// Result for a constant value table: every policy is optimal.
pub(crate) fn degenerate_result(p: &PreparedDiagram, backend: &str) -> Result<EvaluationResult> {
    let (min, _) = value_range(&p.value().table);
    let evidence_probability = evidence_probability(p)?;
    Ok(EvaluationResult {
        policy: p.complete_policy(Vec::new()),
        meu: None,
        mev: min,
        evidence_probability,
        diagnostics: Diagnostics {
            backend: backend.to_string(),
            merged_value_scope: p.merged_value_scope.clone(),
            notes: vec!["constant value table: all alternatives equally attractive".into()],
            ..Diagnostics::default()
        },
    })
}

pub(crate) fn cluster_sizes(tree: &ClusterTree) -> Vec<usize> {
    tree.clusters.iter().map(Vec::len).collect()
}
