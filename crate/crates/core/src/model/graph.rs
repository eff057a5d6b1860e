//! Graph analysis on the diagram DAG: ordering, d-separation, relevant
//! information sets and node pruning.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{InfluenceDiagram, Kind, VarId};
use crate::error::{Error, Result};

struct Adjacency {
    parents: BTreeMap<VarId, Vec<VarId>>,
    children: BTreeMap<VarId, Vec<VarId>>,
}

impl Adjacency {
    fn of(d: &InfluenceDiagram) -> Adjacency {
        let mut parents: BTreeMap<VarId, Vec<VarId>> = d.nodes().map(|v| (v, Vec::new())).collect();
        let mut children = parents.clone();
        for &(p, c) in &d.arcs {
            if d.contains(p) && d.contains(c) {
                parents.entry(c).or_default().push(p);
                children.entry(p).or_default().push(c);
            }
        }
        Adjacency { parents, children }
    }

    fn parents(&self, v: VarId) -> &[VarId] {
        self.parents.get(&v).map_or(&[], Vec::as_slice)
    }

    fn children(&self, v: VarId) -> &[VarId] {
        self.children.get(&v).map_or(&[], Vec::as_slice)
    }
}

/// Kahn's algorithm, lowest id first among ready nodes. `None` on a cycle.
pub fn topological_order(d: &InfluenceDiagram) -> Option<Vec<VarId>> {
    let adj = Adjacency::of(d);
    let mut indegree: BTreeMap<VarId, usize> = adj.parents.iter().map(|(v, p)| (*v, p.len())).collect();
    let mut ready: BTreeSet<VarId> = indegree.iter().filter(|(_, n)| **n == 0).map(|(v, _)| *v).collect();
    let mut order = Vec::with_capacity(indegree.len());
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in adj.children(v) {
            let n = indegree.get_mut(&c).expect("child is a node");
            *n -= 1;
            if *n == 0 {
                ready.insert(c);
            }
        }
    }
    (order.len() == indegree.len()).then_some(order)
}

/// All proper ancestors of the given nodes.
pub fn ancestors(d: &InfluenceDiagram, of: &[VarId]) -> BTreeSet<VarId> {
    let adj = Adjacency::of(d);
    let mut seen = BTreeSet::new();
    let mut stack: Vec<VarId> = of.iter().flat_map(|v| adj.parents(*v).to_vec()).collect();
    while let Some(v) = stack.pop() {
        if seen.insert(v) {
            stack.extend_from_slice(adj.parents(v));
        }
    }
    seen
}

/// All proper descendants of a node.
pub fn descendants(d: &InfluenceDiagram, of: VarId) -> BTreeSet<VarId> {
    let adj = Adjacency::of(d);
    let mut seen = BTreeSet::new();
    let mut stack = adj.children(of).to_vec();
    while let Some(v) = stack.pop() {
        if seen.insert(v) {
            stack.extend_from_slice(adj.children(v));
        }
    }
    seen
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Direction {
    /// Arrived from a child.
    Up,
    /// Arrived from a parent.
    Down,
}

/// Nodes reachable from `sources` along trails that are active given `given`
/// (the sources themselves included when not given).
pub fn reachable(d: &InfluenceDiagram, sources: &[VarId], given: &BTreeSet<VarId>) -> BTreeSet<VarId> {
    let adj = Adjacency::of(d);
    let mut observed_or_ancestor: BTreeSet<VarId> = given.clone();
    let mut stack: Vec<VarId> = given.iter().copied().collect();
    while let Some(v) = stack.pop() {
        for &p in adj.parents(v) {
            if observed_or_ancestor.insert(p) {
                stack.push(p);
            }
        }
    }

    let mut queue: VecDeque<(VarId, Direction)> = sources.iter().map(|s| (*s, Direction::Up)).collect();
    let mut visited = BTreeSet::new();
    let mut out = BTreeSet::new();
    while let Some((y, dir)) = queue.pop_front() {
        if !visited.insert((y, dir)) {
            continue;
        }
        let observed = given.contains(&y);
        if !observed {
            out.insert(y);
        }
        match dir {
            Direction::Up if !observed => {
                queue.extend(adj.parents(y).iter().map(|p| (*p, Direction::Up)));
                queue.extend(adj.children(y).iter().map(|c| (*c, Direction::Down)));
            }
            Direction::Up => {}
            Direction::Down => {
                if !observed {
                    queue.extend(adj.children(y).iter().map(|c| (*c, Direction::Down)));
                }
                if observed_or_ancestor.contains(&y) {
                    queue.extend(adj.parents(y).iter().map(|p| (*p, Direction::Up)));
                }
            }
        }
    }
    out
}

/// True iff every trail between `x` and `y` is blocked by `given`.
pub fn d_separated(d: &InfluenceDiagram, x: VarId, y: VarId, given: &BTreeSet<VarId>) -> Result<bool> {
    d_separated_sets(d, &[x], &[y], given)
}

pub fn d_separated_sets(d: &InfluenceDiagram, xs: &[VarId], ys: &[VarId], given: &BTreeSet<VarId>) -> Result<bool> {
    for v in xs.iter().chain(ys).chain(given) {
        d.check_var(*v)?;
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| given.contains(v)) {
        return Err(Error::InvalidArgument(format!("{v:?} is both queried and conditioned on")));
    }
    let r = reachable(d, xs, given);
    Ok(ys.iter().all(|y| !r.contains(y)))
}

/// Value nodes that are not d-separated from `decision` given `info` and the evidence.
pub fn dependent_values(d: &InfluenceDiagram, decision: VarId, info: &[VarId]) -> Result<Vec<VarId>> {
    let given: BTreeSet<VarId> = info.iter().copied().chain(d.evidence.keys().copied()).collect();
    let r = reachable(d, &[decision], &given);
    let mut out: Vec<VarId> = d.value_vars().into_iter().filter(|v| d.contains(*v) && r.contains(v)).collect();
    out.sort();
    Ok(out)
}

/// Relevant information computed on `d` as it stands (later decisions keep
/// whatever parents they currently have).
fn relevant_in_place(d: &InfluenceDiagram, decision: VarId) -> Result<Vec<VarId>> {
    let info = d.information_set(decision);
    let values = dependent_values(d, decision, &info)?;
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let mut current = info;
    'outer: loop {
        for (i, &x) in current.iter().enumerate() {
            let given: BTreeSet<VarId> = current
                .iter()
                .copied()
                .filter(|v| *v != x)
                .chain(std::iter::once(decision))
                .chain(d.evidence.keys().copied())
                .collect();
            if d_separated_sets(d, &[x], &values, &given)? {
                current.remove(i);
                continue 'outer;
            }
        }
        return Ok(current);
    }
}

/// Relevant information sets for every decision, computed backwards: once
/// the set for a decision is known, its other information arcs are dropped
/// before earlier decisions are examined.
pub fn relevant_sets(d: &InfluenceDiagram) -> Result<BTreeMap<VarId, Vec<VarId>>> {
    let mut g = d.clone();
    let mut out = BTreeMap::new();
    for &dec in d.decision_order.iter().rev() {
        if !g.contains(dec) {
            out.insert(dec, Vec::new());
            continue;
        }
        let r = relevant_in_place(&g, dec)?;
        g.arcs.retain(|(p, c)| *c != dec || r.contains(p));
        out.insert(dec, r);
    }
    Ok(out)
}

pub fn relevant_information(d: &InfluenceDiagram, decision: VarId) -> Result<Vec<VarId>> {
    d.check_var(decision)?;
    if !d.is_decision(decision) {
        return Err(Error::NotADecision(decision));
    }
    let sets = relevant_sets(d)?;
    Ok(sets.get(&decision).cloned().unwrap_or_default())
}

/// Copy of `d` in which each decision's parents are exactly the given set.
pub fn reduce_information(d: &InfluenceDiagram, sets: &BTreeMap<VarId, Vec<VarId>>) -> InfluenceDiagram {
    let mut out = d.clone();
    let kinds: Vec<Kind> = out.variables.iter().map(|v| v.kind).collect();
    out.arcs.retain(|(p, c)| match sets.get(c) {
        Some(r) if kinds[c.0] == Kind::Decision => r.contains(p),
        _ => true,
    });
    for (dec, r) in sets {
        for &p in r {
            if !out.has_arc(p, *dec) {
                out.arcs.push((p, *dec));
            }
        }
    }
    out
}

fn drop_nodes(d: &mut InfluenceDiagram, gone: &BTreeSet<VarId>) {
    d.arcs.retain(|(p, c)| !gone.contains(p) && !gone.contains(c));
    d.cpts.retain(|v, _| !gone.contains(v));
    d.values.retain(|v| !gone.contains(&v.var));
    d.decision_order.retain(|v| !gone.contains(v));
    d.evidence.retain(|v, _| !gone.contains(v));
    d.pruned.extend(gone.iter().copied());
}

/// Iteratively removes childless chance and decision nodes that are neither
/// targets nor evidence.
pub fn remove_barren(d: &InfluenceDiagram, targets: &[VarId]) -> InfluenceDiagram {
    let mut out = d.clone();
    loop {
        let adj = Adjacency::of(&out);
        let barren: BTreeSet<VarId> = out
            .nodes()
            .filter(|v| {
                matches!(out.kind(*v), Kind::Chance | Kind::Decision)
                    && !targets.contains(v)
                    && !out.evidence.contains_key(v)
                    && adj.children(*v).is_empty()
            })
            .collect();
        if barren.is_empty() {
            return out;
        }
        drop_nodes(&mut out, &barren);
    }
}

/// Removes barren nodes, then any set of chance nodes (evidence included)
/// that is closed under children and d-separated from every target given
/// the remaining evidence. Conditional queries on the targets are unchanged;
/// the probability of the dropped evidence is not retained.
pub fn prune(d: &InfluenceDiagram, targets: &[VarId]) -> Result<InfluenceDiagram> {
    for t in targets {
        d.check_var(*t)?;
    }
    let mut out = remove_barren(d, targets);
    let evidence: BTreeSet<VarId> = out.evidence.keys().copied().collect();
    let live_targets: Vec<VarId> = targets.iter().copied().filter(|t| out.contains(*t)).collect();

    let mut candidates = BTreeSet::new();
    for x in out.nodes() {
        if out.kind(x) != Kind::Chance || live_targets.contains(&x) {
            continue;
        }
        let mut given = evidence.clone();
        given.remove(&x);
        if d_separated_sets(&out, &[x], &live_targets, &given)? {
            candidates.insert(x);
        }
    }
    // keep only a set closed under children
    let adj = Adjacency::of(&out);
    loop {
        let bad: Vec<VarId> = candidates
            .iter()
            .copied()
            .filter(|v| adj.children(*v).iter().any(|c| !candidates.contains(c)))
            .collect();
        if bad.is_empty() {
            break;
        }
        for v in bad {
            candidates.remove(&v);
        }
    }
    if candidates.is_empty() {
        return Ok(out);
    }
    let given: BTreeSet<VarId> = evidence.difference(&candidates).copied().collect();
    let set: Vec<VarId> = candidates.iter().copied().collect();
    if d_separated_sets(&out, &set, &live_targets, &given)? {
        drop_nodes(&mut out, &candidates);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{Factor, Semantics};
    use crate::fixtures;
    use crate::model::DiagramBuilder;

    fn set(v: &[VarId]) -> BTreeSet<VarId> {
        v.iter().copied().collect()
    }

    #[test]
    fn umbrella_d_separation() {
        let d = fixtures::umbrella();
        let w = d.lookup("weather").unwrap();
        let f = d.lookup("forecast").unwrap();
        let b = d.lookup("bring_umbrella").unwrap();
        let s = d.lookup("satisfaction").unwrap();
        assert!(!d_separated(&d, w, s, &set(&[])).unwrap());
        assert!(d_separated(&d, f, s, &set(&[w, b])).unwrap());
        assert!(!d_separated(&d, f, s, &set(&[b])).unwrap());
    }

    #[test]
    fn collider() {
        let mut bld = DiagramBuilder::new();
        let a = bld.chance("a", &["0", "1"]);
        let b = bld.chance("b", &["0", "1"]);
        let c = bld.chance("c", &["0", "1"]);
        bld.arc(a, c).arc(b, c);
        let d = bld.build().unwrap();
        assert!(d_separated(&d, a, b, &set(&[])).unwrap());
        assert!(!d_separated(&d, a, b, &set(&[c])).unwrap());
        assert_eq!(d_separated(&d, a, VarId(9), &set(&[])).unwrap_err().code(), "UNKNOWN_VARIABLE");
    }

    #[test]
    fn relevant_information_fixtures() {
        let d = fixtures::umbrella();
        let b = d.lookup("bring_umbrella").unwrap();
        assert_eq!(relevant_information(&d, b).unwrap(), vec![d.lookup("forecast").unwrap()]);
        let w = d.lookup("weather").unwrap();
        assert_eq!(relevant_information(&d, w).unwrap_err().code(), "NOT_A_DECISION");

        let d = fixtures::umbrella_tv();
        let b = d.lookup("bring_umbrella").unwrap();
        let mut want = vec![d.lookup("tv_station").unwrap(), d.lookup("forecast").unwrap()];
        want.sort();
        assert_eq!(relevant_information(&d, b).unwrap(), want);

        let d = fixtures::mdp(2, crate::model::Combination::Sum, 7);
        let d2 = d.lookup("decision_2").unwrap();
        assert_eq!(relevant_information(&d, d2).unwrap(), vec![d.lookup("state_2").unwrap()]);
    }

    #[test]
    fn markov_states_for_three_periods() {
        let d = fixtures::mdp(3, crate::model::Combination::Sum, 3);
        for i in 1..=3 {
            let dec = d.lookup(&format!("decision_{i}")).unwrap();
            let state = d.lookup(&format!("state_{i}")).unwrap();
            assert_eq!(relevant_information(&d, dec).unwrap(), vec![state], "decision {i}");
        }
    }

    fn add_chance(d: &mut InfluenceDiagram, name: &str, parents: &[VarId], probs: &[f64]) -> VarId {
        let id = VarId(d.variables.len());
        d.variables.push(crate::model::Variable {
            name: name.into(),
            label: name.into(),
            kind: Kind::Chance,
            outcomes: vec!["0".into(), "1".into()],
        });
        let mut scope = parents.to_vec();
        scope.push(id);
        for p in parents {
            d.arcs.push((*p, id));
        }
        let cards = vec![2; scope.len()];
        d.cpts.insert(id, Factor::new(scope, cards, probs.to_vec(), Semantics::Probability).unwrap());
        id
    }

    #[test]
    fn prune_examples() {
        let d = fixtures::umbrella();
        let s = d.lookup("satisfaction").unwrap();
        let p = prune(&d, &[s]).unwrap();
        assert!(p.pruned.is_empty());

        let mut d2 = fixtures::umbrella();
        let x = add_chance(&mut d2, "x", &[], &[0.5, 0.5]);
        let p = prune(&d2, &[s]).unwrap();
        assert_eq!(p.pruned, set(&[x]));

        let mut d3 = fixtures::umbrella_tv();
        let n = d3.lookup("newspaper").unwrap();
        d3.evidence.clear();
        let s3 = d3.lookup("satisfaction").unwrap();
        let p = prune(&d3, &[s3]).unwrap();
        assert!(p.pruned.contains(&n));
    }

    #[test]
    fn prune_drops_isolated_evidence_chain() {
        // x -> y(observed) is disconnected from the value
        let mut d = fixtures::umbrella();
        let x = add_chance(&mut d, "x", &[], &[0.4, 0.6]);
        let y = add_chance(&mut d, "y", &[x], &[0.9, 0.1, 0.2, 0.8]);
        d.evidence.insert(y, 1);
        let s = d.lookup("satisfaction").unwrap();
        let p = prune(&d, &[s]).unwrap();
        assert_eq!(p.pruned, set(&[x, y]));
        assert!(p.evidence.is_empty());
    }

}
