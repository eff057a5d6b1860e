//! Brute-force ground truth by exhaustive enumeration.
//!
//! Everything here works straight from the definition of expected value:
//! enumerate every configuration of the chance variables, follow the policy
//! through the decisions, and weight the value by the joint probability.
//! Only meant for small diagrams.

use crate::error::{Error, Result};
use crate::factor::{linear_index, Assignment, Configurations};
use crate::model::{topological_order, Combination, InfluenceDiagram, Kind, VarId};
use crate::policy::{DecisionPolicy, Policy};
use crate::transform::{check_valid, prepare, TransformOptions};

/// Largest number of deterministic policy vectors [`brute_solve`] will try.
pub const POLICY_SPACE_GUARD: u128 = 1_000_000;

/// Which observations a policy may depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScopeMode {
    /// Relevant information only.
    Relevant,
    /// Every informational predecessor.
    FullInformation,
}

/// Total value of a complete assignment.
pub fn total_value(d: &InfluenceDiagram, a: &Assignment) -> Result<f64> {
    let mut out = match d.combination {
        Combination::Product => 1.0,
        _ => 0.0,
    };
    for v in &d.values {
        let x = v.table.value_at(a)?;
        match d.combination {
            Combination::Product => out *= x,
            _ => out += x,
        }
    }
    Ok(out)
}

/// Joint probability of a complete assignment (decisions contribute nothing).
fn joint_weight(d: &InfluenceDiagram, chance: &[VarId], a: &Assignment) -> Result<f64> {
    let mut w = 1.0;
    for v in chance {
        w *= d.cpts[v].value_at(a)?;
        if w == 0.0 {
            break;
        }
    }
    Ok(w)
}

struct Layout {
    /// Live chance variables, observed ones included.
    chance: Vec<VarId>,
    /// Unobserved chance variables that get enumerated.
    free: Vec<VarId>,
    free_cards: Vec<usize>,
    /// Live decisions in topological order.
    decisions: Vec<VarId>,
}

impl Layout {
    fn of(d: &InfluenceDiagram) -> Result<Layout> {
        let order = topological_order(d).ok_or_else(|| Error::InvalidDiagram("cycle".into()))?;
        let chance: Vec<VarId> = order.iter().copied().filter(|v| d.kind(*v) == Kind::Chance).collect();
        let free: Vec<VarId> = chance.iter().copied().filter(|v| !d.evidence.contains_key(v)).collect();
        let free_cards = free.iter().map(|v| d.card(*v)).collect();
        let decisions = order.iter().copied().filter(|v| d.kind(*v) == Kind::Decision).collect();
        Ok(Layout { chance, free, free_cards, decisions })
    }

    fn assignment(&self, d: &InfluenceDiagram, config: &[usize]) -> Assignment {
        let mut a = d.evidence.clone();
        for (v, i) in self.free.iter().zip(config) {
            a.insert(*v, *i);
        }
        a
    }
}

/// `E{v | policy, E=e}` and `P{E=e}`.
pub fn expected_value(d: &InfluenceDiagram, policy: &Policy) -> Result<(f64, f64)> {
    check_valid(d)?;
    policy.check(d)?;
    let layout = Layout::of(d)?;
    let mut mass = 0.0;
    let mut total = 0.0;
    for config in Configurations::new(&layout.free_cards) {
        let mut a = layout.assignment(d, &config);
        for &dec in &layout.decisions {
            let rule = policy.get(dec).ok_or(Error::IncompletePolicy(dec))?;
            let choice = rule.choose(&a)?;
            a.insert(dec, choice);
        }
        let w = joint_weight(d, &layout.chance, &a)?;
        if w == 0.0 {
            continue;
        }
        mass += w;
        total += w * total_value(d, &a)?;
    }
    if mass <= 0.0 {
        return Err(Error::ZeroEvidenceProbability);
    }
    Ok((total / mass, mass))
}

/// Policy scopes per decision under the given mode, in decision order.
pub fn policy_scopes(d: &InfluenceDiagram, mode: ScopeMode) -> Result<Vec<(VarId, Vec<VarId>)>> {
    match mode {
        ScopeMode::FullInformation => Ok(d.decision_order.iter().map(|&x| (x, d.information_set(x))).collect()),
        ScopeMode::Relevant => Ok(prepare(d, TransformOptions::default())?.relevant),
    }
}

/// The space of deterministic policy vectors over fixed scopes. A policy
/// vector is encoded as one mixed-radix number with one digit per
/// (decision, scope configuration) slot.
#[derive(Clone, Debug)]
pub struct PolicySpace {
    pub scopes: Vec<(VarId, Vec<VarId>)>,
    scope_cards: Vec<Vec<usize>>,
    alternatives: Vec<usize>,
    /// First slot of each decision.
    offsets: Vec<usize>,
    radices: Vec<usize>,
}

impl PolicySpace {
    pub fn new(d: &InfluenceDiagram, scopes: Vec<(VarId, Vec<VarId>)>) -> Self {
        let mut scope_cards = Vec::new();
        let mut alternatives = Vec::new();
        let mut offsets = Vec::new();
        let mut radices = Vec::new();
        for (dec, scope) in &scopes {
            let cards: Vec<usize> = scope.iter().map(|v| d.card(*v)).collect();
            let rows: usize = cards.iter().product();
            offsets.push(radices.len());
            radices.extend(std::iter::repeat(d.card(*dec)).take(rows));
            alternatives.push(d.card(*dec));
            scope_cards.push(cards);
        }
        PolicySpace { scopes, scope_cards, alternatives, offsets, radices }
    }

    /// Number of policy vectors, saturating.
    pub fn size(&self) -> u128 {
        self.radices.iter().fold(1u128, |acc, &r| acc.saturating_mul(r as u128))
    }

    fn digits(&self, mut code: u64) -> Vec<usize> {
        let mut out = vec![0; self.radices.len()];
        for (slot, &r) in out.iter_mut().zip(&self.radices).rev() {
            *slot = (code % r as u64) as usize;
            code /= r as u64;
        }
        out
    }

    pub fn decode(&self, code: u64) -> Policy {
        let digits = self.digits(code);
        let decisions = self
            .scopes
            .iter()
            .enumerate()
            .map(|(k, (dec, scope))| {
                let rows: usize = self.scope_cards[k].iter().product();
                let start = self.offsets[k];
                DecisionPolicy {
                    decision: *dec,
                    scope: scope.clone(),
                    scope_cards: self.scope_cards[k].clone(),
                    choices: digits[start..start + rows].to_vec(),
                    flagged: vec![false; rows],
                }
            })
            .collect();
        Policy { decisions }
    }

    pub fn alternatives(&self, k: usize) -> usize {
        self.alternatives[k]
    }
}

/// Every maximizing policy vector and the maximal expected value.
#[derive(Clone, Debug)]
pub struct BruteSolution {
    pub mev: f64,
    pub evidence_probability: f64,
    /// Codes of all optimal policy vectors, ascending.
    pub optimal: Vec<u64>,
    pub space: PolicySpace,
}

impl BruteSolution {
    /// The optimal policy with the smallest code.
    pub fn best(&self) -> Policy {
        self.space.decode(self.optimal[0])
    }

    pub fn optimal_policies(&self) -> impl Iterator<Item = Policy> + '_ {
        self.optimal.iter().map(|c| self.space.decode(*c))
    }
}

/// Relative tolerance under which two policy values count as tied.
pub const ORACLE_TIE: f64 = 1e-10;

/// Exhaustive search over deterministic policy vectors.
pub fn brute_solve(d: &InfluenceDiagram, mode: ScopeMode) -> Result<BruteSolution> {
    check_valid(d)?;
    let scopes = policy_scopes(d, mode)?;
    brute_solve_scopes(d, scopes)
}

/// Exhaustive search with explicitly given policy scopes.
pub fn brute_solve_scopes(d: &InfluenceDiagram, scopes: Vec<(VarId, Vec<VarId>)>) -> Result<BruteSolution> {
    let space = PolicySpace::new(d, scopes);
    let size = space.size();
    if size > POLICY_SPACE_GUARD {
        return Err(Error::PolicySpaceTooLarge(size));
    }
    let layout = Layout::of(d)?;
    let dec_cards: Vec<usize> = layout.decisions.iter().map(|v| d.card(*v)).collect();
    let slot_of: Vec<usize> = layout
        .decisions
        .iter()
        .map(|dec| space.scopes.iter().position(|(x, _)| x == dec).ok_or(Error::IncompletePolicy(*dec)))
        .collect::<Result<_>>()?;

    // weight and weighted value per (free chance configuration, decision configuration)
    let chance_configs: Vec<Vec<usize>> = Configurations::new(&layout.free_cards).collect();
    let mut weights = Vec::new();
    let mut weighted = Vec::new();
    let mut mass = 0.0;
    for config in &chance_configs {
        let base = layout.assignment(d, config);
        let mut w_row = Vec::new();
        let mut wv_row = Vec::new();
        for dconf in Configurations::new(&dec_cards) {
            let mut a = base.clone();
            for (v, i) in layout.decisions.iter().zip(&dconf) {
                a.insert(*v, *i);
            }
            let w = joint_weight(d, &layout.chance, &a)?;
            let wv = if w == 0.0 { 0.0 } else { w * total_value(d, &a)? };
            w_row.push(w);
            wv_row.push(wv);
        }
        weights.push(w_row);
        weighted.push(wv_row);
    }

    // how each decision reads its scope: chance part is fixed per configuration,
    // decision part is read from the decisions already taken
    let free_pos = |v: VarId| layout.free.iter().position(|x| *x == v);
    let mut readers = Vec::new();
    for &k in &slot_of {
        let (_, scope) = &space.scopes[k];
        let cards = &space.scope_cards[k];
        let mut parts = Vec::new();
        for (i, v) in scope.iter().enumerate() {
            let stride: usize = cards[i + 1..].iter().product();
            let source = if let Some(p) = free_pos(*v) {
                Source::Free(p)
            } else if let Some(&o) = d.evidence.get(v) {
                Source::Fixed(o)
            } else if let Some(p) = layout.decisions.iter().position(|x| x == v) {
                Source::Decision(p)
            } else {
                return Err(Error::VarNotInScope(*v));
            };
            parts.push((source, stride));
        }
        readers.push(parts);
    }

    let mut best = f64::NEG_INFINITY;
    let mut scores = Vec::with_capacity(size as usize);
    for code in 0..size as u64 {
        let digits = space.digits(code);
        let mut total = 0.0;
        let mut dconf = vec![0usize; layout.decisions.len()];
        for (c, config) in chance_configs.iter().enumerate() {
            for (j, parts) in readers.iter().enumerate() {
                let mut row = 0;
                for (src, stride) in parts {
                    let x = match *src {
                        Source::Free(p) => config[p],
                        Source::Fixed(o) => o,
                        Source::Decision(p) => dconf[p],
                    };
                    row += x * stride;
                }
                dconf[j] = digits[space.offsets[slot_of[j]] + row];
            }
            total += weighted[c][linear_index(&dec_cards, &dconf)];
            if code == 0 {
                mass += weights[c][linear_index(&dec_cards, &dconf)];
            }
        }
        scores.push(total);
        best = best.max(total);
    }
    if mass <= 0.0 {
        return Err(Error::ZeroEvidenceProbability);
    }
    let tol = ORACLE_TIE * best.abs().max(mass);
    let optimal = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| **s >= best - tol)
        .map(|(i, _)| i as u64)
        .collect();
    Ok(BruteSolution { mev: best / mass, evidence_probability: mass, optimal, space })
}

#[derive(Clone, Copy)]
enum Source {
    Free(usize),
    Fixed(usize),
    Decision(usize),
}

/// Maximal expected value when every decision sees its full information set,
/// by expectimax over the temporal order. Scales to diagrams whose
/// full-information policy space is far beyond [`POLICY_SPACE_GUARD`].
pub fn rollback(d: &InfluenceDiagram) -> Result<f64> {
    check_valid(d)?;
    let layout = Layout::of(d)?;
    let mut sequence: Vec<VarId> = Vec::new();
    for &dec in &d.decision_order {
        for v in d.information_set(dec) {
            if !sequence.contains(&v) && d.kind(v) == Kind::Chance {
                sequence.push(v);
            }
        }
        sequence.push(dec);
    }
    for &v in &layout.free {
        if !sequence.contains(&v) {
            sequence.push(v);
        }
    }
    let mut a = d.evidence.clone();
    let (wv, w) = expectimax(d, &layout.chance, &sequence, &mut a)?;
    if w <= 0.0 {
        return Err(Error::ZeroEvidenceProbability);
    }
    Ok(wv / w)
}

fn expectimax(d: &InfluenceDiagram, chance: &[VarId], rest: &[VarId], a: &mut Assignment) -> Result<(f64, f64)> {
    let Some((&v, tail)) = rest.split_first() else {
        let w = joint_weight(d, chance, a)?;
        let wv = if w == 0.0 { 0.0 } else { w * total_value(d, a)? };
        return Ok((wv, w));
    };
    let mut out: Option<(f64, f64)> = None;
    for i in 0..d.card(v) {
        a.insert(v, i);
        let (wv, w) = expectimax(d, chance, tail, a)?;
        out = Some(match (out, d.kind(v)) {
            (None, _) => (wv, w),
            (Some((bwv, bw)), Kind::Decision) => {
                if wv > bwv {
                    (wv, w)
                } else {
                    (bwv, bw)
                }
            }
            (Some((swv, sw)), _) => (swv + wv, sw + w),
        });
    }
    a.remove(&v);
    Ok(out.expect("variables have outcomes"))
}

/// Conditional expectations of the value for a diagram with one decision.
#[derive(Clone, Debug)]
pub struct ConditionalValues {
    pub scope: Vec<VarId>,
    pub scope_cards: Vec<usize>,
    pub alternatives: usize,
    /// `E{v | d, r}`, row-major over `scope ++ [decision]`; NaN where `r` has no mass.
    pub expectation: Vec<f64>,
    /// `P{r, E=e}` per scope configuration.
    pub mass: Vec<f64>,
}

/// `E{v | d, r}` for every alternative `d` and configuration `r` of `scope`,
/// by direct enumeration. The scope must consist of non-descendants of the decision.
pub fn conditional_values(d: &InfluenceDiagram, decision: VarId, scope: &[VarId]) -> Result<ConditionalValues> {
    check_valid(d)?;
    if !d.is_decision(decision) {
        return Err(Error::NotADecision(decision));
    }
    if d.decision_order.len() != 1 {
        return Err(Error::Unsupported("conditional values need a single decision".into()));
    }
    let layout = Layout::of(d)?;
    let scope_cards: Vec<usize> = scope.iter().map(|v| d.card(*v)).collect();
    let rows: usize = scope_cards.iter().product();
    let alts = d.card(decision);
    let mut w = vec![0.0; rows * alts];
    let mut wv = vec![0.0; rows * alts];
    for config in Configurations::new(&layout.free_cards) {
        let mut a = layout.assignment(d, &config);
        let r: Vec<usize> = scope.iter().map(|v| a[v]).collect();
        let row = linear_index(&scope_cards, &r);
        for alt in 0..alts {
            a.insert(decision, alt);
            let x = joint_weight(d, &layout.chance, &a)?;
            if x > 0.0 {
                w[row * alts + alt] += x;
                wv[row * alts + alt] += x * total_value(d, &a)?;
            }
        }
    }
    let expectation = w.iter().zip(&wv).map(|(a, b)| if *a > 0.0 { b / a } else { f64::NAN }).collect();
    let mass = (0..rows).map(|r| w[r * alts]).collect();
    Ok(ConditionalValues { scope: scope.to_vec(), scope_cards, alternatives: alts, expectation, mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::DiagramBuilder;

    fn constant_rule(d: &InfluenceDiagram, dec: VarId, scope: Vec<VarId>, choice: usize) -> DecisionPolicy {
        let cards: Vec<usize> = scope.iter().map(|v| d.card(*v)).collect();
        let n = cards.iter().product();
        DecisionPolicy { decision: dec, scope, scope_cards: cards, choices: vec![choice; n], flagged: vec![false; n] }
    }

    #[test]
    fn umbrella_always_leave_and_take() {
        let d = fixtures::umbrella();
        let b = d.lookup("bring_umbrella").unwrap();
        let leave = Policy { decisions: vec![constant_rule(&d, b, vec![], 0)] };
        let take = Policy { decisions: vec![constant_rule(&d, b, vec![], 1)] };
        // 0.7 * 100 + 0.3 * 0 and 0.7 * 80 + 0.3 * 70
        assert!((expected_value(&d, &leave).unwrap().0 - 70.0).abs() < 1e-12);
        assert!((expected_value(&d, &take).unwrap().0 - 77.0).abs() < 1e-12);
    }

    #[test]
    fn umbrella_unique_optimum() {
        let d = fixtures::umbrella();
        let s = brute_solve(&d, ScopeMode::Relevant).unwrap();
        assert_eq!(s.optimal.len(), 1);
        let p = s.best();
        assert_eq!(p.decisions[0].choices, vec![0, 1]);
        // sunny: 0.56 * 100 + 0.06 * 0 ; rainy: 0.14 * 80 + 0.24 * 70
        assert!((s.mev - 84.0).abs() < 1e-12);
        assert!((expected_value(&d, &p).unwrap().0 - s.mev).abs() < 1e-12);
    }

    #[test]
    fn constant_value_any_policy() {
        let mut d = fixtures::umbrella();
        d.values[0].table = d.values[0].table.map(|_| 7.5);
        let b = d.lookup("bring_umbrella").unwrap();
        let f = d.lookup("forecast").unwrap();
        let p = Policy { decisions: vec![constant_rule(&d, b, vec![f], 1)] };
        assert!((expected_value(&d, &p).unwrap().0 - 7.5).abs() < 1e-12);
    }

    #[test]
    fn contradicting_evidence() {
        let mut b = DiagramBuilder::new();
        let x = b.chance("x", &["0", "1"]);
        let y = b.chance("y", &["0", "1"]);
        let dec = b.decision("dec", &["a", "b"]);
        let v = b.value("v");
        b.cpt(x, &[], &[1.0, 0.0])
            .cpt(y, &[x], &[1.0, 0.0, 0.0, 1.0])
            .utility(v, &[dec], &[0.0, 1.0])
            .observe(y, 1);
        let d = b.build().unwrap();
        let p = Policy { decisions: vec![constant_rule(&d, dec, vec![], 0)] };
        assert_eq!(expected_value(&d, &p).unwrap_err().code(), "ZERO_EVIDENCE_PROBABILITY");
    }

    #[test]
    fn total_tie() {
        let mut b = DiagramBuilder::new();
        let x = b.chance("x", &["0", "1"]);
        b.decision("dec", &["a", "b"]);
        let v = b.value("v");
        b.cpt(x, &[], &[0.5, 0.5]).utility(v, &[x], &[1.0, 3.0]);
        let d = b.build().unwrap();
        let s = brute_solve(&d, ScopeMode::Relevant).unwrap();
        assert_eq!(s.optimal.len(), 2);
        assert!((s.mev - 2.0).abs() < 1e-12);
    }

    #[test]
    fn relevant_matches_full_information() {
        for d in [fixtures::umbrella(), fixtures::umbrella_tv(), fixtures::mdp(2, Combination::Sum, 5)] {
            let r = brute_solve(&d, ScopeMode::Relevant).unwrap();
            let f = brute_solve(&d, ScopeMode::FullInformation).unwrap();
            assert!((r.mev - f.mev).abs() < 1e-9);
            assert!((rollback(&d).unwrap() - f.mev).abs() < 1e-9);
        }
    }

    #[test]
    fn guard_trips() {
        let d = fixtures::mdp(3, Combination::Sum, 5);
        let err = brute_solve(&d, ScopeMode::FullInformation).unwrap_err();
        assert_eq!(err.code(), "POLICY_SPACE_TOO_LARGE");
    }

    #[test]
    fn conditional_values_umbrella() {
        let d = fixtures::umbrella();
        let b = d.lookup("bring_umbrella").unwrap();
        let f = d.lookup("forecast").unwrap();
        let c = conditional_values(&d, b, &[f]).unwrap();
        // P(sunny) = 0.62; E{v | sunny, leave} = 0.56 * 100 / 0.62
        assert!((c.mass[0] - 0.62).abs() < 1e-12);
        assert!((c.expectation[0] - 56.0 / 0.62).abs() < 1e-9);
    }
}
