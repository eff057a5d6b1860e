//! Seeded generators for random influence diagrams and belief networks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{relevant_sets, DiagramBuilder, InfluenceDiagram, Kind, VarId};

/// Probability vector of length `k` with every entry at least `floor`.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0) + 1e-6).collect();
    let total: f64 = raw.iter().sum();
    let spare = 1.0 - floor * k as f64;
    let mut out: Vec<f64> = raw.iter().map(|x| floor + spare * x / total).collect();
    // absorb rounding in the last entry
    let head: f64 = out[..k - 1].iter().sum();
    out[k - 1] = 1.0 - head;
    out
}

/// Shape of the random diagrams produced by [`random_diagram`].
#[derive(Clone, Debug)]
pub struct DiagramShape {
    pub min_chance: usize,
    pub max_chance: usize,
    pub min_decisions: usize,
    pub max_decisions: usize,
    pub max_alternatives: usize,
    pub max_parents: usize,
    pub value_range: (f64, f64),
    pub probability_floor: f64,
    /// Observe one eligible chance variable.
    pub evidence: bool,
    /// Reject diagrams whose relevant-information policy space is larger.
    pub max_policy_space: u128,
}

impl Default for DiagramShape {
    fn default() -> Self {
        DiagramShape {
            min_chance: 1,
            max_chance: 5,
            min_decisions: 1,
            max_decisions: 2,
            max_alternatives: 3,
            max_parents: 2,
            value_range: (-10.0, 10.0),
            probability_floor: 0.01,
            evidence: false,
            max_policy_space: 20_000,
        }
    }
}

/// Number of deterministic policies over the given scopes (saturating).
pub fn policy_space_size(d: &InfluenceDiagram, scopes: &[(VarId, Vec<VarId>)]) -> u128 {
    let mut total: u128 = 1;
    for (dec, scope) in scopes {
        let configs: u128 = scope.iter().map(|v| d.card(*v) as u128).product();
        let alts = d.card(*dec) as u128;
        let Ok(exp) = u32::try_from(configs) else {
            return u128::MAX;
        };
        let n = alts.checked_pow(exp).unwrap_or(u128::MAX);
        total = total.saturating_mul(n);
    }
    total
}

/// Random binary-chance influence diagram satisfying every validation rule.
pub fn random_diagram<R: Rng + ?Sized>(rng: &mut R, shape: &DiagramShape) -> InfluenceDiagram {
    loop {
        let d = try_random_diagram(rng, shape);
        let Ok(sets) = relevant_sets(&d) else { continue };
        let scopes: Vec<(VarId, Vec<VarId>)> = sets.into_iter().collect();
        if policy_space_size(&d, &scopes) <= shape.max_policy_space {
            return d;
        }
    }
}

fn try_random_diagram<R: Rng + ?Sized>(rng: &mut R, shape: &DiagramShape) -> InfluenceDiagram {
    let n_chance = rng.gen_range(shape.min_chance..=shape.max_chance);
    let n_dec = rng.gen_range(shape.min_decisions..=shape.max_decisions);
    let mut kinds = vec![Kind::Chance; n_chance];
    kinds.extend(std::iter::repeat(Kind::Decision).take(n_dec));
    kinds.shuffle(rng);

    let mut b = DiagramBuilder::new();
    let mut placed: Vec<(VarId, Kind)> = Vec::new();
    let (mut nc, mut nd) = (0, 0);
    for kind in kinds {
        let id = match kind {
            Kind::Chance => {
                nc += 1;
                b.chance(&format!("x{nc}"), &["0", "1"])
            }
            _ => {
                nd += 1;
                let k = rng.gen_range(2..=shape.max_alternatives.max(2));
                let alts: Vec<String> = (0..k).map(|i| format!("a{i}")).collect();
                let alts: Vec<&str> = alts.iter().map(String::as_str).collect();
                b.decision(&format!("d{nd}"), &alts)
            }
        };
        let mut parents: Vec<VarId> = Vec::new();
        for &(p, pk) in &placed {
            if parents.len() >= shape.max_parents {
                break;
            }
            let eligible = kind == Kind::Chance || pk == Kind::Chance;
            if eligible && rng.gen_bool(if kind == Kind::Chance { 0.4 } else { 0.5 }) {
                parents.push(p);
            }
        }
        if kind == Kind::Chance {
            let rows: usize = parents.iter().map(|p| cards_of(&b, *p)).product();
            let mut table = Vec::new();
            for _ in 0..rows {
                table.extend(random_distribution(rng, 2, shape.probability_floor));
            }
            b.cpt(id, &parents, &table);
        } else {
            b.informed_by(id, &parents);
        }
        placed.push((id, kind));
    }

    let value = b.value("v");
    let mut attrs: Vec<VarId> = placed.iter().filter(|_| rng.gen_bool(0.4)).map(|(v, _)| *v).take(3).collect();
    let last_decision = placed.iter().rev().find(|(_, k)| *k == Kind::Decision).map(|(v, _)| *v);
    if let Some(dec) = last_decision {
        if !attrs.contains(&dec) && rng.gen_bool(0.8) {
            if attrs.len() >= 3 {
                attrs.pop();
            }
            attrs.push(dec);
        }
    }
    if attrs.is_empty() {
        attrs.push(placed[rng.gen_range(0..placed.len())].0);
    }
    let size: usize = attrs.iter().map(|p| cards_of(&b, *p)).product();
    let (lo, hi) = shape.value_range;
    let table: Vec<f64> = (0..size).map(|_| rng.gen_range(lo..hi)).collect();
    b.utility(value, &attrs, &table);
    b.complete_no_forgetting();
    let mut d = b.build().expect("generated tables are well formed");

    if shape.evidence {
        let mut eligible: Vec<VarId> = d
            .nodes_of(Kind::Chance)
            .into_iter()
            .filter(|v| {
                !d.decision_order
                    .iter()
                    .any(|dec| crate::model::descendants(&d, *dec).contains(v))
            })
            .collect();
        eligible.shuffle(rng);
        if let Some(&v) = eligible.first() {
            d.evidence.insert(v, rng.gen_range(0..2));
        }
    }
    d
}

fn cards_of(b: &DiagramBuilder, v: VarId) -> usize {
    b.cardinality(v)
}

/// Random belief network of binary chance variables (no decisions or values).
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, n: usize, max_parents: usize, floor: f64) -> InfluenceDiagram {
    let mut b = DiagramBuilder::new();
    let ids: Vec<VarId> = (0..n).map(|i| b.chance(&format!("x{i}"), &["0", "1"])).collect();
    for (i, &v) in ids.iter().enumerate() {
        let mut parents = Vec::new();
        for &p in &ids[..i] {
            if parents.len() < max_parents && rng.gen_bool(0.5) {
                parents.push(p);
            }
        }
        let mut table = Vec::new();
        for _ in 0..(1usize << parents.len()) {
            table.extend(random_distribution(rng, 2, floor));
        }
        b.cpt(v, &parents, &table);
    }
    b.build().expect("generated tables are well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn distributions_respect_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 2..5 {
            let p = random_distribution(&mut rng, k, 0.01);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|x| *x >= 0.01 - 1e-12));
        }
    }

    #[test]
    fn generated_diagrams_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..200 {
            let shape = DiagramShape { evidence: i % 2 == 0, ..DiagramShape::default() };
            let d = random_diagram(&mut rng, &shape);
            let r = validate(&d);
            assert!(r.is_ok(), "{r}");
        }
    }
}
