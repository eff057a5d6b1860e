#![allow(dead_code)]

use infdiag::model::InfluenceDiagram;
use infdiag::random::{random_diagram, DiagramShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn diagrams(seed: u64, count: usize, shape: &DiagramShape) -> Vec<InfluenceDiagram> {
    let mut r = rng(seed);
    (0..count).map(|_| random_diagram(&mut r, shape)).collect()
}

pub fn single_decision() -> DiagramShape {
    DiagramShape { max_decisions: 1, ..DiagramShape::default() }
}

pub fn with_evidence() -> DiagramShape {
    DiagramShape { min_chance: 2, evidence: true, ..DiagramShape::default() }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Indices within `tol * scale` of the row maximum, where `scale` is the
/// largest magnitude in the row (at least 1e-300).
pub fn argmax_set(row: &[f64], tol: f64) -> Vec<usize> {
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = row.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    (0..row.len()).filter(|i| row[*i] >= best - tol * scale).collect()
}

/// Row-major index of `config` (indexed by variable id) into a table over `scope`.
fn table_index(scope: &[usize], cards: &[usize], config: &[usize]) -> usize {
    scope.iter().zip(cards).fold(0, |acc, (v, c)| acc * c + config[*v])
}

/// `P{var | evidence}` and `P{evidence}` of a chance-only diagram by summing
/// the full joint, written without the library's factor algebra.
pub fn enumerate_marginal(d: &InfluenceDiagram, var: usize, evidence: &[(usize, usize)]) -> (Vec<f64>, f64) {
    let cards: Vec<usize> = d.variables.iter().map(|v| v.outcomes.len()).collect();
    let n = cards.len();
    let mut out = vec![0.0; cards[var]];
    let mut config = vec![0usize; n];
    loop {
        if evidence.iter().all(|(v, i)| config[*v] == *i) {
            let mut p = 1.0;
            for t in d.cpts.values() {
                let scope: Vec<usize> = t.scope().iter().map(|v| v.0).collect();
                p *= t.values()[table_index(&scope, t.cards(), &config)];
            }
            out[config[var]] += p;
        }
        // odometer, last variable fastest
        let mut k = n;
        loop {
            if k == 0 {
                let z: f64 = out.iter().sum();
                return (out.iter().map(|x| x / z).collect(), z);
            }
            k -= 1;
            config[k] += 1;
            if config[k] < cards[k] {
                break;
            }
            config[k] = 0;
        }
    }
}

/// Every configuration of a chance-only diagram with its joint probability.
pub fn joint_table(d: &InfluenceDiagram) -> Vec<(Vec<usize>, f64)> {
    let cards: Vec<usize> = d.variables.iter().map(|v| v.outcomes.len()).collect();
    let total: usize = cards.iter().product();
    (0..total)
        .map(|mut code| {
            let mut config = vec![0; cards.len()];
            for k in (0..cards.len()).rev() {
                config[k] = code % cards[k];
                code /= cards[k];
            }
            let p = d
                .cpts
                .values()
                .map(|t| {
                    let scope: Vec<usize> = t.scope().iter().map(|v| v.0).collect();
                    t.values()[table_index(&scope, t.cards(), &config)]
                })
                .product();
            (config, p)
        })
        .collect()
}

/// Largest `|P(x,y,z) P(z) - P(x,z) P(y,z)|` over all configurations.
pub fn dependence(joint: &[(Vec<usize>, f64)], x: usize, y: usize, given: &[usize]) -> f64 {
    use std::collections::BTreeMap;
    let key = |c: &[usize], extra: &[usize]| -> Vec<usize> { given.iter().chain(extra).map(|v| c[*v]).collect() };
    let (mut pxyz, mut pxz, mut pyz, mut pz) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
    for (c, p) in joint {
        *pxyz.entry(key(c, &[x, y])).or_insert(0.0) += p;
        *pxz.entry(key(c, &[x])).or_insert(0.0) += p;
        *pyz.entry(key(c, &[y])).or_insert(0.0) += p;
        *pz.entry(key(c, &[])).or_insert(0.0) += p;
    }
    let n = given.len();
    pxyz.iter()
        .map(|(k, p)| {
            let z = &k[..n];
            let mut kx = z.to_vec();
            kx.push(k[n]);
            let mut ky = z.to_vec();
            ky.push(k[n + 1]);
            (p * pz[z] - pxz[&kx] * pyz[&ky]).abs()
        })
        .fold(0.0, f64::max)
}
