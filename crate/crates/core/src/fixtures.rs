//! Reference decision problems used by the tests, the acceptance suite and
//! the shipped model files.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Combination, DiagramBuilder, InfluenceDiagram};
use crate::random::random_distribution;

/// Single decision: observe a forecast, then decide whether to take an umbrella.
pub fn umbrella() -> InfluenceDiagram {
    let mut b = DiagramBuilder::new();
    let weather = b.chance("weather", &["sun", "rain"]);
    let forecast = b.chance("forecast", &["sunny", "rainy"]);
    let bring = b.decision("bring_umbrella", &["leave", "take"]);
    let satisfaction = b.value("satisfaction");
    b.cpt(weather, &[], &[0.7, 0.3])
        .cpt(forecast, &[weather], &[0.8, 0.2, 0.2, 0.8])
        .informed_by(bring, &[forecast])
        .utility(satisfaction, &[weather, bring], &[100.0, 80.0, 0.0, 70.0]);
    b.build().expect("umbrella fixture")
}

/// Two decisions: pick a TV station, read its forecast, then decide on the
/// umbrella. A newspaper forecast has already been observed.
pub fn umbrella_tv() -> InfluenceDiagram {
    let mut b = DiagramBuilder::new();
    let weather = b.chance("weather", &["sun", "rain"]);
    let newspaper = b.chance("newspaper", &["sunny", "rainy"]);
    let tv = b.decision("tv_station", &["channel_a", "channel_b"]);
    let forecast = b.chance("forecast", &["sunny", "rainy"]);
    let bring = b.decision("bring_umbrella", &["leave", "take"]);
    let satisfaction = b.value("satisfaction");
    b.cpt(weather, &[], &[0.7, 0.3])
        .cpt(newspaper, &[weather], &[0.7, 0.3, 0.2, 0.8])
        .cpt(
            forecast,
            &[weather, tv],
            &[0.9, 0.1, 0.6, 0.4, 0.4, 0.6, 0.1, 0.9],
        )
        .informed_by(bring, &[tv, forecast])
        .utility(satisfaction, &[weather, bring], &[100.0, 80.0, 0.0, 70.0])
        .observe(newspaper, 1);
    b.build().expect("umbrella_tv fixture")
}

/// Finite-horizon Markov decision process with `periods` decisions.
///
/// Period `i` has `state_i`, `decision_i` and a local `value_i` over
/// `(state_i, decision_i, state_{i+1})`. Decisions remember the whole history.
/// Tables are drawn from a seeded generator; product models get values in
/// `[0.1, 2]`, sum models in `[-10, 10]`.
pub fn mdp(periods: usize, combination: Combination, seed: u64) -> InfluenceDiagram {
    assert!(periods >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = DiagramBuilder::new();
    let mut states = Vec::new();
    let mut decisions = Vec::new();
    for i in 1..=periods {
        states.push(b.chance(&format!("state_{i}"), &["low", "high"]));
        decisions.push(b.decision(&format!("decision_{i}"), &["hold", "act"]));
    }
    states.push(b.chance(&format!("state_{}", periods + 1), &["low", "high"]));
    let values: Vec<_> = (1..=periods).map(|i| b.value(&format!("value_{i}"))).collect();

    let prior = random_distribution(&mut rng, 2, 0.05);
    b.cpt(states[0], &[], &prior);
    for i in 0..periods {
        let mut table = Vec::new();
        for _ in 0..4 {
            table.extend(random_distribution(&mut rng, 2, 0.05));
        }
        b.cpt(states[i + 1], &[states[i], decisions[i]], &table);
        let local: Vec<f64> = (0..8)
            .map(|_| match combination {
                Combination::Product => rng.gen_range(0.1..2.0),
                _ => rng.gen_range(-10.0..10.0),
            })
            .collect();
        b.utility(values[i], &[states[i], decisions[i], states[i + 1]], &local);
        let mut info = Vec::new();
        for j in 0..=i {
            info.push(states[j]);
            if j < i {
                info.push(decisions[j]);
            }
        }
        b.informed_by(decisions[i], &info);
    }
    b.combination(combination);
    b.build().expect("mdp fixture")
}
