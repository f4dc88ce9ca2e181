//! Random networks shared by the integration tests.

#![allow(dead_code)]

use opinion_core::{Configuration, InfluenceEdge, OpinionRecord};
use rand::Rng;

pub fn agent_name(i: usize) -> String {
    format!("v{i}")
}

fn records<R: Rng>(rng: &mut R, n: usize) -> Vec<OpinionRecord> {
    (0..n)
        .map(|i| OpinionRecord::new(agent_name(i), rng.gen::<f64>()))
        .collect()
}

/// `n` agents with each ordered pair (self-loops included) joined with
/// probability `density` and a uniform weight in [0, 1].
pub fn random_network<R: Rng>(rng: &mut R, n: usize, density: f64) -> Configuration {
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if rng.gen_bool(density) {
                edges.push(InfluenceEdge::new(
                    agent_name(s),
                    agent_name(t),
                    rng.gen::<f64>(),
                ));
            }
        }
    }
    Configuration::new(records(rng, n), edges).expect("generated network is valid")
}

/// Every agent keeps a self-loop and has at most one other influencer;
/// incoming weights sum to one.
pub fn self_loop_network<R: Rng>(rng: &mut R, n: usize) -> Configuration {
    let mut edges = Vec::new();
    for u in 0..n {
        if rng.gen_bool(0.7) {
            let mut v = rng.gen_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            let w: f64 = rng.gen();
            edges.push(InfluenceEdge::new(agent_name(v), agent_name(u), w));
            edges.push(InfluenceEdge::new(agent_name(u), agent_name(u), 1.0 - w));
        } else {
            edges.push(InfluenceEdge::new(agent_name(u), agent_name(u), 1.0));
        }
    }
    Configuration::new(records(rng, n), edges).expect("generated network is valid")
}

/// Random opinions on a fixed structure.
pub fn reopinionate<R: Rng>(rng: &mut R, c: &Configuration) -> Configuration {
    c.with_opinions((0..c.agent_count()).map(|_| rng.gen()).collect())
        .expect("opinions are in range")
}
