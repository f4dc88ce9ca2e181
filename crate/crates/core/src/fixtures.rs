//! Reference networks.

use crate::graph::{Configuration, InfluenceEdge, OpinionRecord};

/// The vaccine network as a network document.
pub const VACCINE_JSON: &str = include_str!("../data/vaccine.json");

/// Six agents debating vaccine safety: a, b and c are sceptical, d, e and f
/// are convinced, and influence flows around a cycle through both camps.
pub fn vaccine() -> Configuration {
    let opinions = [
        ("a", 0.0),
        ("b", 0.1),
        ("c", 0.15),
        ("d", 0.82),
        ("e", 0.89),
        ("f", 0.92),
    ];
    let edges = [
        ("a", "b", 0.6),
        ("a", "c", 0.4),
        ("b", "d", 0.6),
        ("c", "e", 0.6),
        ("d", "c", 0.2),
        ("d", "f", 0.4),
        ("e", "f", 0.6),
        ("f", "a", 1.0),
        ("b", "b", 0.4),
        ("c", "c", 0.4),
        ("d", "d", 0.4),
        ("e", "e", 0.4),
    ];
    Configuration::new(
        opinions
            .iter()
            .map(|&(a, o)| OpinionRecord::new(a, o))
            .collect(),
        edges
            .iter()
            .map(|&(s, t, w)| InfluenceEdge::new(s, t, w))
            .collect(),
    )
    .expect("the vaccine network is valid")
}
