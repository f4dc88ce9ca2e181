//! Agents, opinions, weighted influence edges and the timed simulation state.
//!
//! A [`Configuration`] is built from plain records ([`OpinionRecord`],
//! [`InfluenceEdge`]) and checked once on construction. Internally agents are
//! stored in [`AgentId`] order and edges in (source, target) order, so every
//! enumeration that walks agents or edges is deterministic. Agents and edges
//! are referred to by their position in those orders ("agent index",
//! "edge index").

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relations::EdgeSet;

/// Position of an agent in a configuration's sorted agent list.
pub type AgentIx = usize;
/// Position of an edge in a configuration's sorted edge list.
pub type EdgeIx = usize;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Self {
        AgentId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(id: &str) -> Self {
        AgentId(id.to_owned())
    }
}

impl From<String> for AgentId {
    fn from(id: String) -> Self {
        AgentId(id)
    }
}

impl From<u64> for AgentId {
    fn from(id: u64) -> Self {
        AgentId(id.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpinionRecord {
    pub agent: AgentId,
    pub value: f64,
}

impl OpinionRecord {
    pub fn new(agent: impl Into<AgentId>, value: f64) -> Self {
        OpinionRecord {
            agent: agent.into(),
            value,
        }
    }
}

/// Influence of `source` over the opinion of `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceEdge {
    pub source: AgentId,
    pub target: AgentId,
    pub weight: f64,
}

impl InfluenceEdge {
    pub fn new(source: impl Into<AgentId>, target: impl Into<AgentId>, weight: f64) -> Self {
        InfluenceEdge {
            source: source.into(),
            target: target.into(),
            weight,
        }
    }

    pub fn is_self_loop(&self) -> bool {
        self.source == self.target
    }
}

/// A structural problem found by [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoAgents,
    DuplicateAgent(AgentId),
    OpinionOutOfRange {
        agent: AgentId,
        value: f64,
    },
    WeightOutOfRange {
        source: AgentId,
        target: AgentId,
        weight: f64,
    },
    DanglingEndpoint {
        source: AgentId,
        target: AgentId,
        missing: AgentId,
    },
    DuplicateEdge {
        source: AgentId,
        target: AgentId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoAgents => write!(f, "no agents"),
            Violation::DuplicateAgent(a) => write!(f, "duplicate agent `{a}`"),
            Violation::OpinionOutOfRange { agent, value } => {
                write!(f, "opinion out of range: `{agent}` has {value}")
            }
            Violation::WeightOutOfRange {
                source,
                target,
                weight,
            } => write!(f, "weight out of range: ({source}, {target}) has {weight}"),
            Violation::DanglingEndpoint {
                source,
                target,
                missing,
            } => write!(
                f,
                "dangling endpoint: edge ({source}, {target}) references unknown agent `{missing}`"
            ),
            Violation::DuplicateEdge { source, target } => {
                write!(f, "duplicate edge ({source}, {target})")
            }
        }
    }
}

fn in_unit_interval(x: f64) -> bool {
    x.is_finite() && (0.0..=1.0).contains(&x)
}

/// Checks every configuration invariant and returns all violations found.
/// An empty result means the records form a valid configuration.
pub fn validate(opinions: &[OpinionRecord], edges: &[InfluenceEdge]) -> Vec<Violation> {
    let mut violations = Vec::new();
    if opinions.is_empty() {
        violations.push(Violation::NoAgents);
    }

    let mut agents = BTreeSet::new();
    for record in opinions {
        if !agents.insert(&record.agent) {
            violations.push(Violation::DuplicateAgent(record.agent.clone()));
        }
        if !in_unit_interval(record.value) {
            violations.push(Violation::OpinionOutOfRange {
                agent: record.agent.clone(),
                value: record.value,
            });
        }
    }

    let mut pairs = BTreeSet::new();
    for edge in edges {
        if !in_unit_interval(edge.weight) {
            violations.push(Violation::WeightOutOfRange {
                source: edge.source.clone(),
                target: edge.target.clone(),
                weight: edge.weight,
            });
        }
        for endpoint in [&edge.source, &edge.target] {
            if !agents.contains(endpoint) {
                violations.push(Violation::DanglingEndpoint {
                    source: edge.source.clone(),
                    target: edge.target.clone(),
                    missing: endpoint.clone(),
                });
                // a self-loop on an unknown agent is reported once
                if edge.is_self_loop() {
                    break;
                }
            }
        }
        if !pairs.insert((&edge.source, &edge.target)) {
            violations.push(Violation::DuplicateEdge {
                source: edge.source.clone(),
                target: edge.target.clone(),
            });
        }
    }
    violations
}

/// An edge resolved to agent indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub source: AgentIx,
    pub target: AgentIx,
    pub weight: f64,
}

impl Edge {
    pub fn is_self_loop(&self) -> bool {
        self.source == self.target
    }
}

#[derive(Debug, PartialEq)]
struct Structure {
    agents: Vec<AgentId>,
    edges: Vec<Edge>,
    incoming: Vec<Vec<EdgeIx>>,
    index: BTreeMap<AgentId, AgentIx>,
}

/// Opinions (one per agent) plus the fixed weighted influence graph.
///
/// The graph part is shared between all configurations derived from the same
/// network; deriving a configuration only copies the opinion vector.
#[derive(Clone, Debug)]
pub struct Configuration {
    structure: Arc<Structure>,
    opinions: Vec<f64>,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.same_structure(other) && self.opinions == other.opinions
    }
}

impl Configuration {
    pub fn new(opinions: Vec<OpinionRecord>, edges: Vec<InfluenceEdge>) -> Result<Self> {
        let violations = validate(&opinions, &edges);
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }

        let mut records = opinions;
        records.sort_by(|x, y| x.agent.cmp(&y.agent));
        let agents: Vec<AgentId> = records.iter().map(|r| r.agent.clone()).collect();
        let values: Vec<f64> = records.iter().map(|r| r.value).collect();
        let index: BTreeMap<AgentId, AgentIx> = agents
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();

        let mut resolved: Vec<Edge> = edges
            .iter()
            .map(|e| Edge {
                source: index[&e.source],
                target: index[&e.target],
                weight: e.weight,
            })
            .collect();
        resolved.sort_by_key(|e| (e.source, e.target));

        let mut incoming = vec![Vec::new(); agents.len()];
        for (ix, e) in resolved.iter().enumerate() {
            incoming[e.target].push(ix);
        }

        Ok(Configuration {
            structure: Arc::new(Structure {
                agents,
                edges: resolved,
                incoming,
                index,
            }),
            opinions: values,
        })
    }

    /// Re-checks the configuration invariants. Always empty for values built
    /// through [`Configuration::new`]; kept so callers can assert it.
    pub fn validate(&self) -> Vec<Violation> {
        validate(&self.opinion_records(), &self.influence_edges())
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.structure.agents
    }

    pub fn agent_count(&self) -> usize {
        self.structure.agents.len()
    }

    pub fn agent(&self, ix: AgentIx) -> &AgentId {
        &self.structure.agents[ix]
    }

    pub fn index_of(&self, agent: &AgentId) -> Option<AgentIx> {
        self.structure.index.get(agent).copied()
    }

    pub fn require_agent(&self, agent: &AgentId) -> Result<AgentIx> {
        self.index_of(agent)
            .ok_or_else(|| Error::UnknownAgent(agent.clone()))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.structure.edges
    }

    pub fn edge(&self, ix: EdgeIx) -> &Edge {
        &self.structure.edges[ix]
    }

    pub fn edge_count(&self) -> usize {
        self.structure.edges.len()
    }

    /// Edges whose target is `agent`, in edge order.
    pub fn incoming(&self, agent: AgentIx) -> &[EdgeIx] {
        &self.structure.incoming[agent]
    }

    pub fn edge_between(&self, source: AgentIx, target: AgentIx) -> Option<EdgeIx> {
        self.structure.incoming[target]
            .iter()
            .copied()
            .find(|&ix| self.structure.edges[ix].source == source)
    }

    /// Opinion values indexed by agent index.
    pub fn opinions(&self) -> &[f64] {
        &self.opinions
    }

    pub fn opinion(&self, agent: AgentIx) -> f64 {
        self.opinions[agent]
    }

    pub fn opinion_of(&self, agent: &AgentId) -> Result<f64> {
        Ok(self.opinions[self.require_agent(agent)?])
    }

    pub fn opinion_records(&self) -> Vec<OpinionRecord> {
        self.agents()
            .iter()
            .zip(&self.opinions)
            .map(|(a, &v)| OpinionRecord::new(a.clone(), v))
            .collect()
    }

    pub fn influence_edges(&self) -> Vec<InfluenceEdge> {
        self.edges()
            .iter()
            .map(|e| {
                InfluenceEdge::new(
                    self.agent(e.source).clone(),
                    self.agent(e.target).clone(),
                    e.weight,
                )
            })
            .collect()
    }

    /// True when both configurations share the same agents and influence graph.
    pub fn same_structure(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.structure, &other.structure) || self.structure == other.structure
    }

    /// Same graph, different opinion values. Values must lie in [0, 1].
    pub fn with_opinions(&self, opinions: Vec<f64>) -> Result<Self> {
        if opinions.len() != self.agent_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} opinions, got {}",
                self.agent_count(),
                opinions.len()
            )));
        }
        let violations: Vec<Violation> = opinions
            .iter()
            .enumerate()
            .filter(|(_, &v)| !in_unit_interval(v))
            .map(|(i, &v)| Violation::OpinionOutOfRange {
                agent: self.agent(i).clone(),
                value: v,
            })
            .collect();
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        Ok(self.with_opinions_unchecked(opinions))
    }

    pub(crate) fn with_opinions_unchecked(&self, opinions: Vec<f64>) -> Self {
        debug_assert_eq!(opinions.len(), self.agent_count());
        Configuration {
            structure: Arc::clone(&self.structure),
            opinions,
        }
    }

    /// The whole influence set Γ_i as an edge set.
    pub fn all_edges(&self) -> EdgeSet {
        EdgeSet::from_indices(0..self.edge_count())
    }

    /// Builds an edge set from (source, target) agent-id pairs.
    pub fn edge_set<S, T>(&self, pairs: &[(S, T)]) -> Result<EdgeSet>
    where
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut indices = Vec::with_capacity(pairs.len());
        for (s, t) in pairs {
            let source = AgentId::from(s.as_ref());
            let target = AgentId::from(t.as_ref());
            let ix = match (self.index_of(&source), self.index_of(&target)) {
                (Some(si), Some(ti)) => self.edge_between(si, ti),
                _ => None,
            };
            indices.push(ix.ok_or(Error::UnknownEdge {
                from: source,
                to: target,
            })?);
        }
        Ok(EdgeSet::from_indices(indices))
    }

    /// Hashable key of the exact opinion vector (`-0.0` folded into `0.0`).
    pub fn opinion_key(&self) -> Vec<u64> {
        self.opinions
            .iter()
            .map(|&v| if v == 0.0 { 0 } else { v.to_bits() })
            .collect()
    }
}

/// A configuration together with elapsed time-steps and the cumulative
/// number of non-self-loop interactions.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub network: Configuration,
    pub step: u64,
    pub comm: u64,
}

impl SimState {
    pub fn new(network: Configuration) -> Self {
        SimState {
            network,
            step: 0,
            comm: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::vaccine;

    #[test]
    fn vaccine_is_valid() {
        let c = vaccine();
        assert!(c.validate().is_empty());
        assert_eq!(c.agent_count(), 6);
        assert_eq!(c.edge_count(), 12);
    }

    #[test]
    fn opinion_lookup() {
        let c = vaccine();
        assert_eq!(c.opinion_of(&"a".into()).unwrap(), 0.0);
        assert_eq!(c.opinion_of(&"f".into()).unwrap(), 0.92);
        let err = c.opinion_of(&"z".into()).unwrap_err();
        assert!(err.to_string().contains("no such agent"));
    }

    #[test]
    fn weight_out_of_range_is_reported() {
        let v = validate(
            &[OpinionRecord::new("a", 0.1), OpinionRecord::new("b", 0.2)],
            &[InfluenceEdge::new("a", "b", 1.5)],
        );
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("weight out of range"));
    }

    #[test]
    fn dangling_endpoint_is_reported() {
        let v = validate(
            &[OpinionRecord::new("a", 0.1)],
            &[InfluenceEdge::new("a", "b", 0.5)],
        );
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("dangling endpoint"));
    }

    #[test]
    fn rejects_duplicates_nan_and_empty() {
        let v = validate(
            &[
                OpinionRecord::new("a", f64::NAN),
                OpinionRecord::new("a", 0.3),
            ],
            &[
                InfluenceEdge::new("a", "a", 0.5),
                InfluenceEdge::new("a", "a", f64::INFINITY),
            ],
        );
        assert!(v.contains(&Violation::DuplicateAgent("a".into())));
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::OpinionOutOfRange { .. })));
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::WeightOutOfRange { .. })));
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::DuplicateEdge { .. })));

        assert_eq!(validate(&[], &[]), vec![Violation::NoAgents]);
        assert!(Configuration::new(vec![], vec![]).is_err());
    }

    #[test]
    fn boundary_values_are_accepted() {
        let c = Configuration::new(
            vec![OpinionRecord::new("x", 0.0), OpinionRecord::new("y", 1.0)],
            vec![
                InfluenceEdge::new("x", "y", 0.0),
                InfluenceEdge::new("y", "y", 1.0),
            ],
        );
        assert!(c.is_ok());
    }

    #[test]
    fn agents_and_edges_are_ordered() {
        let c = Configuration::new(
            vec![
                OpinionRecord::new("c", 0.3),
                OpinionRecord::new("a", 0.1),
                OpinionRecord::new("b", 0.2),
            ],
            vec![
                InfluenceEdge::new("c", "a", 0.5),
                InfluenceEdge::new("a", "b", 0.5),
                InfluenceEdge::new("a", "a", 0.5),
            ],
        )
        .unwrap();
        let ids: Vec<&str> = c.agents().iter().map(AgentId::as_str).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(c.opinions(), &[0.1, 0.2, 0.3]);
        let pairs: Vec<(usize, usize)> = c.edges().iter().map(|e| (e.source, e.target)).collect();
        assert_eq!(pairs, [(0, 0), (0, 1), (2, 0)]);
        assert_eq!(c.incoming(0), &[0, 2]);
    }

    #[test]
    fn with_opinions_checks_range() {
        let c = vaccine();
        assert!(c.with_opinions(vec![0.5; 6]).is_ok());
        assert!(c.with_opinions(vec![1.5; 6]).is_err());
        assert!(c.with_opinions(vec![0.5; 5]).is_err());
    }
}
