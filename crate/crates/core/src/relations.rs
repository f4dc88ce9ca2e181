//! The atomic opinion-update relation →_A and its asynchronous, parallel and
//! synchronous closures, specialised to opinion configurations.
//!
//! The redices of →_A are the single agents targeted by some edge of `A`. A
//! closure member is identified by the subset of redices it rewrites; members
//! whose update happens to be a no-op are still distinct members. Every update
//! reads the pre-state.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{AgentIx, Configuration, EdgeIx, OpinionRecord};
use crate::models::{mu_gossip, mu_weighted};

/// Largest redex count [`parallel_successors`] will enumerate.
pub const PARALLEL_CLOSURE_CAP: usize = 20;

/// A subset of a configuration's influence edges, as sorted edge indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeSet(Vec<EdgeIx>);

impl EdgeSet {
    pub fn empty() -> Self {
        EdgeSet(Vec::new())
    }

    pub fn from_indices(indices: impl IntoIterator<Item = EdgeIx>) -> Self {
        let mut v: Vec<EdgeIx> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        EdgeSet(v)
    }

    /// Edge `i` is a member iff bit `i` of `mask` is set.
    pub fn from_mask(mask: u64) -> Self {
        let mut v = Vec::with_capacity(mask.count_ones() as usize);
        let mut m = mask;
        while m != 0 {
            v.push(m.trailing_zeros() as usize);
            m &= m - 1;
        }
        EdgeSet(v)
    }

    /// Bitmask form, if every index fits in 64 bits.
    pub fn to_mask(&self) -> Option<u64> {
        self.0
            .iter()
            .try_fold(0u64, |m, &i| (i < 64).then(|| m | (1 << i)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[EdgeIx] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = EdgeIx> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, edge: EdgeIx) -> bool {
        self.0.binary_search(&edge).is_ok()
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.0.iter().all(|&e| other.contains(e))
    }

    pub fn union(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet::from_indices(self.0.iter().chain(&other.0).copied())
    }

    /// Fails if some member is not an edge of `c`.
    pub fn check_against(&self, c: &Configuration) -> Result<()> {
        match self.0.last() {
            Some(&ix) if ix >= c.edge_count() => Err(Error::EdgeNotInConfiguration {
                index: ix,
                edges: c.edge_count(),
            }),
            _ => Ok(()),
        }
    }

    /// Renders the set as `{(a,b):0.6, ...}` using the agent names of `c`.
    pub fn display<'a>(&'a self, c: &'a Configuration) -> impl fmt::Display + 'a {
        DisplayEdgeSet {
            set: self,
            config: c,
        }
    }
}

struct DisplayEdgeSet<'a> {
    set: &'a EdgeSet,
    config: &'a Configuration,
}

impl fmt::Display for DisplayEdgeSet<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, ix) in self.set.iter().enumerate() {
            let e = self.config.edge(ix);
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(
                f,
                "({},{}):{}",
                self.config.agent(e.source),
                self.config.agent(e.target),
                e.weight
            )?;
        }
        f.write_str("}")
    }
}

/// Distinct targets of the edges in `edges`, in agent order: the agents a
/// step over `edges` will update.
pub fn incident_targets(c: &Configuration, edges: &EdgeSet) -> Vec<AgentIx> {
    let mut targets: Vec<AgentIx> = edges.iter().map(|ix| c.edge(ix).target).collect();
    targets.sort_unstable();
    targets.dedup();
    targets
}

/// Distinct sources and targets of the edges in `edges`, in agent order.
pub fn touched_agents(c: &Configuration, edges: &EdgeSet) -> Vec<AgentIx> {
    let mut agents: Vec<AgentIx> = edges
        .iter()
        .flat_map(|ix| {
            let e = c.edge(ix);
            [e.source, e.target]
        })
        .collect();
    agents.sort_unstable();
    agents.dedup();
    agents
}

/// Number of edges in `edges` that are not self-loops.
pub fn non_self_count(c: &Configuration, edges: &EdgeSet) -> usize {
    edges
        .iter()
        .filter(|&ix| !c.edge(ix).is_self_loop())
        .count()
}

/// Redices of →_A: the agents targeted by some edge of `edges`.
pub fn redices(c: &Configuration, edges: &EdgeSet) -> Vec<AgentIx> {
    incident_targets(c, edges)
}

type CustomFn = dyn Fn(&Configuration, &EdgeSet, AgentIx) -> f64 + Send + Sync;

/// The per-agent update function μ.
#[derive(Clone)]
pub enum UpdateFn {
    /// `o_u + (o_v - o_u) * i_vu` over a single incoming edge.
    Gossip,
    /// Normalised weighted average over the chosen incoming edges (De Groot
    /// and hybrid models).
    Weighted,
    /// A user-supplied pure function.
    Custom { name: String, f: Arc<CustomFn> },
}

impl UpdateFn {
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(&Configuration, &EdgeSet, AgentIx) -> f64 + Send + Sync + 'static,
    ) -> Self {
        UpdateFn::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            UpdateFn::Gossip => "gossip",
            UpdateFn::Weighted => "weighted",
            UpdateFn::Custom { name, .. } => name,
        }
    }

    /// Evaluates μ(c, edges, agent) and checks that the result is an opinion.
    pub fn apply(&self, c: &Configuration, edges: &EdgeSet, agent: AgentIx) -> Result<f64> {
        let value = match self {
            UpdateFn::Gossip => mu_gossip(c, edges, agent)?,
            UpdateFn::Weighted => mu_weighted(c, edges, agent),
            UpdateFn::Custom { f, .. } => f(c, edges, agent),
        };
        if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
            return Err(Error::UpdateOutOfRange {
                update: self.name().to_owned(),
                agent: c.agent(agent).clone(),
                value,
            });
        }
        Ok(value)
    }
}

impl fmt::Debug for UpdateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UpdateFn({})", self.name())
    }
}

/// One pair of a closure relation: the redices rewritten and the result.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosureMember {
    pub rewritten: Vec<AgentIx>,
    pub config: Configuration,
}

/// ⟨u : o_u⟩ →_A ⟨u : μ(c, A, u)⟩.
pub fn atomic_successor(
    c: &Configuration,
    edges: &EdgeSet,
    agent: AgentIx,
    mu: &UpdateFn,
) -> Result<OpinionRecord> {
    edges.check_against(c)?;
    if !edges.iter().any(|ix| c.edge(ix).target == agent) {
        return Err(Error::NotARedex(c.agent(agent).clone()));
    }
    let value = mu.apply(c, edges, agent)?;
    Ok(OpinionRecord::new(c.agent(agent).clone(), value))
}

/// New value of every redex, all computed from the pre-state `c`.
fn redex_updates(c: &Configuration, edges: &EdgeSet, mu: &UpdateFn) -> Result<Vec<(AgentIx, f64)>> {
    edges.check_against(c)?;
    redices(c, edges)
        .into_iter()
        .map(|u| mu.apply(c, edges, u).map(|v| (u, v)))
        .collect()
}

fn rewrite(c: &Configuration, updates: &[(AgentIx, f64)]) -> Configuration {
    let mut opinions = c.opinions().to_vec();
    for &(u, v) in updates {
        opinions[u] = v;
    }
    c.with_opinions_unchecked(opinions)
}

/// Asynchronous closure: one member per redex, rewriting only that redex.
pub fn async_successors(
    c: &Configuration,
    edges: &EdgeSet,
    mu: &UpdateFn,
) -> Result<Vec<ClosureMember>> {
    let updates = redex_updates(c, edges, mu)?;
    Ok(updates
        .iter()
        .map(|&(u, v)| ClosureMember {
            rewritten: vec![u],
            config: rewrite(c, &[(u, v)]),
        })
        .collect())
}

/// Parallel closure: one member per nonempty subset of the redices, in
/// ascending subset-bitmask order over the redex list.
pub fn parallel_successors(
    c: &Configuration,
    edges: &EdgeSet,
    mu: &UpdateFn,
) -> Result<Vec<ClosureMember>> {
    let count = redices(c, edges).len();
    if count > PARALLEL_CLOSURE_CAP {
        return Err(Error::ClosureTooLarge {
            redices: count,
            cap: PARALLEL_CLOSURE_CAP,
        });
    }
    let updates = redex_updates(c, edges, mu)?;
    Ok((1u64..(1 << count))
        .map(|mask| {
            let chosen: Vec<(AgentIx, f64)> = updates
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &uv)| uv)
                .collect();
            ClosureMember {
                rewritten: chosen.iter().map(|&(u, _)| u).collect(),
                config: rewrite(c, &chosen),
            }
        })
        .collect())
}

/// Synchronous closure under the maximal-redices strategy: every redex is
/// rewritten at once from the pre-state. An empty set leaves `c` unchanged.
pub fn sync_successor(c: &Configuration, edges: &EdgeSet, mu: &UpdateFn) -> Result<Configuration> {
    let updates = redex_updates(c, edges, mu)?;
    Ok(rewrite(c, &updates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::vaccine;

    const EXAMPLE: [(&str, &str); 3] = [("a", "b"), ("b", "b"), ("c", "e")];

    fn ix(c: &Configuration, id: &str) -> AgentIx {
        c.index_of(&id.into()).unwrap()
    }

    #[test]
    fn targets_of_example_set() {
        let c = vaccine();
        let a = c.edge_set(&EXAMPLE).unwrap();
        assert_eq!(incident_targets(&c, &a), vec![ix(&c, "b"), ix(&c, "e")]);
        assert!(incident_targets(&c, &EdgeSet::empty()).is_empty());
        assert_eq!(
            incident_targets(&c, &c.all_edges()),
            (0..6).collect::<Vec<_>>()
        );
        assert_eq!(
            redices(&c, &c.edge_set(&[("f", "a")]).unwrap()),
            vec![ix(&c, "a")]
        );
    }

    #[test]
    fn non_self_counts() {
        let c = vaccine();
        assert_eq!(non_self_count(&c, &c.all_edges()), 8);
        assert_eq!(non_self_count(&c, &c.edge_set(&[("b", "b")]).unwrap()), 0);
        assert_eq!(
            non_self_count(&c, &c.edge_set(&[("f", "a"), ("e", "f")]).unwrap()),
            2
        );
    }

    #[test]
    fn atomic_updates() {
        let c = vaccine();
        let a = c.edge_set(&EXAMPLE).unwrap();
        let b = atomic_successor(&c, &a, ix(&c, "b"), &UpdateFn::Weighted).unwrap();
        assert_eq!(b.agent.as_str(), "b");
        assert!((b.value - 0.04).abs() < 1e-12);
        let e = atomic_successor(&c, &a, ix(&c, "e"), &UpdateFn::Weighted).unwrap();
        assert!((e.value - 0.15).abs() < 1e-12);

        let self_only = c.edge_set(&[("b", "b")]).unwrap();
        let b = atomic_successor(&c, &self_only, ix(&c, "b"), &UpdateFn::Weighted).unwrap();
        assert_eq!(b.value, 0.1);
    }

    #[test]
    fn atomic_rejects_non_redex() {
        let c = vaccine();
        let a = c.edge_set(&EXAMPLE).unwrap();
        let err = atomic_successor(&c, &a, ix(&c, "a"), &UpdateFn::Weighted).unwrap_err();
        assert!(err.to_string().contains("not a redex"));
    }

    #[test]
    fn closures_of_example_set() {
        let c = vaccine();
        let a = c.edge_set(&EXAMPLE).unwrap();
        let mu = UpdateFn::Weighted;

        let asyn = async_successors(&c, &a, &mu).unwrap();
        assert_eq!(asyn.len(), 2);
        assert!((asyn[0].config.opinion_of(&"b".into()).unwrap() - 0.04).abs() < 1e-12);
        assert_eq!(asyn[0].config.opinion_of(&"e".into()).unwrap(), 0.89);
        assert!((asyn[1].config.opinion_of(&"e".into()).unwrap() - 0.15).abs() < 1e-12);

        let par = parallel_successors(&c, &a, &mu).unwrap();
        assert_eq!(par.len(), 3);
        let sync = sync_successor(&c, &a, &mu).unwrap();
        assert_eq!(par[2].rewritten.len(), 2);
        assert_eq!(par[2].config, sync);
        for m in &asyn {
            assert!(par.contains(m));
        }
    }

    #[test]
    fn single_redex_closures_coincide() {
        let c = vaccine();
        let a = c.edge_set(&[("f", "a")]).unwrap();
        let asyn = async_successors(&c, &a, &UpdateFn::Weighted).unwrap();
        let par = parallel_successors(&c, &a, &UpdateFn::Weighted).unwrap();
        assert_eq!(asyn, par);
        assert_eq!(asyn[0].config.opinion_of(&"a".into()).unwrap(), 0.92);
    }

    #[test]
    fn parallel_closure_of_all_edges() {
        let c = vaccine();
        let par = parallel_successors(&c, &c.all_edges(), &UpdateFn::Weighted).unwrap();
        assert_eq!(par.len(), 63);
    }

    #[test]
    fn empty_set_closures() {
        let c = vaccine();
        let empty = EdgeSet::empty();
        assert!(async_successors(&c, &empty, &UpdateFn::Weighted)
            .unwrap()
            .is_empty());
        assert!(parallel_successors(&c, &empty, &UpdateFn::Weighted)
            .unwrap()
            .is_empty());
        assert_eq!(sync_successor(&c, &empty, &UpdateFn::Weighted).unwrap(), c);
    }

    #[test]
    fn parallel_closure_cap() {
        let n = PARALLEL_CLOSURE_CAP + 1;
        let opinions = (0..n)
            .map(|i| crate::graph::OpinionRecord::new(format!("{i:02}"), 0.5))
            .collect();
        let edges = (0..n)
            .map(|i| crate::graph::InfluenceEdge::new(format!("{i:02}"), format!("{i:02}"), 1.0))
            .collect();
        let c = Configuration::new(opinions, edges).unwrap();
        let err = parallel_successors(&c, &c.all_edges(), &UpdateFn::Weighted).unwrap_err();
        assert!(err.to_string().contains("parallel closure too large"));
    }

    #[test]
    fn foreign_edge_is_rejected() {
        let c = vaccine();
        let bogus = EdgeSet::from_indices([40]);
        assert!(sync_successor(&c, &bogus, &UpdateFn::Weighted).is_err());
    }

    #[test]
    fn mask_round_trip() {
        let s = EdgeSet::from_mask(0b1011_0001);
        assert_eq!(s.indices(), &[0, 4, 5, 7]);
        assert_eq!(s.to_mask(), Some(0b1011_0001));
        assert_eq!(EdgeSet::from_indices([70]).to_mask(), None);
    }

    #[test]
    fn display_uses_agent_names() {
        let c = vaccine();
        let a = c.edge_set(&[("f", "a"), ("a", "b")]).unwrap();
        assert_eq!(a.display(&c).to_string(), "{(a,b):0.6, (f,a):1}");
    }
}
