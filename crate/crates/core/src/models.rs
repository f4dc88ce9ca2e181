//! Gossip, De Groot and hybrid opinion models.
//!
//! A model pairs a strategy ρ, which offers the edge sets that may fire next,
//! with an update function μ. A transition picks one offered set `A` and
//! rewrites every agent targeted by `A` at once from the pre-state.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{AgentIx, Configuration, SimState};
use crate::relations::{non_self_count, sync_successor, EdgeSet, UpdateFn};

/// Largest family that is ever enumerated eagerly.
pub const ENUMERATION_CAP: u64 = 1 << 20;

/// Largest edge count for which the hybrid power-set family is indexable.
pub const MAX_HYBRID_EDGES: usize = 64;

/// Gossip update over a single incoming edge `(v, u)`:
/// `o_u + (o_v - o_u) * i_vu`.
pub fn mu_gossip(c: &Configuration, edges: &EdgeSet, agent: AgentIx) -> Result<f64> {
    let [ix] = edges.indices() else {
        return Err(Error::GossipArity(c.agent(agent).clone()));
    };
    let e = c.edge(*ix);
    if e.target != agent {
        return Err(Error::GossipArity(c.agent(agent).clone()));
    }
    let (own, other) = (c.opinion(agent), c.opinion(e.source));
    let value = own + (other - own) * e.weight;
    // rounding may leave the sum an ulp past the endpoint
    Ok(value.clamp(own.min(other), own.max(other)))
}

/// Weighted-average update in incremental form:
/// `o_u + Σ (o_v - o_u) * i_vu / Σ i_xu` over the edges of `edges` targeting
/// `agent`. With a zero denominator (no such edge, or all weights zero) the
/// opinion is unchanged.
pub fn mu_weighted(c: &Configuration, edges: &EdgeSet, agent: AgentIx) -> f64 {
    let own = c.opinion(agent);
    let incoming = || {
        edges
            .iter()
            .map(|ix| c.edge(ix))
            .filter(|e| e.target == agent)
    };
    let total: f64 = incoming().map(|e| e.weight).sum();
    if total == 0.0 {
        return own;
    }
    let mut value = own;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for e in incoming() {
        let other = c.opinion(e.source);
        value += (other - own) * (e.weight / total);
        lo = lo.min(other);
        hi = hi.max(other);
    }
    value.clamp(lo, hi)
}

/// The same update written as a plain weighted average,
/// `Σ o_v * i_vu / Σ i_xu`.
pub fn mu_weighted_average(c: &Configuration, edges: &EdgeSet, agent: AgentIx) -> f64 {
    let incoming = || {
        edges
            .iter()
            .map(|ix| c.edge(ix))
            .filter(|e| e.target == agent)
    };
    let total: f64 = incoming().map(|e| e.weight).sum();
    if total == 0.0 {
        return c.opinion(agent);
    }
    incoming()
        .map(|e| c.opinion(e.source) * (e.weight / total))
        .sum()
}

/// A finite collection of nonempty edge sets with deterministic order.
/// The built-in families are lazy: members are produced on demand.
#[derive(Clone, Debug, PartialEq)]
pub enum EdgeSetFamily {
    /// `{{e} | e ∈ Γ_i}` over a graph with this many edges.
    Singletons { edges: usize },
    /// `{Γ_i}`, or no member when the graph has no edge.
    Whole { edges: usize },
    /// All nonempty subsets; member `i` is the subset with bitmask `i + 1`.
    PowerSet { edges: usize },
    /// An explicit list without duplicates or empty sets.
    Explicit(Vec<EdgeSet>),
    /// The members of `inner` with at least `min_card` edges; `members`
    /// holds their positions in `inner`.
    AtLeast {
        min_card: usize,
        inner: Box<EdgeSetFamily>,
        members: Vec<u64>,
    },
}

impl EdgeSetFamily {
    pub fn explicit(sets: impl IntoIterator<Item = EdgeSet>) -> Self {
        let mut out: Vec<EdgeSet> = Vec::new();
        for s in sets {
            if !s.is_empty() && !out.contains(&s) {
                out.push(s);
            }
        }
        EdgeSetFamily::Explicit(out)
    }

    pub fn power_set(edges: usize) -> Result<Self> {
        if edges > MAX_HYBRID_EDGES {
            return Err(Error::TooManyEdges(edges));
        }
        Ok(EdgeSetFamily::PowerSet { edges })
    }

    /// Subfamily of members with at least `min_card` edges.
    pub fn at_least(self, min_card: usize) -> Result<Self> {
        let size = self.len();
        if size > ENUMERATION_CAP {
            return Err(Error::RequiresEnumeration {
                size,
                cap: ENUMERATION_CAP,
            });
        }
        let members = (0..size).filter(|&i| self.card_of(i) >= min_card).collect();
        Ok(EdgeSetFamily::AtLeast {
            min_card,
            inner: Box::new(self),
            members,
        })
    }

    pub fn len(&self) -> u64 {
        match self {
            EdgeSetFamily::Singletons { edges } => *edges as u64,
            EdgeSetFamily::Whole { edges } => u64::from(*edges > 0),
            EdgeSetFamily::PowerSet { edges } => {
                if *edges == 64 {
                    u64::MAX
                } else {
                    (1u64 << edges) - 1
                }
            }
            EdgeSetFamily::Explicit(sets) => sets.len() as u64,
            EdgeSetFamily::AtLeast { members, .. } => members.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn card_of(&self, index: u64) -> usize {
        match self {
            EdgeSetFamily::Singletons { .. } => 1,
            EdgeSetFamily::Whole { edges } => *edges,
            EdgeSetFamily::PowerSet { .. } => (index + 1).count_ones() as usize,
            EdgeSetFamily::Explicit(sets) => sets[index as usize].len(),
            EdgeSetFamily::AtLeast { inner, members, .. } => inner.card_of(members[index as usize]),
        }
    }

    /// Materialises member `index`.
    pub fn get(&self, index: u64) -> Option<EdgeSet> {
        if index >= self.len() {
            return None;
        }
        Some(match self {
            EdgeSetFamily::Singletons { .. } => EdgeSet::from_indices([index as usize]),
            EdgeSetFamily::Whole { edges } => EdgeSet::from_indices(0..*edges),
            EdgeSetFamily::PowerSet { .. } => EdgeSet::from_mask(index + 1),
            EdgeSetFamily::Explicit(sets) => sets[index as usize].clone(),
            EdgeSetFamily::AtLeast { inner, members, .. } => inner.get(members[index as usize])?,
        })
    }

    /// Position of `set` in the family, if it is a member.
    pub fn position(&self, set: &EdgeSet) -> Option<u64> {
        if set.is_empty() {
            return None;
        }
        match self {
            EdgeSetFamily::Singletons { edges } => match set.indices() {
                [ix] if ix < edges => Some(*ix as u64),
                _ => None,
            },
            EdgeSetFamily::Whole { edges } => {
                (set.len() == *edges && set.indices().last() == Some(&(edges - 1))).then_some(0)
            }
            EdgeSetFamily::PowerSet { edges } => {
                let mask = set.to_mask()?;
                let fits = *edges == 64 || mask >> edges == 0;
                fits.then(|| mask - 1)
            }
            EdgeSetFamily::Explicit(sets) => sets.iter().position(|s| s == set).map(|p| p as u64),
            EdgeSetFamily::AtLeast {
                min_card,
                inner,
                members,
            } => {
                if set.len() < *min_card {
                    return None;
                }
                let inner_pos = inner.position(set)?;
                members.binary_search(&inner_pos).ok().map(|p| p as u64)
            }
        }
    }

    pub fn contains(&self, set: &EdgeSet) -> bool {
        self.position(set).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = EdgeSet> + '_ {
        (0..self.len()).map_while(move |i| self.get(i))
    }

    /// Uniformly random member index without materialising the family.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u64> {
        let n = self.len();
        (n > 0).then(|| rng.gen_range(0..n))
    }
}

pub fn rho_gossip(c: &Configuration) -> EdgeSetFamily {
    EdgeSetFamily::Singletons {
        edges: c.edge_count(),
    }
}

pub fn rho_degroot(c: &Configuration) -> EdgeSetFamily {
    EdgeSetFamily::Whole {
        edges: c.edge_count(),
    }
}

pub fn rho_hybrid(c: &Configuration) -> Result<EdgeSetFamily> {
    EdgeSetFamily::power_set(c.edge_count())
}

/// The strategy ρ of a model.
///
/// Every strategy here depends only on the influence graph, which no
/// transition modifies, so a strategy yields the same family in every state
/// reachable from a given network.
#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    Gossip,
    DeGroot,
    Hybrid,
    Explicit(Vec<EdgeSet>),
    AtLeast {
        min_card: usize,
        inner: Box<Strategy>,
    },
}

impl Strategy {
    pub fn family(&self, c: &Configuration) -> Result<EdgeSetFamily> {
        match self {
            Strategy::Gossip => Ok(rho_gossip(c)),
            Strategy::DeGroot => Ok(rho_degroot(c)),
            Strategy::Hybrid => rho_hybrid(c),
            Strategy::Explicit(sets) => {
                for s in sets {
                    s.check_against(c)?;
                }
                Ok(EdgeSetFamily::explicit(sets.iter().cloned()))
            }
            Strategy::AtLeast { min_card, inner } => inner.family(c)?.at_least(*min_card),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Gossip => f.write_str("gossip"),
            Strategy::DeGroot => f.write_str("degroot"),
            Strategy::Hybrid => f.write_str("hybrid"),
            Strategy::Explicit(sets) => write!(f, "explicit({} sets)", sets.len()),
            Strategy::AtLeast { min_card, inner } => write!(f, "filter>=({min_card}, {inner})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OpinionModel {
    pub name: String,
    pub strategy: Strategy,
    pub update: UpdateFn,
}

impl OpinionModel {
    pub fn new(name: impl Into<String>, strategy: Strategy, update: UpdateFn) -> Self {
        OpinionModel {
            name: name.into(),
            strategy,
            update,
        }
    }

    pub fn gossip() -> Self {
        Self::new("gossip", Strategy::Gossip, UpdateFn::Gossip)
    }

    pub fn degroot() -> Self {
        Self::new("degroot", Strategy::DeGroot, UpdateFn::Weighted)
    }

    pub fn hybrid() -> Self {
        Self::new("hybrid", Strategy::Hybrid, UpdateFn::Weighted)
    }

    /// Hybrid restricted to edge sets with at least `min_card` edges.
    pub fn filtered_hybrid(min_card: usize) -> Self {
        Self::new(
            format!("filtered-hybrid({min_card})"),
            Strategy::AtLeast {
                min_card,
                inner: Box::new(Strategy::Hybrid),
            },
            UpdateFn::Weighted,
        )
    }

    /// Parses `gossip`, `degroot`, `hybrid` or `filtered-hybrid(n)`.
    pub fn from_name(name: &str) -> Result<Self> {
        let name = name.trim();
        match name {
            "gossip" => return Ok(Self::gossip()),
            "degroot" => return Ok(Self::degroot()),
            "hybrid" => return Ok(Self::hybrid()),
            _ => {}
        }
        name.strip_prefix("filtered-hybrid(")
            .and_then(|rest| rest.strip_suffix(')'))
            .and_then(|n| n.trim().parse::<usize>().ok())
            .map(Self::filtered_hybrid)
            .ok_or_else(|| Error::UnknownModel(name.to_owned()))
    }

    /// Replaces μ, keeping the strategy.
    pub fn with_update(mut self, update: UpdateFn) -> Self {
        self.name = format!("{}[{}]", self.name, update.name());
        self.update = update;
        self
    }

    pub fn family(&self, c: &Configuration) -> Result<EdgeSetFamily> {
        self.strategy.family(c)
    }
}

/// One transition over the chosen edge set: every targeted agent is updated
/// from the pre-state, the step counter advances by one and `comm` by the
/// number of non-self-loop edges fired.
pub fn step(s: &SimState, edges: &EdgeSet, mu: &UpdateFn) -> Result<SimState> {
    if edges.is_empty() {
        return Err(Error::EmptyInteraction);
    }
    let network = sync_successor(&s.network, edges, mu)?;
    Ok(SimState {
        step: s.step + 1,
        comm: s.comm + non_self_count(&s.network, edges) as u64,
        network,
    })
}

/// One successor per member of the model's family, in family order.
pub fn successors(s: &SimState, model: &OpinionModel) -> Result<Vec<(EdgeSet, SimState)>> {
    let family = model.family(&s.network)?;
    if family.len() > ENUMERATION_CAP {
        return Err(Error::RequiresEnumeration {
            size: family.len(),
            cap: ENUMERATION_CAP,
        });
    }
    family
        .iter()
        .map(|a| step(s, &a, &model.update).map(|next| (a, next)))
        .collect()
}

/// De Groot ⊆ hybrid at `c`: the unique De Groot successor coincides with
/// the hybrid successor that fires all of Γ_i.
pub fn check_degroot_in_hybrid(c: &Configuration) -> Result<bool> {
    let s = SimState::new(c.clone());
    let degroot = successors(&s, &OpinionModel::degroot())?;
    let hybrid = OpinionModel::hybrid();
    let family = hybrid.family(c)?;
    match degroot.as_slice() {
        [] => Ok(c.edge_count() == 0),
        [(a, next)] => {
            let Some(pos) = family.position(a) else {
                return Ok(false);
            };
            let chosen = family.get(pos).expect("position is in range");
            let via_hybrid = step(&s, &chosen, &hybrid.update)?;
            Ok(via_hybrid.network == next.network)
        }
        _ => Ok(false),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InclusionCheck {
    Holds,
    Fails,
    PreconditionNotMet,
}

/// Tolerance on incoming-weight sums and on the opinion comparison in
/// [`check_gossip_in_hybrid`]; gossip and hybrid compute the matching update
/// with different expressions.
pub const INCLUSION_TOLERANCE: f64 = 1e-12;

/// Whether `c` has a self-loop on every agent, at most one other influencer
/// per agent, and incoming weights summing to one.
pub fn gossip_inclusion_precondition(c: &Configuration) -> bool {
    (0..c.agent_count()).all(|u| {
        let incoming = c.incoming(u);
        let has_loop = incoming.iter().any(|&ix| c.edge(ix).is_self_loop());
        let total: f64 = incoming.iter().map(|&ix| c.edge(ix).weight).sum();
        has_loop && incoming.len() <= 2 && (total - 1.0).abs() <= INCLUSION_TOLERANCE
    })
}

/// Gossip ⊆ hybrid at `c` for graphs meeting [`gossip_inclusion_precondition`]: every
/// gossip successor over `(v, u)` is matched by the hybrid successor over
/// `{(v, u), (u, u)}` (or `{(u, u)}` for a self-loop).
pub fn check_gossip_in_hybrid(c: &Configuration) -> Result<InclusionCheck> {
    if !gossip_inclusion_precondition(c) {
        return Ok(InclusionCheck::PreconditionNotMet);
    }
    let s = SimState::new(c.clone());
    let hybrid = OpinionModel::hybrid();
    let family = hybrid.family(c)?;
    for (a, gossip_next) in successors(&s, &OpinionModel::gossip())? {
        let e = *c.edge(a.indices()[0]);
        let matching = if e.is_self_loop() {
            a.clone()
        } else {
            let own_loop = c
                .edge_between(e.target, e.target)
                .expect("precondition guarantees a self-loop");
            a.union(&EdgeSet::from_indices([own_loop]))
        };
        if !family.contains(&matching) {
            return Ok(InclusionCheck::Fails);
        }
        let hybrid_next = step(&s, &matching, &hybrid.update)?;
        let close = gossip_next
            .network
            .opinions()
            .iter()
            .zip(hybrid_next.network.opinions())
            .all(|(x, y)| (x - y).abs() <= INCLUSION_TOLERANCE);
        if !close {
            return Ok(InclusionCheck::Fails);
        }
    }
    Ok(InclusionCheck::Holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::vaccine;
    use crate::graph::{InfluenceEdge, OpinionRecord};

    fn ix(c: &Configuration, id: &str) -> AgentIx {
        c.index_of(&id.into()).unwrap()
    }

    #[test]
    fn gossip_update_values() {
        let c = vaccine();
        let fa = c.edge_set(&[("f", "a")]).unwrap();
        assert_eq!(mu_gossip(&c, &fa, ix(&c, "a")).unwrap(), 0.92);
        let ab = c.edge_set(&[("a", "b")]).unwrap();
        assert!(
            (mu_gossip(&c, &ab, ix(&c, "b")).unwrap() - (0.1 + (0.0 - 0.1) * 0.6)).abs() < 1e-15
        );
        let bb = c.edge_set(&[("b", "b")]).unwrap();
        assert_eq!(mu_gossip(&c, &bb, ix(&c, "b")).unwrap(), 0.1);
    }

    #[test]
    fn gossip_update_arity() {
        let c = vaccine();
        let two = c.edge_set(&[("a", "b"), ("b", "b")]).unwrap();
        let err = mu_gossip(&c, &two, ix(&c, "b")).unwrap_err();
        assert!(err.to_string().contains("single incoming edge"));
        let wrong_target = c.edge_set(&[("a", "b")]).unwrap();
        assert!(mu_gossip(&c, &wrong_target, ix(&c, "c")).is_err());
    }

    #[test]
    fn weighted_update_values() {
        let c = vaccine();
        let a = c.edge_set(&[("a", "b"), ("b", "b"), ("c", "e")]).unwrap();
        assert!((mu_weighted(&c, &a, ix(&c, "b")) - 0.04).abs() < 1e-12);
        assert!((mu_weighted(&c, &a, ix(&c, "e")) - 0.15).abs() < 1e-12);
        let ab = c.edge_set(&[("a", "b")]).unwrap();
        assert_eq!(mu_weighted(&c, &ab, ix(&c, "e")), 0.89);
    }

    #[test]
    fn hybrid_puppet_on_singleton() {
        let c = vaccine();
        let ab = c.edge_set(&[("a", "b")]).unwrap();
        assert_eq!(mu_weighted(&c, &ab, ix(&c, "b")), 0.0);
        assert_ne!(mu_gossip(&c, &ab, ix(&c, "b")).unwrap(), 0.0);
    }

    #[test]
    fn zero_weight_denominator_keeps_opinion() {
        let c = Configuration::new(
            vec![OpinionRecord::new("a", 0.2), OpinionRecord::new("b", 0.7)],
            vec![InfluenceEdge::new("a", "b", 0.0)],
        )
        .unwrap();
        assert_eq!(mu_weighted(&c, &c.all_edges(), 1), 0.7);
        assert_eq!(mu_weighted_average(&c, &c.all_edges(), 1), 0.7);
    }

    #[test]
    fn strategy_family_sizes() {
        let c = vaccine();
        assert_eq!(rho_gossip(&c).len(), 12);
        assert_eq!(rho_degroot(&c).len(), 1);
        assert_eq!(rho_degroot(&c).get(0).unwrap(), c.all_edges());
        assert_eq!(rho_hybrid(&c).unwrap().len(), 4095);

        let lone = Configuration::new(vec![OpinionRecord::new("a", 0.2)], vec![]).unwrap();
        assert!(rho_gossip(&lone).is_empty());
        assert!(rho_degroot(&lone).is_empty());
        assert!(rho_hybrid(&lone).unwrap().is_empty());

        let one = Configuration::new(
            vec![OpinionRecord::new("a", 0.2), OpinionRecord::new("b", 0.4)],
            vec![InfluenceEdge::new("a", "b", 0.6)],
        )
        .unwrap();
        let g: Vec<EdgeSet> = rho_gossip(&one).iter().collect();
        let d: Vec<EdgeSet> = rho_degroot(&one).iter().collect();
        assert_eq!(g, d);
        assert_eq!(g, vec![one.all_edges()]);

        let two = Configuration::new(
            vec![OpinionRecord::new("a", 0.2), OpinionRecord::new("b", 0.4)],
            vec![
                InfluenceEdge::new("a", "b", 0.6),
                InfluenceEdge::new("b", "b", 0.4),
            ],
        )
        .unwrap();
        assert_eq!(rho_hybrid(&two).unwrap().len(), 3);
    }

    /// Number of subsets of an `n`-set with at least `k` elements, from
    /// Pascal's triangle.
    fn subsets_at_least(n: usize, k: usize) -> u64 {
        let mut row = vec![1u64];
        for _ in 0..n {
            let mut next = vec![1u64; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        row[k..].iter().sum()
    }

    #[test]
    fn family_membership_and_positions() {
        let fam = EdgeSetFamily::power_set(12).unwrap();
        for i in [0u64, 1, 77, 4094] {
            let s = fam.get(i).unwrap();
            assert_eq!(fam.position(&s), Some(i));
        }
        assert!(!fam.contains(&EdgeSet::empty()));
        assert!(!fam.contains(&EdgeSet::from_indices([12])));
        assert_eq!(fam.get(4095), None);

        let filtered = fam.clone().at_least(6).unwrap();
        assert_eq!(filtered.len(), subsets_at_least(12, 6));
        assert!(filtered.iter().all(|s| s.len() >= 6));
        let big = EdgeSet::from_indices(0..7);
        assert!(filtered.contains(&big));
        assert!(!filtered.contains(&EdgeSet::from_indices(0..5)));
        let p = filtered.position(&big).unwrap();
        assert_eq!(filtered.get(p).unwrap(), big);

        let whole = EdgeSetFamily::Whole { edges: 3 };
        assert!(whole.contains(&EdgeSet::from_indices(0..3)));
        assert!(!whole.contains(&EdgeSet::from_indices(0..2)));

        let ex = EdgeSetFamily::explicit([
            EdgeSet::from_indices([1]),
            EdgeSet::empty(),
            EdgeSet::from_indices([1]),
            EdgeSet::from_indices([0, 2]),
        ]);
        assert_eq!(ex.len(), 2);
        assert_eq!(ex.position(&EdgeSet::from_indices([0, 2])), Some(1));
    }

    #[test]
    fn sixty_four_edge_power_set() {
        let fam = EdgeSetFamily::power_set(64).unwrap();
        assert_eq!(fam.len(), u64::MAX);
        let last = fam.get(u64::MAX - 1).unwrap();
        assert_eq!(last.len(), 64);
        assert_eq!(fam.position(&last), Some(u64::MAX - 1));
        assert!(EdgeSetFamily::power_set(65).is_err());
    }

    #[test]
    fn step_counters() {
        let c = vaccine();
        let s = SimState::new(c.clone());
        let dg = step(&s, &c.all_edges(), &UpdateFn::Weighted).unwrap();
        assert_eq!((dg.step, dg.comm), (1, 8));

        let bb = step(&s, &c.edge_set(&[("b", "b")]).unwrap(), &UpdateFn::Gossip).unwrap();
        assert_eq!(bb.network, c);
        assert_eq!((bb.step, bb.comm), (1, 0));

        let fa = step(&s, &c.edge_set(&[("f", "a")]).unwrap(), &UpdateFn::Gossip).unwrap();
        assert_eq!(fa.network.opinion_of(&"a".into()).unwrap(), 0.92);
        assert_eq!((fa.step, fa.comm), (1, 1));

        let err = step(&s, &EdgeSet::empty(), &UpdateFn::Gossip).unwrap_err();
        assert!(err.to_string().contains("empty interaction set"));
    }

    #[test]
    fn out_of_range_custom_update_is_an_error() {
        let c = vaccine();
        let s = SimState::new(c.clone());
        let bad = UpdateFn::custom("overshoot", |c, _, u| c.opinion(u) + 2.0);
        let err = step(&s, &c.all_edges(), &bad).unwrap_err();
        assert!(matches!(err, Error::UpdateOutOfRange { .. }));
    }

    #[test]
    fn successor_counts() {
        let s = SimState::new(vaccine());
        assert_eq!(successors(&s, &OpinionModel::degroot()).unwrap().len(), 1);
        assert_eq!(successors(&s, &OpinionModel::gossip()).unwrap().len(), 12);
        assert_eq!(successors(&s, &OpinionModel::hybrid()).unwrap().len(), 4095);
    }

    #[test]
    fn gossip_step_matches_async_closure() {
        let c = vaccine();
        for a in rho_gossip(&c).iter() {
            let via_step = step(&SimState::new(c.clone()), &a, &UpdateFn::Gossip).unwrap();
            let asyn = crate::relations::async_successors(&c, &a, &UpdateFn::Gossip).unwrap();
            assert_eq!(asyn.len(), 1);
            assert_eq!(asyn[0].config, via_step.network);
        }
    }

    #[test]
    fn model_names() {
        assert_eq!(
            OpinionModel::from_name("gossip").unwrap().strategy,
            Strategy::Gossip
        );
        assert_eq!(
            OpinionModel::from_name("degroot").unwrap().strategy,
            Strategy::DeGroot
        );
        assert_eq!(
            OpinionModel::from_name("hybrid").unwrap().strategy,
            Strategy::Hybrid
        );
        let f = OpinionModel::from_name("filtered-hybrid(6)").unwrap();
        assert_eq!(f.name, "filtered-hybrid(6)");
        assert_eq!(f.family(&vaccine()).unwrap().len(), subsets_at_least(12, 6));
        assert!(OpinionModel::from_name("voter").is_err());
        assert!(OpinionModel::from_name("filtered-hybrid(x)").is_err());
        let g = OpinionModel::gossip().with_update(UpdateFn::Weighted);
        assert_eq!(g.name, "gossip[weighted]");
    }

    #[test]
    fn degroot_inclusion_examples() {
        assert!(check_degroot_in_hybrid(&vaccine()).unwrap());
        let lone = Configuration::new(
            vec![OpinionRecord::new("a", 0.3)],
            vec![InfluenceEdge::new("a", "a", 1.0)],
        )
        .unwrap();
        assert!(check_degroot_in_hybrid(&lone).unwrap());
    }

    #[test]
    fn gossip_inclusion_examples() {
        assert_eq!(
            check_gossip_in_hybrid(&vaccine()).unwrap(),
            InclusionCheck::PreconditionNotMet
        );
        let lone = Configuration::new(
            vec![OpinionRecord::new("a", 0.3)],
            vec![InfluenceEdge::new("a", "a", 1.0)],
        )
        .unwrap();
        assert_eq!(
            check_gossip_in_hybrid(&lone).unwrap(),
            InclusionCheck::Holds
        );
    }

    #[test]
    fn gossip_inclusion_two_agents_against_exhaustive_hybrid() {
        let c = Configuration::new(
            vec![OpinionRecord::new("a", 0.25), OpinionRecord::new("b", 0.75)],
            vec![
                InfluenceEdge::new("a", "a", 1.0),
                InfluenceEdge::new("a", "b", 0.6),
                InfluenceEdge::new("b", "b", 0.4),
            ],
        )
        .unwrap();
        assert_eq!(check_gossip_in_hybrid(&c).unwrap(), InclusionCheck::Holds);

        // oracle: every gossip successor appears among all hybrid successors
        let s = SimState::new(c.clone());
        let hybrid: Vec<Vec<f64>> = successors(&s, &OpinionModel::hybrid())
            .unwrap()
            .into_iter()
            .map(|(_, t)| t.network.opinions().to_vec())
            .collect();
        for (_, g) in successors(&s, &OpinionModel::gossip()).unwrap() {
            let found = hybrid.iter().any(|h| {
                h.iter()
                    .zip(g.network.opinions())
                    .all(|(x, y)| (x - y).abs() <= 1e-12)
            });
            assert!(
                found,
                "gossip successor {:?} not reachable in hybrid",
                g.network.opinions()
            );
        }
    }
}
