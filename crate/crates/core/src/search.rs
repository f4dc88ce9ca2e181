//! Reachability of consensus states.
//!
//! [`search_consensus`] is a breadth-first search over the transition system
//! induced by a model. [`round_search`] is a depth-first search with
//! backtracking in which each member of a given edge-set family may fire at
//! most once along a path.

use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SimState;
use crate::metrics::consensus;
use crate::models::{step, EdgeSetFamily, OpinionModel, ENUMERATION_CAP};
use crate::relations::{EdgeSet, UpdateFn};

/// Default consensus tolerance.
pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub edges: EdgeSet,
    pub state: SimState,
}

/// A path from an initial state, recording the edge set fired at each step.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub initial: SimState,
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn new(initial: SimState) -> Self {
        Trace {
            initial,
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, edges: EdgeSet, state: SimState) {
        self.steps.push(TraceStep { edges, state });
    }

    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_state(&self) -> &SimState {
        self.steps.last().map_or(&self.initial, |s| &s.state)
    }

    /// Initial state followed by every recorded state.
    pub fn states(&self) -> impl Iterator<Item = &SimState> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.state))
    }

    /// Replaying the recorded edge sets from the initial state reproduces
    /// every recorded state exactly.
    pub fn replays(&self, mu: &UpdateFn) -> bool {
        let mut current = self.initial.clone();
        for s in &self.steps {
            match step(&current, &s.edges, mu) {
                Ok(next) if next == s.state => current = next,
                _ => return false,
            }
        }
        true
    }

    /// No edge set is fired twice.
    pub fn edge_sets_distinct(&self) -> bool {
        let mut seen = HashSet::new();
        self.steps.iter().all(|s| seen.insert(&s.edges))
    }
}

/// What identifies a visited state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DedupKey {
    /// The exact opinion vector; counters are ignored.
    #[default]
    Opinions,
    /// Opinion vector plus step and comm counters, so that every step
    /// produces a fresh state.
    OpinionsAndCounters,
}

#[derive(Clone, Debug)]
pub struct SearchBounds {
    pub max_depth: Option<u64>,
    pub max_states: Option<usize>,
    pub solution_count: usize,
    pub dedup: DedupKey,
    /// Expand frontier states on the rayon pool. Results are identical to
    /// the sequential search.
    pub parallel: bool,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            max_depth: None,
            max_states: Some(1_000_000),
            solution_count: 1,
            dedup: DedupKey::Opinions,
            parallel: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The requested number of witnesses was found.
    SolutionsFound,
    /// The reachable space was fully explored.
    Exhausted,
    /// A depth, state or node bound stopped the search early.
    Bounded,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub witnesses: Vec<Trace>,
    pub termination: Termination,
    pub states_visited: usize,
}

impl SearchOutcome {
    pub fn first_witness(&self) -> Option<&Trace> {
        self.witnesses.first()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )))
    }
}

struct Node {
    state: SimState,
    parent: Option<usize>,
    via: Option<EdgeSet>,
    depth: u64,
}

fn trace_to(nodes: &[Node], mut at: usize) -> Trace {
    let mut rev = Vec::new();
    while let Some(parent) = nodes[at].parent {
        rev.push(at);
        at = parent;
    }
    let mut trace = Trace::new(nodes[at].state.clone());
    for ix in rev.into_iter().rev() {
        let n = &nodes[ix];
        trace.push(
            n.via.clone().expect("non-root node has an edge set"),
            n.state.clone(),
        );
    }
    trace
}

type VisitKey = (Vec<u64>, u64, u64);

fn visit_key(s: &SimState, dedup: DedupKey) -> VisitKey {
    match dedup {
        DedupKey::Opinions => (s.network.opinion_key(), 0, 0),
        DedupKey::OpinionsAndCounters => (s.network.opinion_key(), s.step, s.comm),
    }
}

/// Breadth-first search for states satisfying consensus within `epsilon`.
pub fn search_consensus(
    init: &SimState,
    model: &OpinionModel,
    epsilon: f64,
    bounds: &SearchBounds,
) -> Result<SearchOutcome> {
    check_epsilon(epsilon)?;
    if bounds.solution_count == 0 {
        return Err(Error::InvalidParameter(
            "solution count must be positive".into(),
        ));
    }
    if bounds.max_depth.is_none() && bounds.max_states.is_none() {
        return Err(Error::InvalidParameter(
            "search needs a depth bound or a state bound".into(),
        ));
    }
    let family = model.family(&init.network)?;
    let max_states = bounds.max_states.unwrap_or(usize::MAX);
    let chunk = if bounds.parallel {
        4 * rayon::current_num_threads()
    } else {
        1
    };

    let mut nodes = vec![Node {
        state: init.clone(),
        parent: None,
        via: None,
        depth: 0,
    }];
    let mut visited: HashSet<VisitKey> = HashSet::new();
    visited.insert(visit_key(init, bounds.dedup));
    let mut witnesses = Vec::new();
    let outcome = |witnesses, termination, visited: &HashSet<VisitKey>| SearchOutcome {
        witnesses,
        termination,
        states_visited: visited.len(),
    };

    if consensus(init, epsilon) {
        witnesses.push(trace_to(&nodes, 0));
        if witnesses.len() == bounds.solution_count {
            return Ok(outcome(witnesses, Termination::SolutionsFound, &visited));
        }
    }

    let mut frontier: VecDeque<usize> = VecDeque::new();
    if !consensus(init, epsilon) {
        frontier.push_back(0);
    }
    let mut bounded = false;

    while !frontier.is_empty() {
        let mut batch = Vec::with_capacity(chunk);
        while batch.len() < chunk {
            let Some(ix) = frontier.pop_front() else {
                break;
            };
            if bounds.max_depth.is_some_and(|d| nodes[ix].depth >= d) {
                bounded |= !family.is_empty();
                continue;
            }
            batch.push(ix);
        }

        let expand = |&ix: &usize| -> Result<Vec<(EdgeSet, SimState)>> {
            let s = &nodes[ix].state;
            family
                .iter()
                .map(|a| step(s, &a, &model.update).map(|next| (a, next)))
                .collect()
        };
        let expanded: Vec<Vec<(EdgeSet, SimState)>> = if bounds.parallel {
            batch.par_iter().map(expand).collect::<Result<_>>()?
        } else {
            batch.iter().map(expand).collect::<Result<_>>()?
        };

        for (&parent, children) in batch.iter().zip(expanded) {
            let depth = nodes[parent].depth + 1;
            for (edges, state) in children {
                let key = visit_key(&state, bounds.dedup);
                if visited.contains(&key) {
                    continue;
                }
                if visited.len() >= max_states {
                    return Ok(outcome(witnesses, Termination::Bounded, &visited));
                }
                visited.insert(key);
                let done = consensus(&state, epsilon);
                nodes.push(Node {
                    state,
                    parent: Some(parent),
                    via: Some(edges),
                    depth,
                });
                let ix = nodes.len() - 1;
                if done {
                    witnesses.push(trace_to(&nodes, ix));
                    if witnesses.len() == bounds.solution_count {
                        return Ok(outcome(witnesses, Termination::SolutionsFound, &visited));
                    }
                } else {
                    frontier.push_back(ix);
                }
            }
        }
    }

    let termination = if bounded {
        Termination::Bounded
    } else {
        Termination::Exhausted
    };
    Ok(outcome(witnesses, termination, &visited))
}

/// Members of `family` with at least `min_card` edges.
pub fn filter_ge(min_card: usize, family: EdgeSetFamily) -> Result<EdgeSetFamily> {
    family.at_least(min_card)
}

#[derive(Clone, Debug)]
pub struct RoundOptions {
    pub solution_count: usize,
    /// Cap on the number of transitions tried.
    pub max_nodes: Option<u64>,
}

impl Default for RoundOptions {
    fn default() -> Self {
        RoundOptions {
            solution_count: 1,
            max_nodes: Some(10_000_000),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RoundOutcome {
    pub witnesses: Vec<Trace>,
    pub termination: Termination,
    pub nodes: u64,
}

impl RoundOutcome {
    pub fn first_witness(&self) -> Option<&Trace> {
        self.witnesses.first()
    }
}

struct Frame {
    state: SimState,
    /// Family position this frame fired to get here.
    chosen: Option<usize>,
    /// Next family position to try from this frame.
    cursor: usize,
}

/// Depth-first search where each step fires an unused member of `family`.
///
/// A state satisfying consensus ends its branch. Choices are tried in family
/// order, so the first witness is the lexicographically least choice
/// sequence.
pub fn round_search(
    init: &SimState,
    family: &EdgeSetFamily,
    mu: &UpdateFn,
    epsilon: f64,
    options: &RoundOptions,
) -> Result<RoundOutcome> {
    check_epsilon(epsilon)?;
    if options.solution_count == 0 {
        return Err(Error::InvalidParameter(
            "solution count must be positive".into(),
        ));
    }
    if family.len() > ENUMERATION_CAP {
        return Err(Error::RequiresEnumeration {
            size: family.len(),
            cap: ENUMERATION_CAP,
        });
    }
    let members: Vec<EdgeSet> = family.iter().collect();
    let mut used = vec![false; members.len()];
    let mut witnesses = Vec::new();
    let mut nodes = 0u64;

    if consensus(init, epsilon) {
        return Ok(RoundOutcome {
            witnesses: vec![Trace::new(init.clone())],
            termination: Termination::SolutionsFound,
            nodes,
        });
    }

    let witness = |stack: &[Frame], last: usize, state: &SimState| {
        let mut trace = Trace::new(init.clone());
        for f in &stack[1..] {
            let chosen = f.chosen.expect("non-root frame");
            trace.push(members[chosen].clone(), f.state.clone());
        }
        trace.push(members[last].clone(), state.clone());
        trace
    };

    let mut stack = vec![Frame {
        state: init.clone(),
        chosen: None,
        cursor: 0,
    }];
    while let Some(top) = stack.last_mut() {
        let next = (top.cursor..members.len()).find(|&i| !used[i]);
        let Some(choice) = next else {
            let done = stack.pop().expect("stack is nonempty");
            if let Some(c) = done.chosen {
                used[c] = false;
            }
            continue;
        };
        top.cursor = choice + 1;
        if options.max_nodes.is_some_and(|m| nodes >= m) {
            return Ok(RoundOutcome {
                witnesses,
                termination: Termination::Bounded,
                nodes,
            });
        }
        nodes += 1;
        let state = step(&top.state, &members[choice], mu)?;
        if consensus(&state, epsilon) {
            witnesses.push(witness(&stack, choice, &state));
            if witnesses.len() == options.solution_count {
                return Ok(RoundOutcome {
                    witnesses,
                    termination: Termination::SolutionsFound,
                    nodes,
                });
            }
        } else {
            used[choice] = true;
            stack.push(Frame {
                state,
                chosen: Some(choice),
                cursor: 0,
            });
        }
    }
    Ok(RoundOutcome {
        witnesses,
        termination: Termination::Exhausted,
        nodes,
    })
}
