use thiserror::Error;

use crate::graph::{AgentId, Violation};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("no such agent `{0}`")]
    UnknownAgent(AgentId),

    #[error("no edge ({from}, {to}) in configuration")]
    UnknownEdge { from: AgentId, to: AgentId },

    #[error("edge index {index} is not in a configuration with {edges} edges")]
    EdgeNotInConfiguration { index: usize, edges: usize },

    #[error("not a redex: agent `{0}` is not the target of any chosen edge")]
    NotARedex(AgentId),

    #[error("parallel closure too large: {redices} redices exceeds the cap of {cap}")]
    ClosureTooLarge { redices: usize, cap: usize },

    #[error("gossip update requires single incoming edge targeting `{0}`")]
    GossipArity(AgentId),

    #[error("empty interaction set")]
    EmptyInteraction,

    #[error("update `{update}` produced {value} for agent `{agent}`, outside [0, 1]")]
    UpdateOutOfRange {
        update: String,
        agent: AgentId,
        value: f64,
    },

    #[error("hybrid strategy supports at most 64 edges, configuration has {0}")]
    TooManyEdges(usize),

    #[error("deadlocked state: the strategy offers no interaction")]
    Deadlocked,

    #[error("distribution requires enumeration of {size} edge sets (cap {cap})")]
    RequiresEnumeration { size: u64, cap: u64 },

    #[error("invalid weight {weight} from weighting scheme `{scheme}`")]
    InvalidWeight { scheme: String, weight: f64 },

    #[error("unknown model `{0}` (expected gossip, degroot, hybrid or filtered-hybrid(n))")]
    UnknownModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
