//! Opinion dynamics on weighted influence graphs, modelled as set relations
//! over configurations.
//!
//! - [`graph`]: agents, opinions, influence edges and simulation states.
//! - [`relations`]: edge sets, update functions and the atomic,
//!   asynchronous, parallel and synchronous closures.
//! - [`models`]: strategies, the gossip, De Groot and hybrid models, and
//!   checks of their inclusion relations.
//! - [`metrics`]: consensus and polarization measures.
//! - [`search`]: breadth-first reachability and the round strategy.
//! - [`stochastic`]: weighting schemes and Monte-Carlo estimation.
//! - [`io`]: network documents and CSV output.

pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod models;
pub mod relations;
pub mod search;
pub mod stochastic;

pub use error::{Error, Result};
pub use graph::{AgentId, Configuration, InfluenceEdge, OpinionRecord, SimState, Violation};
pub use metrics::{consensus, distance, polarization_report, variance, PolarizationRow};
pub use models::{step, successors, EdgeSetFamily, OpinionModel, Strategy};
pub use relations::{EdgeSet, UpdateFn};
pub use search::{round_search, search_consensus, RoundOptions, SearchBounds, Termination, Trace};
pub use stochastic::{estimate, Estimate, EstimationParams, Query, WeightScheme};
