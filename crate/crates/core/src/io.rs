//! Network documents and CSV outputs.
//!
//! A network document is JSON with an `agents` list, an `edges` list and an
//! optional free-form `metadata` map:
//!
//! ```json
//! {
//!   "metadata": { "title": "two friends" },
//!   "agents": [ { "id": "a", "opinion": 0.2 }, { "id": "b", "opinion": 0.7 } ],
//!   "edges": [ { "source": "a", "target": "b", "weight": 1.0 } ]
//! }
//! ```
//!
//! Agent ids may be strings or non-negative integers; integers are read as
//! their decimal string.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AgentId, Configuration, InfluenceEdge, OpinionRecord, SimState};
use crate::metrics::PolarizationRow;
use crate::search::Trace;
use crate::stochastic::Estimate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    #[serde(deserialize_with = "agent_id")]
    pub id: AgentId,
    pub opinion: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    #[serde(deserialize_with = "agent_id")]
    pub source: AgentId,
    #[serde(deserialize_with = "agent_id")]
    pub target: AgentId,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<BTreeMap<String, serde_json::Value>>,
    pub agents: Vec<AgentEntry>,
    pub edges: Vec<EdgeEntry>,
}

fn agent_id<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<AgentId, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Number(u64),
    }
    Repr::deserialize(d).map(|r| match r {
        Repr::Text(s) => AgentId::new(s),
        Repr::Number(n) => AgentId::from(n),
    })
}

impl NetworkDocument {
    /// Document for `c` with agents and edges in canonical order.
    pub fn from_configuration(c: &Configuration) -> Self {
        NetworkDocument {
            metadata: None,
            agents: c
                .opinion_records()
                .into_iter()
                .map(|r| AgentEntry {
                    id: r.agent,
                    opinion: r.value,
                })
                .collect(),
            edges: c
                .influence_edges()
                .into_iter()
                .map(|e| EdgeEntry {
                    source: e.source,
                    target: e.target,
                    weight: e.weight,
                })
                .collect(),
        }
    }

    pub fn with_metadata(mut self, metadata: BTreeMap<String, serde_json::Value>) -> Self {
        self.metadata = Some(metadata);
        self
    }

    /// Validated configuration described by the document.
    pub fn configuration(&self) -> Result<Configuration> {
        Configuration::new(
            self.agents
                .iter()
                .map(|a| OpinionRecord::new(a.id.clone(), a.opinion))
                .collect(),
            self.edges
                .iter()
                .map(|e| InfluenceEdge::new(e.source.clone(), e.target.clone(), e.weight))
                .collect(),
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialise");
        s.push('\n');
        s
    }
}

/// Parses and validates a network document.
pub fn parse_network(text: &str) -> Result<SimState> {
    Ok(SimState::new(
        NetworkDocument::parse(text)?.configuration()?,
    ))
}

pub fn load_network(path: impl AsRef<Path>) -> Result<SimState> {
    parse_network(&fs::read_to_string(path)?)
}

pub fn load_document(path: impl AsRef<Path>) -> Result<NetworkDocument> {
    NetworkDocument::parse(&fs::read_to_string(path)?)
}

pub fn save_network(path: impl AsRef<Path>, c: &Configuration) -> Result<()> {
    save_document(path, &NetworkDocument::from_configuration(c))
}

pub fn save_document(path: impl AsRef<Path>, doc: &NetworkDocument) -> Result<()> {
    fs::write(path, doc.to_json())?;
    Ok(())
}

/// Header of the trace CSV for `c`.
pub fn trace_header(c: &Configuration) -> Vec<String> {
    let mut h = vec!["step".to_string(), "comm".to_string()];
    h.extend(c.agents().iter().map(|a| a.to_string()));
    h.push("variance".into());
    h.push("distance".into());
    h
}

/// Streams `step,comm,<agents>,variance,distance` rows.
pub struct TraceWriter<W: Write> {
    out: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W, c: &Configuration) -> Result<Self> {
        let mut out = csv::Writer::from_writer(out);
        out.write_record(trace_header(c))?;
        Ok(TraceWriter { out })
    }

    pub fn row(&mut self, s: &SimState) -> Result<()> {
        let m = PolarizationRow::of(s)?;
        let mut rec = vec![m.step.to_string(), m.comm.to_string()];
        rec.extend(s.network.opinions().iter().map(|o| o.to_string()));
        rec.push(m.variance.to_string());
        rec.push(m.distance.to_string());
        self.out.write_record(rec)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        self.out
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

pub fn write_trace_csv<W: Write>(out: W, trace: &Trace) -> Result<W> {
    let mut w = TraceWriter::new(out, &trace.initial.network)?;
    for s in trace.states() {
        w.row(s)?;
    }
    w.finish()
}

/// An estimate together with the inputs that produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub model: String,
    pub assign: String,
    pub comm_budget: u64,
    pub epsilon: f64,
    pub alpha: f64,
    pub delta: f64,
    pub seed: u64,
    pub mean: f64,
    pub half_width: f64,
    pub samples: u64,
    pub converged: bool,
    pub successes: u64,
    pub deadlocks: u64,
    pub step_budget_exhausted: u64,
}

impl EstimateRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: &str,
        assign: &str,
        comm_budget: u64,
        epsilon: f64,
        alpha: f64,
        delta: f64,
        seed: u64,
        e: &Estimate,
    ) -> Self {
        EstimateRecord {
            model: model.to_string(),
            assign: assign.to_string(),
            comm_budget,
            epsilon,
            alpha,
            delta,
            seed,
            mean: e.mean,
            half_width: e.half_width,
            samples: e.samples,
            converged: e.converged,
            successes: e.successes,
            deadlocks: e.deadlocks,
            step_budget_exhausted: e.step_budget_exhausted,
        }
    }
}

/// Writes a header row and one row per record.
pub fn write_estimate_csv<W: Write>(out: W, records: &[EstimateRecord]) -> Result<W> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}
