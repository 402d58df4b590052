//! Turn-based wargame of a friendly CoA against an enemy CoA, and Monte Carlo
//! aggregation of replications.

pub mod attrition;
pub mod engine;
pub mod monte_carlo;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use attrition::resolve_engagement;
pub use engine::{simulate, simulate_with, SimConfig, SimResult, SimState};
pub use monte_carlo::{
    monte_carlo_evaluate, monte_carlo_evaluate_with, replication_seed, sample_traces, McConfig,
    PhaseStat, WargameStats,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Move,
    Engage,
    Seize,
    Destroy,
    PhaseAdvance,
}

/// One trace record. `detail` holds coordinates for moves and seizures,
/// `[attacker_delta, defender_delta]` for engagements and `[phase]` for phase
/// advances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tick: u32,
    pub kind: EventKind,
    pub actors: Vec<String>,
    pub detail: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WargameError {
    #[error("CoA {coa} tasks unit '{unit}' which is not in the force list")]
    UnknownUnit { coa: String, unit: String },
    #[error("replications must be at least 1")]
    NoReplications,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Line-delimited JSON, one event per line.
pub fn trace_to_jsonl(trace: &[Event]) -> String {
    let mut out = String::new();
    for e in trace {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

pub fn trace_from_jsonl(text: &str) -> Result<Vec<Event>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
