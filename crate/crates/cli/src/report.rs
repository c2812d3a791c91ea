//! Machine-readable reports printed on stdout.

use opexcheck::sigma::dot::event_label;
use opexcheck::sigma::{AxiomReport, ContradictionReport, Witness};
use opexcheck::{ClauseOutcome, Sigma, Verdict};
use serde::Serialize;
use serde_json::{json, Value};

use crate::files::{HistoryFile, OpExRecord};

#[derive(Debug, Serialize)]
pub struct StatsReport {
    pub strategy: String,
    pub nodes: u64,
    pub candidates: u64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct InsertedOpEx {
    pub index: usize,
    #[serde(flatten)]
    pub opex: OpExRecord,
}

#[derive(Debug, Serialize)]
pub struct VerdictReport {
    pub accepted: bool,
    pub status: String,
    pub condition: String,
    /// Clause outcomes on the witness; empty on rejection.
    pub clauses: Vec<ClauseOutcome>,
    /// Clauses that pruned the search, on rejection.
    pub diagnosis: Vec<String>,
    /// Ordered op-ex index pairs of the witness relation.
    pub witness: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub history: Option<HistoryFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inserted: Option<Vec<InsertedOpEx>>,
    pub stats: StatsReport,
}

impl VerdictReport {
    pub fn new(v: &Verdict, condition: &str, clauses: Vec<ClauseOutcome>, byzantine: bool) -> Self {
        let inserted = byzantine.then(|| {
            let h = v.history.as_ref();
            v.inserted
                .iter()
                .filter_map(|&k| {
                    let file = HistoryFile::from_history(h?);
                    Some(InsertedOpEx { index: k, opex: file.opexes.get(k)?.clone() })
                })
                .collect()
        });
        VerdictReport {
            accepted: v.accepted,
            status: v.status().to_string(),
            condition: condition.to_string(),
            clauses,
            diagnosis: v.diagnosis.iter().cloned().collect(),
            witness: v.witness.as_ref().map(|w| w.pairs()),
            history: v.history.as_ref().map(HistoryFile::from_history),
            inserted,
            stats: StatsReport {
                strategy: v.stats.strategy.clone(),
                nodes: v.stats.nodes,
                candidates: v.stats.candidates,
                elapsed_ms: v.stats.elapsed.as_secs_f64() * 1e3,
            },
        }
    }
}

/// Sorted abbreviated labels of a state's events.
pub fn state_labels(s: &Sigma, state: usize) -> Vec<String> {
    let mut labels: Vec<String> =
        s.state(state).events.iter().map(|&e| event_label(s.event(e))).collect();
    labels.sort();
    labels
}

fn labels(s: &Sigma, events: &[usize]) -> Vec<String> {
    events.iter().map(|&e| event_label(s.event(e))).collect()
}

pub fn witness_json(s: &Sigma, w: &Witness) -> Value {
    match w {
        Witness::Step { state, e, e2 } => json!({
            "kind": "step",
            "state": state_labels(s, *state),
            "e": event_label(s.event(*e)),
            "e2": event_label(s.event(*e2)),
        }),
        Witness::Sets { state, first, second } => json!({
            "kind": "sets",
            "state": state_labels(s, *state),
            "first": labels(s, first),
            "second": labels(s, second),
        }),
        Witness::Pair { first, second } => json!({
            "kind": "pair",
            "first": state_labels(s, *first),
            "second": state_labels(s, *second),
        }),
        Witness::StateProc { state, proc } => json!({
            "kind": "state_proc",
            "state": state_labels(s, *state),
            "proc": proc,
        }),
        Witness::State { state } => json!({ "kind": "state", "state": state_labels(s, *state) }),
        Witness::Proc { proc } => json!({ "kind": "proc", "proc": proc }),
        Witness::Selection { values } => json!({ "kind": "selection", "values": values }),
    }
}

pub fn axiom_json(s: &Sigma, r: &AxiomReport) -> Value {
    json!({
        "axiom": r.axiom,
        "holds": r.holds,
        "witness": r.witness.as_ref().map(|w| witness_json(s, w)),
    })
}

pub fn audit_json(s: &Sigma, preamble: &AxiomReport, r: &ContradictionReport) -> Value {
    json!({
        "states": s.len(),
        "asynchrony": axiom_json(s, preamble),
        "reports": r.reports.iter().map(|a| axiom_json(s, a)).collect::<Vec<_>>(),
        "violated": r.violated,
        "critical_state": r.critical_state.map(|c| state_labels(s, c)),
        "contradiction": r.contradiction,
    })
}
