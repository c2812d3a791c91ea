//! Event-based specification of concurrent objects.
//!
//! A [`History`] is a finite set of events under a strict total order, grouped
//! into op-exes (invocation/response pairs). Object semantics are supplied as
//! per-operation validity, safety and liveness predicates ([`ObjectSpec`]),
//! and consistency conditions are sets of clauses over a candidate visibility
//! relation between op-exes ([`ConditionSet`]). A history is correct when some
//! relation satisfies every clause; [`check`] searches for one.
//!
//! The [`sigma`] module builds state graphs from sets of complete histories and
//! audits the asynchrony, valence and resilience axioms behind the consensus
//! and k-set-agreement impossibility results. The [`harness`] module generates
//! such history sets by exhaustively interleaving small programs.

pub mod checker;
pub mod consistency;
pub mod error;
pub mod harness;
pub mod history;
pub mod pattern;
pub mod relation;
pub mod sigma;
pub mod spec;

pub use checker::{
    brute_force_check, check, check_byzantine, ByzConfig, SearchConfig, Strategy, Template,
    Verdict,
};
pub use consistency::{evaluate, holds, Clause, ClauseOutcome, ConditionSet};
pub use error::{Error, Result};
pub use history::{
    Context, Direction, Event, EventId, History, HistoryBuilder, OpEx, OpExKind, Process,
    ProcessType, Scope, ValidationReport,
};
pub use harness::{builtin_program, enumerate_histories, sink_summary, GenConfig, Program};
pub use relation::{OrderRelation, RelationView};
pub use sigma::{build_sigma, flp_audit, ksa_audit, solo_values, Sigma};
pub use spec::{ObjectSpec, OpKind, OperationSpec, SpecRegistry};

/// Opaque structured value carried by events. Compared by deep equality.
pub type Value = serde_json::Value;
