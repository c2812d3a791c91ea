//! Deciding correctness: search for a relation satisfying every clause.

mod brute;
mod byzantine;
mod pairwise;
mod permutation;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::Serialize;

pub use brute::brute_force_check;
pub use byzantine::{check_byzantine, ByzConfig, Template};

use crate::consistency::{evaluate, Clause, ConditionSet};
use crate::error::{Error, Result};
use crate::history::{Context, History, Scope};
use crate::relation::{OrderRelation, Recorder, RelationView};
use crate::spec::OperationSpec;

pub const PERMUTATION_CAP: usize = 12;
pub const PAIRWISE_CAP: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Permutation search when the condition contains `TotalOrder`, pairwise otherwise.
    #[default]
    Auto,
    Permutation,
    Pairwise,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Strategy::Auto),
            "permutation" => Ok(Strategy::Permutation),
            "pairwise" => Ok(Strategy::Pairwise),
            other => Err(Error::InvalidParameter(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SearchConfig {
    pub strategy: Strategy,
    /// Overrides the per-strategy op-ex cap.
    pub max_opexes: Option<usize>,
    /// Bound on search nodes; exceeding it is a resource error.
    pub node_budget: Option<u64>,
}

impl SearchConfig {
    pub fn with_strategy(strategy: Strategy) -> Self {
        SearchConfig { strategy, ..Self::default() }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Stats {
    pub strategy: String,
    pub nodes: u64,
    pub elapsed: Duration,
    /// Candidate histories examined by the Byzantine search.
    pub candidates: u64,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub accepted: bool,
    /// Relation over the op-exes of the checked history (or of `history` when set).
    pub witness: Option<OrderRelation>,
    /// Repaired history for Byzantine checks.
    pub history: Option<History>,
    /// Indices, in `history`, of op-exes inserted for Byzantine processes.
    pub inserted: Vec<usize>,
    /// Clauses that pruned the search, on rejection.
    pub diagnosis: BTreeSet<String>,
    /// Rejection is relative to the Byzantine search bounds.
    pub bounded: bool,
    pub stats: Stats,
}

impl Verdict {
    pub fn status(&self) -> &'static str {
        match (self.accepted, self.bounded) {
            (true, _) => "accepted",
            (false, false) => "rejected",
            (false, true) => "rejected within bounds",
        }
    }

    fn rejected(diagnosis: BTreeSet<String>, stats: Stats) -> Self {
        Verdict {
            accepted: false,
            witness: None,
            history: None,
            inserted: Vec::new(),
            diagnosis,
            bounded: false,
            stats,
        }
    }

    fn accepted(witness: OrderRelation, stats: Stats) -> Self {
        Verdict {
            accepted: true,
            witness: Some(witness),
            history: None,
            inserted: Vec::new(),
            diagnosis: BTreeSet::new(),
            bounded: false,
            stats,
        }
    }
}

/// Outcome of a search on the canonical history.
pub(crate) enum Search {
    Found(OrderRelation),
    Exhausted,
}

/// History in canonical op-ex order with per-op-ex specs and forced pairs.
pub(crate) struct Prepared<'a> {
    pub(crate) h: History,
    pub(crate) cond: &'a ConditionSet,
    pub(crate) ops: Vec<&'a OperationSpec>,
    /// `forced_in[b]`: op-exes that must precede `b`.
    pub(crate) forced_in: Vec<u64>,
    /// `forced_out[b]`: op-exes that must not precede `b`.
    pub(crate) forced_out: Vec<u64>,
    pub(crate) diagnosis: BTreeSet<String>,
    pub(crate) nodes: u64,
    pub(crate) budget: Option<u64>,
}

pub(crate) enum VsResult {
    Pass,
    /// Failed clause and the columns the evaluation read.
    Fail(Clause, u64),
    Unknown,
}

impl<'a> Prepared<'a> {
    pub(crate) fn new(h: &History, cond: &'a ConditionSet, budget: Option<u64>) -> Result<Self> {
        let order = h.canonical_order();
        let h = h.reordered(&order);
        let n = h.len();
        let registry = cond.registry();
        let ops = h
            .opexes()
            .iter()
            .map(|o| registry.operation(&o.object, &o.operation))
            .collect::<Result<Vec<_>>>()?;
        let mut forced_in = vec![0u64; n];
        let mut forced_out = vec![0u64; n];
        let all = cond.contains(Clause::HistoryOrder);
        let per_proc = cond.contains(Clause::ProcessOrder);
        if all || per_proc {
            for a in 0..n {
                for b in 0..n {
                    if a == b || !h.precedes_in_time(a, b) {
                        continue;
                    }
                    if all || h.opex(a).proc == h.opex(b).proc {
                        forced_in[b] |= 1 << a;
                        forced_out[a] |= 1 << b;
                    }
                }
            }
        }
        Ok(Prepared {
            h,
            cond,
            ops,
            forced_in,
            forced_out,
            diagnosis: BTreeSet::new(),
            nodes: 0,
            budget,
        })
    }

    pub(crate) fn n(&self) -> usize {
        self.h.len()
    }

    pub(crate) fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        match self.budget {
            Some(b) if self.nodes > b => {
                Err(Error::Resource(format!("search exceeded {b} nodes")))
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn note(&mut self, c: Clause) {
        self.diagnosis.insert(c.name());
    }

    /// Validity and safety of op-ex `o` read through `rel`. `touched` reports
    /// the columns read and `unknown` whether an unassigned column was read.
    pub(crate) fn eval_vs(
        &self,
        o: usize,
        rel: &dyn RelationView,
        touched: impl Fn() -> u64,
        unknown: impl Fn() -> bool,
    ) -> VsResult {
        let opex = self.h.opex(o);
        let ctx = Context::new(&self.h, o, all_mask(self.n()), rel);
        let op = self.ops[o];
        if opex.inv.is_some() && op.validity.is_some() && !op.validity(opex, &ctx) {
            return if unknown() { VsResult::Unknown } else { VsResult::Fail(Clause::Validity, touched()) };
        }
        if opex.res.is_some() && op.safety.is_some() && !op.safety(opex, &ctx) {
            return if unknown() { VsResult::Unknown } else { VsResult::Fail(Clause::Safety, touched()) };
        }
        if unknown() {
            VsResult::Unknown
        } else {
            VsResult::Pass
        }
    }

    /// Liveness of all op-exes plus object-level rules on a complete relation.
    /// Returns the columns read on failure.
    pub(crate) fn liveness(&self, rel: &dyn RelationView) -> Option<u64> {
        let rec = Recorder::new(rel);
        let scope = Scope::new(&self.h, &rec);
        for k in 0..self.n() {
            if !self.ops[k].liveness(k, &scope) {
                return Some(rec.touched());
            }
        }
        let registry = self.cond.registry();
        for (obj, rule) in registry.object_rules(&self.h) {
            if !rule(obj, &scope) {
                return Some(rec.touched());
            }
        }
        None
    }

    /// Full clause evaluation on the canonical history.
    pub(crate) fn full_check(&self, rel: &OrderRelation) -> Result<bool> {
        crate::consistency::holds(&self.h, rel, self.cond)
    }
}

pub(crate) fn all_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Decides `∃ ⟶: ⋀ C(H, ⟶)` over irreflexive relations.
///
/// The accepted flag does not depend on the strategy; any returned witness
/// re-validates under [`evaluate`].
pub fn check(h: &History, cond: &ConditionSet, cfg: &SearchConfig) -> Result<Verdict> {
    let start = Instant::now();
    let report = h.validate();
    if !report.is_valid() {
        return Err(Error::InvalidHistory(report.summary()));
    }
    cond.registry().check_history(h)?;
    let total = cond.contains(Clause::TotalOrder);
    let strategy = match cfg.strategy {
        Strategy::Auto if total => Strategy::Permutation,
        Strategy::Auto => Strategy::Pairwise,
        Strategy::Permutation if !total => {
            return Err(Error::InvalidParameter(
                "permutation search requires a condition containing TotalOrder".into(),
            ))
        }
        s => s,
    };
    let cap = cfg.max_opexes.unwrap_or(match strategy {
        Strategy::Permutation => PERMUTATION_CAP,
        _ => PAIRWISE_CAP,
    });
    if h.len() > cap {
        return Err(Error::Resource(format!(
            "{} op-exes exceed the {:?} search cap of {cap}",
            h.len(),
            strategy
        )));
    }
    let order = h.canonical_order();
    let mut prep = Prepared::new(h, cond, cfg.node_budget)?;
    let outcome = match strategy {
        Strategy::Permutation => permutation::search(&mut prep)?,
        _ => pairwise::search(&mut prep)?,
    };
    let stats = Stats {
        strategy: format!("{strategy:?}").to_lowercase(),
        nodes: prep.nodes,
        elapsed: start.elapsed(),
        candidates: 0,
    };
    Ok(match outcome {
        Search::Found(rel) => {
            let witness = rel.permuted(&order);
            debug_assert!(evaluate(h, &witness, cond).map(|v| v.iter().all(|o| o.holds)).unwrap_or(false));
            Verdict::accepted(witness, stats)
        }
        Search::Exhausted => Verdict::rejected(prep.diagnosis, stats),
    })
}
