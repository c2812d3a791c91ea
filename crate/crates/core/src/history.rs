//! Events, op-exes, processes and histories.

use std::cell::OnceCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{bits, OrderRelation, RelationView};
use crate::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessType {
    Correct,
    #[serde(alias = "faulty_omitting")]
    Omitting,
    #[serde(alias = "faulty_byzantine")]
    Byzantine,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Process {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: ProcessType,
}

impl Process {
    pub fn new(id: impl Into<String>, kind: ProcessType) -> Self {
        Process { id: id.into(), kind }
    }

    pub fn correct(id: impl Into<String>) -> Self {
        Self::new(id, ProcessType::Correct)
    }
}

/// Index of an event within [`History::events`].
pub type EventId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Inv,
    Res,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    /// Rank in the global event order. Distinct positions realize `→ᴳ`.
    pub position: u64,
    pub value: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpExKind {
    Complete,
    Pending,
    Notification,
}

impl OpExKind {
    /// `None` when neither event is present, which no configuration allows.
    pub fn classify(has_inv: bool, has_res: bool) -> Option<Self> {
        match (has_inv, has_res) {
            (true, true) => Some(OpExKind::Complete),
            (true, false) => Some(OpExKind::Pending),
            (false, true) => Some(OpExKind::Notification),
            (false, false) => None,
        }
    }
}

/// One execution of an operation.
#[derive(Clone, Debug, PartialEq)]
pub struct OpEx {
    pub object: String,
    pub operation: String,
    pub proc: String,
    /// Operation input, `null` when the operation takes none.
    pub input: Value,
    /// Operation output, `null` for pending op-exes and void operations.
    pub output: Value,
    pub inv: Option<EventId>,
    pub res: Option<EventId>,
}

impl OpEx {
    pub fn kind(&self) -> Option<OpExKind> {
        OpExKind::classify(self.inv.is_some(), self.res.is_some())
    }

    pub fn is_pending(&self) -> bool {
        self.inv.is_some() && self.res.is_none()
    }

    pub fn is_notification(&self) -> bool {
        self.inv.is_none() && self.res.is_some()
    }

    /// Element `i` of an array input, or the whole input for `i == 0` when scalar.
    pub fn input_at(&self, i: usize) -> Option<&Value> {
        nth(&self.input, i)
    }

    pub fn output_at(&self, i: usize) -> Option<&Value> {
        nth(&self.output, i)
    }
}

fn nth(v: &Value, i: usize) -> Option<&Value> {
    match v {
        Value::Array(items) => items.get(i),
        other if i == 0 => Some(other),
        _ => None,
    }
}

/// A finite history `(E, →ᴳ, O, P)` plus a flag marking full system executions.
#[derive(Clone, PartialEq)]
pub struct History {
    processes: Vec<Process>,
    events: Vec<Event>,
    opexes: Vec<OpEx>,
    complete: bool,
    // derived
    owner: Vec<Option<(usize, Direction)>>,
    idx: Vec<u32>,
}

impl History {
    /// Assembles a history from explicit parts. No validation is performed;
    /// see [`History::validate`].
    pub fn from_parts(
        processes: Vec<Process>,
        events: Vec<Event>,
        opexes: Vec<OpEx>,
        complete: bool,
    ) -> Self {
        let mut owner = vec![None; events.len()];
        for (k, o) in opexes.iter().enumerate() {
            for (slot, dir) in [(o.inv, Direction::Inv), (o.res, Direction::Res)] {
                if let Some(e) = slot {
                    if e < owner.len() && owner[e].is_none() {
                        owner[e] = Some((k, dir));
                    }
                }
            }
        }
        let mut per_proc: BTreeMap<&str, Vec<EventId>> = BTreeMap::new();
        for (e, own) in owner.iter().enumerate() {
            if let Some((k, _)) = own {
                per_proc.entry(opexes[*k].proc.as_str()).or_default().push(e);
            }
        }
        let mut idx = vec![0u32; events.len()];
        for evs in per_proc.values_mut() {
            evs.sort_by_key(|&e| (events[e].position, e));
            for (i, &e) in evs.iter().enumerate() {
                idx[e] = i as u32 + 1;
            }
        }
        History { processes, events, opexes, complete, owner, idx }
    }

    pub fn empty() -> Self {
        Self::from_parts(Vec::new(), Vec::new(), Vec::new(), false)
    }

    pub fn builder() -> HistoryBuilder {
        HistoryBuilder::default()
    }

    pub fn processes(&self) -> &[Process] {
        &self.processes
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn opexes(&self) -> &[OpEx] {
        &self.opexes
    }

    pub fn opex(&self, k: usize) -> &OpEx {
        &self.opexes[k]
    }

    pub fn len(&self) -> usize {
        self.opexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opexes.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn set_complete(&mut self, complete: bool) {
        self.complete = complete;
    }

    pub fn process(&self, id: &str) -> Option<&Process> {
        self.processes.iter().find(|p| p.id == id)
    }

    pub fn process_type(&self, id: &str) -> Option<ProcessType> {
        self.process(id).map(|p| p.kind)
    }

    pub fn is_correct(&self, id: &str) -> bool {
        self.process_type(id) == Some(ProcessType::Correct)
    }

    /// `P_C(H)`: the correct processes, in declaration order.
    pub fn correct_processes(&self) -> Vec<&str> {
        self.processes
            .iter()
            .filter(|p| p.kind == ProcessType::Correct)
            .map(|p| p.id.as_str())
            .collect()
    }

    /// Objects referenced by op-exes, sorted.
    pub fn objects(&self) -> BTreeSet<&str> {
        self.opexes.iter().map(|o| o.object.as_str()).collect()
    }

    pub fn position(&self, e: EventId) -> u64 {
        self.events[e].position
    }

    pub fn inv_position(&self, k: usize) -> Option<u64> {
        self.opexes[k].inv.map(|e| self.events[e].position)
    }

    pub fn res_position(&self, k: usize) -> Option<u64> {
        self.opexes[k].res.map(|e| self.events[e].position)
    }

    /// Position of the op-ex's earliest event.
    pub fn first_position(&self, k: usize) -> u64 {
        self.inv_position(k).or(self.res_position(k)).unwrap_or(u64::MAX)
    }

    /// The op-ex and side owning event `e`.
    pub fn owner(&self, e: EventId) -> Option<(usize, Direction)> {
        self.owner.get(e).copied().flatten()
    }

    /// 1-based rank of `e` among its process's events in position order.
    pub fn event_index(&self, e: EventId) -> Result<u32> {
        match self.idx.get(e) {
            Some(&i) if i > 0 => Ok(i),
            _ => Err(Error::UnknownEvent(e)),
        }
    }

    /// Events of process `p` in position order.
    pub fn process_events(&self, p: &str) -> Vec<EventId> {
        let mut evs: Vec<EventId> = (0..self.events.len())
            .filter(|&e| matches!(self.owner(e), Some((k, _)) if self.opexes[k].proc == p))
            .collect();
        evs.sort_by_key(|&e| (self.events[e].position, e));
        evs
    }

    /// Real-time precedence: `o` responded before `o′` was invoked, or, when
    /// `o′` is a notification, before `o′` responded.
    pub fn precedes_in_time(&self, o: usize, o2: usize) -> bool {
        let Some(r) = self.res_position(o) else { return false };
        match (self.inv_position(o2), self.res_position(o2)) {
            (Some(i2), _) => r < i2,
            (None, Some(r2)) => r < r2,
            (None, None) => false,
        }
    }

    /// `H|obj`.
    pub fn project_object(&self, obj: &str) -> History {
        self.filter(|o| o.object == obj)
    }

    /// `H|p`.
    pub fn project_process(&self, p: &str) -> History {
        self.filter(|o| o.proc == p)
    }

    /// Keeps the op-exes matching `keep` together with their events; positions,
    /// processes and the completeness flag are preserved.
    pub fn filter(&self, mut keep: impl FnMut(&OpEx) -> bool) -> History {
        let mut events = Vec::new();
        let mut opexes = Vec::new();
        for o in &self.opexes {
            if !keep(o) {
                continue;
            }
            let mut copy = o.clone();
            copy.inv = o.inv.map(|e| {
                events.push(self.events[e].clone());
                events.len() - 1
            });
            copy.res = o.res.map(|e| {
                events.push(self.events[e].clone());
                events.len() - 1
            });
            opexes.push(copy);
        }
        History::from_parts(self.processes.clone(), events, opexes, self.complete)
    }

    /// Same history with op-exes listed in the order given by `order`.
    pub fn reordered(&self, order: &[usize]) -> History {
        let opexes = order.iter().map(|&k| self.opexes[k].clone()).collect();
        History::from_parts(self.processes.clone(), self.events.clone(), opexes, self.complete)
    }

    /// Op-ex indices sorted by (first event position, process id).
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.opexes.len()).collect();
        order.sort_by(|&a, &b| {
            (self.first_position(a), &self.opexes[a].proc, a)
                .cmp(&(self.first_position(b), &self.opexes[b].proc, b))
        });
        order
    }

    /// Checks the four structural constraints plus process membership.
    pub fn validate(&self) -> ValidationReport {
        validate_history(self)
    }

    /// Op-exes of the history with `o′ ⟶ o` restricted to `o`'s object.
    pub fn context<'a>(
        &'a self,
        o: usize,
        universe: &[usize],
        rel: &'a dyn RelationView,
    ) -> Result<Context<'a>> {
        let mut mask = 0u64;
        for &k in universe {
            if k >= 64 {
                return Err(Error::Resource(format!("op-ex index {k} beyond 64")));
            }
            mask |= 1 << k;
        }
        if o >= self.opexes.len() || mask >> o & 1 == 0 {
            return Err(Error::SubjectNotInUniverse(o));
        }
        Ok(Context::new(self, o, mask, rel))
    }
}

impl fmt::Debug for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("History")
            .field("processes", &self.processes)
            .field("events", &self.events)
            .field("opexes", &self.opexes)
            .field("complete", &self.complete)
            .finish()
    }
}

/// Convenience builder taking raw positions; each present position becomes a
/// fresh event.
#[derive(Default, Clone)]
pub struct HistoryBuilder {
    processes: Vec<Process>,
    events: Vec<Event>,
    opexes: Vec<OpEx>,
    complete: bool,
}

impl HistoryBuilder {
    pub fn process(mut self, id: impl Into<String>, kind: ProcessType) -> Self {
        self.processes.push(Process::new(id, kind));
        self
    }

    pub fn correct(self, id: impl Into<String>) -> Self {
        self.process(id, ProcessType::Correct)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn op(
        mut self,
        object: impl Into<String>,
        operation: impl Into<String>,
        proc: impl Into<String>,
        input: Value,
        output: Value,
        inv: Option<u64>,
        res: Option<u64>,
    ) -> Self {
        self.push(object, operation, proc, input, output, inv, res);
        self
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        object: impl Into<String>,
        operation: impl Into<String>,
        proc: impl Into<String>,
        input: Value,
        output: Value,
        inv: Option<u64>,
        res: Option<u64>,
    ) -> usize {
        let inv = inv.map(|position| {
            self.events.push(Event { position, value: input.clone() });
            self.events.len() - 1
        });
        let res = res.map(|position| {
            self.events.push(Event { position, value: output.clone() });
            self.events.len() - 1
        });
        self.opexes.push(OpEx {
            object: object.into(),
            operation: operation.into(),
            proc: proc.into(),
            input,
            output,
            inv,
            res,
        });
        self.opexes.len() - 1
    }

    pub fn complete(mut self, complete: bool) -> Self {
        self.complete = complete;
        self
    }

    pub fn build(self) -> History {
        History::from_parts(self.processes, self.events, self.opexes, self.complete)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Constraint {
    EvTotalOrder,
    EvValidity,
    OpExValidity,
    OpValidity,
    KnownProcesses,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintResult {
    pub constraint: Constraint,
    pub holds: bool,
    pub offending_events: Vec<EventId>,
    pub offending_opexes: Vec<usize>,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub results: Vec<ConstraintResult>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.results.iter().all(|r| r.holds)
    }

    pub fn get(&self, c: Constraint) -> &ConstraintResult {
        self.results.iter().find(|r| r.constraint == c).expect("every constraint is reported")
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintResult> {
        self.results.iter().filter(|r| !r.holds)
    }

    pub fn summary(&self) -> String {
        let failed: Vec<String> = self
            .failures()
            .map(|r| match &r.detail {
                Some(d) => format!("{:?} ({d})", r.constraint),
                None => format!("{:?}", r.constraint),
            })
            .collect();
        if failed.is_empty() {
            "valid".into()
        } else {
            failed.join("; ")
        }
    }
}

fn result(
    constraint: Constraint,
    events: Vec<EventId>,
    opexes: Vec<usize>,
    detail: Option<String>,
) -> ConstraintResult {
    ConstraintResult {
        constraint,
        holds: events.is_empty() && opexes.is_empty(),
        offending_events: events,
        offending_opexes: opexes,
        detail,
    }
}

/// Checks EvTotalOrder, EvValidity, OpExValidity and OpValidity, plus that every
/// op-ex names a declared process. Malformed input is reported, never thrown.
///
/// OpValidity is checked without object specs: op-exes of one operation must be
/// uniformly notifications or uniformly invocation-carrying.
pub fn validate_history(h: &History) -> ValidationReport {
    let mut results = Vec::new();

    let mut by_pos: BTreeMap<u64, Vec<EventId>> = BTreeMap::new();
    for (e, ev) in h.events.iter().enumerate() {
        by_pos.entry(ev.position).or_default().push(e);
    }
    let clashes: Vec<(u64, Vec<EventId>)> =
        by_pos.into_iter().filter(|(_, es)| es.len() > 1).collect();
    let detail = (!clashes.is_empty()).then(|| {
        let ps: Vec<String> = clashes.iter().map(|(p, _)| p.to_string()).collect();
        format!("duplicate positions {}", ps.join(", "))
    });
    let evs = clashes.into_iter().flat_map(|(_, es)| es).collect();
    results.push(result(Constraint::EvTotalOrder, evs, Vec::new(), detail));

    let mut uses = vec![0usize; h.events.len()];
    let mut dangling = Vec::new();
    for (k, o) in h.opexes.iter().enumerate() {
        for e in [o.inv, o.res].into_iter().flatten() {
            match uses.get_mut(e) {
                Some(u) => *u += 1,
                None => dangling.push(k),
            }
        }
    }
    let bad: Vec<EventId> = (0..uses.len()).filter(|&e| uses[e] != 1).collect();
    let detail = (!bad.is_empty() || !dangling.is_empty())
        .then(|| "events must belong to exactly one op-ex".to_string());
    results.push(result(Constraint::EvValidity, bad, dangling, detail));

    let mut bad = Vec::new();
    for (k, o) in h.opexes.iter().enumerate() {
        if let (Some(i), Some(r)) = (o.inv, o.res) {
            let ordered = matches!((h.events.get(i), h.events.get(r)),
                (Some(a), Some(b)) if a.position < b.position);
            if i == r || !ordered {
                bad.push(k);
            }
        }
    }
    let detail = (!bad.is_empty()).then(|| "invocation must precede response".to_string());
    results.push(result(Constraint::OpExValidity, Vec::new(), bad, detail));

    let mut notif: BTreeMap<(&str, &str), (bool, bool)> = BTreeMap::new();
    let mut bad = Vec::new();
    for (k, o) in h.opexes.iter().enumerate() {
        match o.kind() {
            None => bad.push(k),
            Some(kind) => {
                let e = notif.entry((&o.object, &o.operation)).or_default();
                if kind == OpExKind::Notification {
                    e.0 = true;
                } else {
                    e.1 = true;
                }
            }
        }
    }
    for (k, o) in h.opexes.iter().enumerate() {
        if notif.get(&(o.object.as_str(), o.operation.as_str())) == Some(&(true, true)) {
            bad.push(k);
        }
    }
    bad.sort_unstable();
    bad.dedup();
    let detail = (!bad.is_empty())
        .then(|| "an operation mixes notifications with invoked op-exes".to_string());
    results.push(result(Constraint::OpValidity, Vec::new(), bad, detail));

    let bad: Vec<usize> =
        (0..h.opexes.len()).filter(|&k| h.process(&h.opexes[k].proc).is_none()).collect();
    let detail = (!bad.is_empty()).then(|| "op-ex issued by an undeclared process".to_string());
    results.push(result(Constraint::KnownProcesses, Vec::new(), bad, detail));

    ValidationReport { results }
}

/// The context `(O_c, ⟶_c)` of an op-ex: same-object op-exes preceding it.
///
/// Membership is computed on first use so that predicates which never look at
/// their context can be recognised as relation-independent.
pub struct Context<'a> {
    history: &'a History,
    subject: usize,
    universe: u64,
    rel: &'a dyn RelationView,
    members: OnceCell<u64>,
}

impl<'a> Context<'a> {
    pub(crate) fn new(
        history: &'a History,
        subject: usize,
        universe: u64,
        rel: &'a dyn RelationView,
    ) -> Self {
        Context { history, subject, universe, rel, members: OnceCell::new() }
    }

    pub fn history(&self) -> &'a History {
        self.history
    }

    pub fn subject(&self) -> usize {
        self.subject
    }

    pub fn subject_opex(&self) -> &'a OpEx {
        &self.history.opexes[self.subject]
    }

    /// `O_c` as a bit mask over op-ex indices.
    pub fn members(&self) -> u64 {
        *self.members.get_or_init(|| {
            let h = self.history;
            let obj = &h.opexes[self.subject].object;
            let mut mask = 0;
            for k in bits(self.universe) {
                if k != self.subject && h.opexes[k].object == *obj && self.rel.holds(k, self.subject)
                {
                    mask |= 1 << k;
                }
            }
            mask
        })
    }

    pub fn contains(&self, k: usize) -> bool {
        self.members() >> k & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.members().count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.members() == 0
    }

    /// Members of `O_c` with their op-exes, in index order.
    pub fn ops(&self) -> impl Iterator<Item = (usize, &'a OpEx)> + '_ {
        let h = self.history;
        bits(self.members()).map(move |k| (k, &h.opexes[k]))
    }

    /// `a ⟶_c b`: the relation restricted to `O_c ∪ {o}`.
    pub fn before(&self, a: usize, b: usize) -> bool {
        let scope = self.members() | 1 << self.subject;
        scope >> a & 1 == 1 && scope >> b & 1 == 1 && self.rel.holds(a, b)
    }

    /// `⟶_c` materialized over the history's op-ex indices.
    pub fn relation(&self) -> OrderRelation {
        let n = self.history.opexes.len();
        let scope = self.members() | 1 << self.subject;
        let mut rel = OrderRelation::new(n);
        for a in bits(scope) {
            for b in bits(scope) {
                if self.rel.holds(a, b) {
                    rel.insert(a, b);
                }
            }
        }
        rel
    }
}

/// Whole-history view handed to liveness predicates.
pub struct Scope<'a> {
    history: &'a History,
    universe: u64,
    rel: &'a dyn RelationView,
}

impl<'a> Scope<'a> {
    pub(crate) fn new(history: &'a History, rel: &'a dyn RelationView) -> Self {
        let n = history.opexes.len();
        let universe = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
        Scope { history, universe, rel }
    }

    pub fn history(&self) -> &'a History {
        self.history
    }

    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.rel.holds(a, b)
    }

    pub fn ops(&self) -> impl Iterator<Item = (usize, &'a OpEx)> + '_ {
        let h = self.history;
        bits(self.universe).map(move |k| (k, &h.opexes[k]))
    }

    pub fn is_correct(&self, proc: &str) -> bool {
        self.history.is_correct(proc)
    }
}
