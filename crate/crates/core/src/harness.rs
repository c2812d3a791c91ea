//! Exhaustive interleaving of small per-process programs.
//!
//! Every process runs its calls in order; each call contributes an invocation
//! and a response whose output is drawn from a finite candidate set.
//! Broadcasts and sends create notifications (deliveries, receives) that may
//! be scheduled at any point after the originating invocation. A finished
//! interleaving is kept when, for every object, its projection passes the
//! object's target condition.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::checker::{check, SearchConfig};
use crate::consistency::{Clause, ConditionSet};
use crate::error::{Error, Result};
use crate::history::{Direction, History, HistoryBuilder, Process};
use crate::sigma::{canonical, Sigma};
use crate::spec::{parse_spec, SpecRegistry};
use crate::Value;

pub const DEFAULT_EVENT_BUDGET: usize = 16;
pub const DEFAULT_MAX_HISTORIES: usize = 200_000;

pub const BUILTIN_PROGRAMS: [&str; 5] = ["alg1", "alg2", "alg3", "alg4", "alg5"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Call {
    pub object: String,
    pub operation: String,
    #[serde(default)]
    pub input: Value,
}

impl Call {
    pub fn new(object: &str, operation: &str, input: Value) -> Self {
        Call { object: object.into(), operation: operation.into(), input }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub processes: Vec<Process>,
    /// Calls per process id, run in order.
    #[serde(default)]
    pub calls: BTreeMap<String, Vec<Call>>,
}

/// Spec and condition an object's projections must satisfy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectTarget {
    /// `NAME[:params]` as accepted by [`parse_spec`].
    pub spec: String,
    /// Condition name; unions are written `a+b`.
    pub condition: String,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub objects: BTreeMap<String, ObjectTarget>,
    #[serde(default = "default_event_budget")]
    pub event_budget: usize,
    #[serde(default = "default_max_histories")]
    pub max_histories: usize,
}

fn default_event_budget() -> usize {
    DEFAULT_EVENT_BUDGET
}

fn default_max_histories() -> usize {
    DEFAULT_MAX_HISTORIES
}

impl GenConfig {
    pub fn new(objects: impl IntoIterator<Item = (String, ObjectTarget)>) -> Self {
        GenConfig {
            objects: objects.into_iter().collect(),
            event_budget: DEFAULT_EVENT_BUDGET,
            max_histories: DEFAULT_MAX_HISTORIES,
        }
    }
}

/// Program and configuration in one file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramFile {
    #[serde(flatten)]
    pub program: Program,
    #[serde(flatten)]
    pub config: GenConfig,
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub histories: Vec<History>,
    /// Finished interleavings examined.
    pub interleavings: u64,
    pub rejected: u64,
}

fn target(obj: &str, spec: &str, condition: &str) -> (String, ObjectTarget) {
    (obj.to_string(), ObjectTarget { spec: spec.into(), condition: condition.into(), k: None })
}

fn procs(ids: &[&str]) -> Vec<Process> {
    ids.iter().map(|p| Process::correct(*p)).collect()
}

/// The five built-in programs.
pub fn builtin_program(name: &str) -> Result<(Program, GenConfig)> {
    let mem = |v: i64| Call::new("mem", "write", json!([v, "x"]));
    let read = || Call::new("mem", "read", json!("x"));
    let bcast = |m: &str, id: i64| Call::new("rb", "r_broadcast", json!([m, id]));
    let (processes, calls, cfg) = match name {
        "alg1" => (
            procs(&["p1", "p2", "p3"]),
            vec![("p1", vec![mem(1)]), ("p2", vec![mem(2)]), ("p3", vec![read()])],
            GenConfig::new([target("mem", "shared-memory", "linearizability")]),
        ),
        "alg2" => (
            procs(&["p1", "p2"]),
            vec![("p1", vec![mem(1), read()]), ("p2", vec![mem(2), read()])],
            GenConfig::new([target("mem", "shared-memory", "linearizability")]),
        ),
        "alg3" => (
            procs(&["p1", "p2"]),
            vec![
                ("p1", vec![Call::new("ts", "test&set", Value::Null)]),
                ("p2", vec![Call::new("ts", "test&set", Value::Null)]),
            ],
            GenConfig::new([target("ts", "test-and-set", "linearizability")]),
        ),
        "alg4" => (
            procs(&["p1", "p2"]),
            vec![("p1", vec![bcast("m1", 1)]), ("p2", vec![bcast("m2", 2)])],
            GenConfig::new([target("rb", "reliable-broadcast", "process")]),
        ),
        "alg5" => (
            procs(&["p1", "p2"]),
            vec![("p1", vec![bcast("m1", 1)]), ("p2", vec![bcast("m2", 2)])],
            GenConfig::new([target("rb", "reliable-broadcast", "process+serializability")]),
        ),
        other => return Err(Error::UnknownProgram(other.to_string())),
    };
    let calls = calls.into_iter().map(|(p, c)| (p.to_string(), c)).collect();
    Ok((Program { processes, calls }, cfg))
}

/// Notification produced by an invocation.
#[derive(Clone, Debug)]
struct Note {
    to: usize,
    object: String,
    operation: String,
    output: Value,
    at: Option<u64>,
}

#[derive(Clone, Debug)]
struct Invoked {
    proc: usize,
    call: Call,
    inv: u64,
    res: Option<(u64, Value)>,
}

struct Target {
    object: String,
    cond: ConditionSet,
    /// Verdict depends only on per-process sequences.
    timing_free: bool,
}

struct Gen<'a> {
    prog: &'a Program,
    procs: Vec<String>,
    targets: Vec<Target>,
    candidates: Vec<Vec<Vec<Value>>>,
    next_call: Vec<usize>,
    outstanding: Vec<Option<usize>>,
    invoked: Vec<Invoked>,
    notes: Vec<Note>,
    clock: u64,
    max_histories: usize,
    out: Vec<History>,
    cache: HashMap<(usize, String), bool>,
    interleavings: u64,
    rejected: u64,
}

fn notes_for(prog_procs: &[String], p: usize, call: &Call) -> Vec<Note> {
    let at = |i: usize| call.input.get(i).cloned().unwrap_or(Value::Null);
    match call.operation.as_str() {
        "r_broadcast" => (0..prog_procs.len())
            .map(|q| Note {
                to: q,
                object: call.object.clone(),
                operation: "r_deliver".into(),
                output: json!([at(0), at(1), prog_procs[p]]),
                at: None,
            })
            .collect(),
        "send" => {
            let dest = at(1);
            prog_procs
                .iter()
                .position(|q| dest.as_str() == Some(q.as_str()))
                .map(|q| Note {
                    to: q,
                    object: call.object.clone(),
                    operation: "receive".into(),
                    output: json!([at(0), prog_procs[p]]),
                    at: None,
                })
                .into_iter()
                .collect()
        }
        _ => Vec::new(),
    }
}

fn subsets_containing(all: &[Value], v: &Value) -> Vec<Value> {
    let others: Vec<&Value> = all.iter().filter(|x| *x != v).collect();
    let mut out = Vec::new();
    for mask in 0u32..1 << others.len() {
        let mut set: Vec<Value> = vec![v.clone()];
        set.extend((0..others.len()).filter(|i| mask >> i & 1 == 1).map(|i| others[i].clone()));
        set.sort_by_key(canonical);
        out.push(Value::Array(set));
    }
    out
}

/// Finite output candidates of a call.
fn candidate_outputs(prog: &Program, call: &Call) -> Vec<Value> {
    let same_object = || prog.calls.values().flatten().filter(|c| c.object == call.object);
    match call.operation.as_str() {
        "read" => {
            let mut vals: Vec<Value> = Vec::new();
            for w in same_object().filter(|c| c.operation == "write") {
                let v = match &w.input {
                    Value::Array(xs) if xs.len() == 2 && xs[1] == call.input => xs[0].clone(),
                    other if call.input.is_null() => other.clone(),
                    _ => continue,
                };
                if !vals.contains(&v) {
                    vals.push(v);
                }
            }
            vals
        }
        "test&set" => vec![json!(0), json!(1)],
        "propose" => {
            let mut all: Vec<Value> = Vec::new();
            for c in same_object().filter(|c| c.operation == "propose") {
                if !all.contains(&c.input) {
                    all.push(c.input.clone());
                }
            }
            subsets_containing(&all, &call.input)
        }
        _ => vec![Value::Null],
    }
}

/// Key of a history up to timing: per-process event sequences.
fn sequence_key(h: &History) -> String {
    let mut procs: BTreeSet<&str> = h.processes().iter().map(|p| p.id.as_str()).collect();
    procs.extend(h.opexes().iter().map(|o| o.proc.as_str()));
    let mut key = String::new();
    for p in procs {
        key.push_str(p);
        key.push(':');
        for e in h.process_events(p) {
            if let Some((k, dir)) = h.owner(e) {
                let o = h.opex(k);
                let d = if dir == Direction::Inv { 'i' } else { 'r' };
                key.push_str(&format!(
                    "{}.{}{d}{}/{};",
                    o.object,
                    o.operation,
                    canonical(&o.input),
                    canonical(&o.output)
                ));
            }
        }
        key.push('|');
    }
    key
}

impl Gen<'_> {
    fn run(&mut self) -> Result<()> {
        let mut moved = false;
        for p in 0..self.procs.len() {
            let calls = self.prog.calls.get(&self.procs[p]).map(Vec::as_slice).unwrap_or(&[]);
            match self.outstanding[p] {
                None if self.next_call[p] < calls.len() => {
                    moved = true;
                    let call = calls[self.next_call[p]].clone();
                    let id = self.invoked.len();
                    let new_notes = notes_for(&self.procs, p, &call);
                    let added = new_notes.len();
                    self.invoked.push(Invoked { proc: p, call, inv: self.clock, res: None });
                    self.notes.extend(new_notes);
                    self.outstanding[p] = Some(id);
                    self.next_call[p] += 1;
                    self.clock += 1;
                    self.run()?;
                    self.clock -= 1;
                    self.next_call[p] -= 1;
                    self.outstanding[p] = None;
                    self.notes.truncate(self.notes.len() - added);
                    self.invoked.pop();
                }
                Some(id) => {
                    moved = true;
                    let cands = self.candidates[p][self.next_call[p] - 1].clone();
                    self.outstanding[p] = None;
                    for v in cands {
                        self.invoked[id].res = Some((self.clock, v));
                        self.clock += 1;
                        self.run()?;
                        self.clock -= 1;
                    }
                    self.invoked[id].res = None;
                    self.outstanding[p] = Some(id);
                }
                None => {}
            }
        }
        for n in 0..self.notes.len() {
            if self.notes[n].at.is_none() {
                moved = true;
                self.notes[n].at = Some(self.clock);
                self.clock += 1;
                self.run()?;
                self.clock -= 1;
                self.notes[n].at = None;
            }
        }
        if !moved {
            self.leaf()?;
        }
        Ok(())
    }

    fn history(&self) -> History {
        let mut b = HistoryBuilder::default();
        for p in &self.prog.processes {
            b = b.process(p.id.clone(), p.kind);
        }
        for i in &self.invoked {
            let (res, out) = match &i.res {
                Some((r, v)) => (Some(*r), v.clone()),
                None => (None, Value::Null),
            };
            b.push(
                i.call.object.clone(),
                i.call.operation.clone(),
                self.procs[i.proc].clone(),
                i.call.input.clone(),
                out,
                Some(i.inv),
                res,
            );
        }
        for n in &self.notes {
            b.push(
                n.object.clone(),
                n.operation.clone(),
                self.procs[n.to].clone(),
                Value::Null,
                n.output.clone(),
                None,
                n.at,
            );
        }
        b.complete(true).build()
    }

    fn leaf(&mut self) -> Result<()> {
        self.interleavings += 1;
        let h = self.history();
        for t in 0..self.targets.len() {
            let proj = h.project_object(&self.targets[t].object);
            let key = self.targets[t].timing_free.then(|| (t, sequence_key(&proj)));
            let ok = match key.as_ref().and_then(|k| self.cache.get(k)) {
                Some(&ok) => ok,
                None => {
                    let ok = check(&proj, &self.targets[t].cond, &SearchConfig::default())?.accepted;
                    if let Some(k) = key {
                        self.cache.insert(k, ok);
                    }
                    ok
                }
            };
            if !ok {
                self.rejected += 1;
                return Ok(());
            }
        }
        if self.out.len() >= self.max_histories {
            return Err(Error::Resource(format!(
                "more than {} accepted histories",
                self.max_histories
            )));
        }
        self.out.push(h);
        Ok(())
    }
}

/// All complete interleavings of `prog` whose per-object projections pass
/// their target conditions. Histories are returned in exploration order and
/// are pairwise distinct.
pub fn enumerate_histories(prog: &Program, cfg: &GenConfig) -> Result<Generated> {
    let procs: Vec<String> = prog.processes.iter().map(|p| p.id.clone()).collect();
    for p in prog.calls.keys() {
        if !procs.contains(p) {
            return Err(Error::InvalidParameter(format!("calls for undeclared process `{p}`")));
        }
    }
    if cfg.event_budget == 0 || cfg.max_histories == 0 {
        return Err(Error::InvalidParameter("budgets must be positive".into()));
    }
    let mut events = 0usize;
    for (p, calls) in &prog.calls {
        let pi = procs.iter().position(|q| q == p).unwrap_or(0);
        for c in calls {
            events += 2 + notes_for(&procs, pi, c).len();
        }
    }
    if events > cfg.event_budget {
        return Err(Error::Resource(format!(
            "program has {events} events, over the budget of {}",
            cfg.event_budget
        )));
    }
    let objects: BTreeSet<&str> = prog.calls.values().flatten().map(|c| c.object.as_str()).collect();
    let mut targets = Vec::new();
    for obj in objects {
        let t = cfg.objects.get(obj).ok_or_else(|| Error::MissingSpec(obj.to_string()))?;
        let registry = SpecRegistry::new().with(obj, parse_spec(&t.spec)?);
        let cond = ConditionSet::parse(&t.condition, Arc::new(registry), t.k)?;
        let timing_free = !cond.contains(Clause::HistoryOrder);
        targets.push(Target { object: obj.to_string(), cond, timing_free });
    }
    let candidates = procs
        .iter()
        .map(|p| {
            prog.calls
                .get(p)
                .map(|cs| cs.iter().map(|c| candidate_outputs(prog, c)).collect())
                .unwrap_or_default()
        })
        .collect();
    let mut g = Gen {
        prog,
        next_call: vec![0; procs.len()],
        outstanding: vec![None; procs.len()],
        procs,
        targets,
        candidates,
        invoked: Vec::new(),
        notes: Vec::new(),
        clock: 0,
        max_histories: cfg.max_histories,
        out: Vec::new(),
        cache: HashMap::new(),
        interleavings: 0,
        rejected: 0,
    };
    g.run()?;
    Ok(Generated { histories: g.out, interleavings: g.interleavings, rejected: g.rejected })
}

/// Display view: drops histories in which a process delivers before invoking
/// its own broadcast, and removes broadcast responses.
pub fn reduced_view(histories: &[History]) -> Vec<History> {
    histories
        .iter()
        .filter(|h| {
            h.opexes().iter().all(|d| {
                d.operation != "r_deliver"
                    || h.opexes()
                        .iter()
                        .enumerate()
                        .filter(|(_, b)| b.operation == "r_broadcast" && b.proc == d.proc)
                        .all(|(k, _)| {
                            let own = h.inv_position(k).unwrap_or(0);
                            d.res.is_none_or(|r| h.position(r) > own)
                        })
            })
        })
        .map(|h| {
            let mut b = HistoryBuilder::default();
            for p in h.processes() {
                b = b.process(p.id.clone(), p.kind);
            }
            for (k, o) in h.opexes().iter().enumerate() {
                let res = if o.operation == "r_broadcast" { None } else { h.res_position(k) };
                let out = if res.is_none() && o.inv.is_some() { Value::Null } else { o.output.clone() };
                b.push(
                    o.object.clone(),
                    o.operation.clone(),
                    o.proc.clone(),
                    o.input.clone(),
                    out,
                    h.inv_position(k),
                    res,
                );
            }
            b.complete(h.is_complete()).build()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SinkClass {
    /// Per process, the non-null response and notification values in order.
    pub key: Vec<(String, Vec<String>)>,
    pub states: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SinkSummary {
    pub sinks: usize,
    pub classes: Vec<SinkClass>,
}

impl SinkSummary {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

/// Groups the sink states of Σ by per-process sequences of response values.
pub fn sink_summary(s: &Sigma) -> SinkSummary {
    let mut classes: BTreeMap<Vec<(String, Vec<String>)>, Vec<usize>> = BTreeMap::new();
    let mut sinks = 0;
    for st in s.sinks() {
        sinks += 1;
        let key: Vec<(String, Vec<String>)> = s
            .processes()
            .iter()
            .map(|p| {
                let mut evs: Vec<usize> = s
                    .state(st)
                    .events
                    .iter()
                    .copied()
                    .filter(|&e| s.event(e).proc() == p && s.event(e).key.dir == Direction::Res)
                    .collect();
                evs.sort_by_key(|&e| s.event(e).key.idx);
                let vals = evs
                    .into_iter()
                    .filter(|&e| !s.event(e).value.is_null())
                    .map(|e| s.event(e).key.value.clone())
                    .collect();
                (p.clone(), vals)
            })
            .collect();
        classes.entry(key).or_default().push(st);
    }
    SinkSummary {
        sinks,
        classes: classes.into_iter().map(|(key, states)| SinkClass { key, states }).collect(),
    }
}
