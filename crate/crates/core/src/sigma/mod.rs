//! State graphs extracted from sets of histories.
//!
//! A state is a union of per-process event prefixes of one input history.
//! Events are identified across histories by process, per-process index,
//! object, operation, side and value, so two histories that agree on a
//! process's first `m` events share the corresponding states.

mod audit;
mod axioms;
pub mod dot;

use std::cell::OnceCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::history::{Direction, History};
use crate::Value;

pub use audit::{flp_audit, ksa_audit, solo_values, Contradiction, ContradictionReport};
pub use axioms::{
    check_asynchrony, check_consensus_axioms, check_continuity, find_critical_state,
    verify_valence_lemmas, AsynchronyMode, AxiomReport, Witness, DEFAULT_SETWISE_BUDGET,
};

/// Cross-history identity of an event.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EventKey {
    pub proc: String,
    pub idx: u32,
    pub object: String,
    pub operation: String,
    pub dir: Direction,
    /// Canonical JSON text of the event value.
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaEvent {
    pub key: EventKey,
    pub value: Value,
    /// Input of the owning op-ex.
    pub input: Value,
}

impl SigmaEvent {
    pub fn proc(&self) -> &str {
        &self.key.proc
    }

    pub fn is_decide(&self) -> bool {
        self.key.operation == "decide" && self.key.dir == Direction::Res
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct State {
    /// Sorted event ids.
    pub events: Vec<usize>,
    pub complete: bool,
    /// Input histories the state is extracted from.
    pub sources: BTreeSet<usize>,
}

/// Canonical JSON text; object keys are sorted by `serde_json`'s default map.
pub fn canonical(v: &Value) -> String {
    serde_json::to_string(v).unwrap_or_default()
}

#[derive(Clone, Debug)]
pub struct Sigma {
    histories: Vec<History>,
    processes: Vec<String>,
    events: Vec<SigmaEvent>,
    states: Vec<State>,
    index: HashMap<Vec<usize>, usize>,
    /// `(event, target)` sorted by event.
    out: Vec<Vec<(usize, usize)>>,
    /// `(event, source)` sorted by event.
    inc: Vec<Vec<(usize, usize)>>,
    valence: OnceCell<Vec<BTreeSet<String>>>,
}

fn keyed_events(h: &History) -> Result<Vec<(String, Vec<(EventKey, SigmaEvent)>)>> {
    let mut out = Vec::new();
    let mut procs: BTreeSet<&str> = h.processes().iter().map(|p| p.id.as_str()).collect();
    procs.extend(h.opexes().iter().map(|o| o.proc.as_str()));
    for p in procs {
        let mut seq = Vec::new();
        for e in h.process_events(p) {
            let (k, dir) = h.owner(e).ok_or(Error::UnknownEvent(e))?;
            let o = h.opex(k);
            let value = h.events()[e].value.clone();
            let key = EventKey {
                proc: p.to_string(),
                idx: h.event_index(e)?,
                object: o.object.clone(),
                operation: o.operation.clone(),
                dir,
                value: canonical(&value),
            };
            let ev = SigmaEvent { key: key.clone(), value, input: o.input.clone() };
            seq.push((key, ev));
        }
        out.push((p.to_string(), seq));
    }
    Ok(out)
}

impl Sigma {
    /// Builds Σ by closing each history's full event set under removal of a
    /// process's last event.
    pub fn build(histories: &[History]) -> Result<Sigma> {
        let mut keyed = Vec::with_capacity(histories.len());
        let mut interned: BTreeMap<EventKey, SigmaEvent> = BTreeMap::new();
        for (i, h) in histories.iter().enumerate() {
            let report = h.validate();
            if !report.is_valid() {
                return Err(Error::Precondition { index: i, reason: report.summary() });
            }
            let per_proc = keyed_events(h)?;
            for (_, seq) in &per_proc {
                for (key, ev) in seq {
                    match interned.get(key) {
                        Some(prev) if prev.input != ev.input => {
                            return Err(Error::EventConflict(format!(
                                "{}#{} {}.{} in history {i} has a different op-ex input than in an earlier history",
                                key.proc, key.idx, key.object, key.operation
                            )))
                        }
                        Some(_) => {}
                        None => {
                            interned.insert(key.clone(), ev.clone());
                        }
                    }
                }
            }
            keyed.push(per_proc);
        }
        let ids: HashMap<EventKey, usize> =
            interned.keys().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        let events: Vec<SigmaEvent> = interned.into_values().collect();
        let mut processes: BTreeSet<String> = BTreeSet::new();

        let mut tmp: HashMap<Vec<usize>, (bool, BTreeSet<usize>)> = HashMap::new();
        let mut edges: BTreeSet<(Vec<usize>, usize, Vec<usize>)> = BTreeSet::new();
        for (i, per_proc) in keyed.iter().enumerate() {
            let seqs: Vec<Vec<usize>> = per_proc
                .iter()
                .map(|(p, seq)| {
                    processes.insert(p.clone());
                    seq.iter().map(|(k, _)| ids[k]).collect()
                })
                .collect();
            let mut lens = vec![0usize; seqs.len()];
            loop {
                let mut set: Vec<usize> =
                    seqs.iter().zip(&lens).flat_map(|(s, &c)| s[..c].iter().copied()).collect();
                set.sort_unstable();
                let full = seqs.iter().zip(&lens).all(|(s, &c)| c == s.len());
                let entry = tmp.entry(set.clone()).or_insert_with(|| (false, BTreeSet::new()));
                entry.0 |= full;
                entry.1.insert(i);
                for (p, s) in seqs.iter().enumerate() {
                    if lens[p] > 0 {
                        let e = s[lens[p] - 1];
                        let parent: Vec<usize> = set.iter().copied().filter(|&x| x != e).collect();
                        edges.insert((parent, e, set.clone()));
                    }
                }
                let mut p = 0;
                loop {
                    if p == seqs.len() {
                        break;
                    }
                    if lens[p] < seqs[p].len() {
                        lens[p] += 1;
                        break;
                    }
                    lens[p] = 0;
                    p += 1;
                }
                if p == seqs.len() {
                    break;
                }
            }
        }
        let mut keys: Vec<Vec<usize>> = tmp.keys().cloned().collect();
        keys.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let index: HashMap<Vec<usize>, usize> =
            keys.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        let states: Vec<State> = keys
            .into_iter()
            .map(|k| {
                let (complete, sources) = tmp.remove(&k).unwrap_or_default();
                State { events: k, complete, sources }
            })
            .collect();
        let mut out = vec![Vec::new(); states.len()];
        let mut inc = vec![Vec::new(); states.len()];
        for (parent, e, child) in edges {
            let (Some(&a), Some(&b)) = (index.get(&parent), index.get(&child)) else {
                return Err(Error::Construction(format!(
                    "removal of event {e} leaves a set outside Σ"
                )));
            };
            out[a].push((e, b));
            inc[b].push((e, a));
        }
        for v in out.iter_mut().chain(inc.iter_mut()) {
            v.sort_unstable();
        }
        let sigma = Sigma {
            histories: histories.to_vec(),
            processes: processes.into_iter().collect(),
            events,
            states,
            index,
            out,
            inc,
            valence: OnceCell::new(),
        };
        if let Some(s) = (0..sigma.states.len())
            .find(|&s| !sigma.states[s].events.is_empty() && sigma.inc[s].is_empty())
        {
            return Err(Error::Construction(format!("state {s} has no incoming edge")));
        }
        Ok(sigma)
    }

    pub fn histories(&self) -> &[History] {
        &self.histories
    }

    /// Process ids appearing in any input history, sorted.
    pub fn processes(&self) -> &[String] {
        &self.processes
    }

    pub fn events(&self) -> &[SigmaEvent] {
        &self.events
    }

    pub fn event(&self, e: usize) -> &SigmaEvent {
        &self.events[e]
    }

    /// States in canonical order: by size, then lexicographically by event ids.
    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, s: usize) -> &State {
        &self.states[s]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Id of the state with exactly these events.
    pub fn find(&self, events: &[usize]) -> Option<usize> {
        let mut v = events.to_vec();
        v.sort_unstable();
        v.dedup();
        self.index.get(&v).copied()
    }

    /// One-event extensions `(e, σ ∪ {e})`, sorted by event id.
    pub fn out_edges(&self, s: usize) -> &[(usize, usize)] {
        &self.out[s]
    }

    /// `(e, σ ∖ {e})` for every incoming edge.
    pub fn in_edges(&self, s: usize) -> &[(usize, usize)] {
        &self.inc[s]
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn complete_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&s| self.states[s].complete)
    }

    /// States without outgoing edges.
    pub fn sinks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&s| self.out[s].is_empty())
    }

    /// Decided values (canonical JSON) among the events of `s`.
    pub fn decides_in(&self, s: usize) -> BTreeSet<String> {
        self.states[s]
            .events
            .iter()
            .filter(|&&e| self.events[e].is_decide())
            .map(|&e| self.events[e].key.value.clone())
            .collect()
    }

    /// `Val(σ)` for every state: the decided values of a complete state, the
    /// union over one-event extensions otherwise. Computed once.
    pub fn valence(&self) -> Result<&[BTreeSet<String>]> {
        if let Some(v) = self.valence.get() {
            return Ok(v);
        }
        let n = self.states.len();
        let mut val = vec![BTreeSet::new(); n];
        for s in (0..n).rev() {
            if self.states[s].complete {
                val[s] = self.decides_in(s);
            } else if self.out[s].is_empty() {
                return Err(Error::Construction(format!(
                    "state {s} is neither complete nor extensible"
                )));
            } else {
                let mut acc = BTreeSet::new();
                for &(_, t) in &self.out[s] {
                    acc.extend(val[t].iter().cloned());
                }
                val[s] = acc;
            }
        }
        Ok(self.valence.get_or_init(|| val))
    }

    /// Valence of one state.
    pub fn valence_of(&self, s: usize) -> Result<&BTreeSet<String>> {
        Ok(&self.valence()?[s])
    }

    /// `Procs(σ)`.
    pub fn procs_of(&self, s: usize) -> BTreeSet<&str> {
        self.states[s].events.iter().map(|&e| self.events[e].proc()).collect()
    }

    /// Human-readable rendering of an event, e.g. `p1#2 read/res 1`.
    pub fn describe_event(&self, e: usize) -> String {
        let k = &self.events[e].key;
        let dir = match k.dir {
            Direction::Inv => "inv",
            Direction::Res => "res",
        };
        format!("{}#{} {}.{}/{} {}", k.proc, k.idx, k.object, k.operation, dir, k.value)
    }

    pub fn describe_state(&self, s: usize) -> String {
        let st = &self.states[s];
        if st.events.is_empty() {
            return "∅".into();
        }
        let parts: Vec<String> = st.events.iter().map(|&e| self.describe_event(e)).collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// Builds Σ from a set of histories.
pub fn build_sigma(histories: &[History]) -> Result<Sigma> {
    Sigma::build(histories)
}
