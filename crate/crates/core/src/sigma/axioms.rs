//! Asynchrony, valence lemmas and consensus axioms on Σ.

use std::collections::BTreeSet;

use serde::Serialize;

use super::Sigma;
use crate::error::{Error, Result};

pub const DEFAULT_SETWISE_BUDGET: u64 = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AsynchronyMode {
    /// Single events of distinct processes.
    Pairwise,
    /// Single-process extension chains of distinct processes, with a bound on
    /// the number of chain pairs examined.
    Setwise { budget: u64 },
}

impl AsynchronyMode {
    pub fn setwise() -> Self {
        AsynchronyMode::Setwise { budget: DEFAULT_SETWISE_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `σ`, `e`, `e′` with `σ ∪ {e, e′} ∉ Σ`.
    Step { state: usize, e: usize, e2: usize },
    /// `σ` and the added event sets `E₁`, `E₂` with `σ ∪ E₁ ∪ E₂ ∉ Σ`.
    Sets { state: usize, first: Vec<usize>, second: Vec<usize> },
    /// Two states with different valences.
    Pair { first: usize, second: usize },
    /// A multivalent state and a process.
    StateProc { state: usize, proc: String },
    State { state: usize },
    Proc { proc: String },
    /// One value per process.
    Selection { values: Vec<(String, String)> },
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub axiom: String,
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl AxiomReport {
    pub(crate) fn new(axiom: &str, holds: bool, witness: Option<Witness>) -> Self {
        AxiomReport { axiom: axiom.to_string(), holds, witness }
    }
}

/// Every nonempty state has an incoming edge.
pub fn check_continuity(s: &Sigma) -> AxiomReport {
    let bad = (0..s.len()).find(|&i| !s.state(i).events.is_empty() && s.in_edges(i).is_empty());
    AxiomReport::new("Continuity", bad.is_none(), bad.map(|state| Witness::State { state }))
}

pub fn check_asynchrony(s: &Sigma, mode: AsynchronyMode) -> Result<AxiomReport> {
    match mode {
        AsynchronyMode::Pairwise => Ok(pairwise(s)),
        AsynchronyMode::Setwise { budget } => setwise(s, budget),
    }
}

fn pairwise(s: &Sigma) -> AxiomReport {
    for st in 0..s.len() {
        let out = s.out_edges(st);
        for (i, &(e, _)) in out.iter().enumerate() {
            for &(e2, _) in &out[i + 1..] {
                if s.event(e).proc() == s.event(e2).proc() {
                    continue;
                }
                let mut u = s.state(st).events.clone();
                u.push(e);
                u.push(e2);
                if s.find(&u).is_none() {
                    return AxiomReport::new(
                        "Asynchrony",
                        false,
                        Some(Witness::Step { state: st, e, e2 }),
                    );
                }
            }
        }
    }
    AxiomReport::new("Asynchrony", true, None)
}

/// States reachable from `st` through edges of `proc` only, excluding `st`, in
/// canonical order.
fn chains(s: &Sigma, st: usize, proc: &str) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![st];
    while let Some(x) = stack.pop() {
        for &(e, t) in s.out_edges(x) {
            if s.event(e).proc() == proc && seen.insert(t) {
                stack.push(t);
            }
        }
    }
    seen.into_iter().collect()
}

fn added(s: &Sigma, base: usize, t: usize) -> Vec<usize> {
    let b = &s.state(base).events;
    s.state(t).events.iter().copied().filter(|e| b.binary_search(e).is_err()).collect()
}

fn setwise(s: &Sigma, budget: u64) -> Result<AxiomReport> {
    let mut spent = 0u64;
    for st in 0..s.len() {
        let per_proc: Vec<Vec<usize>> =
            s.processes().iter().map(|p| chains(s, st, p)).collect();
        for p in 0..per_proc.len() {
            for q in p + 1..per_proc.len() {
                for &t1 in &per_proc[p] {
                    for &t2 in &per_proc[q] {
                        spent += 1;
                        if spent > budget {
                            return Err(Error::Resource(format!(
                                "setwise asynchrony exceeded {budget} chain pairs"
                            )));
                        }
                        let mut u = s.state(t1).events.clone();
                        u.extend(added(s, st, t2));
                        if s.find(&u).is_none() {
                            return Ok(AxiomReport::new(
                                "Asynchrony(setwise)",
                                false,
                                Some(Witness::Sets {
                                    state: st,
                                    first: added(s, st, t1),
                                    second: added(s, st, t2),
                                }),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(AxiomReport::new("Asynchrony(setwise)", true, None))
}

/// NonEmptyValence on every state and Termination on every complete state.
pub fn verify_valence_lemmas(s: &Sigma) -> Result<Vec<AxiomReport>> {
    let val = s.valence()?;
    let empty = (0..s.len()).find(|&i| val[i].is_empty());
    let nonempty =
        AxiomReport::new("NonEmptyValence", empty.is_none(), empty.map(|state| Witness::State { state }));
    let bad = s.complete_states().find(|&c| termination_substate(s, c, val).is_none());
    let termination =
        AxiomReport::new("Termination", bad.is_none(), bad.map(|state| Witness::State { state }));
    Ok(vec![nonempty, termination])
}

/// A univalent sub-state of complete state `c` with the same valence: first
/// the deciding process's prefix up to its decide event, then any sub-state.
pub(crate) fn termination_substate(
    s: &Sigma,
    c: usize,
    val: &[BTreeSet<String>],
) -> Option<usize> {
    let target = &val[c];
    if target.len() != 1 {
        return None;
    }
    let events = &s.state(c).events;
    for &d in events.iter().filter(|&&e| s.event(e).is_decide()) {
        let dk = &s.event(d).key;
        let prefix: Vec<usize> = events
            .iter()
            .copied()
            .filter(|&e| s.event(e).key.proc == dk.proc && s.event(e).key.idx <= dk.idx)
            .collect();
        if let Some(sp) = s.find(&prefix) {
            if val[sp] == *target {
                return Some(sp);
            }
        }
    }
    (0..s.len()).find(|&t| {
        val[t] == *target && s.state(t).events.iter().all(|e| events.binary_search(e).is_ok())
    })
}

/// NonTriviality and Resilience.
pub fn check_consensus_axioms(s: &Sigma) -> Result<Vec<AxiomReport>> {
    let val = s.valence()?;
    Ok(vec![non_triviality(val), resilience(s, val)])
}

pub(crate) fn non_triviality(val: &[BTreeSet<String>]) -> AxiomReport {
    let find = |only_univalent: bool| {
        for a in 0..val.len() {
            if only_univalent && val[a].len() != 1 {
                continue;
            }
            for b in a + 1..val.len() {
                if only_univalent && val[b].len() != 1 {
                    continue;
                }
                if val[a] != val[b] {
                    return Some((a, b));
                }
            }
        }
        None
    };
    let pair = find(true).or_else(|| find(false));
    AxiomReport::new(
        "NonTriviality",
        pair.is_some(),
        pair.map(|(first, second)| Witness::Pair { first, second }),
    )
}

pub(crate) fn resilience(s: &Sigma, val: &[BTreeSet<String>]) -> AxiomReport {
    for st in (0..s.len()).filter(|&i| val[i].len() > 1) {
        for p in s.processes() {
            if !s.out_edges(st).iter().any(|&(e, _)| s.event(e).proc() != p) {
                return AxiomReport::new(
                    "Resilience",
                    false,
                    Some(Witness::StateProc { state: st, proc: p.clone() }),
                );
            }
        }
    }
    AxiomReport::new("Resilience", true, None)
}

/// Starting at the first multivalent state, moves to the first multivalent
/// one-event extension until none exists.
pub fn find_critical_state(s: &Sigma) -> Result<Option<usize>> {
    let val = s.valence()?;
    let Some(mut cur) = (0..s.len()).find(|&i| val[i].len() > 1) else {
        return Ok(None);
    };
    while let Some(&(_, next)) = s.out_edges(cur).iter().find(|&&(_, t)| val[t].len() > 1) {
        cur = next;
    }
    Ok(Some(cur))
}
