//! Bounded search over Byzantine repairs of a history.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{check, SearchConfig, Stats, Verdict};
use crate::consistency::ConditionSet;
use crate::error::{Error, Result};
use crate::history::{History, HistoryBuilder, ProcessType};
use crate::Value;

/// A candidate pending op-ex. Without `proc` it may be issued by any Byzantine process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Template {
    #[serde(default)]
    pub proc: Option<String>,
    pub object: String,
    pub operation: String,
    #[serde(default)]
    pub input: Value,
}

#[derive(Clone, Debug)]
pub struct ByzConfig {
    pub universe: Vec<Template>,
    /// Per Byzantine process.
    pub max_inserted: usize,
    /// Bound on the number of repaired histories examined.
    pub candidate_budget: u64,
}

impl Default for ByzConfig {
    fn default() -> Self {
        ByzConfig { universe: Vec::new(), max_inserted: 1, candidate_budget: 100_000 }
    }
}

/// Searches repairs `H′` that keep every non-Byzantine op-ex, drop the
/// Byzantine ones, and give each Byzantine process up to `max_inserted`
/// pending op-exes drawn from the universe, interleaved anywhere without
/// reordering existing events. Candidates are tried by increasing insertion
/// count, then universe order, then gap order.
///
/// Acceptance is exact; rejection holds within the bounds only.
pub fn check_byzantine(
    h: &History,
    cond: &ConditionSet,
    byz: &ByzConfig,
    cfg: &SearchConfig,
) -> Result<Verdict> {
    let start = Instant::now();
    let report = h.validate();
    if !report.is_valid() {
        return Err(Error::InvalidHistory(report.summary()));
    }
    for t in &byz.universe {
        if let Some(p) = &t.proc {
            if h.process(p).is_none() {
                return Err(Error::InvalidParameter(format!(
                    "universe template names process `{p}` absent from the history"
                )));
            }
        }
    }
    let byzantine: Vec<&str> = h
        .processes()
        .iter()
        .filter(|p| p.kind == ProcessType::Byzantine)
        .map(|p| p.id.as_str())
        .collect();
    if byzantine.is_empty() {
        return check(h, cond, cfg);
    }
    let base = h.filter(|o| h.process_type(&o.proc) != Some(ProcessType::Byzantine));
    let options: Vec<Vec<&Template>> = byzantine
        .iter()
        .map(|b| {
            byz.universe.iter().filter(|t| t.proc.as_deref().is_none_or(|p| p == *b)).collect()
        })
        .collect();
    let mut search = Repair {
        base: &base,
        cond,
        cfg,
        byzantine: &byzantine,
        options: &options,
        budget: byz.candidate_budget,
        candidates: 0,
        nodes: 0,
    };
    let max_total = byz.max_inserted * byzantine.len();
    for total in 0..=max_total {
        for counts in distributions(byzantine.len(), total, byz.max_inserted) {
            if let Some(mut v) = search.with_counts(&counts)? {
                v.stats.candidates = search.candidates;
                v.stats.elapsed = start.elapsed();
                return Ok(v);
            }
        }
    }
    let mut v = Verdict::rejected(Default::default(), Stats::default());
    v.bounded = true;
    v.stats = Stats {
        strategy: "byzantine".into(),
        nodes: search.nodes,
        elapsed: start.elapsed(),
        candidates: search.candidates,
    };
    Ok(v)
}

/// Vectors of `parts` counts, each ≤ `cap`, summing to `total`, in lexicographic order.
fn distributions(parts: usize, total: usize, cap: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, left: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for c in 0..=cap.min(left) {
            cur[i] = c;
            rec(i + 1, left - c, cap, cur, out);
        }
    }
    let mut out = Vec::new();
    rec(0, total, cap, &mut vec![0; parts], &mut out);
    out
}

/// Calls `f` on every sequence of `len` indices below `base`, lexicographically.
fn sequences(len: usize, base: usize, f: &mut dyn FnMut(&[usize]) -> Result<bool>) -> Result<bool> {
    if len > 0 && base == 0 {
        return Ok(false);
    }
    let mut cur = vec![0usize; len];
    loop {
        if f(&cur)? {
            return Ok(true);
        }
        let mut i = len;
        loop {
            if i == 0 {
                return Ok(false);
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < base {
                break;
            }
            cur[i] = 0;
        }
    }
}

struct Repair<'a> {
    base: &'a History,
    cond: &'a ConditionSet,
    cfg: &'a SearchConfig,
    byzantine: &'a [&'a str],
    options: &'a [Vec<&'a Template>],
    budget: u64,
    candidates: u64,
    nodes: u64,
}

impl Repair<'_> {
    fn with_counts(&mut self, counts: &[usize]) -> Result<Option<Verdict>> {
        let total: usize = counts.iter().sum();
        // Template choice per inserted slot, process by process.
        let mut owners = Vec::with_capacity(total);
        for (b, &c) in counts.iter().enumerate() {
            owners.extend(std::iter::repeat_n(b, c));
        }
        if owners.iter().any(|&b| self.options[b].is_empty()) {
            return Ok(None);
        }
        let widest = self.options.iter().map(Vec::len).max().unwrap_or(0);
        let mut found = None;
        let owners_ref = &owners;
        sequences(total, widest, &mut |choice| {
            if choice.iter().zip(owners_ref).any(|(&t, &b)| t >= self.options[b].len()) {
                return Ok(false);
            }
            let gaps = self.base.events().len() + 1;
            sequences(total, gaps, &mut |gap| {
                // gaps of one process are nondecreasing; ties keep insertion order
                let ordered = (1..total).all(|i| owners_ref[i] != owners_ref[i - 1] || gap[i] >= gap[i - 1]);
                if !ordered {
                    return Ok(false);
                }
                self.candidates += 1;
                if self.candidates > self.budget {
                    return Err(Error::Resource(format!(
                        "Byzantine search exceeded {} candidates",
                        self.budget
                    )));
                }
                let inserts: Vec<(usize, &Template, usize)> = (0..total)
                    .map(|i| (owners_ref[i], self.options[owners_ref[i]][choice[i]], gap[i]))
                    .collect();
                let repaired = self.build(&inserts);
                let v = check(&repaired, self.cond, self.cfg)?;
                self.nodes += v.stats.nodes;
                if v.accepted {
                    let first = self.base.len();
                    found = Some(Verdict {
                        history: Some(repaired),
                        inserted: (first..first + total).collect(),
                        ..v
                    });
                    return Ok(true);
                }
                Ok(false)
            })
        })?;
        Ok(found)
    }

    fn build(&self, inserts: &[(usize, &Template, usize)]) -> History {
        let base = self.base;
        let mut order: Vec<usize> = (0..base.events().len()).collect();
        order.sort_by_key(|&e| base.position(e));
        let mut renumber: BTreeMap<usize, u64> = BTreeMap::new();
        let mut inserted_pos = vec![0u64; inserts.len()];
        let mut next = 0u64;
        for g in 0..=order.len() {
            for (i, ins) in inserts.iter().enumerate() {
                if ins.2 == g {
                    inserted_pos[i] = next;
                    next += 1;
                }
            }
            if let Some(&e) = order.get(g) {
                renumber.insert(e, next);
                next += 1;
            }
        }
        let mut b = HistoryBuilder::default();
        for p in base.processes() {
            b = b.process(p.id.clone(), p.kind);
        }
        for o in base.opexes() {
            b.push(
                o.object.clone(),
                o.operation.clone(),
                o.proc.clone(),
                o.input.clone(),
                o.output.clone(),
                o.inv.map(|e| renumber[&e]),
                o.res.map(|e| renumber[&e]),
            );
        }
        for (i, (owner, t, _)) in inserts.iter().enumerate() {
            b.push(
                t.object.clone(),
                t.operation.clone(),
                self.byzantine[*owner].to_string(),
                t.input.clone(),
                Value::Null,
                Some(inserted_pos[i]),
                None,
            );
        }
        b.complete(base.is_complete()).build()
    }
}
