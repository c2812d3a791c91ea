//! Order predicates and consistency conditions.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::history::{Context, History, Scope};
use crate::relation::RelationView;
use crate::spec::SpecRegistry;

/// Default bound on the number of processes partitioned by `kSetTotalOrder`.
pub const PARTITION_CAP: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Clause {
    Validity,
    Safety,
    Liveness,
    PartialOrder,
    TotalOrder,
    HistoryOrder,
    ProcessOrder,
    FifoOrder,
    IntOrder,
    SetOrder,
    KSetTotalOrder(usize),
}

impl Clause {
    pub fn name(&self) -> String {
        match self {
            Clause::Validity => "Validity".into(),
            Clause::Safety => "Safety".into(),
            Clause::Liveness => "Liveness".into(),
            Clause::PartialOrder => "PartialOrder".into(),
            Clause::TotalOrder => "TotalOrder".into(),
            Clause::HistoryOrder => "HistoryOrder".into(),
            Clause::ProcessOrder => "ProcessOrder".into(),
            Clause::FifoOrder => "FIFOOrder".into(),
            Clause::IntOrder => "IntOrder".into(),
            Clause::SetOrder => "SetOrder".into(),
            Clause::KSetTotalOrder(k) => format!("kSetTotalOrder({k})"),
        }
    }

    // Rough evaluation cost, used to order short-circuit evaluation.
    fn cost(&self) -> u8 {
        match self {
            Clause::HistoryOrder => 0,
            Clause::ProcessOrder => 1,
            Clause::TotalOrder => 2,
            Clause::PartialOrder => 3,
            Clause::IntOrder => 4,
            Clause::SetOrder => 5,
            Clause::Validity => 6,
            Clause::Safety => 7,
            Clause::FifoOrder => 8,
            Clause::KSetTotalOrder(_) => 9,
            Clause::Liveness => 10,
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Result of evaluating one clause on `(H, ⟶)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClauseOutcome {
    pub clause: String,
    pub holds: bool,
    /// Present iff the clause fails: offending op-ex (if any) and explanation.
    pub witness_failure: Option<(Option<usize>, String)>,
}

/// A named set of clauses together with the object specs that legality uses.
#[derive(Clone, Debug)]
pub struct ConditionSet {
    pub name: String,
    clauses: BTreeSet<Clause>,
    registry: Arc<SpecRegistry>,
    partition_cap: usize,
}

const LEGALITY: [Clause; 3] = [Clause::Validity, Clause::Safety, Clause::Liveness];

/// Names accepted by [`ConditionSet::named`].
pub const CONDITION_NAMES: [&str; 10] = [
    "legality",
    "process",
    "fifo",
    "causal",
    "serializability",
    "sequential",
    "linearizability",
    "interval-linearizability",
    "set-linearizability",
    "k-serializability",
];

impl ConditionSet {
    pub fn new(
        name: impl Into<String>,
        clauses: impl IntoIterator<Item = Clause>,
        registry: Arc<SpecRegistry>,
    ) -> Self {
        ConditionSet {
            name: name.into(),
            clauses: clauses.into_iter().collect(),
            registry,
            partition_cap: PARTITION_CAP,
        }
    }

    /// Builds one of the named conditions. `k` is required by `k-serializability`
    /// unless given inline as `k-serializability(k)`.
    pub fn named(name: &str, registry: Arc<SpecRegistry>, k: Option<usize>) -> Result<Self> {
        let (base, inline_k) = match name.strip_suffix(')').and_then(|s| s.split_once('(')) {
            Some((b, kk)) => {
                let kk = kk
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidParameter(format!("bad k in `{name}`")))?;
                (b, Some(kk))
            }
            None => (name, None),
        };
        let clauses = clauses_of(base.trim(), inline_k.or(k))?;
        let name = match clauses.iter().find_map(|c| match c {
            Clause::KSetTotalOrder(k) => Some(*k),
            _ => None,
        }) {
            Some(k) => format!("k-serializability({k})"),
            None => canonical_name(base.trim()).to_string(),
        };
        Ok(Self::new(name, clauses, registry))
    }

    /// Like [`ConditionSet::named`], also accepting unions written `a+b`.
    pub fn parse(text: &str, registry: Arc<SpecRegistry>, k: Option<usize>) -> Result<Self> {
        let mut parts = text.split(['+', '∪']).map(str::trim);
        let first = parts.next().unwrap_or_default();
        let mut out = Self::named(first, registry.clone(), k)?;
        for p in parts {
            out = out.union(&Self::named(p, registry.clone(), k)?);
        }
        Ok(out)
    }

    pub fn clauses(&self) -> &BTreeSet<Clause> {
        &self.clauses
    }

    pub fn registry(&self) -> &SpecRegistry {
        &self.registry
    }

    pub fn registry_arc(&self) -> Arc<SpecRegistry> {
        self.registry.clone()
    }

    pub fn contains(&self, c: Clause) -> bool {
        self.clauses.contains(&c)
    }

    pub fn partition_cap(&self) -> usize {
        self.partition_cap
    }

    pub fn with_partition_cap(mut self, cap: usize) -> Self {
        self.partition_cap = cap;
        self
    }

    /// Clause-set union; the registry of `self` is kept.
    pub fn union(&self, other: &ConditionSet) -> ConditionSet {
        let mut out = self.clone();
        out.name = format!("{} ∪ {}", self.name, other.name);
        out.clauses.extend(other.clauses.iter().copied());
        out
    }

    pub fn is_subset_of(&self, other: &ConditionSet) -> bool {
        self.clauses.is_subset(&other.clauses)
    }

    /// Same clauses evaluated against different object specs.
    pub fn with_registry(&self, registry: Arc<SpecRegistry>) -> ConditionSet {
        ConditionSet { registry, ..self.clone() }
    }

    pub fn k(&self) -> Option<usize> {
        self.clauses.iter().find_map(|c| match c {
            Clause::KSetTotalOrder(k) => Some(*k),
            _ => None,
        })
    }
}

fn canonical_name(name: &str) -> &str {
    match name {
        "process-consistency" => "process",
        "fifo-consistency" => "fifo",
        "causal-consistency" => "causal",
        "sequential-consistency" => "sequential",
        other => other,
    }
}

fn clauses_of(name: &str, k: Option<usize>) -> Result<BTreeSet<Clause>> {
    use Clause::*;
    let mut set: BTreeSet<Clause> = LEGALITY.into_iter().collect();
    let extra: &[Clause] = match canonical_name(name) {
        "legality" => &[],
        "process" => &[ProcessOrder],
        "fifo" => &[ProcessOrder, FifoOrder],
        "causal" => &[ProcessOrder, FifoOrder, PartialOrder],
        "serializability" => &[TotalOrder],
        "sequential" => &[TotalOrder, ProcessOrder, FifoOrder, PartialOrder],
        "linearizability" => &[TotalOrder, ProcessOrder, FifoOrder, PartialOrder, HistoryOrder],
        "interval-linearizability" => &[HistoryOrder, IntOrder],
        "set-linearizability" => &[HistoryOrder, IntOrder, SetOrder],
        "k-serializability" => {
            let k = k.ok_or_else(|| {
                Error::InvalidParameter("k-serializability requires k".into())
            })?;
            if k == 0 {
                return Err(Error::InvalidParameter("k must be positive".into()));
            }
            set.insert(KSetTotalOrder(k));
            &[]
        }
        other => return Err(Error::UnknownCondition(other.to_string())),
    };
    set.extend(extra.iter().copied());
    Ok(set)
}

type Failure = Option<(Option<usize>, String)>;

fn all_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn members(mask: u64) -> Vec<usize> {
    crate::relation::bits(mask).collect()
}

fn irreflexive_fail(universe: &[usize], rel: &dyn RelationView) -> Failure {
    universe
        .iter()
        .find(|&&a| rel.holds(a, a))
        .map(|&a| (Some(a), format!("{a} ⟶ {a}")))
}

fn transitive_fail(universe: &[usize], rel: &dyn RelationView) -> Failure {
    for &a in universe {
        for &b in universe {
            if !rel.holds(a, b) {
                continue;
            }
            for &c in universe {
                if rel.holds(b, c) && !rel.holds(a, c) {
                    return Some((Some(a), format!("{a} ⟶ {b} ⟶ {c} but not {a} ⟶ {c}")));
                }
            }
        }
    }
    None
}

fn connected_fail(universe: &[usize], rel: &dyn RelationView) -> Failure {
    for (i, &a) in universe.iter().enumerate() {
        for &b in &universe[i + 1..] {
            if !rel.holds(a, b) && !rel.holds(b, a) {
                return Some((Some(a), format!("{a} and {b} unrelated")));
            }
        }
    }
    None
}

fn partial_fail(universe: &[usize], rel: &dyn RelationView) -> Failure {
    irreflexive_fail(universe, rel).or_else(|| transitive_fail(universe, rel))
}

fn total_fail(universe: &[usize], rel: &dyn RelationView) -> Failure {
    partial_fail(universe, rel).or_else(|| connected_fail(universe, rel))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderKind {
    Partial,
    Total,
}

/// Strict partial order (irreflexive, transitive) or strict total order
/// (partial and connected) on `universe`.
pub fn generic_order(kind: OrderKind, universe: &[usize], rel: &dyn RelationView) -> bool {
    match kind {
        OrderKind::Partial => partial_fail(universe, rel).is_none(),
        OrderKind::Total => total_fail(universe, rel).is_none(),
    }
}

pub fn partial_order(h: &History, rel: &dyn RelationView) -> bool {
    generic_order(OrderKind::Partial, &members(all_mask(h.len())), rel)
}

pub fn total_order(h: &History, rel: &dyn RelationView) -> bool {
    generic_order(OrderKind::Total, &members(all_mask(h.len())), rel)
}

/// Pairs `(o, o′)` with `o` responded before `o′` started (or, for a
/// notification `o′`, before it responded).
pub fn real_time_pairs(h: &History) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..h.len() {
        for b in 0..h.len() {
            if a != b && h.precedes_in_time(a, b) {
                out.push((a, b));
            }
        }
    }
    out
}

fn history_fail(h: &History, rel: &dyn RelationView, same_proc: Option<&str>) -> Failure {
    for (a, b) in real_time_pairs(h) {
        if let Some(p) = same_proc {
            if h.opex(a).proc != p || h.opex(b).proc != p {
                continue;
            }
        }
        if !rel.holds(a, b) || rel.holds(b, a) {
            return Some((Some(a), format!("{a} precedes {b} in real time")));
        }
    }
    None
}

pub fn history_order(h: &History, rel: &dyn RelationView) -> bool {
    history_fail(h, rel, None).is_none()
}

fn process_fail(h: &History, rel: &dyn RelationView) -> Failure {
    let mut procs: Vec<&str> = h.opexes().iter().map(|o| o.proc.as_str()).collect();
    procs.sort_unstable();
    procs.dedup();
    for p in procs {
        if let Some(f) = history_fail(h, rel, Some(p)) {
            return Some(f);
        }
        let universe: Vec<usize> = (0..h.len()).filter(|&k| h.opex(k).proc == p).collect();
        if let Some((k, why)) = total_fail(&universe, rel) {
            return Some((k, format!("process {p}: {why}")));
        }
    }
    None
}

pub fn process_order(h: &History, rel: &dyn RelationView) -> bool {
    process_fail(h, rel).is_none()
}

fn fifo_fail(h: &History, rel: &dyn RelationView) -> Failure {
    let n = h.len();
    for oi in 0..n {
        for oi2 in 0..n {
            if h.opex(oi2).proc != h.opex(oi).proc || !rel.holds(oi, oi2) {
                continue;
            }
            for oj in 0..n {
                if !rel.holds(oi2, oj) {
                    continue;
                }
                for oj2 in 0..n {
                    if h.opex(oj2).proc != h.opex(oj).proc {
                        continue;
                    }
                    if rel.holds(oj, oj2)
                        && rel.holds(oi, oj2)
                        && !(rel.holds(oi, oj) && rel.holds(oi2, oj2))
                    {
                        return Some((
                            Some(oi),
                            format!("pattern ({oi}, {oi2}, {oj}, {oj2}) lacks its implied pairs"),
                        ));
                    }
                }
            }
        }
    }
    None
}

pub fn fifo_order(h: &History, rel: &dyn RelationView) -> bool {
    fifo_fail(h, rel).is_none()
}

fn interval_fail(universe: &[usize], rel: &dyn RelationView) -> Failure {
    if let Some(f) = irreflexive_fail(universe, rel).or_else(|| connected_fail(universe, rel)) {
        return Some(f);
    }
    for &o in universe {
        for &o2 in universe {
            if !rel.holds(o, o2) {
                continue;
            }
            for &o1 in universe {
                if !rel.holds(o, o1) && !rel.holds(o1, o2) {
                    return Some((Some(o), format!("{o} ⟶ {o2} but neither {o} ⟶ {o1} nor {o1} ⟶ {o2}")));
                }
            }
        }
    }
    None
}

fn set_fail(universe: &[usize], rel: &dyn RelationView) -> Failure {
    if let Some(f) = interval_fail(universe, rel) {
        return Some(f);
    }
    for &a in universe {
        for &b in universe {
            if !rel.holds(a, b) {
                continue;
            }
            for &c in universe {
                if c != a && rel.holds(b, c) && !rel.holds(a, c) {
                    return Some((Some(a), format!("{a} ⟶ {b} ⟶ {c} but not {a} ⟶ {c}")));
                }
            }
        }
    }
    None
}

pub fn interval_order(h: &History, rel: &dyn RelationView) -> bool {
    interval_fail(&members(all_mask(h.len())), rel).is_none()
}

pub fn set_order(h: &History, rel: &dyn RelationView) -> bool {
    set_fail(&members(all_mask(h.len())), rel).is_none()
}

/// Processes with at least one op-ex, in order of first appearance.
pub fn active_processes(h: &History) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for o in h.opexes() {
        if !out.contains(&o.proc.as_str()) {
            out.push(&o.proc);
        }
    }
    out
}

/// Calls `f` on every partition of `0..n` into at most `k` blocks, given as a
/// restricted-growth string, until `f` returns `true`.
pub fn for_each_partition(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if n == 0 {
        return f(&[]);
    }
    let mut a = vec![0usize; n];
    loop {
        if f(&a) {
            return true;
        }
        // next restricted-growth string with blocks < k
        let mut i = n - 1;
        loop {
            let max_prev = a[..i].iter().copied().max().unwrap_or(0);
            if i > 0 && a[i] <= max_prev && a[i] + 1 < k {
                a[i] += 1;
                for x in a.iter_mut().skip(i + 1) {
                    *x = 0;
                }
                break;
            }
            if i == 0 {
                return false;
            }
            i -= 1;
        }
    }
}

fn kset_fail(h: &History, rel: &dyn RelationView, k: usize, cap: usize) -> Result<Failure> {
    let procs = active_processes(h);
    if procs.len() > cap {
        return Err(Error::Resource(format!(
            "kSetTotalOrder over {} processes exceeds cap {cap}",
            procs.len()
        )));
    }
    let of_proc: Vec<usize> = (0..h.len())
        .map(|o| procs.iter().position(|p| *p == h.opex(o).proc).unwrap_or(0))
        .collect();
    let found = for_each_partition(procs.len(), k, |blocks| {
        let nb = blocks.iter().copied().max().map_or(0, |m| m + 1);
        (0..nb.max(1)).all(|b| {
            let universe: Vec<usize> =
                (0..h.len()).filter(|&o| blocks.get(of_proc[o]) == Some(&b)).collect();
            total_fail(&universe, rel).is_none()
        })
    });
    Ok((!found).then(|| (None, format!("no partition into ≤{k} totally ordered blocks"))))
}

pub fn k_set_total_order(h: &History, rel: &dyn RelationView, k: usize) -> Result<bool> {
    Ok(kset_fail(h, rel, k, PARTITION_CAP)?.is_none())
}

/// Evaluates `V` (or `S`) for op-ex `k` under `rel`.
pub(crate) fn eval_context_predicate(
    h: &History,
    registry: &SpecRegistry,
    k: usize,
    rel: &dyn RelationView,
    which: Clause,
) -> Result<bool> {
    let o = h.opex(k);
    let op = registry.operation(&o.object, &o.operation)?;
    let ctx = Context::new(h, k, all_mask(h.len()), rel);
    Ok(match which {
        Clause::Validity => op.validity(o, &ctx),
        _ => op.safety(o, &ctx),
    })
}

fn validity_fail(h: &History, rel: &dyn RelationView, reg: &SpecRegistry) -> Result<Failure> {
    for k in 0..h.len() {
        if h.opex(k).inv.is_some() && !eval_context_predicate(h, reg, k, rel, Clause::Validity)? {
            return Ok(Some((Some(k), format!("{}.V fails", h.opex(k).operation))));
        }
    }
    Ok(None)
}

fn safety_fail(h: &History, rel: &dyn RelationView, reg: &SpecRegistry) -> Result<Failure> {
    for k in 0..h.len() {
        if h.opex(k).res.is_some() && !eval_context_predicate(h, reg, k, rel, Clause::Safety)? {
            return Ok(Some((Some(k), format!("{}.S fails", h.opex(k).operation))));
        }
    }
    Ok(None)
}

fn liveness_fail(h: &History, rel: &dyn RelationView, reg: &SpecRegistry) -> Result<Failure> {
    let scope = Scope::new(h, rel);
    for k in 0..h.len() {
        let o = h.opex(k);
        if !reg.operation(&o.object, &o.operation)?.liveness(k, &scope) {
            return Ok(Some((Some(k), format!("{}.L fails", o.operation))));
        }
    }
    for (obj, rule) in reg.object_rules(h) {
        if !rule(obj, &scope) {
            return Ok(Some((None, format!("object {obj}: liveness fails"))));
        }
    }
    Ok(None)
}

fn clause_fail(
    c: Clause,
    h: &History,
    rel: &dyn RelationView,
    cond: &ConditionSet,
) -> Result<Failure> {
    let all = || members(all_mask(h.len()));
    Ok(match c {
        Clause::Validity => validity_fail(h, rel, &cond.registry)?,
        Clause::Safety => safety_fail(h, rel, &cond.registry)?,
        Clause::Liveness => liveness_fail(h, rel, &cond.registry)?,
        Clause::PartialOrder => partial_fail(&all(), rel),
        Clause::TotalOrder => total_fail(&all(), rel),
        Clause::HistoryOrder => history_fail(h, rel, None),
        Clause::ProcessOrder => process_fail(h, rel),
        Clause::FifoOrder => fifo_fail(h, rel),
        Clause::IntOrder => interval_fail(&all(), rel),
        Clause::SetOrder => set_fail(&all(), rel),
        Clause::KSetTotalOrder(k) => kset_fail(h, rel, k, cond.partition_cap)?,
    })
}

/// One outcome per clause of `cond`; all hold iff `rel` witnesses correctness.
pub fn evaluate(
    h: &History,
    rel: &dyn RelationView,
    cond: &ConditionSet,
) -> Result<Vec<ClauseOutcome>> {
    check_universe(h, rel)?;
    cond.clauses
        .iter()
        .map(|&c| {
            let failure = clause_fail(c, h, rel, cond)?;
            Ok(ClauseOutcome { clause: c.name(), holds: failure.is_none(), witness_failure: failure })
        })
        .collect()
}

/// Short-circuit form of [`evaluate`]: cheap order clauses first.
pub fn holds(h: &History, rel: &dyn RelationView, cond: &ConditionSet) -> Result<bool> {
    check_universe(h, rel)?;
    let mut order: Vec<Clause> = cond.clauses.iter().copied().collect();
    order.sort_by_key(Clause::cost);
    for c in order {
        if clause_fail(c, h, rel, cond)?.is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Names of the clauses of `cond` that fail on `(h, rel)`.
pub fn failing_clauses(
    h: &History,
    rel: &dyn RelationView,
    cond: &ConditionSet,
) -> Result<Vec<String>> {
    Ok(evaluate(h, rel, cond)?.into_iter().filter(|o| !o.holds).map(|o| o.clause).collect())
}

fn check_universe(h: &History, rel: &dyn RelationView) -> Result<()> {
    if rel.len() != h.len() {
        return Err(Error::InvalidParameter(format!(
            "relation over {} elements for a history of {} op-exes",
            rel.len(),
            h.len()
        )));
    }
    if h.len() > 64 {
        return Err(Error::Resource(format!("{} op-exes exceed the relation limit", h.len())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::OrderRelation;

    #[test]
    fn partitions_counted_by_restricted_growth() {
        let mut n = 0;
        for_each_partition(4, 4, |_| {
            n += 1;
            false
        });
        assert_eq!(n, 15);
        let mut n2 = 0;
        for_each_partition(4, 2, |_| {
            n2 += 1;
            false
        });
        assert_eq!(n2, 8);
    }

    #[test]
    fn generic_orders() {
        let u = [0, 1, 2];
        let empty = OrderRelation::new(3);
        assert!(generic_order(OrderKind::Partial, &u, &empty));
        assert!(!generic_order(OrderKind::Total, &u, &empty));
        let chain = OrderRelation::from_pairs(3, [(0, 1), (1, 2), (0, 2)]);
        assert!(generic_order(OrderKind::Total, &u, &chain));
        let broken = OrderRelation::from_pairs(3, [(0, 1), (1, 2)]);
        assert!(!generic_order(OrderKind::Partial, &u, &broken));
    }

    #[test]
    fn named_sets_expand() {
        let reg = Arc::new(SpecRegistry::new());
        let lin = ConditionSet::named("linearizability", reg.clone(), None).unwrap();
        let names: Vec<String> = lin.clauses().iter().map(Clause::name).collect();
        assert_eq!(names.len(), 8);
        let k = ConditionSet::named("k-serializability(2)", reg.clone(), None).unwrap();
        assert!(k.contains(Clause::KSetTotalOrder(2)));
        assert!(ConditionSet::named("k-serializability", reg.clone(), None).is_err());
        assert!(ConditionSet::named("bogus", reg, None).is_err());
    }
}
