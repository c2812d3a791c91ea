//! Search over arbitrary irreflexive relations with conflict-directed backjumping.
//!
//! Variables are the predecessor columns of the op-exes in canonical order:
//! column `b` is the set of `a` with `a ⟶ b`. Domains exclude `b` itself and
//! respect the pairs forced by real-time order. Order clauses become small
//! constraints over two or three columns; validity and safety of an op-ex are
//! evaluated as soon as every column they read is assigned, and the columns
//! read form the conflict set. On a dead end the search jumps back to the most
//! recent column in the accumulated conflict set.

use std::collections::HashSet;

use super::{all_mask, Prepared, Search, VsResult};
use crate::consistency::{active_processes, for_each_partition, Clause};
use crate::error::{Error, Result};
use crate::relation::{OrderRelation, Probe};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Shape {
    /// `a ⟶ b ∨ b ⟶ a`.
    Connected(usize, usize),
    /// `a ⟶ b ∧ b ⟶ c ⟹ a ⟶ c`.
    Trans(usize, usize, usize),
    /// `o ⟶ o″ ⟹ o ⟶ o′ ∨ o′ ⟶ o″`.
    Int(usize, usize, usize),
    /// `oi ⟶ oi′ ⟶ oj ⟶ oj′ ∧ oi ⟶ oj′ ⟹ oi ⟶ oj ∧ oi′ ⟶ oj′`.
    Fifo(usize, usize, usize, usize),
}

#[derive(Clone, Copy, Debug)]
struct Constraint {
    shape: Shape,
    clause: Clause,
    mask: u64,
}

#[inline]
fn rel(cols: &[u64], a: usize, b: usize) -> bool {
    cols[b] >> a & 1 == 1
}

impl Shape {
    fn mask(&self) -> u64 {
        match *self {
            Shape::Connected(a, b) => 1 << a | 1 << b,
            Shape::Trans(_, b, c) => 1 << b | 1 << c,
            Shape::Int(_, o1, o2) => 1 << o1 | 1 << o2,
            Shape::Fifo(_, oi2, oj, oj2) => 1 << oi2 | 1 << oj | 1 << oj2,
        }
    }

    fn holds(&self, cols: &[u64]) -> bool {
        match *self {
            Shape::Connected(a, b) => rel(cols, a, b) || rel(cols, b, a),
            Shape::Trans(a, b, c) => !(rel(cols, a, b) && rel(cols, b, c)) || rel(cols, a, c),
            Shape::Int(o, o1, o2) => !rel(cols, o, o2) || rel(cols, o, o1) || rel(cols, o1, o2),
            Shape::Fifo(oi, oi2, oj, oj2) => {
                !(rel(cols, oi, oi2) && rel(cols, oi2, oj) && rel(cols, oj, oj2) && rel(cols, oi, oj2))
                    || (rel(cols, oi, oj) && rel(cols, oi2, oj2))
            }
        }
    }
}

struct Builder {
    seen: HashSet<Shape>,
    out: Vec<Constraint>,
}

impl Builder {
    fn new() -> Self {
        Builder { seen: HashSet::new(), out: Vec::new() }
    }

    fn add(&mut self, shape: Shape, clause: Clause) {
        if self.seen.insert(shape) {
            self.out.push(Constraint { shape, clause, mask: shape.mask() });
        }
    }

    fn total_on(&mut self, group: &[usize], clause: Clause) {
        for (i, &a) in group.iter().enumerate() {
            for &b in &group[i + 1..] {
                self.add(Shape::Connected(a, b), clause);
            }
        }
        self.transitive_on(group, clause);
    }

    fn transitive_on(&mut self, group: &[usize], clause: Clause) {
        for &a in group {
            for &b in group {
                if a == b {
                    continue;
                }
                for &c in group {
                    if c != b {
                        self.add(Shape::Trans(a, b, c), clause);
                    }
                }
            }
        }
    }
}

fn base_constraints(p: &Prepared<'_>) -> Vec<Constraint> {
    let n = p.n();
    let h = &p.h;
    let all: Vec<usize> = (0..n).collect();
    let mut b = Builder::new();
    for &c in p.cond.clauses() {
        match c {
            Clause::TotalOrder => b.total_on(&all, c),
            Clause::PartialOrder => b.transitive_on(&all, c),
            Clause::ProcessOrder => {
                for proc in active_processes(h) {
                    let group: Vec<usize> = (0..n).filter(|&k| h.opex(k).proc == proc).collect();
                    b.total_on(&group, c);
                }
            }
            Clause::IntOrder | Clause::SetOrder => {
                for (i, &x) in all.iter().enumerate() {
                    for &y in &all[i + 1..] {
                        b.add(Shape::Connected(x, y), c);
                    }
                }
                for o in 0..n {
                    for o1 in 0..n {
                        for o2 in 0..n {
                            if o == o1 || o1 == o2 || o == o2 {
                                continue;
                            }
                            b.add(Shape::Int(o, o1, o2), c);
                            if c == Clause::SetOrder {
                                b.add(Shape::Trans(o, o1, o2), c);
                            }
                        }
                    }
                }
            }
            Clause::FifoOrder => {
                let same = |x: usize, y: usize| h.opex(x).proc == h.opex(y).proc;
                for oi in 0..n {
                    for oi2 in 0..n {
                        if oi == oi2 || !same(oi, oi2) {
                            continue;
                        }
                        for oj in 0..n {
                            for oj2 in 0..n {
                                if oj == oj2 || !same(oj, oj2) || oi2 == oj || oi == oj2 {
                                    continue;
                                }
                                b.add(Shape::Fifo(oi, oi2, oj, oj2), c);
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
    b.out
}

pub(crate) fn search(p: &mut Prepared<'_>) -> Result<Search> {
    let n = p.n();
    let base = base_constraints(p);
    let k = p.cond.k();
    let Some(k) = k else {
        return run(p, base);
    };
    let procs: Vec<String> = active_processes(&p.h).into_iter().map(str::to_string).collect();
    let cap = p.cond.partition_cap();
    if procs.len() > cap {
        return Err(Error::Resource(format!(
            "kSetTotalOrder over {} processes exceeds cap {cap}",
            procs.len()
        )));
    }
    let of_proc: Vec<usize> = (0..n)
        .map(|o| procs.iter().position(|q| *q == p.h.opex(o).proc).unwrap_or(0))
        .collect();
    let mut partitions = Vec::new();
    for_each_partition(procs.len(), k, |blocks| {
        partitions.push(blocks.to_vec());
        false
    });
    for blocks in partitions {
        let mut b = Builder::new();
        for c in &base {
            b.add(c.shape, c.clause);
        }
        let nb = blocks.iter().copied().max().map_or(0, |m| m + 1);
        for blk in 0..nb {
            let group: Vec<usize> = (0..n).filter(|&o| blocks[of_proc[o]] == blk).collect();
            b.total_on(&group, Clause::KSetTotalOrder(k));
        }
        if let Search::Found(rel) = run(p, b.out)? {
            return Ok(Search::Found(rel));
        }
    }
    Ok(Search::Exhausted)
}

fn domain(p: &Prepared<'_>, b: usize) -> Vec<u64> {
    let n = p.n();
    let need = p.forced_in[b];
    let free = all_mask(n) & !(1 << b) & !need & !p.forced_out[b];
    if need & p.forced_out[b] != 0 || need >> b & 1 == 1 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(1 << free.count_ones());
    let mut s = 0u64;
    loop {
        out.push(need | s);
        if s == free {
            break;
        }
        s = (s.wrapping_sub(free)) & free;
    }
    out
}

fn highest(mask: u64) -> usize {
    63 - mask.leading_zeros() as usize
}

/// Failure at a node: conflict columns, empty when no assignment can help.
struct Conflict(u64);

fn run(p: &mut Prepared<'_>, constraints: Vec<Constraint>) -> Result<Search> {
    let n = p.n();
    if n == 0 {
        let rel = OrderRelation::new(0);
        if p.liveness(&rel).is_some() {
            p.note(Clause::Liveness);
            return Ok(Search::Exhausted);
        }
        return Ok(if p.full_check(&rel)? { Search::Found(rel) } else { Search::Exhausted });
    }
    let mut at: Vec<Vec<Constraint>> = vec![Vec::new(); n];
    for c in constraints {
        at[highest(c.mask)].push(c);
    }
    let domains: Vec<Vec<u64>> = (0..n).map(|b| domain(p, b)).collect();
    if domains.iter().any(Vec::is_empty) {
        p.note(Clause::HistoryOrder);
        return Ok(Search::Exhausted);
    }
    let mut cols = vec![0u64; n];
    let mut idx = vec![0usize; n];
    let mut conf = vec![0u64; n];
    let mut d = 0usize;
    loop {
        let mut advanced = false;
        while idx[d] < domains[d].len() {
            cols[d] = domains[d][idx[d]];
            idx[d] += 1;
            p.tick()?;
            match check_depth(p, &at[d], d, &cols) {
                Ok(()) => {
                    advanced = true;
                    break;
                }
                Err(Conflict(0)) => return Ok(Search::Exhausted),
                Err(Conflict(m)) => conf[d] |= m & !(1 << d),
            }
        }
        if advanced {
            if d + 1 < n {
                d += 1;
                idx[d] = 0;
                conf[d] = 0;
                continue;
            }
            match leaf(p, &cols)? {
                None => return Ok(Search::Found(OrderRelation::from_columns(&cols))),
                Some(Conflict(0)) => return Ok(Search::Exhausted),
                Some(Conflict(m)) if m >> d & 1 == 1 => {
                    conf[d] |= m & !(1 << d);
                    continue;
                }
                Some(Conflict(m)) => {
                    let h = highest(m);
                    conf[h] |= m & !(1 << h);
                    for l in h + 1..=d {
                        conf[l] = 0;
                    }
                    d = h;
                    continue;
                }
            }
        }
        let c = conf[d];
        if c == 0 {
            return Ok(Search::Exhausted);
        }
        let h = highest(c);
        conf[h] |= c & !(1 << h);
        for l in h + 1..=d {
            conf[l] = 0;
        }
        d = h;
    }
}

fn check_depth(
    p: &mut Prepared<'_>,
    constraints: &[Constraint],
    d: usize,
    cols: &[u64],
) -> Result<(), Conflict> {
    for c in constraints {
        if !c.shape.holds(cols) {
            p.note(c.clause);
            return Err(Conflict(c.mask));
        }
    }
    let assigned = all_mask(d + 1);
    for o in 0..=d {
        let probe = Probe::new(cols, assigned);
        match p.eval_vs(o, &probe, || probe.touched(), || probe.unknown()) {
            VsResult::Pass | VsResult::Unknown => {}
            VsResult::Fail(clause, touched) => {
                let fresh = if touched == 0 { o == d } else { highest(touched) == d };
                if fresh {
                    p.note(clause);
                    return Err(Conflict(touched));
                }
            }
        }
    }
    Ok(())
}

fn leaf(p: &mut Prepared<'_>, cols: &[u64]) -> Result<Option<Conflict>> {
    let rel = OrderRelation::from_columns(cols);
    if let Some(touched) = p.liveness(&rel) {
        p.note(Clause::Liveness);
        return Ok(Some(Conflict(touched)));
    }
    if p.full_check(&rel)? {
        Ok(None)
    } else {
        Ok(Some(Conflict(all_mask(cols.len()))))
    }
}
