//! Exhaustive enumeration oracle.

use std::collections::BTreeSet;
use std::time::Instant;

use super::{Stats, Verdict};
use crate::consistency::{holds, Clause, ConditionSet};
use crate::error::{Error, Result};
use crate::history::History;
use crate::relation::OrderRelation;

pub const BRUTE_RELATION_CAP: usize = 5;
pub const BRUTE_PERMUTATION_CAP: usize = 8;

/// Enumerates every candidate relation in a fixed order and returns the first
/// witness: all permutations in lexicographic order when `cond` contains
/// `TotalOrder`, otherwise all irreflexive relations as an `n(n-1)`-bit
/// integer in ascending order.
pub fn brute_force_check(h: &History, cond: &ConditionSet) -> Result<Verdict> {
    let start = Instant::now();
    let report = h.validate();
    if !report.is_valid() {
        return Err(Error::InvalidHistory(report.summary()));
    }
    cond.registry().check_history(h)?;
    let n = h.len();
    let mut nodes = 0u64;
    let found = if cond.contains(Clause::TotalOrder) {
        if n > BRUTE_PERMUTATION_CAP {
            return Err(Error::Resource(format!("{n} op-exes exceed the permutation oracle cap")));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut found = None;
        loop {
            nodes += 1;
            let rel = OrderRelation::from_sequence(n, &perm);
            if holds(h, &rel, cond)? {
                found = Some(rel);
                break;
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        found
    } else {
        if n > BRUTE_RELATION_CAP {
            return Err(Error::Resource(format!("{n} op-exes exceed the relation oracle cap")));
        }
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect();
        let mut found = None;
        for code in 0u64..1 << pairs.len() {
            nodes += 1;
            let rel = OrderRelation::from_pairs(
                n,
                pairs.iter().enumerate().filter(|(i, _)| code >> i & 1 == 1).map(|(_, &p)| p),
            );
            if holds(h, &rel, cond)? {
                found = Some(rel);
                break;
            }
        }
        found
    };
    let stats =
        Stats { strategy: "brute".into(), nodes, elapsed: start.elapsed(), candidates: 0 };
    Ok(match found {
        Some(rel) => Verdict::accepted(rel, stats),
        None => Verdict::rejected(BTreeSet::new(), stats),
    })
}

/// Advances to the next permutation in lexicographic order.
pub(crate) fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
