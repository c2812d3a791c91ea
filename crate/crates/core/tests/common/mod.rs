#![allow(dead_code)]

use std::sync::Arc;

use opexcheck::spec::{
    make_agreement, make_lattice_agreement, make_shared_memory, make_swsr_register, AgreementKind,
    Domain, MemoryPolicy,
};
use opexcheck::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn lattice_registry() -> Arc<SpecRegistry> {
    Arc::new(SpecRegistry::new().with("L", make_lattice_agreement()))
}

pub fn cond(name: &str, reg: &Arc<SpecRegistry>) -> ConditionSet {
    ConditionSet::named(name, reg.clone(), Some(2)).unwrap()
}

fn lattice_history(ops: &[(&str, i64, &[i64], u64, u64)]) -> History {
    let mut b = History::builder().correct("p1").correct("p2").correct("p3").complete(true);
    for &(p, v, out, inv, res) in ops {
        b = b.op("L", "propose", p, json!(v), json!(out), Some(inv), Some(res));
    }
    b.build()
}

/// Lattice agreement: two overlapping proposals returning {1,2}, then a third
/// returning {1,2,3}.
pub fn set_lattice() -> History {
    lattice_history(&[
        ("p1", 1, &[1, 2], 0, 2),
        ("p2", 2, &[1, 2], 1, 3),
        ("p3", 3, &[1, 2, 3], 4, 5),
    ])
}

/// Lattice agreement: a chain of overlapping proposals.
pub fn interval_lattice() -> History {
    lattice_history(&[
        ("p1", 1, &[1, 2], 0, 2),
        ("p2", 2, &[1, 2, 3], 1, 4),
        ("p3", 3, &[1, 2, 3], 3, 5),
    ])
}

pub fn register_registry() -> Arc<SpecRegistry> {
    Arc::new(SpecRegistry::new().with("R", make_swsr_register("w", "r").unwrap()))
}

/// `write_w(1)` then `read_r()/1`, sequential.
pub fn h_reg1() -> History {
    History::builder()
        .correct("w")
        .correct("r")
        .complete(true)
        .op("R", "write", "w", json!(1), Value::Null, Some(0), Some(1))
        .op("R", "read", "r", Value::Null, json!(1), Some(2), Some(3))
        .build()
}

/// As [`h_reg1`] but the read returns a value never written.
pub fn h_reg_bad() -> History {
    History::builder()
        .correct("w")
        .correct("r")
        .complete(true)
        .op("R", "write", "w", json!(1), Value::Null, Some(0), Some(1))
        .op("R", "read", "r", Value::Null, json!(2), Some(2), Some(3))
        .build()
}

/// A correct reader reads 7 from a register whose writer is of type `writer`
/// and never wrote.
pub fn h_byz(writer: ProcessType) -> History {
    History::builder()
        .process("w", writer)
        .correct("r")
        .complete(true)
        .op("R", "read", "r", Value::Null, json!(7), Some(0), Some(1))
        .build()
}

/// Two processes with two op-exes each on a shared memory, all sequential:
/// `oi, oi′` by p1 and `oj, oj′` by p2.
pub fn fifo_history() -> History {
    History::builder()
        .correct("p1")
        .correct("p2")
        .complete(true)
        .op("M", "write", "p1", json!([1, "a"]), Value::Null, Some(0), Some(1))
        .op("M", "write", "p1", json!([2, "a"]), Value::Null, Some(2), Some(3))
        .op("M", "write", "p2", json!([3, "b"]), Value::Null, Some(4), Some(5))
        .op("M", "write", "p2", json!([4, "b"]), Value::Null, Some(6), Some(7))
        .build()
}

/// A history where each listed process decides `v` on object `C`, in order.
pub fn decide_history(procs: &[&str], decisions: &[(&str, i64)]) -> History {
    let mut b = History::builder().complete(true);
    for p in procs {
        b = b.correct(*p);
    }
    for (i, (p, v)) in decisions.iter().enumerate() {
        b = b.op("C", "decide", *p, Value::Null, json!(v), None, Some(i as u64));
    }
    b.build()
}

/// `H0`: p1 then p2 decide 0. `H1`: same with 1.
pub fn toy_consensus() -> Vec<History> {
    vec![
        decide_history(&["p1", "p2"], &[("p1", 0), ("p2", 0)]),
        decide_history(&["p1", "p2"], &[("p1", 1), ("p2", 1)]),
    ]
}

/// Three solo histories: `p_i` writes `v_i` to its own address, then decides it.
pub fn ksa_solo() -> Vec<History> {
    (1..=3).map(|i| ksa_solo_run(&[i])).collect()
}

/// The listed processes each run their solo prefix, one after the other.
pub fn ksa_solo_run(runners: &[usize]) -> History {
    let mut b = History::builder().complete(true).correct("p1").correct("p2").correct("p3");
    let mut pos = 0;
    for &i in runners {
        let p = format!("p{i}");
        let addr = format!("x{i}");
        b = b.op("M", "write", &p, json!([i, addr]), Value::Null, Some(pos), Some(pos + 1));
        b = b.op("SA", "decide", &p, Value::Null, json!(i), None, Some(pos + 2));
        pos += 3;
    }
    b.build()
}

pub fn consensus_registry() -> Arc<SpecRegistry> {
    Arc::new(
        SpecRegistry::new().with("C", make_agreement(AgreementKind::Consensus, Domain::Any).unwrap()),
    )
}

/// Registry covering everything the random corpus produces.
pub fn corpus_registry() -> Arc<SpecRegistry> {
    Arc::new(
        SpecRegistry::new()
            .with("M", make_shared_memory(MemoryPolicy::Mwmr))
            .with("L", make_lattice_agreement()),
    )
}

#[derive(Clone, Copy)]
enum Shape {
    Write(i64),
    Read,
    Propose(i64),
}

/// Random register/lattice histories with up to `max_ops` op-exes. Each
/// process issues its op-exes sequentially; a process's last op-ex may be
/// left pending. Outputs are drawn from plausible values, so a fair share of
/// histories is correct under the weaker conditions.
pub fn random_history(rng: &mut ChaCha8Rng, max_ops: usize) -> History {
    let nprocs = rng.gen_range(1..=3usize);
    let nops = rng.gen_range(1..=max_ops);
    let lattice = rng.gen_bool(0.35);
    let procs: Vec<String> = (1..=nprocs).map(|i| format!("p{i}")).collect();
    let mut per_proc: Vec<Vec<Shape>> = vec![Vec::new(); nprocs];
    let mut next_value = 1;
    for _ in 0..nops {
        let p = rng.gen_range(0..nprocs);
        let shape = if lattice {
            Shape::Propose(rng.gen_range(1..=3))
        } else if rng.gen_bool(0.5) {
            next_value += 1;
            Shape::Write(next_value - 1)
        } else {
            Shape::Read
        };
        per_proc[p].push(shape);
    }
    // Event schedule: each process alternates inv/res of its op-exes in order.
    let mut sched: Vec<usize> = Vec::new();
    for (p, ops) in per_proc.iter().enumerate() {
        sched.extend(std::iter::repeat_n(p, 2 * ops.len()));
    }
    sched.shuffle(rng);
    let pending_last: Vec<bool> = (0..nprocs).map(|_| rng.gen_bool(0.15)).collect();

    let mut b = History::builder().complete(rng.gen_bool(0.7));
    for p in &procs {
        let kind = if rng.gen_bool(0.8) { ProcessType::Correct } else { ProcessType::Omitting };
        b = b.process(p.clone(), kind);
    }
    let written: Vec<i64> = per_proc
        .iter()
        .flatten()
        .filter_map(|s| match s {
            Shape::Write(v) => Some(*v),
            _ => None,
        })
        .collect();
    let proposed: Vec<i64> = per_proc
        .iter()
        .flatten()
        .filter_map(|s| match s {
            Shape::Propose(v) => Some(*v),
            _ => None,
        })
        .collect();
    // Positions of the k-th event of each process.
    let mut slots: Vec<Vec<u64>> = vec![Vec::new(); nprocs];
    for (pos, &p) in sched.iter().enumerate() {
        slots[p].push(pos as u64);
    }
    for (p, ops) in per_proc.iter().enumerate() {
        for (j, shape) in ops.iter().enumerate() {
            let inv = slots[p][2 * j];
            let last = j + 1 == ops.len();
            let res = if last && pending_last[p] { None } else { Some(slots[p][2 * j + 1]) };
            let pend = res.is_none();
            let (op, input, output) = match *shape {
                Shape::Write(v) => ("write", json!([v, "a"]), Value::Null),
                Shape::Read => {
                    let out = if pend {
                        Value::Null
                    } else if written.is_empty() || rng.gen_bool(0.1) {
                        json!(rng.gen_range(0..3))
                    } else {
                        json!(written[rng.gen_range(0..written.len())])
                    };
                    ("read", json!("a"), out)
                }
                Shape::Propose(v) => {
                    let out = if pend {
                        Value::Null
                    } else {
                        let mut set: Vec<i64> = vec![v];
                        for &x in &proposed {
                            if !set.contains(&x) && rng.gen_bool(0.5) {
                                set.push(x);
                            }
                        }
                        set.sort_unstable();
                        json!(set)
                    };
                    ("propose", json!(v), out)
                }
            };
            let obj = if lattice { "L" } else { "M" };
            b = b.op(obj, op, &procs[p], input, output, Some(inv), res);
        }
    }
    b.build()
}

pub fn corpus(seed: u64, count: usize, max_ops: usize) -> Vec<History> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_history(&mut rng, max_ops)).collect()
}

/// Random decide-only histories on `C` over a small domain; many carry
/// disagreeing decisions.
pub fn decide_corpus(seed: u64, count: usize) -> Vec<History> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=4usize);
            let procs = ["p1", "p2", "p3"];
            let decisions: Vec<(&str, i64)> = (0..n)
                .map(|_| (procs[rng.gen_range(0..3)], if rng.gen_bool(0.7) { 0 } else { 1 }))
                .collect();
            decide_history(&procs, &decisions)
        })
        .collect()
}

/// Independent reference: irreflexive relation encoded as a bitmask over
/// ordered pairs `(a, b)`, `a ≠ b`, in row-major order.
pub fn relation_from_code(n: usize, code: u64) -> OrderRelation {
    let mut rel = OrderRelation::new(n);
    let mut bit = 0;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                if code >> bit & 1 == 1 {
                    rel.insert(a, b);
                }
                bit += 1;
            }
        }
    }
    rel
}

/// Every permutation of `0..n`, by Heap's algorithm.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, v: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(v.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, v, out);
            if k.is_multiple_of(2) {
                v.swap(i, k - 1);
            } else {
                v.swap(0, k - 1);
            }
        }
    }
    let mut v: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut v, &mut out);
    out
}

/// Random consensus history sets: each history lets 2 or 3 processes,
/// optionally after a private write, decide one common value in some order.
pub fn consensus_variant(rng: &mut ChaCha8Rng) -> Vec<History> {
    let n = rng.gen_range(2..=3usize);
    let procs: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
    let writes: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
    let count = rng.gen_range(1..=4);
    (0..count)
        .map(|_| {
            let v = rng.gen_range(0..2);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let deciders = rng.gen_range(1..=n);
            let mut b = History::builder().complete(true);
            for p in &procs {
                b = b.correct(p.clone());
            }
            let mut pos = 0;
            for &i in &order[..deciders] {
                if writes[i] {
                    b = b.op("M", "write", &procs[i], json!([i, procs[i]]), Value::Null, Some(pos), Some(pos + 1));
                    pos += 2;
                }
                b = b.op("C", "decide", &procs[i], Value::Null, json!(v), None, Some(pos));
                pos += 1;
            }
            b.build()
        })
        .collect()
}
