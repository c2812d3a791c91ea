use std::collections::BTreeSet;
use std::sync::Arc;

use opexcheck::harness::*;
use opexcheck::sigma::*;
use opexcheck::spec::parse_spec;
use opexcheck::*;
use serde_json::{json, Value};

/// Global event sequence as (process, operation, direction, value) tuples.
fn trace(h: &History) -> Vec<(String, String, bool, String)> {
    let mut evs: Vec<usize> = (0..h.events().len()).collect();
    evs.sort_by_key(|&e| h.position(e));
    evs.into_iter()
        .filter_map(|e| {
            let (k, dir) = h.owner(e)?;
            let o = h.opex(k);
            let v = serde_json::to_string(&h.events()[e].value).unwrap();
            Some((o.proc.clone(), o.operation.clone(), dir == Direction::Inv, v))
        })
        .collect()
}

fn generate(name: &str) -> Generated {
    let (p, c) = builtin_program(name).unwrap();
    enumerate_histories(&p, &c).unwrap()
}

fn condition_for(name: &str, object: &str) -> ConditionSet {
    let (_, cfg) = builtin_program(name).unwrap();
    let t = &cfg.objects[object];
    let reg = SpecRegistry::new().with(object, parse_spec(&t.spec).unwrap());
    ConditionSet::parse(&t.condition, Arc::new(reg), t.k).unwrap()
}

/// Test&set histories built independently: every schedule of two
/// invoke/respond pairs with every output assignment, filtered by brute force.
#[test]
fn alg3_matches_independent_enumeration() {
    let cond = condition_for("alg3", "ts");
    let mut expected = BTreeSet::new();
    let mut total = 0;
    for mask in 0u32..16 {
        if mask.count_ones() != 2 {
            continue;
        }
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for pos in 0..4u64 {
            if mask >> pos & 1 == 1 { a.push(pos) } else { b.push(pos) }
        }
        for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            total += 1;
            let h = History::builder()
                .correct("p1")
                .correct("p2")
                .complete(true)
                .op("ts", "test&set", "p1", Value::Null, json!(x), Some(a[0]), Some(a[1]))
                .op("ts", "test&set", "p2", Value::Null, json!(y), Some(b[0]), Some(b[1]))
                .build();
            if brute_force_check(&h, &cond).unwrap().accepted {
                expected.insert(trace(&h));
            }
        }
    }
    assert_eq!(total, 24);
    let g = generate("alg3");
    let got: BTreeSet<_> = g.histories.iter().map(trace).collect();
    assert_eq!(got.len(), g.histories.len(), "histories are distinct");
    assert_eq!(got, expected);
    assert_eq!(g.interleavings, 24);
    assert_eq!(g.rejected, 14);
}

#[test]
fn alg3_has_exactly_one_winner() {
    for h in generate("alg3").histories {
        let zeros = h.opexes().iter().filter(|o| o.output == json!(0)).count();
        assert_eq!(zeros, 1);
    }
}

#[test]
fn generated_histories_are_valid_and_pass_their_targets() {
    for (name, object) in [("alg1", "mem"), ("alg2", "mem"), ("alg3", "ts")] {
        let cond = condition_for(name, object);
        for h in generate(name).histories {
            assert!(h.validate().is_valid());
            assert!(h.is_complete());
            assert!(brute_force_check(&h, &cond).unwrap().accepted, "{name}: {h:?}");
        }
    }
    for (name, object) in [("alg4", "rb"), ("alg5", "rb")] {
        let cond = condition_for(name, object);
        for h in generate(name).histories.iter().step_by(37) {
            assert!(h.validate().is_valid());
            assert!(check(h, &cond, &SearchConfig::default()).unwrap().accepted);
        }
    }
}

#[test]
fn alg2_final_reads() {
    let g = generate("alg2");
    let mut pairs = BTreeSet::new();
    for h in &g.histories {
        let read = |p: &str| {
            h.opexes().iter().find(|o| o.proc == p && o.operation == "read").unwrap().output.clone()
        };
        let (a, b) = (read("p1"), read("p2"));
        assert!([json!(1), json!(2)].contains(&a) && [json!(1), json!(2)].contains(&b));
        pairs.insert((a.to_string(), b.to_string()));
    }
    // Each process reading the other's value would need each write to
    // follow the other.
    assert!(!pairs.contains(&("2".into(), "1".into())));
    assert!(pairs.contains(&("1".into(), "2".into())));
    assert!(pairs.contains(&("1".into(), "1".into())));
    assert!(pairs.contains(&("2".into(), "2".into())));
}

#[test]
fn sink_classes_per_program() {
    let expect = [("alg1", 2), ("alg2", 3), ("alg3", 2), ("alg4", 4), ("alg5", 2)];
    for (name, n) in expect {
        let s = build_sigma(&generate(name).histories).unwrap();
        let sum = sink_summary(&s);
        assert_eq!(sum.class_count(), n, "{name}");
        assert_eq!(sum.classes.iter().map(|c| c.states.len()).sum::<usize>(), sum.sinks);
        for c in &sum.classes {
            assert!(c.states.iter().all(|&st| s.out_edges(st).is_empty()));
        }
    }
}

#[test]
fn pairwise_asynchrony_per_program() {
    let s = build_sigma(&generate("alg1").histories).unwrap();
    assert!(check_asynchrony(&s, AsynchronyMode::Pairwise).unwrap().holds);

    let s = build_sigma(&generate("alg3").histories).unwrap();
    let r = check_asynchrony(&s, AsynchronyMode::Pairwise).unwrap();
    let Some(Witness::Step { state, e, e2 }) = r.witness else { panic!("{r:?}") };
    let ops: BTreeSet<_> = s.state(state).events.iter().map(|&x| s.event(x).key.dir).collect();
    assert_eq!(ops, BTreeSet::from([Direction::Inv]));
    assert_eq!(s.state(state).events.len(), 2);
    assert_eq!(s.event(e).key.value, "0");
    assert_eq!(s.event(e2).key.value, "0");

    // Both processes reading the other's value is not linearizable, yet each
    // reading alone is, so the two responses cannot be merged.
    let s = build_sigma(&generate("alg2").histories).unwrap();
    let r = check_asynchrony(&s, AsynchronyMode::Pairwise).unwrap();
    assert!(!r.holds);
    let Some(Witness::Step { e, e2, .. }) = r.witness else { panic!() };
    let vals = BTreeSet::from([s.event(e).key.value.clone(), s.event(e2).key.value.clone()]);
    assert_eq!(vals, BTreeSet::from(["1".to_string(), "2".to_string()]));
}

#[test]
fn reduced_view_drops_early_deliveries() {
    let g = generate("alg4");
    let red = reduced_view(&g.histories);
    assert!(red.len() < g.histories.len());
    for h in &red {
        assert!(h.validate().is_valid());
        for (k, o) in h.opexes().iter().enumerate() {
            if o.operation == "r_broadcast" {
                assert_eq!(h.res_position(k), None);
            }
        }
    }
    let s = build_sigma(&red).unwrap();
    assert!(check_asynchrony(&s, AsynchronyMode::Pairwise).unwrap().holds);
    assert_eq!(sink_summary(&s).class_count(), 4);
    assert!(reduced_view(&generate("alg1").histories).len() == generate("alg1").histories.len());
}

#[test]
fn single_write_program_has_one_history() {
    let (mut p, cfg) = builtin_program("alg1").unwrap();
    p.calls.retain(|k, _| k == "p1");
    let g = enumerate_histories(&p, &cfg).unwrap();
    assert_eq!(g.histories.len(), 1);
    assert_eq!(g.histories[0].len(), 1);
}

#[test]
fn program_errors() {
    assert!(matches!(builtin_program("alg9"), Err(Error::UnknownProgram(_))));
    let (p, mut cfg) = builtin_program("alg4").unwrap();
    cfg.event_budget = 3;
    assert!(enumerate_histories(&p, &cfg).unwrap_err().is_resource());
    let (mut p, cfg) = builtin_program("alg1").unwrap();
    p.calls.insert("ghost".into(), vec![Call::new("mem", "read", json!("x"))]);
    assert!(matches!(enumerate_histories(&p, &cfg), Err(Error::InvalidParameter(_))));
    let (p, mut cfg) = builtin_program("alg1").unwrap();
    cfg.objects.clear();
    assert!(matches!(enumerate_histories(&p, &cfg), Err(Error::MissingSpec(_))));
}

#[test]
fn program_files_round_trip() {
    for name in BUILTIN_PROGRAMS {
        let (program, config) = builtin_program(name).unwrap();
        let f = ProgramFile { program, config };
        let text = serde_json::to_string(&f).unwrap();
        let back: ProgramFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
    }
}
