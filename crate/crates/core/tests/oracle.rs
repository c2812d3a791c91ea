mod common;

use common::*;
use opexcheck::consistency::CONDITION_NAMES;
use opexcheck::*;

/// Existence of a satisfying relation by plain enumeration of every
/// irreflexive relation through [`evaluate`].
fn exists_relation(h: &History, c: &ConditionSet) -> bool {
    let n = h.len();
    let pairs = n * n.saturating_sub(1);
    (0..1u64 << pairs).any(|code| {
        evaluate(h, &relation_from_code(n, code), c).unwrap().iter().all(|o| o.holds)
    })
}

#[test]
fn checker_matches_brute_force_up_to_four_opexes() {
    let reg = corpus_registry();
    let mut compared = 0;
    let mut accepted = 0;
    for h in corpus(31, 300, 4) {
        for name in CONDITION_NAMES {
            let c = cond(name, &reg);
            let fast = check(&h, &c, &SearchConfig::default()).unwrap();
            let slow = brute_force_check(&h, &c).unwrap();
            assert_eq!(fast.accepted, slow.accepted, "{name} on {h:?}");
            if let Some(w) = &slow.witness {
                assert!(evaluate(&h, w, &c).unwrap().iter().all(|o| o.holds));
            }
            compared += 1;
            accepted += usize::from(fast.accepted);
        }
    }
    assert_eq!(compared, 3000);
    // Both outcomes are represented.
    assert!(accepted > 300 && accepted < 2700, "{accepted}");
}

#[test]
fn checker_matches_plain_enumeration_up_to_three_opexes() {
    let reg = corpus_registry();
    for h in corpus(32, 200, 3) {
        for name in CONDITION_NAMES {
            let c = cond(name, &reg);
            let fast = check(&h, &c, &SearchConfig::default()).unwrap();
            assert_eq!(fast.accepted, exists_relation(&h, &c), "{name} on {h:?}");
        }
    }
}

#[test]
fn fixtures_match_brute_force() {
    let cases = [
        (set_lattice(), lattice_registry()),
        (interval_lattice(), lattice_registry()),
        (h_reg1(), register_registry()),
        (h_reg_bad(), register_registry()),
        (fifo_history(), corpus_registry()),
    ];
    for (h, reg) in cases {
        for name in CONDITION_NAMES {
            let c = cond(name, &reg);
            let fast = check(&h, &c, &SearchConfig::default()).unwrap();
            let slow = brute_force_check(&h, &c).unwrap();
            assert_eq!(fast.accepted, slow.accepted, "{name} on {h:?}");
        }
    }
}

#[test]
fn brute_force_zero_opexes() {
    let c = cond("linearizability", &corpus_registry());
    let v = brute_force_check(&History::empty(), &c).unwrap();
    assert!(v.accepted);
    assert_eq!(v.stats.nodes, 1);
}

#[test]
fn brute_force_first_witness_is_lexicographic() {
    // Two unrelated writes: the empty relation is the first candidate under
    // legality, and the identity permutation under serializability.
    let h = fifo_history().project_process("p1");
    let reg = corpus_registry();
    let v = brute_force_check(&h, &cond("legality", &reg)).unwrap();
    assert_eq!(v.witness.unwrap().pair_count(), 0);
    let v = brute_force_check(&h, &cond("serializability", &reg)).unwrap();
    assert_eq!(v.witness.unwrap(), OrderRelation::from_sequence(2, &[0, 1]));
}
