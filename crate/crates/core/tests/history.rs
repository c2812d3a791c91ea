mod common;

use common::*;
use opexcheck::history::{validate_history, Constraint};
use opexcheck::*;
use serde_json::json;

#[test]
fn empty_history_is_valid() {
    let r = validate_history(&History::empty());
    assert!(r.is_valid());
    assert_eq!(r.results.len(), 5);
}

#[test]
fn reg1_is_valid() {
    assert!(h_reg1().validate().is_valid());
}

#[test]
fn duplicate_position_fails_total_order() {
    let h = History::builder()
        .correct("w")
        .correct("r")
        .op("R", "write", "w", json!(1), json!(null), Some(0), Some(1))
        .op("R", "read", "r", json!(null), json!(1), Some(2), Some(1))
        .build();
    let r = h.validate();
    let c = r.get(Constraint::EvTotalOrder);
    assert!(!c.holds);
    assert_eq!(c.offending_events.len(), 2);
    assert!(c.detail.as_deref().unwrap().contains('1'));
}

#[test]
fn response_before_invocation_fails_opex_validity() {
    let h = History::builder()
        .correct("p")
        .op("M", "write", "p", json!([1, "a"]), json!(null), Some(5), Some(2))
        .build();
    let r = h.validate();
    assert_eq!(r.get(Constraint::OpExValidity).offending_opexes, vec![0]);
}

#[test]
fn mixed_notification_kinds_fail_op_validity() {
    let h = History::builder()
        .correct("p")
        .op("C", "decide", "p", json!(null), json!(0), None, Some(0))
        .op("C", "decide", "p", json!(null), json!(0), Some(1), Some(2))
        .build();
    assert!(!h.validate().get(Constraint::OpValidity).holds);
}

#[test]
fn undeclared_process_is_reported() {
    let h = History::builder()
        .op("M", "write", "ghost", json!([1, "a"]), json!(null), Some(0), Some(1))
        .build();
    assert!(!h.validate().get(Constraint::KnownProcesses).holds);
}

#[test]
fn kinds_follow_configuration() {
    let h = History::builder()
        .correct("p")
        .op("M", "write", "p", json!([1, "a"]), json!(null), Some(0), Some(1))
        .op("M", "write", "p", json!([2, "a"]), json!(null), Some(2), None)
        .op("C", "decide", "p", json!(null), json!(0), None, Some(3))
        .build();
    assert_eq!(h.opex(0).kind(), Some(OpExKind::Complete));
    assert_eq!(h.opex(1).kind(), Some(OpExKind::Pending));
    assert_eq!(h.opex(2).kind(), Some(OpExKind::Notification));
    assert_eq!(OpExKind::classify(false, false), None);
}

#[test]
fn object_projection() {
    let h = History::builder()
        .correct("p1")
        .correct("p2")
        .op("R", "write", "p1", json!(1), json!(null), Some(0), Some(3))
        .op("B", "r_broadcast", "p2", json!(["m", 1]), json!(null), Some(1), Some(2))
        .build();
    let r = h.project_object("R");
    assert_eq!(r.len(), 1);
    assert_eq!(r.opex(0).object, "R");
    assert_eq!(r.inv_position(0), Some(0));
    assert_eq!(r.res_position(0), Some(3));
    assert_eq!(r.processes(), h.processes());
    assert!(h.project_object("nothing").is_empty());
    assert_eq!(h_reg1().project_object("R"), h_reg1());
}

#[test]
fn process_projection() {
    let w = h_reg1().project_process("w");
    assert_eq!(w.len(), 1);
    assert_eq!(w.opex(0).operation, "write");
    assert!(h_reg1().project_process("nobody").is_empty());
    let p2 = set_lattice().project_process("p2");
    assert_eq!(p2.len(), 1);
    assert_eq!(p2.opex(0).input, json!(2));
}

fn chain_history(second_object: &str) -> History {
    History::builder()
        .correct("p")
        .op("M", "write", "p", json!([1, "a"]), json!(null), Some(0), Some(1))
        .op(second_object, "write", "p", json!([2, "a"]), json!(null), Some(2), Some(3))
        .op("M", "read", "p", json!("a"), json!(2), Some(4), Some(5))
        .build()
}

#[test]
fn context_with_empty_relation_is_empty() {
    let h = chain_history("M");
    let rel = OrderRelation::new(3);
    for o in 0..3 {
        let ctx = h.context(o, &[0, 1, 2], &rel).unwrap();
        assert!(ctx.is_empty());
        assert_eq!(ctx.relation().pair_count(), 0);
    }
}

#[test]
fn context_of_chain() {
    let h = chain_history("M");
    let rel = OrderRelation::from_sequence(3, &[0, 1, 2]);
    let ctx = h.context(2, &[0, 1, 2], &rel).unwrap();
    let members: Vec<usize> = ctx.ops().map(|(k, _)| k).collect();
    assert_eq!(members, vec![0, 1]);
    assert!(ctx.before(0, 1));
    assert!(ctx.relation().contains(0, 2) && ctx.relation().contains(1, 2));
}

#[test]
fn context_filters_other_objects() {
    let h = chain_history("N");
    let rel = OrderRelation::from_sequence(3, &[0, 1, 2]);
    let ctx = h.context(2, &[0, 1, 2], &rel).unwrap();
    let members: Vec<usize> = ctx.ops().map(|(k, _)| k).collect();
    assert_eq!(members, vec![0]);
}

#[test]
fn context_subject_outside_universe_is_an_error() {
    let h = chain_history("M");
    let rel = OrderRelation::new(3);
    assert!(matches!(h.context(2, &[0, 1], &rel), Err(Error::SubjectNotInUniverse(2))));
}

#[test]
fn event_indices() {
    let h = h_reg1();
    let w_res = h.opex(0).res.unwrap();
    let w_inv = h.opex(0).inv.unwrap();
    assert_eq!(h.event_index(w_inv).unwrap(), 1);
    assert_eq!(h.event_index(w_res).unwrap(), 2);
    let n = History::builder()
        .correct("p1")
        .correct("p2")
        .op("M", "write", "p1", json!([1, "a"]), json!(null), Some(0), Some(1))
        .op("C", "decide", "p2", json!(null), json!(0), None, Some(2))
        .build();
    assert_eq!(n.event_index(n.opex(1).res.unwrap()).unwrap(), 1);
    assert!(matches!(h.event_index(99), Err(Error::UnknownEvent(99))));
}

#[test]
fn correct_process_sets() {
    assert_eq!(set_lattice().correct_processes(), vec!["p1", "p2", "p3"]);
    let h = History::builder()
        .correct("p1")
        .process("p2", ProcessType::Byzantine)
        .correct("p3")
        .build();
    assert_eq!(h.correct_processes(), vec!["p1", "p3"]);
    assert!(History::empty().correct_processes().is_empty());
}

#[test]
fn concurrent_opexes_on_one_process_are_structurally_valid() {
    let h = History::builder()
        .correct("p")
        .op("M", "write", "p", json!([1, "a"]), json!(null), Some(0), Some(2))
        .op("M", "write", "p", json!([2, "a"]), json!(null), Some(1), Some(3))
        .build();
    assert!(h.validate().is_valid());
}
