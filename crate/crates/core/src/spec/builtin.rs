//! Built-in object specifications.
//!
//! Predicates inspect the subject op-ex before consulting its context where the
//! formula allows it, so that relation-independent failures are detected as such.

use std::collections::BTreeMap;

use serde_json::json;

use super::{op_termination, ObjectSpec, OperationSpec};
use crate::error::{Error, Result};
use crate::history::{Context, OpEx, Scope};
use crate::pattern::{OpPat, Pat};
use crate::Value;

fn is_write(o: &OpEx) -> bool {
    o.operation == "write"
}

/// Single-writer single-reader register: `write(v)`, `read()/v`.
pub fn make_swsr_register(writer: &str, reader: &str) -> Result<ObjectSpec> {
    if writer == reader {
        return Err(Error::InvalidParameter("register writer and reader must differ".into()));
    }
    let (w, r) = (writer.to_string(), reader.to_string());
    let read = OperationSpec::normal("read")
        .with_validity(move |o, ctx| o.proc == r && ctx.ops().any(|(_, x)| is_write(x)))
        .with_safety(|o, ctx| latest_matching(ctx, is_write, |x| x.input == o.output))
        .with_liveness(op_termination);
    let write = OperationSpec::normal("write")
        .with_validity(move |o, _| o.proc == w)
        .with_liveness(op_termination);
    Ok(ObjectSpec::new("swsr-register")
        .param("writer", json!(writer))
        .param("reader", json!(reader))
        .operation(read)
        .operation(write))
}

/// True when some member selected by `candidate` is not followed, under `⟶_c`,
/// by any member in `family`.
fn latest_matching(
    ctx: &Context<'_>,
    family: impl Fn(&OpEx) -> bool,
    candidate: impl Fn(&OpEx) -> bool,
) -> bool {
    ctx.ops().filter(|(_, x)| family(x) && candidate(x)).any(|(k, _)| {
        !ctx.ops().any(|(k2, x2)| k2 != k && family(x2) && ctx.before(k, k2))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum MemoryPolicy {
    /// Multi-writer multi-reader.
    Mwmr,
    /// Single-writer per address: address → designated writer.
    Swmr(BTreeMap<String, String>),
}

fn address_key(a: &Value) -> String {
    match a {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Shared memory: `write(v, a)` with input `[v, a]`, `read(a)/v`.
pub fn make_shared_memory(policy: MemoryPolicy) -> ObjectSpec {
    let read = OperationSpec::normal("read")
        .with_validity(|o, ctx| {
            let addr = Pat::Tuple(vec![Pat::Any, Pat::Is(&o.input)]);
            let pat = OpPat::op("write").input(addr);
            ctx.ops().any(|(_, x)| pat.matches(x))
        })
        .with_safety(|o, ctx| {
            let at = OpPat::op("write").input(Pat::Tuple(vec![Pat::Any, Pat::Is(&o.input)]));
            let exact = OpPat::op("write")
                .input(Pat::Tuple(vec![Pat::Is(&o.output), Pat::Is(&o.input)]));
            latest_matching(ctx, |x| at.matches(x), |x| exact.matches(x))
        })
        .with_liveness(op_termination);
    let mut write = OperationSpec::normal("write").with_liveness(op_termination);
    let mut spec = ObjectSpec::new("shared-memory");
    match policy {
        MemoryPolicy::Mwmr => spec = spec.param("policy", json!("mwmr")),
        MemoryPolicy::Swmr(writers) => {
            spec = spec.param("policy", json!("swmr")).param("writers", json!(writers));
            write = write.with_validity(move |o, _| {
                o.input_at(1)
                    .and_then(|a| writers.get(&address_key(a)))
                    .is_some_and(|p| *p == o.proc)
            });
        }
    }
    spec.operation(read).operation(write)
}

/// Reliable broadcast: `r_broadcast(m, id)` and the notification
/// `r_deliver/(m, id, sender)`.
pub fn make_reliable_broadcast() -> ObjectSpec {
    let broadcast = OperationSpec::normal("r_broadcast")
        .with_validity(|o, ctx| {
            let Some(id) = o.input_at(1) else { return false };
            let pat = OpPat::op("r_broadcast")
                .by(&o.proc)
                .input(Pat::Tuple(vec![Pat::Any, Pat::Is(id)]));
            !ctx.ops().any(|(_, x)| pat.matches(x))
        })
        .with_liveness(|k, scope| {
            if !op_termination(k, scope) {
                return false;
            }
            let o = scope.history().opex(k);
            let (Some(m), Some(id)) = (o.input_at(0), o.input_at(1)) else { return false };
            let expected = json!([m, id, o.proc]);
            scope.history().correct_processes().into_iter().all(|pj| {
                let pat = OpPat::op("r_deliver").by(pj).output(Pat::Is(&expected));
                scope
                    .ops()
                    .any(|(k2, x)| x.object == o.object && pat.matches(x) && scope.precedes(k, k2))
            })
        });
    let deliver = OperationSpec::notification("r_deliver")
        .with_safety(|o, ctx| {
            let (Some(m), Some(id), Some(sender)) = (o.output_at(0), o.output_at(1), o.output_at(2))
            else {
                return false;
            };
            let target = json!([m, id]);
            // C: broadcasts in the context not yet delivered by this process.
            let undelivered = |b: &OpEx| {
                let (Some(bm), Some(bid)) = (b.input_at(0), b.input_at(1)) else { return false };
                let seen = json!([bm, bid, b.proc]);
                let pat = OpPat::op("r_deliver").by(&o.proc).output(Pat::Is(&seen));
                b.operation == "r_broadcast" && !ctx.ops().any(|(_, d)| pat.matches(d))
            };
            ctx.ops()
                .filter(|(_, b)| {
                    b.operation == "r_broadcast"
                        && b.input == target
                        && sender.as_str() == Some(b.proc.as_str())
                        && undelivered(b)
                })
                .any(|(k, _)| {
                    !ctx.ops().any(|(k2, b2)| k2 != k && undelivered(b2) && ctx.before(k2, k))
                })
        })
        .with_liveness(|k, scope| {
            let o = scope.history().opex(k);
            if !scope.is_correct(&o.proc) {
                return true;
            }
            scope.history().correct_processes().into_iter().all(|pj| {
                let pat = OpPat::op("r_deliver").by(pj).output(Pat::Is(&o.output));
                scope.ops().any(|(_, x)| x.object == o.object && pat.matches(x))
            })
        });
    ObjectSpec::new("reliable-broadcast").operation(broadcast).operation(deliver)
}

/// Asynchronous message passing: `send(m, j)` and the notification `receive/(m, i)`.
pub fn make_message_passing() -> ObjectSpec {
    let send = OperationSpec::normal("send").with_liveness(|k, scope| {
        if !op_termination(k, scope) {
            return false;
        }
        let o = scope.history().opex(k);
        let (Some(m), Some(dest)) = (o.input_at(0), o.input_at(1)) else { return false };
        let Some(dest) = dest.as_str() else { return true };
        if !scope.is_correct(dest) {
            return true;
        }
        let expected = json!([m, o.proc]);
        let pat = OpPat::op("receive").by(dest).output(Pat::Is(&expected));
        scope.ops().any(|(k2, x)| x.object == o.object && pat.matches(x) && scope.precedes(k, k2))
    });
    let receive = OperationSpec::notification("receive").with_safety(|o, ctx| {
        let (Some(m), Some(from)) = (o.output_at(0), o.output_at(1)) else { return false };
        let Some(from) = from.as_str() else { return false };
        let sent = json!([m, o.proc]);
        let send = OpPat::op("send").by(from).input(Pat::Is(&sent));
        let dup = OpPat::op("receive").by(&o.proc).output(Pat::Is(&o.output));
        ctx.ops().any(|(_, x)| send.matches(x)) && !ctx.ops().any(|(_, x)| dup.matches(x))
    });
    ObjectSpec::new("message-passing").operation(send).operation(receive)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AgreementKind {
    Consensus,
    SetAgreement,
}

/// Admissible decision values.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Any,
    Values(Vec<Value>),
}

impl Domain {
    pub fn contains(&self, v: &Value) -> bool {
        match self {
            Domain::Any => true,
            Domain::Values(vs) => vs.contains(v),
        }
    }
}

/// Consensus or set agreement: a single notification `decide/v`.
///
/// Liveness ("some process decides") is attached to the object: a complete
/// history that declares processes but holds no `decide` on the object fails.
pub fn make_agreement(kind: AgreementKind, domain: Domain) -> Result<ObjectSpec> {
    if domain == Domain::Values(Vec::new()) {
        return Err(Error::InvalidParameter("agreement domain must be nonempty".into()));
    }
    let name = match kind {
        AgreementKind::Consensus => "consensus",
        AgreementKind::SetAgreement => "set-agreement",
    };
    let mut spec = ObjectSpec::new(name);
    if let Domain::Values(vs) = &domain {
        spec = spec.param("domain", Value::Array(vs.clone()));
    }
    let decide = OperationSpec::notification("decide").with_safety(move |o, ctx| {
        domain.contains(&o.output)
            && ctx.ops().all(|(_, x)| x.operation != "decide" || x.output == o.output)
    });
    Ok(spec.operation(decide).with_object_liveness(agreement_liveness))
}

fn agreement_liveness(object: &str, scope: &Scope<'_>) -> bool {
    let h = scope.history();
    !h.is_complete()
        || h.processes().is_empty()
        || h.opexes().iter().any(|o| o.object == object && o.operation == "decide")
}

fn as_set(v: &Value) -> Option<Vec<&Value>> {
    let Value::Array(items) = v else { return None };
    let mut out: Vec<&Value> = Vec::new();
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    Some(out)
}

/// Lattice agreement: `propose(v)/V`. The output must equal the set of values
/// proposed in the context together with `v`.
pub fn make_lattice_agreement() -> ObjectSpec {
    let propose = OperationSpec::normal("propose")
        .with_safety(|o, ctx| {
            let Some(out) = as_set(&o.output) else { return false };
            if !out.contains(&&o.input) {
                return false;
            }
            let mut expected = vec![&o.input];
            for (_, x) in ctx.ops() {
                if x.operation == "propose" && !expected.contains(&&x.input) {
                    expected.push(&x.input);
                }
            }
            expected.len() == out.len() && expected.iter().all(|v| out.contains(v))
        })
        .with_liveness(op_termination);
    ObjectSpec::new("lattice-agreement").operation(propose)
}

/// Test&Set: `test&set()/v`, 0 for the first op-ex and 1 afterwards.
pub fn make_test_and_set() -> ObjectSpec {
    let tas = OperationSpec::normal("test&set")
        .with_safety(|o, ctx| {
            let zero = o.output == json!(0);
            zero == !ctx.ops().any(|(_, x)| x.operation == "test&set")
        })
        .with_liveness(op_termination);
    ObjectSpec::new("test-and-set").operation(tas)
}
