//! Graphviz export of Σ with abbreviated event labels.

use std::fmt::Write;

use super::{Sigma, SigmaEvent};
use crate::history::Direction;
use crate::Value;

fn subscript(s: &str) -> String {
    s.chars()
        .map(|c| match c.to_digit(10) {
            Some(d) => char::from_u32(0x2080 + d).unwrap_or(c),
            None => c,
        })
        .collect()
}

/// Process subscript: trailing digits of the id, or the whole id.
fn proc_tag(proc: &str) -> String {
    let digits: String = proc.chars().rev().take_while(char::is_ascii_digit).collect();
    if digits.is_empty() {
        format!("_{proc}")
    } else {
        subscript(&digits.chars().rev().collect::<String>())
    }
}

fn short(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn head(v: &Value) -> String {
    match v {
        Value::Array(xs) if !xs.is_empty() => short(&xs[0]),
        other => short(other),
    }
}

/// Label in the style `WI₁(1)`, `RR₃(2)`, `T&SR₂(0)`, `B₁(m1)`, `D₂(m1)`.
pub fn event_label(e: &SigmaEvent) -> String {
    let k = &e.key;
    let i = proc_tag(&k.proc);
    match (k.operation.as_str(), k.dir) {
        ("write", Direction::Inv) => format!("WI{i}({})", head(&e.value)),
        ("write", Direction::Res) => format!("WR{i}"),
        ("read", Direction::Inv) => format!("RI{i}"),
        ("read", Direction::Res) => format!("RR{i}({})", short(&e.value)),
        ("test&set", Direction::Inv) => format!("T&SI{i}"),
        ("test&set", Direction::Res) => format!("T&SR{i}({})", short(&e.value)),
        ("r_broadcast", Direction::Inv) => format!("B{i}({})", head(&e.value)),
        ("r_broadcast", Direction::Res) => format!("BR{i}"),
        ("r_deliver", _) => format!("D{i}({})", head(&e.value)),
        ("send", Direction::Inv) => format!("S{i}({})", head(&e.value)),
        ("send", Direction::Res) => format!("SR{i}"),
        ("receive", _) => format!("Rcv{i}({})", head(&e.value)),
        ("decide", _) => format!("d{i}/{}", short(&e.value)),
        (op, Direction::Inv) => format!("{op}I{i}({})", short(&e.value)),
        (op, Direction::Res) => format!("{op}R{i}({})", short(&e.value)),
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Deterministic DOT text: one node per state labeled by its sorted event
/// labels, one edge per one-event extension. Complete states are drawn with a
/// double border.
pub fn to_dot(s: &Sigma) -> String {
    let mut out = String::from("digraph sigma {\n  rankdir=TB;\n  node [shape=box];\n");
    for i in 0..s.len() {
        let st = s.state(i);
        let mut labels: Vec<String> = st.events.iter().map(|&e| event_label(s.event(e))).collect();
        labels.sort();
        let text = if labels.is_empty() { "∅".to_string() } else { labels.join(", ") };
        let style = if st.complete { ", peripheries=2" } else { "" };
        let _ = writeln!(out, "  s{i} [label=\"{}\"{style}];", escape(&text));
    }
    for i in 0..s.len() {
        for &(e, t) in s.out_edges(i) {
            let _ = writeln!(out, "  s{i} -> s{t} [label=\"{}\"];", escape(&event_label(s.event(e))));
        }
    }
    out.push_str("}\n");
    out
}
