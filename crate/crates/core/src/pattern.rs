//! Matching op-exes against shapes such as `write_i(-, a)` or `r_deliver_j/(m, id, i)`.
//!
//! [`Pat::Any`] plays the role of `-`, [`Pat::Is`] the role of `≡ v`, and
//! [`Pat::Absent`] the role of `⊥`.

use crate::history::OpEx;
use crate::Value;

#[derive(Clone, Debug)]
pub enum Pat<'a> {
    Any,
    Is(&'a Value),
    Absent,
    /// Element-wise match against an array value of the same length.
    Tuple(Vec<Pat<'a>>),
}

impl Pat<'_> {
    pub fn matches(&self, v: &Value) -> bool {
        match self {
            Pat::Any => true,
            Pat::Is(x) => *x == v,
            Pat::Absent => v.is_null(),
            Pat::Tuple(ps) => match v {
                Value::Array(items) => {
                    items.len() == ps.len() && ps.iter().zip(items).all(|(p, x)| p.matches(x))
                }
                _ => false,
            },
        }
    }
}

/// Shape of an op-ex: operation name, optional issuing process, input and output.
#[derive(Clone, Debug)]
pub struct OpPat<'a> {
    pub operation: &'a str,
    pub proc: Option<&'a str>,
    pub input: Pat<'a>,
    pub output: Pat<'a>,
}

impl<'a> OpPat<'a> {
    pub fn op(operation: &'a str) -> Self {
        OpPat { operation, proc: None, input: Pat::Any, output: Pat::Any }
    }

    pub fn by(mut self, proc: &'a str) -> Self {
        self.proc = Some(proc);
        self
    }

    pub fn input(mut self, p: Pat<'a>) -> Self {
        self.input = p;
        self
    }

    pub fn output(mut self, p: Pat<'a>) -> Self {
        self.output = p;
        self
    }

    pub fn matches(&self, o: &OpEx) -> bool {
        o.operation == self.operation
            && self.proc.is_none_or(|p| o.proc == p)
            && self.input.matches(&o.input)
            && self.output.matches(&o.output)
    }
}
