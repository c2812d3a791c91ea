//! Object specifications: per-operation validity, safety and liveness predicates.

mod builtin;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use builtin::{
    make_agreement, make_lattice_agreement, make_message_passing, make_reliable_broadcast,
    make_shared_memory, make_swsr_register, make_test_and_set, AgreementKind, Domain,
    MemoryPolicy,
};

use crate::error::{Error, Result};
use crate::history::{Context, History, OpEx, Scope};
use crate::Value;

/// `V` or `S`: evaluated on an op-ex and its context.
pub type ContextPredicate = Arc<dyn Fn(&OpEx, &Context<'_>) -> bool + Send + Sync>;

/// `L`: evaluated on an op-ex index with access to the whole history and relation.
pub type LivenessPredicate = Arc<dyn Fn(usize, &Scope<'_>) -> bool + Send + Sync>;

/// History-global liveness attached to an object rather than to an op-ex.
pub type ObjectLiveness = Arc<dyn Fn(&str, &Scope<'_>) -> bool + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Normal,
    Notification,
}

/// One operation of an object. Missing predicates are constant-true.
#[derive(Clone)]
pub struct OperationSpec {
    pub name: String,
    pub kind: OpKind,
    pub validity: Option<ContextPredicate>,
    pub safety: Option<ContextPredicate>,
    pub liveness: Option<LivenessPredicate>,
}

impl OperationSpec {
    pub fn new(name: impl Into<String>, kind: OpKind) -> Self {
        OperationSpec { name: name.into(), kind, validity: None, safety: None, liveness: None }
    }

    pub fn normal(name: impl Into<String>) -> Self {
        Self::new(name, OpKind::Normal)
    }

    pub fn notification(name: impl Into<String>) -> Self {
        Self::new(name, OpKind::Notification)
    }

    pub fn with_validity(
        mut self,
        f: impl Fn(&OpEx, &Context<'_>) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.validity = Some(Arc::new(f));
        self
    }

    pub fn with_safety(
        mut self,
        f: impl Fn(&OpEx, &Context<'_>) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.safety = Some(Arc::new(f));
        self
    }

    pub fn with_liveness(
        mut self,
        f: impl Fn(usize, &Scope<'_>) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.liveness = Some(Arc::new(f));
        self
    }

    pub fn validity(&self, o: &OpEx, ctx: &Context<'_>) -> bool {
        self.validity.as_ref().is_none_or(|f| f(o, ctx))
    }

    pub fn safety(&self, o: &OpEx, ctx: &Context<'_>) -> bool {
        self.safety.as_ref().is_none_or(|f| f(o, ctx))
    }

    pub fn liveness(&self, k: usize, scope: &Scope<'_>) -> bool {
        self.liveness.as_ref().is_none_or(|f| f(k, scope))
    }
}

impl fmt::Debug for OperationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperationSpec")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("validity", &self.validity.is_some())
            .field("safety", &self.safety.is_some())
            .field("liveness", &self.liveness.is_some())
            .finish()
    }
}

/// A named object type with its operation interface.
#[derive(Clone)]
pub struct ObjectSpec {
    pub kind: String,
    pub params: BTreeMap<String, Value>,
    operations: BTreeMap<String, OperationSpec>,
    object_liveness: Option<ObjectLiveness>,
}

impl ObjectSpec {
    pub fn new(kind: impl Into<String>) -> Self {
        ObjectSpec {
            kind: kind.into(),
            params: BTreeMap::new(),
            operations: BTreeMap::new(),
            object_liveness: None,
        }
    }

    pub fn param(mut self, key: impl Into<String>, value: Value) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    /// Adds an operation, replacing any previous one of the same name.
    pub fn operation(mut self, op: OperationSpec) -> Self {
        self.operations.insert(op.name.clone(), op);
        self
    }

    pub fn with_object_liveness(
        mut self,
        f: impl Fn(&str, &Scope<'_>) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.object_liveness = Some(Arc::new(f));
        self
    }

    pub fn get(&self, name: &str) -> Option<&OperationSpec> {
        self.operations.get(name)
    }

    pub fn operations(&self) -> impl Iterator<Item = &OperationSpec> {
        self.operations.values()
    }

    pub fn object_liveness(&self) -> Option<&ObjectLiveness> {
        self.object_liveness.as_ref()
    }
}

impl fmt::Debug for ObjectSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectSpec")
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("operations", &self.operations.keys().collect::<Vec<_>>())
            .finish()
    }
}

/// Maps object identifiers to specs, with an optional fallback for unlisted objects.
#[derive(Clone, Debug, Default)]
pub struct SpecRegistry {
    objects: BTreeMap<String, ObjectSpec>,
    default: Option<ObjectSpec>,
}

impl SpecRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry where every object uses `spec`.
    pub fn uniform(spec: ObjectSpec) -> Self {
        SpecRegistry { objects: BTreeMap::new(), default: Some(spec) }
    }

    pub fn insert(&mut self, object: impl Into<String>, spec: ObjectSpec) {
        self.objects.insert(object.into(), spec);
    }

    pub fn with(mut self, object: impl Into<String>, spec: ObjectSpec) -> Self {
        self.insert(object, spec);
        self
    }

    pub fn set_default(&mut self, spec: ObjectSpec) {
        self.default = Some(spec);
    }

    pub fn get(&self, object: &str) -> Result<&ObjectSpec> {
        self.objects
            .get(object)
            .or(self.default.as_ref())
            .ok_or_else(|| Error::MissingSpec(object.to_string()))
    }

    pub fn operation(&self, object: &str, operation: &str) -> Result<&OperationSpec> {
        self.get(object)?.get(operation).ok_or_else(|| Error::UnknownOperation {
            object: object.to_string(),
            operation: operation.to_string(),
        })
    }

    /// Explicitly registered objects.
    pub fn registered(&self) -> impl Iterator<Item = (&str, &ObjectSpec)> {
        self.objects.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn default_spec(&self) -> Option<&ObjectSpec> {
        self.default.as_ref()
    }

    /// Objects whose spec carries an object-level liveness rule: the explicitly
    /// registered ones plus, under a fallback spec, every object of `h`.
    pub fn object_rules<'a>(&'a self, h: &'a History) -> Vec<(&'a str, &'a ObjectLiveness)> {
        let mut out: Vec<(&str, &ObjectLiveness)> = Vec::new();
        for (name, spec) in &self.objects {
            if let Some(f) = spec.object_liveness() {
                out.push((name, f));
            }
        }
        if let Some(f) = self.default.as_ref().and_then(|s| s.object_liveness()) {
            for obj in h.objects() {
                if !self.objects.contains_key(obj) {
                    out.push((obj, f));
                }
            }
        }
        out
    }

    /// Rejects histories using unknown objects/operations or contradicting the
    /// declared normal/notification kind of an operation.
    pub fn check_history(&self, h: &History) -> Result<()> {
        for o in h.opexes() {
            let op = self.operation(&o.object, &o.operation)?;
            let ok = match op.kind {
                OpKind::Notification => o.is_notification(),
                OpKind::Normal => o.inv.is_some(),
            };
            if !ok {
                return Err(Error::InvalidHistory(format!(
                    "op-ex {}.{} by {} violates OpValidity for a {:?} operation",
                    o.object, o.operation, o.proc, op.kind
                )));
            }
        }
        Ok(())
    }
}

/// `proc correct ⟹ o not pending`.
pub fn op_termination(k: usize, scope: &Scope<'_>) -> bool {
    let o = scope.history().opex(k);
    !scope.is_correct(&o.proc) || !o.is_pending()
}

/// Splits `a=1,b=[x,y],c` at commas outside brackets, braces and quotes.
pub fn split_params(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut quoted = false;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '"' => quoted = !quoted,
            '[' | '{' if !quoted => depth += 1,
            ']' | '}' if !quoted => depth -= 1,
            ',' if depth == 0 && !quoted => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out.into_iter().map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

/// Parses `NAME[:k=v,...]` into a built-in spec. Parameter values are read as
/// JSON when possible and as bare strings otherwise.
pub fn parse_spec(text: &str) -> Result<ObjectSpec> {
    let (name, rest) = match text.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (text.trim(), ""),
    };
    let mut params = BTreeMap::new();
    for part in split_params(rest) {
        let (k, v) = match part.split_once('=') {
            Some((k, v)) => (k.trim().to_string(), v.trim()),
            None => (part.clone(), "true"),
        };
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        params.insert(k, value);
    }
    builtin_spec(name, &params)
}

fn str_param<'a>(params: &'a BTreeMap<String, Value>, key: &str) -> Result<&'a str> {
    params
        .get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| Error::InvalidParameter(format!("missing string parameter `{key}`")))
}

fn domain_param(params: &BTreeMap<String, Value>) -> Result<Domain> {
    match params.get("domain") {
        None => Ok(Domain::Any),
        Some(Value::Array(vs)) if !vs.is_empty() => Ok(Domain::Values(vs.clone())),
        Some(other) => {
            Err(Error::InvalidParameter(format!("domain must be a nonempty array, got {other}")))
        }
    }
}

/// Instantiates a built-in spec by its CLI name.
pub fn builtin_spec(name: &str, params: &BTreeMap<String, Value>) -> Result<ObjectSpec> {
    match name {
        "swsr-register" => {
            make_swsr_register(str_param(params, "writer")?, str_param(params, "reader")?)
        }
        "shared-memory" => {
            let swmr = params.contains_key("swmr")
                || params.get("policy").and_then(Value::as_str) == Some("swmr");
            if swmr {
                let writers = match params.get("writers") {
                    Some(Value::Object(m)) => m
                        .iter()
                        .map(|(a, p)| {
                            p.as_str().map(|p| (a.clone(), p.to_string())).ok_or_else(|| {
                                Error::InvalidParameter("writers map values must be strings".into())
                            })
                        })
                        .collect::<Result<BTreeMap<_, _>>>()?,
                    Some(_) => {
                        return Err(Error::InvalidParameter(
                            "writers must map addresses to process ids".into(),
                        ))
                    }
                    None => BTreeMap::new(),
                };
                Ok(make_shared_memory(MemoryPolicy::Swmr(writers)))
            } else {
                Ok(make_shared_memory(MemoryPolicy::Mwmr))
            }
        }
        "reliable-broadcast" => Ok(make_reliable_broadcast()),
        "message-passing" => Ok(make_message_passing()),
        "consensus" => make_agreement(AgreementKind::Consensus, domain_param(params)?),
        "set-agreement" => make_agreement(AgreementKind::SetAgreement, domain_param(params)?),
        "lattice-agreement" => Ok(make_lattice_agreement()),
        "test-and-set" => Ok(make_test_and_set()),
        other => Err(Error::UnknownSpec(other.to_string())),
    }
}
