//! Command implementations behind the `opexcheck` binary.
//!
//! Every command prints a JSON report on stdout and maps its outcome to an
//! exit status: 0 accepted or no violation, 1 rejected or violation found,
//! 2 input error, 3 resource limit.

pub mod files;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use opexcheck::harness::{self, Generated, ProgramFile};
use opexcheck::sigma::dot::to_dot;
use opexcheck::sigma::{check_asynchrony, AsynchronyMode};
use opexcheck::spec::parse_spec;
use opexcheck::{
    build_sigma, check, check_byzantine, evaluate, ByzConfig, ConditionSet, History, SearchConfig,
    Sigma, SpecRegistry, Strategy,
};
use serde_json::{json, Value};
use thiserror::Error;

use crate::report::{audit_json, axiom_json, VerdictReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] opexcheck::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_resource() => EXIT_RESOURCE,
            _ => EXIT_INPUT,
        }
    }
}

/// A report and the exit status it implies.
pub struct Outcome {
    pub report: Value,
    pub code: i32,
}

impl Outcome {
    fn new(report: Value, violation: bool) -> Self {
        Outcome { report, code: if violation { EXIT_VIOLATION } else { EXIT_OK } }
    }
}

/// Builds a registry from `NAME[:params]` (every object of `h`) and
/// `OBJ=NAME[:params]` arguments. Later arguments override earlier ones.
pub fn registry_from_args(specs: &[String], h: &History) -> Result<SpecRegistry, CliError> {
    let mut reg = SpecRegistry::new();
    for arg in specs {
        let eq = arg.find('=');
        let colon = arg.find(':').unwrap_or(arg.len());
        match eq {
            Some(i) if i < colon => {
                let (obj, spec) = (&arg[..i], &arg[i + 1..]);
                if obj.is_empty() {
                    return Err(CliError::Usage(format!("empty object name in `--spec {arg}`")));
                }
                reg = reg.with(obj, parse_spec(spec)?);
            }
            _ => {
                let spec = parse_spec(arg)?;
                for obj in h.objects() {
                    reg = reg.with(obj, spec.clone());
                }
            }
        }
    }
    Ok(reg)
}

pub struct CheckOptions {
    pub specs: Vec<String>,
    pub consistency: String,
    pub k: Option<usize>,
    pub strategy: Strategy,
    pub node_budget: Option<u64>,
    pub max_opexes: Option<usize>,
}

impl CheckOptions {
    fn condition(&self, h: &History) -> Result<ConditionSet, CliError> {
        let reg = registry_from_args(&self.specs, h)?;
        Ok(ConditionSet::parse(&self.consistency, Arc::new(reg), self.k)?)
    }

    fn search(&self) -> SearchConfig {
        SearchConfig {
            strategy: self.strategy,
            max_opexes: self.max_opexes,
            node_budget: self.node_budget,
        }
    }
}

pub fn run_check(history: &Path, opts: &CheckOptions) -> Result<Outcome, CliError> {
    let h = files::read_history(history)?;
    let cond = opts.condition(&h)?;
    let v = check(&h, &cond, &opts.search())?;
    let clauses = match &v.witness {
        Some(w) => evaluate(&h, w, &cond)?,
        None => Vec::new(),
    };
    let report = VerdictReport::new(&v, &cond.name, clauses, false);
    Ok(Outcome::new(serde_json::to_value(report).expect("serializable"), !v.accepted))
}

pub fn run_byz_check(
    history: &Path,
    opts: &CheckOptions,
    universe: &Path,
    max_insert: usize,
    candidate_budget: u64,
) -> Result<Outcome, CliError> {
    let h = files::read_history(history)?;
    let cond = opts.condition(&h)?;
    let byz =
        ByzConfig { universe: files::read_universe(universe)?, max_inserted: max_insert, candidate_budget };
    let v = check_byzantine(&h, &cond, &byz, &opts.search())?;
    let clauses = match (&v.witness, &v.history) {
        (Some(w), Some(repaired)) => evaluate(repaired, w, &cond)?,
        (Some(w), None) => evaluate(&h, w, &cond)?,
        _ => Vec::new(),
    };
    let report = VerdictReport::new(&v, &cond.name, clauses, true);
    Ok(Outcome::new(serde_json::to_value(report).expect("serializable"), !v.accepted))
}

fn load_program(program: &str) -> Result<(String, ProgramFile), CliError> {
    if harness::BUILTIN_PROGRAMS.contains(&program) {
        let (program_def, config) = harness::builtin_program(program)?;
        return Ok((program.to_string(), ProgramFile { program: program_def, config }));
    }
    let path = Path::new(program);
    if !path.exists() {
        return Err(opexcheck::Error::UnknownProgram(program.to_string()).into());
    }
    Ok((path.display().to_string(), files::read_json(path)?))
}

pub fn run_gen(program: &str, out: &Path) -> Result<Outcome, CliError> {
    let (name, file) = load_program(program)?;
    let Generated { histories, interleavings, rejected } =
        harness::enumerate_histories(&file.program, &file.config)?;
    files::write_history_dir(out, &histories)?;
    let report = json!({
        "program": name,
        "histories": histories.len(),
        "interleavings": interleavings,
        "rejected": rejected,
        "out": out.display().to_string(),
    });
    Ok(Outcome::new(report, false))
}

fn load_sigma(dir: &Path, reduced: bool) -> Result<Sigma, CliError> {
    let mut histories = files::read_history_dir(dir)?;
    if histories.is_empty() {
        return Err(CliError::Usage(format!("{}: no history files", dir.display())));
    }
    if reduced {
        histories = harness::reduced_view(&histories);
    }
    Ok(build_sigma(&histories)?)
}

pub fn run_sigma(dir: &Path, out: &Path, reduced: bool) -> Result<Outcome, CliError> {
    let s = load_sigma(dir, reduced)?;
    std::fs::write(out, to_dot(&s)).map_err(|e| CliError::io(out, e))?;
    let sinks = harness::sink_summary(&s);
    let classes: Vec<Value> = sinks
        .classes
        .iter()
        .map(|c| json!({ "responses": c.key, "sinks": c.states.len() }))
        .collect();
    let report = json!({
        "states": s.len(),
        "edges": s.edge_count(),
        "complete_states": s.complete_states().count(),
        "sinks": sinks.sinks,
        "sink_classes": classes,
        "asynchrony": axiom_json(&s, &check_asynchrony(&s, AsynchronyMode::Pairwise)?),
        "out": out.display().to_string(),
    });
    Ok(Outcome::new(report, false))
}

pub fn run_audit_flp(dir: &Path) -> Result<Outcome, CliError> {
    let s = load_sigma(dir, false)?;
    let preamble = check_asynchrony(&s, AsynchronyMode::Pairwise)?;
    let audit = match opexcheck::flp_audit(&s) {
        Ok(a) => a,
        Err(e) => {
            // The asynchrony preamble does not depend on the audit precondition.
            let _ = writeln!(std::io::stdout(), "{}", json!({ "asynchrony": axiom_json(&s, &preamble) }));
            return Err(e.into());
        }
    };
    let violation = !audit.violated.is_empty();
    Ok(Outcome::new(audit_json(&s, &preamble, &audit), violation))
}

pub fn run_audit_ksa(dir: &Path, k: usize, budget: u64) -> Result<Outcome, CliError> {
    let s = load_sigma(dir, false)?;
    let preamble = check_asynchrony(&s, AsynchronyMode::Pairwise)?;
    let audit = opexcheck::ksa_audit(&s, k, budget)?;
    let violation = !audit.violated.is_empty();
    Ok(Outcome::new(audit_json(&s, &preamble, &audit), violation))
}
