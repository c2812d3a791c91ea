//! Constructive audits of the consensus and k-set-agreement impossibility arguments.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use super::axioms::{
    check_asynchrony, check_continuity, find_critical_state, non_triviality, resilience,
    verify_valence_lemmas, AsynchronyMode, AxiomReport, Witness,
};
use super::Sigma;
use crate::checker::{check, SearchConfig};
use crate::consistency::ConditionSet;
use crate::error::{Error, Result};
use crate::spec::{make_agreement, AgreementKind, Domain, SpecRegistry};

/// The construction carried out when every audited axiom holds.
#[derive(Clone, Debug, Serialize)]
pub struct Contradiction {
    pub state: Option<usize>,
    pub events: Vec<usize>,
    /// Decided values involved, as canonical JSON.
    pub values: Vec<String>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContradictionReport {
    pub reports: Vec<AxiomReport>,
    /// Names of the axioms that fail.
    pub violated: Vec<String>,
    pub critical_state: Option<usize>,
    pub contradiction: Option<Contradiction>,
}

impl ContradictionReport {
    pub fn report(&self, axiom: &str) -> Option<&AxiomReport> {
        self.reports.iter().find(|r| r.axiom == axiom)
    }

    pub fn holds(&self, axiom: &str) -> Option<bool> {
        self.report(axiom).map(|r| r.holds)
    }
}

/// Re-checks every input history, projected onto the objects it decides on,
/// against an agreement spec under `condition`.
fn recheck(s: &Sigma, kind: AgreementKind, condition: &str, k: Option<usize>) -> Result<()> {
    for (i, h) in s.histories().iter().enumerate() {
        let objects: BTreeSet<&str> = h
            .opexes()
            .iter()
            .filter(|o| o.operation == "decide")
            .map(|o| o.object.as_str())
            .collect();
        if objects.is_empty() {
            continue;
        }
        let mut registry = SpecRegistry::new();
        for obj in &objects {
            registry.insert(*obj, make_agreement(kind, Domain::Any)?);
        }
        let cond = ConditionSet::named(condition, Arc::new(registry), k)?;
        let projected = h.filter(|o| objects.contains(o.object.as_str()));
        let verdict = check(&projected, &cond, &SearchConfig::default()).map_err(|e| match e {
            Error::Resource(_) => e,
            other => Error::Precondition { index: i, reason: other.to_string() },
        })?;
        if !verdict.accepted {
            let diag: Vec<&str> = verdict.diagnosis.iter().map(String::as_str).collect();
            return Err(Error::Precondition {
                index: i,
                reason: format!("rejected under {} (pruned by {})", cond.name, diag.join(", ")),
            });
        }
    }
    Ok(())
}

fn violated(reports: &[AxiomReport]) -> Vec<String> {
    reports.iter().filter(|r| !r.holds).map(|r| r.axiom.clone()).collect()
}

/// Audits Σ against the consensus impossibility argument. Every input history
/// is first re-checked under consensus and Serializability.
pub fn flp_audit(s: &Sigma) -> Result<ContradictionReport> {
    recheck(s, AgreementKind::Consensus, "serializability", None)?;
    let val = s.valence()?;
    let mut reports = vec![
        check_asynchrony(s, AsynchronyMode::Pairwise)?,
        non_triviality(val),
        resilience(s, val),
    ];
    reports.extend(verify_valence_lemmas(s)?);
    reports.push(check_continuity(s));
    let violated = violated(&reports);
    let critical_state = find_critical_state(s)?;
    let contradiction = match (violated.is_empty(), critical_state) {
        (true, Some(c)) => Some(critical_contradiction(s, c)?),
        _ => None,
    };
    Ok(ContradictionReport { reports, violated, critical_state, contradiction })
}

fn critical_contradiction(s: &Sigma, c: usize) -> Result<Contradiction> {
    let val = s.valence()?;
    let out = s.out_edges(c);
    for (i, &(e, t)) in out.iter().enumerate() {
        for &(e2, t2) in &out[i + 1..] {
            if val[t] == val[t2] {
                continue;
            }
            let values: Vec<String> = val[t].union(&val[t2]).cloned().collect();
            let detail = if s.event(e).proc() != s.event(e2).proc() {
                let mut u = s.state(c).events.clone();
                u.extend([e, e2]);
                match s.find(&u) {
                    Some(x) => format!(
                        "σ ∪ {{e, e′}} (state {x}) has valence {:?}, contained in both {:?} and {:?}",
                        val[x], val[t], val[t2]
                    ),
                    None => "σ ∪ {e, e′} is missing although Asynchrony holds".into(),
                }
            } else {
                "e and e′ share a process; an extension by another process must be univalent both ways"
                    .into()
            };
            return Ok(Contradiction { state: Some(c), events: vec![e, e2], values, detail });
        }
    }
    Ok(Contradiction {
        state: Some(c),
        events: Vec::new(),
        values: val[c].iter().cloned().collect(),
        detail: "critical state has no pair of extensions with different valences".into(),
    })
}

/// `F_p`: values decided by `p` in some state made only of `p`'s events.
pub fn solo_values(s: &Sigma, p: &str) -> BTreeSet<String> {
    solo_states(s, p).into_iter().flat_map(|(_, v)| v).collect()
}

fn solo_states(s: &Sigma, p: &str) -> Vec<(usize, BTreeSet<String>)> {
    (0..s.len())
        .filter(|&st| {
            let evs = &s.state(st).events;
            !evs.is_empty() && evs.iter().all(|&e| s.event(e).proc() == p)
        })
        .map(|st| (st, s.decides_in(st)))
        .filter(|(_, v)| !v.is_empty())
        .collect()
}

/// First selection `v_i ∈ F_i`, in process and value order, with at least
/// `need` distinct values.
fn select(f: &[(String, Vec<String>)], need: usize) -> Option<Vec<(String, String)>> {
    fn rec(
        f: &[(String, Vec<String>)],
        i: usize,
        need: usize,
        cur: &mut Vec<(String, String)>,
    ) -> bool {
        let distinct: BTreeSet<&String> = cur.iter().map(|(_, v)| v).collect();
        if distinct.len() + (f.len() - i) < need {
            return false;
        }
        if i == f.len() {
            return true;
        }
        for v in &f[i].1 {
            cur.push((f[i].0.clone(), v.clone()));
            if rec(f, i + 1, need, cur) {
                return true;
            }
            cur.pop();
        }
        false
    }
    let mut cur = Vec::new();
    rec(f, 0, need, &mut cur).then_some(cur)
}

/// Audits Σ against the wait-free k-set-agreement impossibility argument.
/// Every input history is first re-checked under set agreement and
/// k-Serializability.
pub fn ksa_audit(s: &Sigma, k: usize, budget: u64) -> Result<ContradictionReport> {
    let n = s.processes().len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("k = {k} must satisfy 0 < k < n = {n}")));
    }
    recheck(s, AgreementKind::SetAgreement, "k-serializability", Some(k))?;
    s.valence()?;
    let f: Vec<(String, Vec<String>)> = s
        .processes()
        .iter()
        .map(|p| (p.clone(), solo_values(s, p).into_iter().collect()))
        .collect();
    let missing = f.iter().find(|(_, v)| v.is_empty());
    let wfr = AxiomReport::new(
        "WaitFreeResilience",
        missing.is_none(),
        missing.map(|(p, _)| Witness::Proc { proc: p.clone() }),
    );
    let selection = if missing.is_none() { select(&f, k + 1) } else { None };
    let nt = AxiomReport::new(
        "NonTriviality",
        selection.is_some(),
        selection.clone().map(|values| Witness::Selection { values }),
    );
    let asyn = check_asynchrony(s, AsynchronyMode::Setwise { budget })?;
    let reports = vec![wfr, nt, asyn];
    let violated = violated(&reports);
    let contradiction = match (violated.is_empty(), selection) {
        (true, Some(sel)) => Some(union_contradiction(s, &sel)),
        _ => None,
    };
    Ok(ContradictionReport { reports, violated, critical_state: None, contradiction })
}

fn union_contradiction(s: &Sigma, sel: &[(String, String)]) -> Contradiction {
    let mut events = Vec::new();
    for (p, v) in sel {
        if let Some((st, _)) = solo_states(s, p).into_iter().find(|(_, vals)| vals.contains(v)) {
            events.extend(s.state(st).events.iter().copied());
        }
    }
    let state = s.find(&events);
    let values: Vec<String> =
        sel.iter().map(|(_, v)| v.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let detail = match state {
        Some(u) => format!(
            "union state {u} extends to histories deciding {} distinct values",
            values.len()
        ),
        None => "union of the solo states is not a state".into(),
    };
    events.sort_unstable();
    Contradiction { state, events, values, detail }
}
