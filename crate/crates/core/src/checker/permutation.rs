//! Linear-extension search for conditions that contain `TotalOrder`.
//!
//! Op-exes are placed one at a time; an op-ex may be placed once every op-ex
//! forced to precede it is placed. Under a total order the context of an op-ex
//! is exactly the earlier same-object op-exes, so validity and safety are
//! decided at placement time. Liveness and the full clause set are checked on
//! complete sequences.

use super::{Prepared, Search, VsResult};
use crate::consistency::Clause;
use crate::error::Result;
use crate::relation::{OrderRelation, Placement, Recorder, UNPLACED};

enum Step {
    Found(OrderRelation),
    Continue,
    /// A failure that no relation can repair.
    Abort,
}

pub(crate) fn search(p: &mut Prepared<'_>) -> Result<Search> {
    let n = p.n();
    let mut pos = vec![UNPLACED; n];
    let mut order = Vec::with_capacity(n);
    Ok(match dfs(p, &mut pos, &mut order, 0)? {
        Step::Found(rel) => Search::Found(rel),
        Step::Continue | Step::Abort => Search::Exhausted,
    })
}

fn dfs(
    p: &mut Prepared<'_>,
    pos: &mut Vec<usize>,
    order: &mut Vec<usize>,
    placed: u64,
) -> Result<Step> {
    let n = p.n();
    if order.len() == n {
        let rel = OrderRelation::from_sequence(n, order);
        if let Some(touched) = p.liveness(&rel) {
            p.note(Clause::Liveness);
            return Ok(if touched == 0 { Step::Abort } else { Step::Continue });
        }
        return Ok(if p.full_check(&rel)? { Step::Found(rel) } else { Step::Continue });
    }
    for c in 0..n {
        if placed >> c & 1 == 1 || p.forced_in[c] & !placed != 0 {
            continue;
        }
        p.tick()?;
        pos[c] = order.len();
        order.push(c);
        let verdict = {
            let view = Placement { pos };
            let rec = Recorder::new(&view);
            p.eval_vs(c, &rec, || rec.touched(), || false)
        };
        let step = match verdict {
            VsResult::Fail(clause, touched) => {
                p.note(clause);
                if touched == 0 {
                    Step::Abort
                } else {
                    Step::Continue
                }
            }
            VsResult::Pass | VsResult::Unknown => dfs(p, pos, order, placed | 1 << c)?,
        };
        order.pop();
        pos[c] = UNPLACED;
        match step {
            Step::Continue => {}
            other => return Ok(other),
        }
    }
    Ok(Step::Continue)
}
