//! Turning a transition-system counterexample into a CFA schedule.

use crate::cegar::domain::symbolic_effect;
use crate::cfa::{concrete_run, Cfa, LocId, Schedule, Step};
use crate::smt::{SatResult, SmtError, SolverSession};
use crate::sts::loc_var;
use crate::term::{Term, Valuation, Value};

/// Rebuilds a schedule from the per-step states of a bounded counterexample.
///
/// Each step picks an edge between consecutive locations and havoc values
/// that reproduce the next state on the variables live there; dead variables
/// do not affect the rest of the run. Initial and error edges folded away by
/// the encoding are recovered the same way.
pub fn schedule_from_states(cfa: &Cfa, states: &[Valuation], solver: &mut SolverSession) -> Result<Schedule, String> {
    let live = cfa.live_vars();
    let loc_of = |s: &Valuation| -> Result<LocId, String> {
        s.get(&loc_var())
            .and_then(Value::as_int)
            .and_then(|n| usize::try_from(n).ok())
            .filter(|l| *l < cfa.num_locations())
            .ok_or_else(|| "counterexample state has no location".to_string())
    };
    let mut targets: Vec<(LocId, Option<&Valuation>)> = vec![];
    for (i, s) in states.iter().enumerate() {
        let l = loc_of(s)?;
        if i > 0 || l != cfa.init {
            targets.push((l, Some(s)));
        }
    }
    if targets.last().map_or(cfa.init, |t| t.0) != cfa.error {
        targets.push((cfa.error, None));
    }
    let mut schedule: Schedule = vec![];
    for (dst, want) in targets {
        let run = concrete_run(cfa, &schedule).map_err(|e| e.to_string())?;
        let at = *run.trace.last().unwrap();
        let mut found = None;
        for (e, edge) in cfa.out_edges(at).filter(|(_, edge)| edge.dst == dst) {
            let init = run.state.iter().map(|(v, x)| (v.clone(), Term::constant(x.clone()))).collect();
            let eff = symbolic_effect(&cfa.vars, &edge.ops, &init);
            if eff.blocked {
                continue;
            }
            let mut conds = eff.pc.clone();
            if let Some(want) = want {
                for v in &live[dst] {
                    if let Some(x) = want.get(v) {
                        conds.push(Term::eq(eff.env[v].clone(), Term::constant(x.clone())));
                    }
                }
            }
            if let Some(model) = solve(solver, &conds, &eff.havocs).map_err(|e| e.to_string())? {
                let havocs = eff.havocs.iter().map(|h| model.get(h).cloned().unwrap_or_else(|| Value::default_of(h.sort()))).collect();
                found = Some(Step { edge: e, havocs });
                break;
            }
        }
        schedule.push(found.ok_or_else(|| format!("no edge reproduces the step into location {dst}"))?);
    }
    let run = concrete_run(cfa, &schedule).map_err(|e| e.to_string())?;
    if !run.reaches_error(cfa) {
        return Err("rebuilt schedule does not reach the error location".into());
    }
    Ok(schedule)
}

fn solve(solver: &mut SolverSession, conds: &[Term], vars: &[crate::term::Var]) -> Result<Option<Valuation>, SmtError> {
    solver.push()?;
    let r = (|| {
        for c in conds {
            solver.assert(c)?;
        }
        Ok(match solver.check()? {
            SatResult::Sat if vars.is_empty() => Some(Valuation::new()),
            SatResult::Sat => Some(solver.get_values(vars)?),
            _ => None,
        })
    })();
    solver.pop()?;
    r
}
