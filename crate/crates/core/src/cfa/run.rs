//! Concrete execution of a CFA along a chosen schedule.

use thiserror::Error;

use super::{Cfa, CfaOp, EdgeId, LocId};
use crate::term::{evaluate, Valuation, Value};

/// One scheduled edge with the values consumed by its `Havoc`s, in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub edge: EdgeId,
    pub havocs: Vec<Value>,
}

pub type Schedule = Vec<Step>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("step {step}: edge {edge} does not leave location {at}")]
    WrongSource { step: usize, edge: EdgeId, at: LocId },
    #[error("step {step}: edge {edge} does not exist")]
    NoSuchEdge { step: usize, edge: EdgeId },
    #[error("step {step}: missing or ill-sorted havoc value")]
    BadHavoc { step: usize },
    #[error("step {step}: {message}")]
    Eval { step: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    /// Locations visited, starting with `init`.
    pub trace: Vec<LocId>,
    /// Step index whose `Assume` failed, if the run was blocked.
    pub blocked: Option<usize>,
    pub state: Valuation,
}

impl RunOutcome {
    pub fn reaches_error(&self, cfa: &Cfa) -> bool {
        self.blocked.is_none() && self.trace.last() == Some(&cfa.error)
    }
}

/// Executes the schedule from `init` with every variable at its sort's default.
/// A failing `Assume` stops the run as blocked; that is an outcome, not an error.
pub fn concrete_run(cfa: &Cfa, schedule: &[Step]) -> Result<RunOutcome, ScheduleError> {
    let mut state: Valuation = cfa.vars.iter().map(|v| (v.clone(), Value::default_of(v.sort()))).collect();
    let mut at = cfa.init;
    let mut trace = vec![at];
    for (i, step) in schedule.iter().enumerate() {
        let e = cfa.edges.get(step.edge).ok_or(ScheduleError::NoSuchEdge { step: i, edge: step.edge })?;
        if e.src != at {
            return Err(ScheduleError::WrongSource { step: i, edge: step.edge, at });
        }
        let mut havocs = step.havocs.iter();
        for op in &e.ops {
            match op {
                CfaOp::Havoc(v) => {
                    let x = havocs.next().filter(|x| &x.sort() == v.sort()).ok_or(ScheduleError::BadHavoc { step: i })?;
                    state.insert(v.clone(), x.clone());
                }
                CfaOp::Assign(v, t) => {
                    let x = evaluate(t, &state).map_err(|err| ScheduleError::Eval { step: i, message: err.to_string() })?;
                    state.insert(v.clone(), x);
                }
                CfaOp::Assume(c) => match evaluate(c, &state) {
                    Ok(Value::Bool(true)) => {}
                    _ => return Ok(RunOutcome { trace, blocked: Some(i), state }),
                },
            }
        }
        at = e.dst;
        trace.push(at);
    }
    Ok(RunOutcome { trace, blocked: None, state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfa::forward_transform;
    use crate::smtlib::parse_chc;

    fn inv() -> Cfa {
        forward_transform(&parse_chc(crate::fixtures::INV).unwrap()).unwrap().0
    }

    fn counting(n: i64) -> Schedule {
        let mut s = vec![Step { edge: 0, havocs: vec![Value::int(0)] }];
        s.extend((1..=n).map(|i| Step { edge: 1, havocs: vec![Value::int(i)] }));
        s.push(Step { edge: 2, havocs: vec![] });
        s
    }

    #[test]
    fn five_increments_reach_error() {
        let cfa = inv();
        let out = concrete_run(&cfa, &counting(5)).unwrap();
        assert!(out.reaches_error(&cfa));
        assert_eq!(out.trace, vec![0, 1, 1, 1, 1, 1, 1, 2]);
    }

    #[test]
    fn early_error_edge_blocks() {
        let cfa = inv();
        let out = concrete_run(&cfa, &counting(3)).unwrap();
        assert_eq!(out.blocked, Some(4));
        assert!(!out.reaches_error(&cfa));
    }

    #[test]
    fn empty_schedule_stays_at_init() {
        let cfa = inv();
        assert_eq!(concrete_run(&cfa, &[]).unwrap().trace, vec![cfa.init]);
    }
}
