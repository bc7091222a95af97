//! Explicit-state reachability over a bounded universe.
//!
//! Used as an independent semantic oracle for the transformation and the
//! encoders. Dead variables are reset to their defaults after every edge, so
//! the state space is exactly the space of live values.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::{Cfa, CfaOp, LocId, Step};
use crate::chc::{Bounds, ChcError};
use crate::term::{evaluate, Valuation, Value, Var};

/// A state: location plus the values of all CFA variables in declaration order.
pub type State = (LocId, Vec<Value>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exploration {
    pub error_reachable: bool,
    /// Number of distinct reachable states.
    pub states: usize,
    /// Shortest schedule to the error location, if reachable.
    pub error_schedule: Option<Vec<Step>>,
}

/// All successors of `state` within the bounds: the taken step and the
/// resulting state. Values computed outside an Int interval are dropped.
pub fn successors(cfa: &Cfa, bounds: &Bounds, live: &[BTreeSet<Var>], state: &State) -> Result<Vec<(Step, State)>, ChcError> {
    let (loc, vals) = state;
    let mut out = Vec::new();
    for (eid, e) in cfa.out_edges(*loc) {
        let env: Valuation = cfa.vars.iter().cloned().zip(vals.iter().cloned()).collect();
        let mut havocs = Vec::new();
        exec(bounds, &e.ops, env, &mut havocs, &mut |env, hv| {
            let next: Vec<Value> = cfa
                .vars
                .iter()
                .map(|v| if live[e.dst].contains(v) { env.get(v).unwrap().clone() } else { Value::default_of(v.sort()) })
                .collect();
            out.push((Step { edge: eid, havocs: hv.to_vec() }, (e.dst, next)));
        })?;
    }
    Ok(out)
}

fn exec(
    bounds: &Bounds,
    ops: &[CfaOp],
    mut env: Valuation,
    havocs: &mut Vec<Value>,
    done: &mut dyn FnMut(&Valuation, &[Value]),
) -> Result<(), ChcError> {
    let Some((op, rest)) = ops.split_first() else {
        done(&env, havocs);
        return Ok(());
    };
    match op {
        CfaOp::Havoc(v) => {
            for x in bounds.domain(v.sort())? {
                let mut e2 = env.clone();
                e2.insert(v.clone(), x.clone());
                havocs.push(x);
                exec(bounds, rest, e2, havocs, done)?;
                havocs.pop();
            }
            Ok(())
        }
        CfaOp::Assume(c) => match evaluate(c, &env) {
            Ok(Value::Bool(true)) => exec(bounds, rest, env, havocs, done),
            _ => Ok(()),
        },
        CfaOp::Assign(v, t) => {
            let Ok(x) = evaluate(t, &env) else { return Ok(()) };
            if let (Value::Int(i), Some((lo, hi))) = (&x, bounds.int_range) {
                if *i < lo.into() || *i > hi.into() {
                    return Ok(());
                }
            }
            env.insert(v.clone(), x);
            exec(bounds, rest, env, havocs, done)
        }
    }
}

/// Breadth-first reachability from `init`. Each frontier is expanded with the
/// data-parallel map, so results do not depend on the `parallel` feature.
pub fn explore(cfa: &Cfa, bounds: &Bounds) -> Result<Exploration, ChcError> {
    let live = cfa.live_vars();
    let start: State = (cfa.init, cfa.vars.iter().map(|v| Value::default_of(v.sort())).collect());
    let mut parent: HashMap<State, Option<(State, Step)>> = HashMap::new();
    parent.insert(start.clone(), None);
    let mut frontier = vec![start];
    let mut error_state = None;
    while !frontier.is_empty() && error_state.is_none() {
        let expanded = crate::par::map(&frontier, |s| successors(cfa, bounds, &live, s));
        let mut next = Vec::new();
        let mut seen_now = HashSet::new();
        for (s, succ) in frontier.iter().zip(expanded) {
            for (step, t) in succ? {
                if parent.contains_key(&t) || !seen_now.insert(t.clone()) {
                    continue;
                }
                parent.insert(t.clone(), Some((s.clone(), step)));
                if t.0 == cfa.error && error_state.is_none() {
                    error_state = Some(t.clone());
                }
                next.push(t);
            }
        }
        frontier = next;
    }
    let error_schedule = error_state.map(|mut s| {
        let mut steps = Vec::new();
        while let Some(Some((p, step))) = parent.get(&s) {
            steps.push(step.clone());
            s = p.clone();
        }
        steps.reverse();
        steps
    });
    Ok(Exploration { error_reachable: error_schedule.is_some(), states: parent.len(), error_schedule })
}
