//! Control-flow automata and the forward transformation from linear CHCs.

mod explore;
mod run;
mod transform;

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::chc::PredId;
use crate::term::{Term, Var};

pub use explore::{explore, successors, Exploration};
pub use run::{concrete_run, RunOutcome, Schedule, ScheduleError, Step};
pub use transform::{forward_transform, PredVarMap};

pub type LocId = usize;
pub type EdgeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CfaOp {
    Assume(Term),
    Assign(Var, Term),
    Havoc(Var),
}

impl fmt::Display for CfaOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfaOp::Assume(c) => write!(f, "assume {c}"),
            CfaOp::Assign(v, t) => write!(f, "{v} := {t}"),
            CfaOp::Havoc(v) => write!(f, "havoc {v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub src: LocId,
    pub ops: Vec<CfaOp>,
    pub dst: LocId,
    /// Index of the originating clause.
    pub clause: usize,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CfaError {
    #[error("non-linear clauses are not supported by the forward transformation")]
    NonLinearUnsupported,
}

/// A single-procedure CFA. Locations are numbered densely; `init` is 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfa {
    pub vars: Vec<Var>,
    pub loc_names: Vec<String>,
    pub init: LocId,
    pub error: LocId,
    pub edges: Vec<Edge>,
    /// Predicate represented by each location, if any.
    pub loc_to_pred: Vec<Option<PredId>>,
}

impl Cfa {
    pub fn num_locations(&self) -> usize {
        self.loc_names.len()
    }

    pub fn loc_of_pred(&self, p: PredId) -> Option<LocId> {
        self.loc_to_pred.iter().position(|x| *x == Some(p))
    }

    pub fn out_edges(&self, l: LocId) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.src == l)
    }

    /// Variables live on entry to each location: those that some path from
    /// the location may read before writing them.
    pub fn live_vars(&self) -> Vec<BTreeSet<Var>> {
        let mut live: Vec<BTreeSet<Var>> = vec![BTreeSet::new(); self.num_locations()];
        let mut changed = true;
        while changed {
            changed = false;
            for e in &self.edges {
                let mut l = live[e.dst].clone();
                for op in e.ops.iter().rev() {
                    match op {
                        CfaOp::Havoc(v) => {
                            l.remove(v);
                        }
                        CfaOp::Assign(v, t) => {
                            l.remove(v);
                            l.extend(t.free_vars());
                        }
                        CfaOp::Assume(c) => l.extend(c.free_vars()),
                    }
                }
                let before = live[e.src].len();
                live[e.src].extend(l);
                changed |= live[e.src].len() != before;
            }
        }
        live
    }

    /// Debug export in DOT syntax.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph cfa {\n");
        for (i, n) in self.loc_names.iter().enumerate() {
            let shape = if i == self.error { "doublecircle" } else { "circle" };
            writeln!(out, "  l{i} [label=\"{}\", shape={shape}];", n.replace('"', "\\\"")).unwrap();
        }
        for e in &self.edges {
            let label: Vec<String> = e.ops.iter().map(|o| o.to_string().replace('"', "\\\"")).collect();
            writeln!(out, "  l{} -> l{} [label=\"{}\"];", e.src, e.dst, label.join("\\l")).unwrap();
        }
        out.push_str("}\n");
        out
    }
}
