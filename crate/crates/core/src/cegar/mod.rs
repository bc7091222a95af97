//! Counterexample-guided abstraction refinement over a CFA.
//!
//! Lazy abstraction with a single global precision: the ARG is pruned at the
//! first node the new interpolants refute and regrown from there.

pub mod arg;
pub mod domain;
pub mod refine;

use std::collections::HashSet;

use thiserror::Error;

pub use arg::{Arg, ArgNode, NodeId};
pub use domain::{
    abstract_post, expr_of, leq, AbstractState, Cube, Domain, Precision, PrecisionMismatch, DEFAULT_ALLSAT_BUDGET, DEFAULT_MAXENUM,
};
pub use refine::{check_feasibility, Feasibility, PathFormula, RefinementStrategy};

use crate::budget::Interrupted;
use crate::cfa::{concrete_run, Cfa, CfaOp, EdgeId, Schedule};
use crate::smt::{entails, Interpolator, ItpError, SmtContext, SmtError, SolverSession};
use crate::term::Term;
use refine::{extend_precision, harvest, interpolate, precision_items, PathInterpolants};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CegarConfig {
    pub domain: Domain,
    pub refinement: RefinementStrategy,
    /// Starting precision; `None` means empty.
    pub initial_precision: Option<Precision>,
    /// Stop with `Unknown` after this many refinements.
    pub max_refinements: Option<usize>,
}

impl CegarConfig {
    /// Boolean predicate abstraction, backwards-binary refinement.
    pub fn boolean() -> CegarConfig {
        CegarConfig {
            domain: Domain::Boolean { allsat_budget: DEFAULT_ALLSAT_BUDGET },
            refinement: RefinementStrategy::BackwardsBinary,
            initial_precision: None,
            max_refinements: None,
        }
    }

    /// Cartesian predicate abstraction, backwards-binary refinement.
    pub fn cartesian() -> CegarConfig {
        CegarConfig { domain: Domain::Cartesian, ..CegarConfig::boolean() }
    }

    /// Explicit values, sequence refinement.
    pub fn explicit() -> CegarConfig {
        CegarConfig {
            domain: Domain::Explicit { maxenum: DEFAULT_MAXENUM },
            refinement: RefinementStrategy::Sequence,
            ..CegarConfig::boolean()
        }
    }

    fn empty_precision(&self) -> Precision {
        match self.domain {
            Domain::Explicit { .. } => Precision::empty_explicit(),
            _ => Precision::empty_pred(),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum UnknownReason {
    #[error("refinement made no progress")]
    NoProgress,
    #[error("refinement limit reached")]
    RefinementLimit,
    #[error("counterexample did not replay")]
    ReplayFailed,
    #[error("interpolation failed: {0}")]
    Interpolation(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("timeout")]
    Timeout,
    #[error("cancelled")]
    Cancelled,
}

impl From<SmtError> for UnknownReason {
    fn from(e: SmtError) -> Self {
        match e {
            SmtError::Interrupted(Interrupted::Timeout) => UnknownReason::Timeout,
            SmtError::Interrupted(Interrupted::Cancelled) => UnknownReason::Cancelled,
            e => UnknownReason::Solver(e.to_string()),
        }
    }
}

impl From<Interrupted> for UnknownReason {
    fn from(e: Interrupted) -> Self {
        UnknownReason::from(SmtError::Interrupted(e))
    }
}

#[derive(Clone, Debug)]
pub enum CegarVerdict {
    /// The ARG is complete and contains no error node.
    Safe {
        arg: Arg,
        precision: Precision,
    },
    /// A concrete path to the error location with its havoc values.
    Unsafe {
        trace: Vec<EdgeId>,
        schedule: Schedule,
    },
    Unknown(UnknownReason),
}

impl CegarVerdict {
    pub fn is_safe(&self) -> bool {
        matches!(self, CegarVerdict::Safe { .. })
    }

    pub fn is_unsafe(&self) -> bool {
        matches!(self, CegarVerdict::Unsafe { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CegarStats {
    pub refinements: usize,
    pub arg_nodes: usize,
    pub precision_size: usize,
}

struct Engine<'a> {
    cfa: &'a Cfa,
    config: &'a CegarConfig,
    ctx: &'a SmtContext,
    solver: SolverSession,
    itp: Interpolator,
    arg: Arg,
    precision: Precision,
    generation: u64,
    waitlist: Vec<NodeId>,
    seen: HashSet<(u64, Vec<EdgeId>)>,
    stats: CegarStats,
}

/// Runs the CEGAR loop to a verdict.
pub fn cegar_solve(cfa: &Cfa, config: &CegarConfig, ctx: &SmtContext) -> CegarVerdict {
    cegar_solve_with_stats(cfa, config, ctx).0
}

pub fn cegar_solve_with_stats(cfa: &Cfa, config: &CegarConfig, ctx: &SmtContext) -> (CegarVerdict, CegarStats) {
    let mut engine = match Engine::new(cfa, config, ctx) {
        Ok(e) => e,
        Err(e) => return (CegarVerdict::Unknown(e.into()), CegarStats::default()),
    };
    let verdict = match engine.run() {
        Ok(v) => v,
        Err(r) => CegarVerdict::Unknown(r),
    };
    engine.stats.arg_nodes = engine.arg.len();
    engine.stats.precision_size = engine.precision.size();
    (verdict, engine.stats)
}

enum RefineOutcome {
    Continue,
    Stop(UnknownReason),
}

impl<'a> Engine<'a> {
    fn new(cfa: &'a Cfa, config: &'a CegarConfig, ctx: &'a SmtContext) -> Result<Engine<'a>, SmtError> {
        let precision = config.initial_precision.clone().unwrap_or_else(|| config.empty_precision());
        let arg = Arg::with_root(cfa.init, AbstractState::top_for(&precision));
        Ok(Engine {
            cfa,
            config,
            ctx,
            solver: ctx.session()?,
            itp: Interpolator::new(ctx)?,
            arg,
            precision,
            generation: 0,
            waitlist: vec![0],
            seen: HashSet::new(),
            stats: CegarStats::default(),
        })
    }

    fn run(&mut self) -> Result<CegarVerdict, UnknownReason> {
        loop {
            self.ctx.budget.check()?;
            let Some(err) = self.explore()? else {
                return Ok(CegarVerdict::Safe { arg: std::mem::take(&mut self.arg), precision: self.precision.clone() });
            };
            let path = self.arg.path_to(err);
            let edges: Vec<EdgeId> = path.iter().filter_map(|(_, e)| *e).collect();
            match check_feasibility(self.cfa, &edges, &mut self.solver)? {
                Feasibility::Feasible(schedule) => {
                    let run = concrete_run(self.cfa, &schedule).map_err(|_| UnknownReason::ReplayFailed)?;
                    if !run.reaches_error(self.cfa) {
                        return Err(UnknownReason::ReplayFailed);
                    }
                    return Ok(CegarVerdict::Unsafe { trace: edges, schedule });
                }
                Feasibility::Infeasible(pf) => {
                    if let RefineOutcome::Stop(r) = self.refine(&path, &edges, &pf)? {
                        return Err(r);
                    }
                }
            }
        }
    }

    /// Grows the ARG until the waitlist empties or an error node appears.
    fn explore(&mut self) -> Result<Option<NodeId>, UnknownReason> {
        while let Some(n) = self.waitlist.pop() {
            self.ctx.budget.check()?;
            let node = self.arg.node(n);
            if node.removed || node.covered_by.is_some() {
                continue;
            }
            let (loc, fresh) = (node.loc, node.expanded.is_empty());
            if fresh && self.try_cover(n)? {
                continue;
            }
            let mut created = vec![];
            // Edges into the error location first, then by edge id.
            let mut out: Vec<(EdgeId, usize, Vec<CfaOp>)> =
                self.cfa.out_edges(loc).map(|(e, edge)| (e, edge.dst, edge.ops.clone())).collect();
            out.sort_by_key(|(e, dst, _)| (*dst != self.cfa.error, *e));
            for (e, dst, ops) in out {
                if self.arg.node(n).expanded.contains(&e) {
                    continue;
                }
                let state = self.arg.node(n).state.clone();
                let succs = abstract_post(&state, &ops, &self.cfa.vars, &self.precision, self.config.domain, &mut self.solver)?;
                self.arg.node_mut(n).expanded.insert(e);
                for s in succs.into_iter().filter(|s| !s.is_bottom()) {
                    let c = self.arg.add(dst, s, Some((n, e)), self.generation);
                    if dst == self.cfa.error {
                        // Keep the parent around in case this path is spurious.
                        self.waitlist.push(n);
                        self.waitlist.extend(created.into_iter().rev());
                        return Ok(Some(c));
                    }
                    created.push(c);
                }
            }
            self.waitlist.extend(created.into_iter().rev());
        }
        Ok(None)
    }

    fn try_cover(&mut self, n: NodeId) -> Result<bool, UnknownReason> {
        let node = self.arg.node(n);
        let coverer =
            self.arg.uncovered_at(node.loc).filter(|m| m.id != n).find(|m| leq(&node.state, &m.state).unwrap_or(false)).map(|m| m.id);
        let Some(m) = coverer else { return Ok(false) };
        // A covered node may not cover others.
        for x in self.arg.covered_by(n) {
            self.arg.node_mut(x).covered_by = None;
            self.waitlist.push(x);
        }
        self.arg.node_mut(n).covered_by = Some(m);
        Ok(true)
    }

    fn refine(&mut self, path: &[(NodeId, Option<EdgeId>)], edges: &[EdgeId], pf: &PathFormula) -> Result<RefineOutcome, UnknownReason> {
        self.stats.refinements += 1;
        if self.config.max_refinements.is_some_and(|m| self.stats.refinements > m) {
            return Ok(RefineOutcome::Stop(UnknownReason::RefinementLimit));
        }
        if !self.seen.insert((self.generation, edges.to_vec())) {
            return Ok(RefineOutcome::Stop(UnknownReason::NoProgress));
        }
        let states: Vec<Term> = path.iter().map(|(n, _)| expr_of(&self.arg.node(*n).state)).collect();
        let itps = match interpolate(self.config.refinement, pf, &states, &mut self.itp, &mut self.solver) {
            Ok(i) => Some(i),
            Err(ItpError::Smt(e)) => return Err(e.into()),
            Err(ItpError::NotUnsat) => return Err(UnknownReason::Interpolation("path is satisfiable".into())),
            Err(ItpError::FallbackIncomplete(_)) => None,
        };
        let mut items = vec![];
        let mut pivot = None;
        if let Some(itps) = &itps {
            let at: Vec<(usize, &Term)> = match itps {
                PathInterpolants::Sequence(seq) => seq.iter().enumerate().collect(),
                PathInterpolants::Single { position, itp } => vec![(*position, itp)],
            };
            for (j, t) in at {
                items.extend(precision_items(&self.precision, t));
                if pivot.is_none() && j > 0 {
                    let s = &states[j];
                    if entails(&mut self.solver, s, t)? != Some(true) {
                        pivot = Some(j);
                    }
                }
            }
        }
        let mut added = extend_precision(&mut self.precision, items);
        if added == 0 {
            // No usable interpolant: fall back to the atoms of the path itself.
            let atoms = harvest(pf, &mut self.solver)?;
            let items: Vec<Term> = atoms.iter().flat_map(|t| precision_items(&self.precision, t)).collect();
            added = extend_precision(&mut self.precision, items);
            pivot = Some(1);
        }
        let pivot = pivot.unwrap_or(1).min(path.len() - 1);
        let pivot_node = path[pivot].0;
        if added == 0 && self.arg.node(pivot_node).generation == self.generation {
            return Ok(RefineOutcome::Stop(UnknownReason::NoProgress));
        }
        if added > 0 {
            self.generation += 1;
        }
        let parent = path[pivot - 1].0;
        let (_, uncovered) = self.arg.remove_subtree(pivot_node);
        self.waitlist.extend(uncovered);
        self.waitlist.push(parent);
        Ok(RefineOutcome::Continue)
    }
}

#[cfg(test)]
mod tests;
