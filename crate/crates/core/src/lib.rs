//! Constrained Horn clause solving by reduction to control-flow automaton safety.

pub mod bounded;
pub mod budget;
pub mod cegar;
pub mod cfa;
pub mod chc;
#[cfg(test)]
mod fixtures;
pub mod model;
pub mod par;
pub mod portfolio;
pub mod smt;
pub mod smtlib;
pub mod sts;
pub mod term;
#[cfg(feature = "testkit")]
pub mod testkit;
