use std::path::PathBuf;

use super::*;
use crate::smtlib::parse_chc;

fn task(src: &str) -> Arc<Task> {
    Arc::new(Task::new(parse_chc(src).unwrap()).unwrap())
}

fn names(plan: &PortfolioPlan) -> Vec<StageName> {
    plan.stages.iter().map(|s| s.name).collect()
}

const BV_SRC: &str = "(set-logic HORN)(declare-fun p ((_ BitVec 4)) Bool)
    (assert (forall ((x (_ BitVec 4))) (=> (= x #x0) (p x))))
    (assert (forall ((x (_ BitVec 4))) (=> (and (p x) (= x #x9)) false)))";

#[test]
fn plans_follow_theory() {
    use StageName::*;
    let t = task(crate::fixtures::INV);
    let plan = plan_for(&t.sys, Duration::from_secs(300), ItpCapability::None);
    assert_eq!(names(&plan), vec![Bmc, Kind, Imc, Bool, Cart, Expl]);
    assert_eq!(plan.stages[0].budget, Duration::from_secs(25));
    assert_eq!(plan.stages[5].budget, Duration::from_secs(175));
    let bv = task(BV_SRC);
    assert_eq!(names(&plan_for(&bv.sys, Duration::from_secs(300), ItpCapability::None)), vec![Kind, Bmc, Bool, Cart, Expl]);
    assert_eq!(names(&plan_for(&bv.sys, Duration::from_secs(300), ItpCapability::GetInterpolant))[2], Imc);
    // Tiny totals still give every stage a minimum slice.
    assert!(plan_of(&[Bmc, Kind], Duration::from_millis(10)).stages.iter().all(|s| s.budget >= MIN_SLICE));
}

#[test]
fn stage_names_round_trip() {
    for n in StageName::ALL {
        assert_eq!(n.to_string().parse::<StageName>(), Ok(n));
    }
    assert_eq!("kind".parse::<StageName>(), Ok(StageName::Kind));
    assert!("GSAT".parse::<StageName>().is_err());
}

#[test]
fn bug_is_found_by_the_first_stage() {
    let t = task(crate::fixtures::INV);
    let plan = plan_for(&t.sys, Duration::from_secs(60), ItpCapability::None);
    let r = run_portfolio(&t, &plan, &SolverConfig::default());
    assert_eq!(r.winner, Some(StageName::Bmc));
    assert_eq!(r.log.len(), 1);
    let FinalVerdict::Unsat(Some(schedule)) = &r.verdict else { panic!("{:?}", r.verdict) };
    let run = concrete_run(&t.cfa, schedule).unwrap();
    assert!(run.reaches_error(&t.cfa));
    assert_eq!(run.state.get_by_name("inv_arg_0"), Some(&crate::term::Value::int(5)));
}

#[test]
fn safe_counter_needs_model_capable_stage_on_request() {
    let t = task(crate::fixtures::INV_SAFE);
    let mut plan = plan_for(&t.sys, Duration::from_secs(60), ItpCapability::None);
    let r = run_portfolio(&t, &plan, &SolverConfig::default());
    assert_eq!((r.verdict.clone(), r.winner), (FinalVerdict::Sat(None), Some(StageName::Kind)));
    assert_eq!(r.log[0].outcome.log_word(), "timeout");
    plan.require_model = true;
    let r = run_portfolio(&t, &plan, &SolverConfig::default());
    assert!(matches!(r.verdict, FinalVerdict::Sat(Some(_))));
    assert_eq!(r.winner, Some(StageName::Imc));
}

#[test]
fn missing_backend_fails_every_stage() {
    let t = task(crate::fixtures::INV);
    let solver = SolverConfig { path: PathBuf::from("/nonexistent/solver"), ..SolverConfig::default() };
    let r = run_portfolio(&t, &plan_for(&t.sys, Duration::from_secs(12), ItpCapability::None), &solver);
    assert_eq!(r.verdict, FinalVerdict::Unknown);
    assert_eq!(r.log.len(), 6);
    assert!(r.log.iter().all(|l| !matches!(l.outcome, StageOutcome::Sat(_) | StageOutcome::Unsat(_))));
}

#[test]
fn divergent_stage_is_cut_off() {
    let t = task(crate::fixtures::INV_SAFE);
    let mut plan = plan_of(&[StageName::Expl, StageName::Kind], Duration::from_secs(30));
    plan.stages[0].budget = Duration::from_secs(2);
    let start = Instant::now();
    let r = run_portfolio(&t, &plan, &SolverConfig::default());
    assert_eq!(r.log[0].outcome, StageOutcome::Timeout);
    assert!(r.log[0].wall < Duration::from_secs(3), "{:?}", r.log[0].wall);
    assert_eq!(r.winner, Some(StageName::Kind));
    assert!(start.elapsed() < Duration::from_secs(10));
}

#[test]
fn log_lines_are_tab_separated() {
    let l = StageLog { name: StageName::Bmc, outcome: StageOutcome::Unsat(None), wall: Duration::from_millis(12), solver_calls: 7 };
    assert_eq!(l.tsv(), "BMC\tunsat\t12\t7");
}

#[test]
fn bv_counterexample_is_rebuilt() {
    let t = task(BV_SRC);
    let r = run_portfolio(&t, &plan_for(&t.sys, Duration::from_secs(60), ItpCapability::None), &SolverConfig::default());
    assert_eq!(r.verdict, FinalVerdict::Sat(None));
    let bug = task(&BV_SRC.replace("#x9", "#x0"));
    let r = run_portfolio(&bug, &plan_for(&bug.sys, Duration::from_secs(60), ItpCapability::None), &SolverConfig::default());
    let FinalVerdict::Unsat(Some(s)) = &r.verdict else { panic!("{r:?}") };
    assert!(concrete_run(&bug.cfa, s).unwrap().reaches_error(&bug.cfa));
}
