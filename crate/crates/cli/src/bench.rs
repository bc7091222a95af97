//! Directory benchmark: one row per task plus per-category summaries.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};

use chc_core::portfolio::{run_portfolio, Task};
use chc_core::smtlib::parse_chc;

use crate::SolveOpts;

struct Row {
    task: String,
    category: String,
    expected: Option<String>,
    verdict: String,
    stage: String,
    millis: u128,
}

impl Row {
    fn status(&self) -> &'static str {
        match &self.expected {
            None => "-",
            Some(_) if self.verdict == "unknown" => "ok",
            Some(e) if *e == self.verdict => "ok",
            Some(_) => "MISMATCH",
        }
    }
}

fn run_one(path: &Path, opts: &SolveOpts) -> Result<Row> {
    let name = path.file_name().unwrap().to_string_lossy().into_owned();
    let expected = std::fs::read_to_string(path.with_extension("expected")).ok().map(|s| s.trim().to_string());
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let start = Instant::now();
    let (category, verdict, stage) = match parse_chc(&text).map_err(anyhow::Error::from).and_then(|s| Ok(Task::new(s)?)) {
        Ok(task) => {
            let task = Arc::new(task);
            let solver = opts.solver()?;
            let plan = opts.plan(&task, &solver)?;
            let r = run_portfolio(&task, &plan, &solver);
            let stage = r.winner.map_or("-".to_string(), |w| w.to_string());
            (task.sys.theory().to_string(), r.verdict.word().to_string(), stage)
        }
        Err(e) => {
            log::warn!("{name}: {e:#}");
            ("invalid".to_string(), "unknown".to_string(), "-".to_string())
        }
    };
    Ok(Row { task: name, category, expected, verdict, stage, millis: start.elapsed().as_millis() })
}

/// Runs every `.smt2` file of `dir`, in name order, and prints the table.
pub fn run(dir: &Path, opts: &SolveOpts) -> Result<()> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "smt2"))
        .collect();
    paths.sort();
    println!("task\tcategory\texpected\tverdict\tstage\tstatus\ttime_ms");
    let mut rows = vec![];
    for p in &paths {
        let r = run_one(p, opts)?;
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.task,
            r.category,
            r.expected.as_deref().unwrap_or("-"),
            r.verdict,
            r.stage,
            r.status(),
            r.millis
        );
        rows.push(r);
    }
    // Solved tasks per deciding stage and category.
    let mut per: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut cats: BTreeMap<String, (usize, usize, usize, usize)> = BTreeMap::new();
    for r in &rows {
        let c = cats.entry(r.category.clone()).or_default();
        c.0 += 1;
        match r.verdict.as_str() {
            "sat" => c.1 += 1,
            "unsat" => c.2 += 1,
            _ => {}
        }
        if r.status() == "MISMATCH" {
            c.3 += 1;
        }
        if r.verdict != "unknown" {
            *per.entry((r.stage.clone(), r.category.clone())).or_default() += 1;
        }
    }
    println!();
    println!("category\ttasks\tsat\tunsat\tunknown\tmismatches");
    for (c, (n, sat, unsat, bad)) in &cats {
        println!("{c}\t{n}\t{sat}\t{unsat}\t{}\t{bad}", n - sat - unsat);
    }
    println!();
    println!("stage\tcategory\tsolved");
    for ((s, c), n) in &per {
        println!("{s}\t{c}\t{n}");
    }
    Ok(())
}
