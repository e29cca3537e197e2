//! Before/after report in the shape of the usual benchmark tables: state
//! and transition counts of both explicit models, program sizes, timings,
//! probabilities and the certification verdict.
//!
//! Reports are byte-deterministic for identical inputs except for the lines
//! marked as timings.

use std::fmt::Write as _;
use std::time::Duration;

use pcfp::pcfp::Pcfp;
use pcfp::solver::{ModelStats, ReachResult, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

pub struct ReportSide<'a> {
    pub program: &'a Pcfp,
    pub stats: ModelStats,
    pub build: Duration,
    pub check: Duration,
    pub result: &'a ReachResult,
}

fn value_cell(v: &Value) -> String {
    match v {
        Value::Exact(r) => r.to_string(),
        Value::Approx(x) => format!("~{x:.10}"),
    }
}

pub fn render_report(
    before: &ReportSide,
    after: &ReportSide,
    reduction: Duration,
    verdict: Verdict,
) -> String {
    let mut out = String::new();
    let mut row = |name: &str, a: String, b: String| {
        writeln!(out, "{name:<22} {a:>18} {b:>18}").unwrap();
    };
    row("", "original".into(), "reduced".into());
    row("states", before.stats.states.to_string(), after.stats.states.to_string());
    row(
        "transitions",
        before.stats.transitions.to_string(),
        after.stats.transitions.to_string(),
    );
    row("actions", before.stats.actions.to_string(), after.stats.actions.to_string());
    row(
        "program locations",
        before.program.locations().len().to_string(),
        after.program.locations().len().to_string(),
    );
    row(
        "program commands",
        before.program.commands().len().to_string(),
        after.program.commands().len().to_string(),
    );
    row(
        "program transitions",
        before.program.transition_count().to_string(),
        after.program.transition_count().to_string(),
    );
    row(
        "probability",
        value_cell(&before.result.value),
        value_cell(&after.result.value),
    );
    row(
        "probability (float)",
        format!("{:.10}", before.result.value.to_f64()),
        format!("{:.10}", after.result.value.to_f64()),
    );
    row(
        "build time [s]",
        format!("{:.3}", before.build.as_secs_f64()),
        format!("{:.3}", after.build.as_secs_f64()),
    );
    row(
        "check time [s]",
        format!("{:.3}", before.check.as_secs_f64()),
        format!("{:.3}", after.check.as_secs_f64()),
    );
    writeln!(out, "{:<22} {:>18}", "reduction time [s]", format!("{:.3}", reduction.as_secs_f64()))
        .unwrap();
    let verdict_text = match verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Skipped => "not requested",
    };
    writeln!(out, "{:<22} {:>18}", "certified", verdict_text).unwrap();
    out
}
