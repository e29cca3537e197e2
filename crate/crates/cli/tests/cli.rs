//! End-to-end tests of the command-line interface, driving the compiled
//! binary.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pcfp"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("pcfp-cli-test-{}-{name}", std::process::id()));
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn gen_stats_reduce_certify_roundtrip() {
    let model = tmp("coin.pm");
    let pipeline = tmp("pipeline.txt");
    let report = tmp("report.txt");
    let reduced_json = tmp("reduced.json");
    let explicit = tmp("model.txt");

    let out = run(&["gen", "coin", "--n", "6", "--out", model.to_str().unwrap()]);
    assert!(out.status.success());
    fs::write(&pipeline, "unfold f\neliminate-all\n").unwrap();

    let out = run(&[
        "reduce",
        model.to_str().unwrap(),
        "--pipeline",
        pipeline.to_str().unwrap(),
        "--prop",
        "P=? [ F x>=N & !f ]",
        "--certify",
        "--report",
        report.to_str().unwrap(),
        "--emit-pcfp",
        reduced_json.to_str().unwrap(),
        "--emit-model",
        explicit.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report_text = fs::read_to_string(&report).unwrap();
    assert!(report_text.contains("PASS"));
    assert!(report_text.contains("10/37"));
    for (label, a, b) in [("states", "13", "8"), ("program transitions", "5", "3")] {
        let line = report_text
            .lines()
            .find(|l| l.trim_start().starts_with(label))
            .unwrap_or_else(|| panic!("missing row {label}"));
        assert!(line.contains(a) && line.contains(b), "row {label}: {line}");
    }

    // the emitted program is valid JSON that the library accepts again
    let json = fs::read_to_string(&reduced_json).unwrap();
    let p = pcfp::frontend::parse_pcfp(&json).unwrap();
    assert_eq!(p.locations().len(), 1);
    assert_eq!(p.transition_count(), 3);

    // the emitted explicit model lists 8 states
    let explicit_text = fs::read_to_string(&explicit).unwrap();
    assert!(explicit_text.starts_with("STATES 8\n"));

    for f in [model, pipeline, report, reduced_json, explicit] {
        let _ = fs::remove_file(f);
    }
}

#[test]
fn auto_reduction_is_certified() {
    let model = tmp("coin-auto.pm");
    let out = run(&["gen", "coin", "--n", "6", "--out", model.to_str().unwrap()]);
    assert!(out.status.success());
    let out = run(&[
        "reduce",
        model.to_str().unwrap(),
        "--auto",
        "--prop",
        "P=? [ F x>=N & !f ]",
        "--certify",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("PASS"));
    let _ = fs::remove_file(model);
}

#[test]
fn check_reports_the_exact_value() {
    let model = tmp("coin-check.pm");
    run(&["gen", "coin", "--n", "6", "--out", model.to_str().unwrap()]);
    let out = run(&[
        "check",
        model.to_str().unwrap(),
        "--prop",
        "P=? [ F x>=N & !f ]",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("10/37"));
    let _ = fs::remove_file(model);
}

#[test]
fn stats_at_scale_match_the_table() {
    let model = tmp("coin-big.pm");
    run(&["gen", "coin", "--out", model.to_str().unwrap()]);
    let out = run(&["stats", model.to_str().unwrap(), "--const", "N=10000"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("states      20001"), "{text}");
    assert!(text.contains("transitions 39999"), "{text}");
    let _ = fs::remove_file(model);
}

#[test]
fn constants_flow_symbolically_until_needed() {
    let model = tmp("coin-sym.pm");
    run(&["gen", "coin", "--out", model.to_str().unwrap()]);
    let pipeline = tmp("pipeline-sym.txt");
    fs::write(&pipeline, "unfold f\n").unwrap();
    // reduction with an undefined bound works; only model building needs N
    let out = run(&[
        "reduce",
        model.to_str().unwrap(),
        "--pipeline",
        pipeline.to_str().unwrap(),
        "--prop",
        "P=? [ F x>=N & !f ]",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    // but certification demands instantiated constants
    let out = run(&[
        "reduce",
        model.to_str().unwrap(),
        "--pipeline",
        pipeline.to_str().unwrap(),
        "--prop",
        "P=? [ F x>=N & !f ]",
        "--certify",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let _ = fs::remove_file(model);
    let _ = fs::remove_file(pipeline);
}

#[test]
fn parse_errors_exit_one() {
    let model = tmp("broken.pm");
    fs::write(&model, "dtmc\nmodule a\nendmodule\nmodule b\nendmodule\n").unwrap();
    let out = run(&["stats", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("single module"));
    let _ = fs::remove_file(model);
}

#[test]
fn gen_validates_parameters() {
    let out = run(&["gen", "coin", "--n", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["gen", "expfamily", "--m", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn expfamily_pipeline_counts_blowup() {
    let model = tmp("family.json");
    run(&["gen", "expfamily", "--m", "3", "--out", model.to_str().unwrap()]);
    let out = run(&[
        "reduce",
        model.to_str().unwrap(),
        "--auto",
        "--prop",
        "P=? [ F goal=1 ]",
        "--certify",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("PASS"));
    let _ = fs::remove_file(model);
}

#[test]
fn mdp_certification_uses_exact_enumeration() {
    let model = tmp("race.pm");
    fs::write(
        &model,
        "mdp\nmodule race\n\
         x : [0..3] init 0;\n\
         s : [0..2] init 0;\n\
         [] s=0 -> 1/2: (x'=1)&(s'=1) + 1/2: (x'=2)&(s'=1);\n\
         [] s=1 & x>=1 -> 1: (x'=x-1)&(s'=2);\n\
         [] s=1 -> 1/2: (s'=2) + 1/2: (s'=0)&(x'=0);\n\
         [] s=2 & x=1 -> 1: true;\n\
         [] s=2 & x!=1 -> 1: (x'=x);\nendmodule\n",
    )
    .unwrap();
    let pipeline = tmp("race-pipe.txt");
    fs::write(&pipeline, "unfold s\neliminate-all\n").unwrap();
    for prop in ["Pmax=? [ F s=2 & x=1 ]", "Pmin=? [ F s=2 & x=1 ]"] {
        let out = run(&[
            "reduce",
            model.to_str().unwrap(),
            "--pipeline",
            pipeline.to_str().unwrap(),
            "--prop",
            prop,
            "--certify",
        ]);
        assert!(out.status.success(), "{prop}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).contains("PASS"));
    }
    // P=? on a nondeterministic model is rejected up front
    let out = run(&[
        "check",
        model.to_str().unwrap(),
        "--prop",
        "P=? [ F s=2 & x=1 ]",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("deterministic"));
    let _ = fs::remove_file(model);
    let _ = fs::remove_file(pipeline);
}

#[test]
fn pipeline_check_and_stats_directives_print() {
    let model = tmp("coin-dir.pm");
    run(&["gen", "coin", "--n", "6", "--out", model.to_str().unwrap()]);
    let pipeline = tmp("pipeline-dir.txt");
    fs::write(&pipeline, "stats\nunfold f\neliminate-all\ncheck\n").unwrap();
    let out = run(&[
        "reduce",
        model.to_str().unwrap(),
        "--pipeline",
        pipeline.to_str().unwrap(),
        "--prop",
        "P=? [ F x>=N & !f ]",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("stats: 13 states"));
    assert!(text.contains("check: P=? = 10/37"));
    let _ = fs::remove_file(model);
    let _ = fs::remove_file(pipeline);
}
