use std::path::PathBuf;
use std::process::{Command, Output};

use tempfile::TempDir;

const VOTING: &str = "vocabulary V { type Age := {0..120} age: () -> Age vote: () -> Bool }
theory T:V { vote() <=> 18 =< age(). }
";

const HEALTH: &str = "vocabulary V {
  type Level := {Underweight, Normal, Overweight, Obese}
  BMI: () -> Real
  BMILevel: () -> Level
}
";

const BMI: &str = "table BMILevel U
in: BMI ; out: BMILevel
< 18.5 | Underweight
[18.5..25) | Normal
[25..30) | Overweight
>= 30 | Obese
";

struct Files(TempDir);

impl Files {
    fn new() -> Files {
        Files(tempfile::tempdir().unwrap())
    }

    fn add(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }
}

fn fodot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fodot")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn check_empty_vocabulary() {
    let f = Files::new();
    let p = f.add("empty.idp", "vocabulary V {}");
    let o = fodot(&["check", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "satisfiable");
}

#[test]
fn check_with_conflicting_facts_exits_1() {
    let f = Files::new();
    let p = f.add("voting.idp", VOTING);
    let o = fodot(&["check", p.to_str().unwrap(), "--assert", "vote()=true", "--assert", "age()=3"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "unsatisfiable");
}

#[test]
fn propagate_voting() {
    let f = Files::new();
    let p = f.add("voting.idp", VOTING);
    let o = fodot(&["propagate", p.to_str().unwrap(), "--assert", "vote()=true"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "18 =< age(): true"), "{out}");
    assert!(out.lines().any(|l| l == "age() = 17: false"));
    assert!(!out.lines().any(|l| l.starts_with("vote():")));
}

#[test]
fn explain_and_optimize() {
    let f = Files::new();
    let p = f.add("voting.idp", VOTING);
    let p = p.to_str().unwrap();
    let o = fodot(&["explain", p, "--assert", "age()=20", "--literal", "vote()"]);
    assert_eq!(o.status.code(), Some(0));
    let mut labels: Vec<String> = stdout(&o).lines().map(|l| l.split(':').next().unwrap().to_string()).collect();
    labels.sort();
    assert_eq!(labels, vec!["A1", "F", "L"]);
    let o = fodot(&["explain", p, "--literal", "vote()"]);
    assert_eq!(o.status.code(), Some(1));

    let o = fodot(&["optimize", p, "--assert", "vote()=true", "--term", "age()"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("age() = 18"));
    let o = fodot(&["optimize", p, "--term", "age()", "--maximize", "--json"]);
    assert_eq!(json(&o)["value"], 120);
}

#[test]
fn expand_respects_max_models() {
    let f = Files::new();
    let p = f.add("voting.idp", VOTING);
    let o = fodot(&["--json", "expand", p.to_str().unwrap(), "--max-models", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["models"].as_array().unwrap().len(), 3);
    let o = fodot(&["expand", p.to_str().unwrap(), "--assert", "age()=20"]);
    assert!(stdout(&o).contains("vote() = true"));
}

#[test]
fn relevance_table() {
    let f = Files::new();
    let p = f.add("ab.idp", "vocabulary V { a, b: () -> Bool } theory T:V { a() => b(). }");
    let o = fodot(&["relevance", p.to_str().unwrap(), "--assert", "b()=true"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("a(): irrelevant"), "{out}");
    assert!(out.contains("b(): user"));
}

#[test]
fn dmn_translate_and_check() {
    let f = Files::new();
    let t = f.add("bmi.tbl", BMI);
    let v = f.add("health.idp", HEALTH);
    let (t, v) = (t.to_str().unwrap(), v.to_str().unwrap());
    let o = fodot(&["dmn", "translate", t, "--vocab", v]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("BMILevel() = Normal <- 18.5 =< BMI() < 25."), "{out}");
    assert!(out.contains("BMILevel() = Obese <- BMI() >= 30."));

    let o = fodot(&["dmn", "check", t, "--vocab", v, "--bound", "BMI=0..100"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "complete\nunique\n");

    let gappy = f.add("gap.tbl", &BMI.replace("[25..30)", "[26..30)"));
    let o = fodot(&["--json", "dmn", "check", gappy.to_str().unwrap(), "--vocab", v, "--bound", "BMI=0..100"]);
    assert_eq!(o.status.code(), Some(1));
    let r = json(&o);
    assert_eq!(r["complete"], false);
    let x = r["gap"]["BMI()"].as_f64().unwrap();
    assert!((25.0..26.0).contains(&x));
}

#[test]
fn every_subcommand_has_json_output() {
    let f = Files::new();
    let p = f.add("voting.idp", VOTING);
    let p = p.to_str().unwrap();
    let t = f.add("bmi.tbl", BMI);
    let v = f.add("health.idp", HEALTH);
    let runs: Vec<Vec<&str>> = vec![
        vec!["check", p],
        vec!["expand", p, "--max-models", "2"],
        vec!["propagate", p, "--assert", "age()=40"],
        vec!["explain", p, "--assert", "age()=40", "--literal", "vote()"],
        vec!["optimize", p, "--term", "age()"],
        vec!["relevance", p],
        vec!["dmn", "translate", t.to_str().unwrap(), "--vocab", v.to_str().unwrap()],
        vec!["dmn", "check", t.to_str().unwrap(), "--vocab", v.to_str().unwrap(), "--bound", "BMI=0..100"],
    ];
    for mut args in runs {
        args.push("--json");
        let o = fodot(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        assert!(json(&o).is_object(), "{args:?}");
    }
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let f = Files::new();
    let bad = f.add("bad.idp", "vocabulary V { p: () -> }");
    let o = fodot(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("syntax error"));
    assert_eq!(fodot(&["check"]).status.code(), Some(2));
    assert_eq!(fodot(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(fodot(&["check", "/no/such/file.idp"]).status.code(), Some(2));
    let p = f.add("voting.idp", VOTING);
    let o = fodot(&["check", p.to_str().unwrap(), "--assert", "age()"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fodot(&["check", p.to_str().unwrap(), "--assert", "age()=500"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_flag_and_config_file() {
    let f = Files::new();
    let p = f.add("voting.idp", VOTING);
    let o = fodot(&["check", p.to_str().unwrap(), "--solver", "/no/such/solver"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = f.add("fodot.toml", "[solver]\ncommand = \"/no/such/solver\"\n");
    let o = fodot(&["check", p.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = fodot(&["check", p.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--solver", "z3 -in"]);
    assert_eq!(o.status.code(), Some(0));
}
