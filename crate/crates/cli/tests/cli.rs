use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

struct Run {
    code: i32,
    json: Value,
    stderr: String,
}

fn opexcheck(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_opexcheck")).args(args).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    Run {
        code: out.status.code().unwrap(),
        json: serde_json::from_str(&stdout).unwrap_or(Value::Null),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn opex(object: &str, op: &str, proc: &str, input: Value, output: Value, inv: Value, res: Value) -> Value {
    json!({ "object": object, "operation": op, "proc": proc, "input": input, "output": output, "inv": inv, "res": res })
}

fn procs(ids: &[&str]) -> Value {
    ids.iter().map(|p| json!({ "id": p, "type": "correct" })).collect()
}

fn set_lattice() -> Value {
    let p = |i: &str, v: i64, out: Value, inv: u64, res: u64| {
        opex("L", "propose", i, json!(v), out, json!(inv), json!(res))
    };
    json!({
        "processes": procs(&["p1", "p2", "p3"]),
        "opexes": [
            p("p1", 1, json!([1, 2]), 0, 2),
            p("p2", 2, json!([1, 2]), 1, 3),
            p("p3", 3, json!([1, 2, 3]), 4, 5),
        ],
        "complete": true,
    })
}

fn byz(writer: &str) -> Value {
    json!({
        "processes": [{ "id": "w", "type": writer }, { "id": "r", "type": "correct" }],
        "opexes": [opex("R", "read", "r", Value::Null, json!(7), json!(0), json!(1))],
        "complete": false,
    })
}

fn decide(values: &[(&str, i64)]) -> Value {
    let ops: Vec<Value> = values
        .iter()
        .enumerate()
        .map(|(i, (p, v))| opex("C", "decide", p, Value::Null, json!(v), Value::Null, json!(i)))
        .collect();
    json!({ "processes": procs(&["p1", "p2"]), "opexes": ops, "complete": true })
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn set_lattice_check_exit_codes() {
    let dir = TempDir::new().unwrap();
    let h = write(dir.path(), "set_lattice.json", &set_lattice());
    let base = ["check", "--history", path(&h), "--spec", "lattice-agreement", "--consistency"];
    let ok = opexcheck(&[&base[..], &["set-linearizability"]].concat());
    assert_eq!(ok.code, 0, "{}", ok.stderr);
    assert_eq!(ok.json["accepted"], json!(true));
    assert_eq!(ok.json["status"], json!("accepted"));
    assert!(ok.json["clauses"].as_array().unwrap().iter().all(|c| c["holds"] == json!(true)));
    assert!(!ok.json["witness"].as_array().unwrap().is_empty());
    let bad = opexcheck(&[&base[..], &["linearizability"]].concat());
    assert_eq!(bad.code, 1);
    assert_eq!(bad.json["accepted"], json!(false));
    assert_eq!(bad.json["witness"], Value::Null);
}

#[test]
fn object_scoped_spec() {
    let dir = TempDir::new().unwrap();
    let h = write(dir.path(), "set_lattice.json", &set_lattice());
    let r = opexcheck(&["check", "--history", path(&h), "--spec", "L=lattice-agreement", "--consistency", "interval-linearizability"]);
    assert_eq!(r.code, 0);
    let r = opexcheck(&["check", "--history", path(&h), "--spec", "X=lattice-agreement", "--consistency", "legality"]);
    assert_eq!(r.code, 2, "no spec for L");
}

#[test]
fn empty_history_is_accepted() {
    let dir = TempDir::new().unwrap();
    let h = write(dir.path(), "empty.json", &json!({ "processes": [], "opexes": [], "complete": true }));
    let r = opexcheck(&["check", "--history", path(&h), "--spec", "consensus", "--consistency", "linearizability"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad_order = json!({
        "processes": procs(&["p1"]),
        "opexes": [opex("L", "propose", "p1", json!(1), json!([1]), json!(3), json!(1))],
        "complete": true,
    });
    let h = write(dir.path(), "bad.json", &bad_order);
    let r = opexcheck(&["check", "--history", path(&h), "--spec", "lattice-agreement", "--consistency", "legality"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("invalid history"), "{}", r.stderr);

    let good = write(dir.path(), "set_lattice.json", &set_lattice());
    for (spec, cond) in [("no-such-spec", "legality"), ("lattice-agreement", "no-such-condition")] {
        let r = opexcheck(&["check", "--history", path(&good), "--spec", spec, "--consistency", cond]);
        assert_eq!(r.code, 2, "{spec} {cond}");
    }
    fs::write(dir.path().join("broken.json"), "{ not json").unwrap();
    let r = opexcheck(&["check", "--history", path(&dir.path().join("broken.json")), "--spec", "consensus", "--consistency", "legality"]);
    assert_eq!(r.code, 2);
    let r = opexcheck(&["check", "--history", path(&dir.path().join("missing.json")), "--spec", "consensus", "--consistency", "legality"]);
    assert_eq!(r.code, 2);
    let r = opexcheck(&["check", "--history", path(&good)]);
    assert_eq!(r.code, 2, "missing flags");
    let r = opexcheck(&["gen", "--program", "alg9", "--out", path(dir.path())]);
    assert_eq!(r.code, 2);
}

#[test]
fn node_budget_exit_three() {
    let dir = TempDir::new().unwrap();
    let h = write(dir.path(), "set_lattice.json", &set_lattice());
    let r = opexcheck(&[
        "check", "--history", path(&h), "--spec", "lattice-agreement", "--consistency", "set-linearizability",
        "--node-budget", "1",
    ]);
    assert_eq!(r.code, 3, "{}", r.stderr);
}

#[test]
fn byzantine_repair() {
    let dir = TempDir::new().unwrap();
    let u = write(
        dir.path(),
        "universe.json",
        &json!([{ "proc": "w", "object": "R", "operation": "write", "input": 7 }]),
    );
    let spec = "swsr-register:writer=w,reader=r";
    let h = write(dir.path(), "byz.json", &byz("byzantine"));
    let r = opexcheck(&["byz-check", "--history", path(&h), "--spec", spec, "--consistency", "legality", "--universe", path(&u), "--max-insert", "1"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let ins = r.json["inserted"].as_array().unwrap();
    assert_eq!(ins.len(), 1);
    assert_eq!(ins[0]["input"], json!(7));
    assert_eq!(ins[0]["proc"], json!("w"));
    assert_eq!(ins[0]["res"], Value::Null);
    // The repaired history re-checks under legality.
    let repaired = write(dir.path(), "repaired.json", &r.json["history"]);
    let again = opexcheck(&["check", "--history", path(&repaired), "--spec", spec, "--consistency", "legality"]);
    assert_eq!(again.code, 0, "{}", again.stderr);

    let h = write(dir.path(), "correct.json", &byz("correct"));
    let r = opexcheck(&["byz-check", "--history", path(&h), "--spec", spec, "--consistency", "legality", "--universe", path(&u)]);
    assert_eq!(r.code, 1);
}

#[test]
fn gen_sigma_audit_test_and_set() {
    let dir = TempDir::new().unwrap();
    let hs = dir.path().join("alg3");
    let g = opexcheck(&["gen", "--program", "alg3", "--out", path(&hs)]);
    assert_eq!(g.code, 0, "{}", g.stderr);
    assert_eq!(g.json["histories"], json!(10));
    assert_eq!(fs::read_dir(&hs).unwrap().count(), 10);

    let dot = dir.path().join("g.dot");
    let s = opexcheck(&["sigma", "--histories", path(&hs), "--out", path(&dot)]);
    assert_eq!(s.code, 0);
    assert_eq!(s.json["states"], json!(14));
    let text = fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph") && text.contains("T&SR₁(0)"));
    let dot2 = dir.path().join("g2.dot");
    opexcheck(&["sigma", "--histories", path(&hs), "--out", path(&dot2)]);
    assert_eq!(text, fs::read_to_string(&dot2).unwrap());

    let a = opexcheck(&["audit-flp", "--histories", path(&hs)]);
    assert_eq!(a.code, 1);
    let w = &a.json["asynchrony"]["witness"];
    assert_eq!(w["state"], json!(["T&SI₁", "T&SI₂"]));
    assert_eq!((w["e"].clone(), w["e2"].clone()), (json!("T&SR₁(0)"), json!("T&SR₂(0)")));
}

#[test]
fn broadcast_sink_classes_in_reduced_view() {
    let dir = TempDir::new().unwrap();
    for (prog, classes) in [("alg4", 4), ("alg5", 2)] {
        let hs = dir.path().join(prog);
        assert_eq!(opexcheck(&["gen", "--program", prog, "--out", path(&hs)]).code, 0);
        let dot = dir.path().join(format!("{prog}.dot"));
        let s = opexcheck(&["sigma", "--histories", path(&hs), "--out", path(&dot), "--reduced"]);
        assert_eq!(s.code, 0, "{}", s.stderr);
        assert_eq!(s.json["sink_classes"].as_array().unwrap().len(), classes, "{prog}");
        assert_eq!(s.json["sinks"], json!(classes));
    }
}

#[test]
fn flp_audit_on_toy_consensus() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "h0.json", &decide(&[("p1", 0), ("p2", 0)]));
    write(dir.path(), "h1.json", &decide(&[("p1", 1), ("p2", 1)]));
    let a = opexcheck(&["audit-flp", "--histories", path(dir.path())]);
    assert_eq!(a.code, 1, "{}", a.stderr);
    assert_eq!(a.json["violated"], json!(["Asynchrony"]));
    let w = &a.json["asynchrony"]["witness"];
    assert_eq!(w, &json!({ "kind": "step", "state": [], "e": "d₁/0", "e2": "d₂/1" }));
    assert_eq!(a.json["critical_state"], json!([]));

    write(dir.path(), "h2.json", &decide(&[("p1", 0), ("p2", 1)]));
    let a = opexcheck(&["audit-flp", "--histories", path(dir.path())]);
    assert_eq!(a.code, 2);
    assert!(a.stderr.contains("precondition"), "{}", a.stderr);
}

fn ksa_run(runners: &[i64]) -> Value {
    let mut ops = Vec::new();
    let mut pos = 0;
    for &i in runners {
        let p = format!("p{i}");
        ops.push(opex("M", "write", &p, json!([i, format!("x{i}")]), Value::Null, json!(pos), json!(pos + 1)));
        ops.push(opex("SA", "decide", &p, Value::Null, json!(i), Value::Null, json!(pos + 2)));
        pos += 3;
    }
    json!({ "processes": procs(&["p1", "p2", "p3"]), "opexes": ops, "complete": true })
}

#[test]
fn ksa_audit() {
    let dir = TempDir::new().unwrap();
    for i in 1..=3 {
        write(dir.path(), &format!("solo{i}.json"), &ksa_run(&[i]));
    }
    let a = opexcheck(&["audit-ksa", "--histories", path(dir.path()), "--k", "2"]);
    assert_eq!(a.code, 1, "{}", a.stderr);
    let holds = |name: &str| {
        a.json["reports"].as_array().unwrap().iter().find(|r| r["axiom"] == json!(name)).unwrap()["holds"].clone()
    };
    assert_eq!(holds("WaitFreeResilience"), json!(true));
    assert_eq!(holds("NonTriviality"), json!(true));
    assert_eq!(holds("Asynchrony(setwise)"), json!(false));
    let bad_k = opexcheck(&["audit-ksa", "--histories", path(dir.path()), "--k", "3"]);
    assert_eq!(bad_k.code, 2);
    write(dir.path(), "union.json", &ksa_run(&[1, 2, 3]));
    let u = opexcheck(&["audit-ksa", "--histories", path(dir.path()), "--k", "2"]);
    assert_eq!(u.code, 2);
}

#[test]
fn gen_from_program_file() {
    let dir = TempDir::new().unwrap();
    let prog = json!({
        "processes": [{ "id": "p1", "type": "correct" }, { "id": "p2", "type": "correct" }],
        "calls": {
            "p1": [{ "object": "ts", "operation": "test&set", "input": null }],
            "p2": [{ "object": "ts", "operation": "test&set", "input": null }],
        },
        "objects": { "ts": { "spec": "test-and-set", "condition": "sequential" } },
    });
    let f = write(dir.path(), "prog.json", &prog);
    let g = opexcheck(&["gen", "--program", path(&f), "--out", path(&dir.path().join("out"))]);
    assert_eq!(g.code, 0, "{}", g.stderr);
    // Sequential consistency drops real time: every schedule admits both winners.
    assert_eq!(g.json["histories"], json!(12));
}
