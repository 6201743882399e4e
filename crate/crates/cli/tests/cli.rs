use std::fs;
use std::process::{Command, Output};

const HAIR: &str = "P(F[Y=0]=0,H[Y=0]=1 | F=0,Y=1,H=0)";

fn ctf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctf")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("invalid JSON ({e}): {}", stdout(o)))
}

#[test]
fn query_prints_exact_and_decimal() {
    let o = ctf(&["query", "--builtin", "face_mstar", "-q", HAIR]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "2/5 (0.4)");
    let j = json(&ctf(&["query", "--builtin", "face_m3", "-q", HAIR, "--json"]));
    assert_eq!(j["value"], "1/4");
}

#[test]
fn bounds_for_the_hair_edit() {
    for method in ["auto", "lp", "analytic"] {
        let o = ctf(&["bounds", "--builtin", "face_mstar", "-q", HAIR, "-w", "F,Y,H", "--method", method, "--json"]);
        assert_eq!(o.status.code(), Some(0), "{method}");
        let j = json(&o);
        assert_eq!((j["lower"].as_str(), j["upper"].as_str()), (Some("1/4"), Some("1/2")));
        assert_eq!(j["certified"], true);
    }
    let o = ctf(&["bounds", "--builtin", "face_mstar", "-q", HAIR, "-w", "F,Y"]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn bounds_with_oracle_and_explicit_diagram() {
    let o = ctf(&[
        "bounds",
        "--builtin",
        "backdoor",
        "-q",
        "P(C[D=6]=1, B[D=6]=1 | D=3, C=1, B=1)",
        "-g",
        "D -> B; C -> B; D <-> C",
        "--oracle",
        "50",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(&o);
    assert_eq!(j["upper"], "14/41");
    let hi = j["oracle"][1].as_f64().unwrap();
    assert!(hi <= 14.0 / 41.0 + 1e-9);
}

#[test]
fn error_exit_codes() {
    let o = ctf(&["validate", "missing.scm"]);
    assert_eq!(o.status.code(), Some(74));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.scm"));

    assert_eq!(ctf(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(ctf(&["query", "--builtin", "face_mstar"]).status.code(), Some(64));
    assert_eq!(ctf(&["query", "--builtin", "nope", "-q", HAIR]).status.code(), Some(64));
    assert_eq!(ctf(&["query", "--builtin", "face_mstar", "-q", "P(F=0 |"]).status.code(), Some(65));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scm");
    fs::write(&bad, "model m { var A : {0,1} = B }").unwrap();
    let o = ctf(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(65));
    assert_eq!(ctf(&["--help"]).status.code(), Some(0));
}

#[test]
fn every_listed_model_validates() {
    let j = json(&ctf(&["models", "--json"]));
    let names: Vec<String> = j.as_array().unwrap().iter().map(|m| m["name"].as_str().unwrap().to_string()).collect();
    assert_eq!(names.len(), 7);
    for n in &names {
        let o = ctf(&["validate", "--builtin", n, "--json"]);
        assert_eq!(o.status.code(), Some(0), "{n}");
        assert_eq!(json(&o)["valid"], true);
    }
}

#[test]
fn model_files_round_trip_through_validate_and_query() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.scm");
    fs::write(
        &path,
        "model chain {\n  exo U_X ~ bernoulli(1/3)\n  exo U_Y ~ bernoulli(1/4)\n  var X : {0,1} = U_X\n  var Y : {0,1} = xor(X, U_Y)\n}\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(ctf(&["validate", p]).status.code(), Some(0));
    let o = ctf(&["query", "-m", p, "-q", "P(Y[X=1]=1 | X=0, Y=0)"]);
    assert_eq!(stdout(&o).trim(), "1 (1)");
}

#[test]
fn compare_reports_non_identifiability() {
    let o = ctf(&["compare", "-m1", "face_m1_smile", "-m2", "face_m2_smile", "-q", "P(S[Y=0]=1 | Y=1, S=0)", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let j = json(&o);
    assert_eq!(j["observational_equal"], true);
    assert_eq!(j["queries"][0]["m1"], "0/1");
    assert_eq!(j["queries"][0]["m2"], "1/1");
}

#[test]
fn sample_and_gen_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = ctf(&["sample", "--builtin", "backdoor", "-n", "100", "--seed", "7", "-o", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 101);

    let out = dir.path().join("imgs");
    let o = ctf(&["gen", "--builtin", "frontdoor", "-n", "10", "--seed", "3", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_dir(&out).unwrap().count(), 11);

    let x = ctf(&["sample", "--builtin", "face_mstar", "-n", "50", "--proxy", "markovian", "--do", "Y=0"]);
    let y = ctf(&["sample", "--builtin", "face_mstar", "-n", "50", "--proxy", "markovian", "--do", "Y=0"]);
    assert_eq!(x.stdout, y.stdout);
    assert_eq!(stdout(&x).lines().count(), 50);
    assert!(String::from_utf8_lossy(&x.stderr).contains("12/125"));
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    let log_s = log.to_str().unwrap();

    let o = ctf(&[
        "sample",
        "--builtin",
        "face_mstar",
        "-n",
        "20000",
        "--seed",
        "1",
        "--proxy",
        "preserve",
        "--do",
        "Y=0",
        "-o",
        log_s,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = ctf(&["check", "--log", log_s, "--builtin", "face_mstar", "-w", "F,Y", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(json(&o)["verdict"], "pass");

    ctf(&[
        "sample",
        "--builtin",
        "face_mstar",
        "-n",
        "20000",
        "--seed",
        "1",
        "--proxy",
        "conditional",
        "--do",
        "Y=0",
        "-o",
        log_s,
    ]);
    let o = ctf(&["check", "--log", log_s, "--builtin", "face_mstar", "-w", "F,Y"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("verdict: fail"));

    // the reference may come from a label CSV
    let labels = dir.path().join("labels.csv");
    ctf(&["sample", "--builtin", "face_mstar", "-n", "20000", "--seed", "2", "-o", labels.to_str().unwrap()]);
    let o = ctf(&[
        "check",
        "--log",
        log_s,
        "--builtin",
        "face_mstar",
        "--obs",
        labels.to_str().unwrap(),
        "-w",
        "F,Y",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(ctf(&["check", "--log", "nowhere.jsonl", "--builtin", "face_mstar"]).status.code(), Some(74));
    assert_eq!(ctf(&["check", "--log", log_s, "--builtin", "face_mstar", "--eps", "abc"]).status.code(), Some(64));
}
