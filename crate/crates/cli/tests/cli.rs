use std::path::Path;
use std::process::{Command, Output};

fn avclab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avclab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const CHANNEL: &str = r#""channel":{"n":16,"P":4,"Lambda":1,"sigma2":0.5}"#;

fn bounds_config(k: f64) -> String {
    format!(
        r#"{{"channel":{{"n":100,"P":4,"Lambda":1,"sigma2":1}},"code":{{"R":0.1,"delta0":0.05}},
        "deltas":{{"delta0":0.05,"delta1":0.0001,"delta2":0.1,"eta":0.02,"K":{k},"epsilon":0.1}}}}"#
    )
}

#[test]
fn capacity_in_nats_and_bits() {
    let dir = tempfile::tempdir().unwrap();
    let o = avclab(&["capacity", "--P", "3", "--Lambda", "1", "--sigma2", "1"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("0.458145366 nats"), "{text}");
    assert!(text.contains("0.660964047 bits"), "{text}");

    let o = avclab(&["capacity", "--P", "1", "--Lambda", "2", "--sigma2", "1"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("C = 0 nats"));
    assert!(text.contains("P ≤ Λ: symmetrizable"));
}

#[test]
fn capacity_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let o = avclab(&["capacity", "--P", "x", "--Lambda", "1", "--sigma2", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = avclab(&["capacity", "--P", "1", "--Lambda", "-1", "--sigma2", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = avclab(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bounds_report_and_feasibility_gate() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", &bounds_config(20.0));
    let o = avclab(&["bounds", "--config", &ok], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["feasibilityViolations"], serde_json::json!([]));
    assert!(report["doublyExpBound_ln"].as_str().unwrap().starts_with('-'));

    let bad = write(dir.path(), "bad.json", &bounds_config(10.0));
    let o = avclab(&["bounds", "--config", &bad], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("K·ln2>10"));
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "typo.json",
        &format!(r#"{{{CHANNEL},"code":{{"R":0.2,"delta0":0.05}},"strategy":{{"kind":"zero"}},"trails":10,"seed":1}}"#),
    );
    let o = avclab(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("trails"), "{}", stderr(&o));
}

#[test]
fn simulate_is_thread_independent_and_writes_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sim.json",
        &format!(
            r#"{{{CHANNEL},"code":{{"R":0.4,"delta0":0.05}},"strategy":{{"kind":"sphereUniform"}},
            "trials":300,"seed":11,"messageSample":{{"kind":"all"}}}}"#
        ),
    );
    let one = avclab(&["--threads", "1", "simulate", "--config", &cfg], dir.path());
    let four = avclab(&["simulate", "--config", &cfg, "--threads", "4"], dir.path());
    assert!(one.status.success(), "{}", stderr(&one));
    assert_eq!(one.stdout, four.stdout);
    let o = avclab(&["simulate", "--config", &cfg, "--out", "res/sim.csv"], dir.path());
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(dir.path().join("res/sim.csv")).unwrap(), one.stdout);
    let csv = stdout(&one);
    assert!(csv.starts_with("name,n,P,Lambda,sigma2,R,delta0,strategy,mode,trials,errors,p_hat,ci_low,ci_high,seed,spec_hash\n"));
    assert!(csv.contains("simulate:emax,16,4.00000000,1.00000000,0.500000000,0.400000000,"));
}

#[test]
fn bits_flag_converts_rates() {
    let dir = tempfile::tempdir().unwrap();
    let ln2 = std::f64::consts::LN_2;
    let nats = write(
        dir.path(),
        "nats.json",
        &format!(r#"{{{CHANNEL},"code":{{"R":{},"delta0":{}}},"strategy":{{"kind":"zero"}},"trials":50,"seed":2,"message":1}}"#, 0.5 * ln2, 0.1 * ln2),
    );
    let bits = write(
        dir.path(),
        "bits.json",
        &format!(r#"{{{CHANNEL},"code":{{"R":0.5,"delta0":0.1}},"strategy":{{"kind":"zero"}},"trials":50,"seed":2,"message":1}}"#),
    );
    let a = stdout(&avclab(&["simulate", "--config", &nats], dir.path()));
    let b = stdout(&avclab(&["--bits", "simulate", "--config", &bits], dir.path()));
    let fields = |s: &str| s.lines().nth(1).unwrap().split(',').take(14).map(String::from).collect::<Vec<_>>();
    assert_eq!(fields(&a), fields(&b));
    assert!(a.contains(",0.346573590,"));
}

#[test]
fn budget_exhaustion_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "all.json",
        &format!(
            r#"{{{CHANNEL},"code":{{"R":0.6,"delta0":0.05}},"strategy":{{"kind":"zero"}},"trials":10,"seed":1,
            "messageSample":{{"kind":"all"}}}}"#
        ),
    );
    let o = avclab(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn sweep_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        &format!(
            r#"{{{CHANNEL},"code":{{"R":0.2,"delta0":0.05}},"rates":[0.05,0.2,0.4,0.6,0.8],
            "strategy":{{"kind":"gaussianIID"}},"trials":100,"seed":3}}"#
        ),
    );
    let o = avclab(&["sweep", "--config", &cfg, "--out", "sweep.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let plot = ["plot", "--csv", "sweep.csv", "--x", "R", "--y", "p_hat,ci_high"];
    let a = avclab(&plot, dir.path());
    let b = avclab(&plot, dir.path());
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let svg = stdout(&a);
    assert_eq!(svg.matches("<polyline").count(), 2);
    let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    assert_eq!(points.split(' ').count(), 5);
}

#[test]
fn plot_diagnostics_and_empty_tables() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "empty.csv", "name,R,p_hat\n");
    let o = avclab(&["plot", "--csv", "empty.csv", "--x", "R", "--y", "p_hat", "--log-y"], dir.path());
    assert!(o.status.success());
    let svg = stdout(&o);
    assert!(svg.starts_with("<svg") && !svg.contains("<polyline"));

    write(dir.path(), "bad.csv", "name,R,p_hat\na,0.1,0.2\nb,0.2,oops\n");
    let o = avclab(&["plot", "--csv", "bad.csv", "--x", "R", "--y", "p_hat"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("row 3, column 3"), "{}", stderr(&o));
}

#[test]
fn attack_reports_best_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "attack.json",
        r#"{"channel":{"n":3,"P":4,"Lambda":1,"sigma2":0.5},"code":{"R":0.4,"delta0":0.3},"message":1,
            "attack":{"source":"net","epsilon":1.0,"sweeps":1},"trials":40,"seed":3}"#,
    );
    let o = avclab(&["attack", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let best = v["best"]["estimate"]["errors"].as_u64().unwrap();
    let refined = v["refined"]["estimate"]["errors"].as_u64().unwrap();
    assert!(refined >= best);
    assert!(v["candidates"].as_u64().unwrap() > 1);
}

#[test]
fn verify_custom_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "checks.json",
        r#"{"checks":[{"bound":"qBound","y":1.0},{"bound":"sphereCap","n":3,"alpha":0.5}],"samples":20000,"seed":4}"#,
    );
    let o = avclab(&["verify", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.len(), 2);
    assert!(v.iter().all(|r| r["dominated"] == true));
    let bad = write(dir.path(), "bad.json", r#"{"checks":[{"bound":"sphereCap","n":10,"alpha":0.01}]}"#);
    assert_eq!(avclab(&["verify", "--config", &bad], dir.path()).status.code(), Some(2));
}

#[test]
fn experiment_command() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "exp.json",
        r#"{"name":"tiny","kind":"achievability","channel":{"n":12,"P":4,"Lambda":1,"sigma2":0.5},
            "code":{"R":0.15,"delta0":0.06},"rates":[0.15,0.5],"strategies":[{"kind":"gaussianIID"}],
            "trials":50,"seed":9,"output":"out/tiny.csv"}"#,
    );
    let o = avclab(&["experiment", "--spec", &spec], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let written = std::fs::read_to_string(dir.path().join("out/tiny.csv")).unwrap();
    assert_eq!(written.lines().count(), 3);
    let o = avclab(&["--threads", "3", "experiment", "--spec", &spec, "--out", "again.csv"], dir.path());
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("again.csv")).unwrap(), written);

    let converse = write(
        dir.path(),
        "converse.json",
        r#"{"name":"c","kind":"converse","channel":{"n":12,"P":2,"Lambda":1,"sigma2":0.5},
            "code":{"R":0.15,"delta0":0.06},"fakes":2,"trials":10,"seed":1}"#,
    );
    let o = avclab(&["experiment", "--spec", &converse], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("P<=Lambda"));
}
