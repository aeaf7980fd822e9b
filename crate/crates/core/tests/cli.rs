use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netrmab"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |o: Output| assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    ok(run(d, &["gen", "--preset", "synthetic", "--m", "20", "--seed", "3", "-o", "inst.json"]));
    assert!(d.join("inst.json.manifest.json").exists());
    ok(run(d, &["validate", "inst.json"]));

    ok(run(d, &["plan", "inst.json", "--tmin", "2", "--horizon", "12", "-o", "periods.csv,schedule.csv"]));
    assert_eq!(header(&d.join("periods.csv")), "location_id,period,table_value");
    assert_eq!(header(&d.join("schedule.csv")), "round,pulled_ids");
    assert_eq!(fs::read_to_string(d.join("schedule.csv")).unwrap().lines().count(), 13);
    ok(run(d, &["plan", "inst.json", "--alpha", "-1", "--fmin", "0.25", "-o", "p2.csv,s2.csv"]));

    ok(run(d, &["simulate", "inst.json", "--policy", "myopic", "--horizon", "10", "--reps", "3", "--seed", "1", "-o", "stats.csv"]));
    assert_eq!(header(&d.join("stats.csv")), "policy,mean,ci_half_width,reps,horizon,seed");

    ok(run(d, &["compare", "inst.json", "--budgets", "1,2", "--horizon", "10", "--reps", "2", "-o", "results.csv"]));
    assert_eq!(fs::read_to_string(d.join("results.csv")).unwrap().lines().count(), 9);

    ok(run(d, &["perturb", "inst.json", "--fraction", "0.15", "--seed", "2", "-o", "pert.json"]));
    ok(run(d, &["validate", "pert.json"]));
}

#[test]
fn invalid_instance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"budget": 1, "max_period": 3,
        "locations": [{"id": 0, "population": 10, "initial_good": 5,
                       "p_a_gb": 0.05, "p_a_bg": 0.5, "p_p_gb": 0.2, "p_p_bg": 0.05}],
        "commute": [{"at": 0, "home": 0, "weight": 0.8}]}"#;
    fs::write(dir.path().join("bad.json"), text).unwrap();
    let o = run(dir.path(), &["validate", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("column-stochastic @ column 0"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["simulate"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["gen", "--preset", "lunar", "-o", "x.json"]).status.code(), Some(2));
}
