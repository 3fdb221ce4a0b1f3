use std::process::{Command, Output};

fn perclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perclab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn ising_without_beta_names_the_flag() {
    let o = perclab(&["crossing", "--model", "ising", "--event", "H:4x4"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--beta"), "{}", stderr(&o));
}

#[test]
fn beta_on_bernoulli_is_rejected() {
    let o = perclab(&["crossing", "--beta", "0.3"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--beta"));
}

#[test]
fn unknown_flag_is_an_error() {
    let o = perclab(&["crossing", "--frobnicate", "3"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--frobnicate"));
}

#[test]
fn malformed_event_is_an_error() {
    let o = perclab(&["crossing", "--event", "Q:3x3"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--event"));
}

#[test]
fn exact_crossing_single_square() {
    let o = perclab(&["exact", "crossing", "--nx", "1", "--ny", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "[0, 0, 2, 0, -1]\n");
}

#[test]
fn exact_crossing_json_names_event() {
    let o = perclab(&["exact", "crossing", "--event", "H:1x1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["event"], "H:1x1");
    assert_eq!(v["polynomial"], serde_json::json!([0, 0, 2, 0, -1]));
}

#[test]
fn csv_schema() {
    let o = perclab(&["sweep", "--event", "H:4x4", "--h", "-0.5:0.5:3", "--trials", "200"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "model,beta,h,event,n_or_box,trials,successes,point,ci_low,ci_high,seed"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r.len(), 11);
        assert_eq!(r[0], "bernoulli");
        let (point, lo, hi): (f64, f64, f64) = (r[7].parse().unwrap(), r[8].parse().unwrap(), r[9].parse().unwrap());
        assert!(lo <= point && point <= hi);
    }
}

#[test]
fn json_schema_of_hc() {
    let o = perclab(&["hc", "--n", "4", "--trials", "200", "--tol", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let h = v["h_hat"].as_f64().unwrap();
    let b = v["bracket"].as_array().unwrap();
    assert!(b[0].as_f64().unwrap() <= h && h <= b[1].as_f64().unwrap());
    assert!(v["p_hat"].as_f64().is_some());
}

#[test]
fn sample_record_has_one_spin_per_vertex() {
    let o = perclab(&["sample", "--box", "0:3,0:2", "--model", "ising", "--beta", "0.2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let spins = v["spins"].as_array().unwrap();
    assert_eq!(spins.len(), 12);
    assert!(spins.iter().all(|s| s == 1 || s == -1));
}

#[test]
fn worker_count_does_not_change_output() {
    let args = ["crossing", "--event", "H:6x6", "--trials", "500", "--seed", "7"];
    let one = perclab(&[&args[..], &["--workers", "1"]].concat());
    let four = perclab(&[&args[..], &["--workers", "4"]].concat());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn dumped_plan_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let args = [
        "mixing", "--model", "ising", "--beta", "0.3", "--separations", "2,4", "--trials", "300", "--seed", "0x2a",
    ];
    let dumped = perclab(&[&args[..], &["--dump-plan"]].concat());
    assert!(dumped.status.success());
    std::fs::write(&plan, &dumped.stdout).unwrap();

    let direct = perclab(&args);
    let replay = perclab(&["--plan", plan.to_str().unwrap()]);
    assert!(replay.status.success(), "{}", stderr(&replay));
    assert_eq!(direct.stdout, replay.stdout);

    let reparsed: perclab_cli::RunPlan = serde_json::from_slice(&dumped.stdout).unwrap();
    let again = serde_json::to_string_pretty(&reparsed).unwrap() + "\n";
    assert_eq!(again.as_bytes(), &dumped.stdout[..]);
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("est.csv");
    let args = ["crossing", "--event", "V:3x3", "--trials", "300"];
    let o = perclab(&[&args[..], &["--out", path.to_str().unwrap()]].concat());
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), perclab(&args).stdout);
}

#[test]
fn runtime_error_is_json_on_stderr() {
    // box too large for exact enumeration
    let o = perclab(&["exact", "crossing", "--nx", "6", "--ny", "6"]);
    assert!(!o.status.success());
    let v: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert!(v["error"].as_str().is_some());
}

#[test]
fn parse_is_pure() {
    let a = perclab_cli::parse(["perclab", "tails", "--half", "8", "--h", "-0.5"]).unwrap();
    let b = perclab_cli::parse(["perclab", "tails", "--h", "-0.5", "--half", "8"]).unwrap();
    assert_eq!(a, b);
}

#[test]
fn grids() {
    assert_eq!(perclab_cli::parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
    assert_eq!(perclab_cli::parse_grid("-0.25").unwrap(), vec![-0.25]);
    assert!(perclab_cli::parse_grid("1:0:3").is_err());
    assert!(perclab_cli::parse_grid("0:1").is_err());
}
