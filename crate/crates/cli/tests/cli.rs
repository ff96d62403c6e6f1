use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_g2nilflow"));
    cmd.args(args).env_remove("G2NILFLOW_TOL");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn list_shows_twelve_algebras_with_flags() {
    let o = run(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 12);
    let row = |key: &str| *rows.iter().find(|r| r.split_whitespace().next() == Some(key)).unwrap();
    assert!(row("n9").split_whitespace().any(|w| w == "no"));
    assert!(row("n10").contains("open-form-unknown"));
    assert!(row("n2").split_whitespace().nth(2) == Some("yes"));

    let o = run(&["list", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 12);
    assert_eq!(arr[8]["soliton"], "no");
    assert_eq!(arr[9]["soliton"], "open-form-unknown");
    assert_eq!(arr[11]["form_key"], "n12-orthonormal");

    let o = run(&["list", "--all", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.as_array().unwrap().len() > 12);
}

#[test]
fn flow_n2_matches_its_closed_form() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("n2.csv");
    let o = run(&["flow", "--algebra", "n2", "--t-end", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv(&out);
    assert_eq!(header.len(), 36);
    let (t, c) = (column(&header, "t"), column(&header, "c_123"));
    assert_eq!(rows[0][t], 0.0);
    assert_eq!(rows.last().unwrap()[t], 10.0);
    for r in &rows {
        let want = (10.0 * r[t] / 3.0 + 1.0).powf(0.6);
        assert!((r[c] - want).abs() < 1e-8 * want, "t = {}", r[t]);
    }
    let events: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("n2.csv.events.json")).unwrap()).unwrap();
    assert_eq!(events[0]["type"], "completed");
}

#[test]
fn flow_n2_backwards_blows_up() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("back.csv");
    let o = run(&["flow", "--algebra", "n2", "--t-end", "-1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("blow-up"));
    let (header, rows) = read_csv(&out);
    let t = column(&header, "t");
    let last = rows.last().unwrap()[t];
    assert!(last > -0.3 && last < -0.29, "{last}");
    let events: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("back.csv.events.json")).unwrap()).unwrap();
    assert_eq!(events[0]["type"], "blowup");
    assert!((events[0]["t"].as_f64().unwrap() + 0.3).abs() < 1e-6);
}

#[test]
fn flow_n12_curvature_column_decays_like_one_over_t_plus_3() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("n12.csv");
    let o = run(&[
        "flow", "--algebra", "n12", "--t-end", "100", "--emit", "riem_sup", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("n12-orthonormal"));
    let (header, rows) = read_csv(&out);
    let (t, r) = (column(&header, "t"), column(&header, "riem_sup"));
    let k = rows[0][r] * 3.0;
    for row in &rows {
        assert!((row[r] * (row[t] + 3.0) - k).abs() < 1e-6, "t = {}", row[t]);
    }
}

#[test]
fn flow_json_format() {
    let o = run(&["flow", "--algebra", "n2", "--t-end", "1", "--format", "json", "--emit", "lambda"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["columns"].as_array().unwrap().len(), 37);
    let first = &v["rows"][0];
    assert!((first[36].as_f64().unwrap() + 2.0).abs() < 1e-12);
    assert_eq!(v["events"][0]["type"], "completed");
}

#[test]
fn invalid_initial_forms_name_the_failed_precondition() {
    let dir = tempdir().unwrap();
    let not_closed = dir.path().join("open.json");
    std::fs::write(&not_closed, r#"[{"idx":[5,6,7],"c":1.0}]"#).unwrap();
    let o = run(&["flow", "--algebra", "n2", "--form", not_closed.to_str().unwrap(), "--t-end", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("closedness"), "{}", stderr(&o));

    let degenerate = dir.path().join("flat.json");
    std::fs::write(&degenerate, r#"[{"idx":[1,2,3],"c":1.0}]"#).unwrap();
    let o = run(&["flow", "--algebra", "n2", "--form", degenerate.to_str().unwrap(), "--t-end", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("positivity"), "{}", stderr(&o));

    let o = run(&["flow", "--algebra", "n3", "--t-end", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["flow", "--algebra", "n99", "--t-end", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["flow", "--algebra", "n2", "--t-end", "inf"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn algebra_and_form_from_files() {
    let dir = tempdir().unwrap();
    let alg = dir.path().join("n2.json");
    std::fs::write(
        &alg,
        r#"{"name":"n2-file","d":[{"k":5,"terms":[{"i":1,"j":2,"c":1.0}]},{"k":6,"terms":[{"i":1,"j":3,"c":1.0}]}]}"#,
    )
    .unwrap();
    let form = dir.path().join("phi.json");
    std::fs::write(
        &form,
        r#"[{"idx":[1,2,3],"c":1},{"idx":[1,4,5],"c":1},{"idx":[1,6,7],"c":1},{"idx":[2,4,6],"c":1},{"idx":[2,5,7],"c":-1},{"idx":[3,4,7],"c":-1},{"idx":[3,5,6],"c":-1}]"#,
    )
    .unwrap();
    let o = run(&["metric", "--algebra", alg.to_str().unwrap(), "--form", form.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["flow", "--algebra", alg.to_str().unwrap(), "--t-end", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tolerance_from_the_environment() {
    let o = run_env(&["flow", "--algebra", "n2", "--t-end", "1"], &[("G2NILFLOW_TOL", "abc")]);
    assert_eq!(o.status.code(), Some(2));
    let o = run_env(&["flow", "--algebra", "n2", "--t-end", "1"], &[("G2NILFLOW_TOL", "1e-6")]);
    assert_eq!(o.status.code(), Some(0));
    let o = run_env(&["flow", "--algebra", "n2", "--t-end", "1"], &[("G2NILFLOW_TOL", "0")]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["flow", "--algebra", "n2", "--t-end", "1", "--tol", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = run(&["flow", "--algebra", "n4", "--t-end", "5", "--emit", "riem_sup,lambda", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let s1 = run(&["search", "--algebra", "n8-nilsoliton", "--restarts", "10", "--format", "json"]);
    let s2 = run(&["search", "--algebra", "n8-nilsoliton", "--restarts", "10", "--format", "json"]);
    assert_eq!(s1.stdout, s2.stdout);
}

#[test]
fn search_reports_feasible_and_infeasible_algebras() {
    let o = run(&["search", "--algebra", "n2", "--restarts", "200", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["feasible"], true);
    assert!(v["best_residual"].as_f64().unwrap() < 1e-9);

    let o = run(&["search", "--algebra", "n3", "--restarts", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("dim Z3") && out.contains("no feasible point found"));
    assert!(out.contains("not a proof"));
    let o = run(&["search", "--algebra", "n3", "--restarts", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_shot_commands() {
    let o = run(&["metric", "--algebra", "n6"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let g: Vec<f64> = serde_json::from_value(v["G"].clone()).unwrap();
    for i in 0..7 {
        for j in 0..7 {
            assert!((g[7 * i + j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }
    let o = run(&["ricci", "--algebra", "n11-orthonormal"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["diagonal"][6].as_f64().unwrap() - 5.0 / 52.0).abs() < 1e-12);
    let o = run(&["soliton", "--algebra", "n7-nilsoliton"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["lambda"].as_f64().unwrap() + 4.0).abs() < 1e-9);
    assert_eq!(v["feasible"], true);
    let o = run(&["tmin"]);
    assert_eq!(stdout(&o).trim(), "-0.241496048120");
}

#[test]
fn verify_paper_only_flow_runs_the_flow_checks() {
    let o = run(&["verify-paper", "--only", "flow"]);
    let out = stdout(&o);
    let ids: Vec<u32> = out
        .lines()
        .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ids, vec![5, 6, 7, 8, 9, 10]);
    let any_failed = out.lines().any(|l| l.starts_with("FAIL"));
    assert_eq!(o.status.code(), Some(if any_failed { 3 } else { 0 }));

    let o = run(&["verify-paper", "--only", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_paper_catches_a_sign_error_in_phi6() {
    let dir = tempdir().unwrap();
    let mutated = dir.path().join("phi6.json");
    // φ6 with the sign of its e^{347} term flipped.
    std::fs::write(
        &mutated,
        r#"[{"idx":[1,2,3],"c":1},{"idx":[1,4,5],"c":1},{"idx":[1,6,7],"c":1},{"idx":[2,5,7],"c":1},{"idx":[2,4,6],"c":-1},{"idx":[3,4,7],"c":-1},{"idx":[3,5,6],"c":1}]"#,
    )
    .unwrap();
    let o = run(&["verify-paper", "--only", "ricci", "--algebra", "n6", "--form", mutated.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("ricci-goldens"), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL  3 ricci-goldens"));

    let o = run(&["verify-paper", "--only", "ricci"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn verify_paper_passes_on_a_fresh_build() {
    let o = run(&["verify-paper"]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
}
