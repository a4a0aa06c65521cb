use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphere-rigidity"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn constants_at_default_theta() {
    let out = cli(&["constants"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["c"].as_f64().unwrap() - 123.0226).abs() < 1e-3);
    assert_eq!(cli(&["constants", "--theta", "5"]).status.code(), Some(2));
}

#[test]
fn generate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("u.txt");
    let report = dir.path().join("r.json");
    let out = cli(&[
        "generate",
        "--family",
        "perturbed-moebius",
        "--eps",
        "0.02",
        "--seed",
        "3",
        "--ntheta",
        "24",
        "--out",
        path(&map),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(fs::read_to_string(&map)
        .unwrap()
        .starts_with("#spheremap v1 n_theta=24 n_phi=48"));

    let out = cli(&["analyze", "--input", path(&map), "--out", path(&report)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!((v["degree"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(v["ratio"].as_f64().unwrap() <= v["c"].as_f64().unwrap());
    assert!(v.get("Lambda_sq").is_some() && v.get("detA").is_some());

    let again = cli(&[
        "generate",
        "--family",
        "perturbed-moebius",
        "--eps",
        "0.02",
        "--seed",
        "3",
        "--ntheta",
        "24",
        "--out",
        path(&dir.path().join("v.txt")),
    ]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(
        fs::read(&map).unwrap(),
        fs::read(dir.path().join("v.txt")).unwrap()
    );
}

#[test]
fn analyze_reflected_map_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("u.txt");
    let out = cli(&[
        "generate",
        "--family",
        "exact-moebius",
        "--ntheta",
        "16",
        "--out",
        path(&map),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&map).unwrap();
    let mut flipped = String::new();
    for line in text.lines() {
        if line.starts_with('#') {
            flipped.push_str(line);
        } else {
            let mut f: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
            f[2] = if let Some(rest) = f[2].strip_prefix('-') {
                rest.to_owned()
            } else {
                format!("-{}", f[2])
            };
            flipped.push_str(&f.join(" "));
        }
        flipped.push('\n');
    }
    let refl = dir.path().join("refl.txt");
    fs::write(&refl, flipped).unwrap();
    let out = cli(&["analyze", "--input", path(&refl)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["reflected"], serde_json::Value::Bool(true));

    let junk = dir.path().join("junk.txt");
    fs::write(&junk, "not a map").unwrap();
    assert_eq!(
        cli(&["analyze", "--input", path(&junk)]).status.code(),
        Some(2)
    );
    assert_eq!(
        cli(&["analyze", "--input", path(&dir.path().join("missing"))])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn center_prints_transform() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("u.txt");
    cli(&[
        "generate",
        "--family",
        "near-bubble",
        "--eps",
        "0.05",
        "--ntheta",
        "24",
        "--out",
        path(&map),
    ]);
    let out = cli(&["center", "--input", path(&map)]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let residual: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("residual "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual <= 1e-8);
    assert!(text.starts_with("psi "));
}

#[test]
fn sweep_writes_csv_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let reports = dir.path().join("reports");
    let csv = dir.path().join("out.csv");
    let config = dir.path().join("cfg.json");
    fs::write(
        &config,
        format!(
            r#"{{"grids": [16], "families": ["perturbed-moebius", "exact-moebius"], "eps": [0.1, 0.05],
                "seed": 5, "output": {{"reports": {:?}}}}}"#,
            path(&reports)
        ),
    )
    .unwrap();
    let out = cli(&["sweep", "--config", path(&config), "--out", path(&csv)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    assert!(
        text.starts_with("family,eps,n_theta,deficit,lhs,ratio,identity_residual,status,in_gate")
    );
    assert_eq!(text.lines().count(), 5);
    assert_eq!(fs::read_dir(&reports).unwrap().count(), 4);

    let again = cli(&["sweep", "--config", path(&config)]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn sweep_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    fs::write(
        &config,
        r#"{"grids": [16, 12], "families": ["exact-moebius"], "eps": [0.1]}"#,
    )
    .unwrap();
    assert_eq!(
        cli(&["sweep", "--config", path(&config)]).status.code(),
        Some(2)
    );
    fs::write(
        &config,
        r#"{"grids": [16], "families": ["square"], "eps": [0.1]}"#,
    )
    .unwrap();
    assert_eq!(
        cli(&["sweep", "--config", path(&config)]).status.code(),
        Some(2)
    );
}

#[test]
fn converge_exit_codes() {
    let out = cli(&[
        "converge",
        "--family",
        "exact-moebius",
        "--grids",
        "12,16,24",
        "--lambda-range",
        "1",
        "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(stdout(&out).lines().count(), 4);

    let out = cli(&[
        "converge",
        "--family",
        "near-bubble",
        "--grids",
        "24,32,48",
        "--lambda-range",
        "0.1",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("anomaly"));

    assert_eq!(
        cli(&["converge", "--family", "exact-moebius", "--grids", "12,16"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(cli(&[]).status.code(), Some(2));
    assert_eq!(
        cli(&["generate", "--family", "nope", "--out", "x"])
            .status
            .code(),
        Some(2)
    );
}
