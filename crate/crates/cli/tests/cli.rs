use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_upsilon-lab"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn upsilon-lab");
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Report lines with the wall-clock field blanked.
fn without_runtime(text: &str) -> Vec<serde_json::Value> {
    text.lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["runtime_ms"] = serde_json::Value::Null;
            v
        })
        .collect()
}

#[test]
fn quadruple_run_matches_hand_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    run_ok(
        bin()
            .args(["run", "--config"])
            .arg(fixture("quadruple.toml"))
            .arg("--out")
            .arg(&out),
    );
    let lines = without_runtime(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(lines.len(), 1);
    let r = &lines[0];
    assert_eq!(r["check_name"], "quadruple");
    assert_eq!(r["bound"], 14.0);
    assert_eq!(r["statistic"], 2.0);
    assert_eq!(r["margin"], 12.0);
    assert_eq!(r["passed"], true);
}

#[test]
fn reports_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let cfg = fixture("suite.toml");
    let sa = bin()
        .args(["run", "--jobs", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&a)
        .status()
        .unwrap();
    let sb = bin()
        .args(["run", "--jobs", "4", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .status()
        .unwrap();
    assert_eq!(sa.code(), sb.code());
    let ta = std::fs::read_to_string(&a).unwrap();
    let tb = std::fs::read_to_string(&b).unwrap();
    assert_eq!(ta.lines().count(), 4);
    assert_eq!(without_runtime(&ta), without_runtime(&tb));
}

#[test]
fn seed_flag_overrides_the_run_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let cfg = fixture("suite.toml");
    bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&a)
        .status()
        .unwrap();
    bin()
        .args(["run", "--seed", "99", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .status()
        .unwrap();
    let ra = without_runtime(&std::fs::read_to_string(&a).unwrap());
    let rb = without_runtime(&std::fs::read_to_string(&b).unwrap());
    assert_ne!(ra[1]["statistic"], rb[1]["statistic"]);
}

#[test]
fn empty_check_list_writes_an_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "seed = 3\n[space]\nkind = \"hyperbolic2\"\n").unwrap();
    let out = dir.path().join("r.jsonl");
    run_ok(bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn malformed_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "seed = 1\n[space]\nkind = \"euclidean\"\n",
        "seed = 1\n[space]\nkind = \"euclidean\"\ndim = 1\n[[checks]]\nname = \"unknown_check\"\n",
        "seed = 1\nbogus = 2\n[space]\nkind = \"euclidean\"\ndim = 1\n",
        "this is not toml",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = dir.path().join(format!("bad{i}.toml"));
        std::fs::write(&cfg, text).unwrap();
        let st = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
        assert_eq!(st.status.code(), Some(2), "case {i}");
        assert!(!st.stderr.is_empty());
    }
    let missing = bin()
        .args(["run", "--config", "/nonexistent/run.toml"])
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(2));
}

#[test]
fn failing_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // the central difference of t -> x^2/(2t) on a coarse grid leaves a nonzero residual
    let cfg = dir.path().join("fail.toml");
    std::fs::write(
        &cfg,
        "seed = 1\n[space]\nkind = \"euclidean\"\ndim = 1\n[[checks]]\nname = \"hamilton_jacobi\"\nbound = 0.0\ngamma = { points = [[0.1]] }\n\
         t_grid = [0.5, 0.6, 0.7]\nfunctional = { kind = \"distance_sum\", center = [0.0] }\n",
    )
    .unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    let report = without_runtime(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(report[0]["passed"], false, "{:?}", report[0]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dist_on_fixtures() {
    let out = run_ok(bin().arg("dist").arg(fixture("a.csv")).arg(fixture("b.csv")));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "d2 = 2\nd = 1.4142135623730951\n"
    );

    let same = run_ok(bin().arg("dist").arg(fixture("a.csv")).arg(fixture("a.csv")));
    assert_eq!(String::from_utf8(same.stdout).unwrap(), "d2 = 0\nd = 0\n");

    let inf = run_ok(bin().arg("dist").arg(fixture("a.csv")).arg(fixture("single.csv")));
    assert_eq!(String::from_utf8(inf.stdout).unwrap(), "d2 = inf\nd = inf\n");

    let json = run_ok(
        bin()
            .args(["dist", "--json"])
            .arg(fixture("a.csv"))
            .arg(fixture("b.csv")),
    );
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["d2"], 2.0);
    assert_eq!(v["pairs"], serde_json::json!([[0, 0], [1, 1]]));
}

#[test]
fn sample_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    run_ok(
        bin()
            .args([
                "sample",
                "--space",
                r#"{"kind":"euclidean","dim":2}"#,
                "--radius",
                "2",
                "--intensity",
                "1.5",
                "--seed",
                "42",
                "--out",
            ])
            .arg(&out),
    );
    let got = std::fs::read_to_string(&out).unwrap();
    let want = std::fs::read_to_string(fixture("sample_seed42.csv")).unwrap();
    assert_eq!(got, want);
}

#[test]
fn sample_seeds_differ_and_empty_regions_give_a_header() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(format!("s{seed}.csv"));
        run_ok(
            bin()
                .args([
                    "sample",
                    "--space",
                    r#"{"kind":"hyperbolic2"}"#,
                    "--radius",
                    "1.5",
                    "--intensity",
                    "3",
                ])
                .args(["--seed", seed, "--out"])
                .arg(&out),
        );
        texts.push(std::fs::read_to_string(&out).unwrap());
    }
    assert_ne!(texts[0], texts[1]);

    let out = dir.path().join("empty.csv");
    run_ok(
        bin()
            .args([
                "sample",
                "--space",
                r#"{"kind":"euclidean","dim":2}"#,
                "--radius",
                "0",
                "--intensity",
                "5",
            ])
            .args(["--seed", "1", "--out"])
            .arg(&out),
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2, "{text}");

    let json_out = dir.path().join("box.json");
    run_ok(
        bin()
            .args(["sample", "--space", r#"{"kind":"euclidean","dim":2}"#])
            .args(["--lo=-1,-1", "--hi=1,2", "--intensity", "2", "--seed", "5", "--out"])
            .arg(&json_out),
    );
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    for p in v["points"].as_array().unwrap() {
        let (x, y) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
        assert!((-1.0..=1.0).contains(&x) && (-1.0..=2.0).contains(&y));
    }
}

#[test]
fn evolve_writes_one_row_per_point_and_time() {
    let out = run_ok(bin().args(["evolve", "--config"]).arg(fixture("a.csv")).args([
        "--times",
        "0,0.1,0.3",
        "--samples",
        "3",
        "--seed",
        "8",
    ]));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sample_id,time,point_id,x0"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3 * 3 * 2);
    assert_eq!(rows[0], "0,0.0,0,0.0");
    assert_eq!(rows[1], "0,0.0,1,2.0");
}

#[test]
fn hopflax_reports_the_closed_form_value() {
    // Q_t|x| = |x| - t/2 for |x| > t
    let out = run_ok(bin().args(["hopflax", "--config"]).arg(fixture("single.csv")).args([
        "--functional",
        r#"{"kind":"distance_sum","center":[0.0]}"#,
        "--t",
        "0.5",
    ]));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.75).abs() < 1e-9);
    assert_eq!(v["converged"], true);
}
