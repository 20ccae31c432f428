use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ctr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

const SP: &str = r#"{"n":2,"m":2,"prefs":[[0.5,0.5],[0,1]]}"#;
const CORE_GROUPS: &str = "groups:3:1,0,0;3:.5,.5,0;4:0,0,1";

#[test]
fn solve_sp_example() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "sp.json", SP);
    let out = ctr(&["solve", "--profile", &p, "--rule", "nash"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let x = floats(&v["allocation"]);
    assert!(
        (x[0] - 0.25).abs() < 1e-6 && (x[1] - 0.75).abs() < 1e-6,
        "{x:?}"
    );
    assert_eq!(v["converged"], true);
    assert!(v["mrsGap"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn unanimous_profile_returns_the_ideal_for_every_rule() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "u.json",
        r#"{"n":3,"m":3,"prefs":[[0.2,0.3,0.5],[0.2,0.3,0.5],[0.2,0.3,0.5]]}"#,
    );
    for rule in [
        "nash",
        "power:0.5",
        "negpower:2",
        "negexp:1",
        "quad",
        "util",
        "egal",
    ] {
        let out = ctr(&["solve", "--profile", &p, "--rule", rule]);
        assert_eq!(code(&out), 0, "{rule}");
        let x = floats(&json(&out)["allocation"]);
        for (a, b) in x.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-6, "{rule}: {x:?}");
        }
    }
}

#[test]
fn solve_exit_codes() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "sp.json", SP);
    assert_eq!(code(&ctr(&["solve", "--profile", "/nonexistent.json"])), 1);
    assert_eq!(
        code(&ctr(&["solve", "--profile", &p, "--rule", "bogus"])),
        1
    );
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"n":1,"m":2,"prefs":[[0.5,0.4]]}"#,
    );
    assert_eq!(code(&ctr(&["solve", "--profile", &bad])), 1);
    let garbled = write(dir.path(), "garbled.json", "{not json");
    assert_eq!(code(&ctr(&["solve", "--profile", &garbled])), 1);
}

#[test]
fn slightly_off_rows_are_renormalized() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "p.json",
        r#"{"n":1,"m":2,"prefs":[[0.5000004,0.5]]}"#,
    );
    let out = ctr(&["solve", "--profile", &p]);
    assert_eq!(code(&out), 0);
    let x = floats(&json(&out)["allocation"]);
    assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn solve_writes_to_out_path() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "sp.json", SP);
    let out_path = dir.path().join("report.json");
    let out = ctr(&[
        "solve",
        "--profile",
        &p,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert!(v["allocation"].is_array());
}

#[test]
fn gen_core_example_and_solve() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("core.json");
    let p = path.to_str().unwrap();
    assert_eq!(code(&ctr(&["gen", "--kind", CORE_GROUPS, "--out", p])), 0);
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(file["n"], 10);
    assert_eq!(file["m"], 3);
    let out = ctr(&["solve", "--profile", p]);
    let x = floats(&json(&out)["allocation"]);
    for (a, b) in x.iter().zip([0.5, 0.0, 0.5]) {
        assert!((a - b).abs() < 1e-3, "{x:?}");
    }
}

#[test]
fn check_core_example() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("core.json");
    let p = path.to_str().unwrap();
    ctr(&["gen", "--kind", CORE_GROUPS, "--out", p]);
    let out = ctr(&["check", "--profile", p, "--axioms", "rr,afs,core"]);
    assert_eq!(code(&out), 2);
    let reports = json(&out);
    let status: Vec<&str> = reports
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["status"].as_str().unwrap())
        .collect();
    assert_eq!(status, ["holds", "holds", "violated"]);
    let w = &reports[2]["witness"];
    assert_eq!(w["type"], "deviation");
    assert!((w["budget"].as_f64().unwrap() - 0.6).abs() < 1e-12);

    let ok = ctr(&["check", "--profile", p, "--axioms", "rr,ifs,afs,eff"]);
    assert_eq!(code(&ok), 0);
}

#[test]
fn check_with_allocation_file() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "sp.json", SP);
    let x = write(dir.path(), "x.json", "[1.0, 0.0]");
    let out = ctr(&[
        "check",
        "--profile",
        &p,
        "--allocation",
        &x,
        "--axioms",
        "rr",
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)[0]["witness"]["type"], "range");
    let wrapped = write(dir.path(), "y.json", r#"{"allocation":[0.25,0.75]}"#);
    let out = ctr(&[
        "check",
        "--profile",
        &p,
        "--allocation",
        &wrapped,
        "--axioms",
        "rr,prop",
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn check_strategyproofness_probe_finds_the_counterexample() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "sp.json", SP);
    let out = ctr(&["check", "--profile", &p, "--axioms", "sp,par"]);
    assert_eq!(code(&out), 2);
    let v = json(&out);
    let w = &v[0]["witness"];
    let gain = w["manipulated"].as_f64().unwrap() - w["truthful"].as_f64().unwrap();
    assert!(gain >= 0.25 - 1e-3, "{w}");
    assert_eq!(v[1]["status"], "holds");
}

#[test]
fn check_guard_exits_3() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("big.json");
    let p = path.to_str().unwrap();
    ctr(&[
        "gen",
        "--kind",
        "dirichlet:1",
        "--n",
        "13",
        "--m",
        "3",
        "--seed",
        "1",
        "--out",
        p,
    ]);
    assert_eq!(
        code(&ctr(&["check", "--profile", p, "--axioms", "core"])),
        3
    );
}

#[test]
fn bounds_examples() {
    let out = ctr(&[
        "bounds", "--m", "3", "--n", "100", "--lambda", "10", "--which", "gamma",
    ]);
    assert_eq!(code(&out), 0);
    let g = json(&out)[0]["value"].as_f64().unwrap();
    assert!((g - 0.474).abs() < 1e-3, "{g}");

    let out = ctr(&["bounds", "--m", "3", "--lambda", "1", "--which", "wl"]);
    assert!((json(&out)[0]["value"].as_f64().unwrap() - 0.6).abs() < 1e-12);

    let out = ctr(&[
        "bounds",
        "--m",
        "5",
        "--n",
        "50",
        "--lambda",
        "1e6",
        "--which",
        "ifs-share",
    ]);
    assert!((json(&out)[0]["value"].as_f64().unwrap() - 0.2).abs() < 1e-4);

    let all = ctr(&[
        "bounds", "--m", "3", "--n", "10", "--lambda", "0.5", "--alpha", "0.3",
    ]);
    assert_eq!(json(&all).as_array().unwrap().len(), 7);

    assert_eq!(
        code(&ctr(&[
            "bounds",
            "--m",
            "3",
            "--lambda=-1",
            "--which",
            "wl"
        ])),
        1
    );
    assert_eq!(
        code(&ctr(&[
            "bounds", "--m", "3", "--lambda", "1", "--which", "nope"
        ])),
        1
    );
}

#[test]
fn gen_round_trip_is_bit_identical() {
    let dir = TempDir::new().unwrap();
    for kind in ["single-minded", "dirichlet:0.5", "dirichlet:3"] {
        let path = dir.path().join("g.json");
        let p = path.to_str().unwrap();
        assert_eq!(
            code(&ctr(&[
                "gen", "--kind", kind, "--n", "7", "--m", "4", "--seed", "11", "--out", p
            ])),
            0
        );
        let written = std::fs::read_to_string(&path).unwrap();
        let file = ctr_cli::format::ProfileFile::load(&path).unwrap();
        let profile = file.to_profile().unwrap();
        let original: Value = serde_json::from_str(&written).unwrap();
        let rows = original["prefs"].as_array().unwrap();
        for (i, row) in rows.iter().enumerate() {
            let bits: Vec<u64> = floats(row).iter().map(|v| v.to_bits()).collect();
            let loaded: Vec<u64> = profile.row(i).iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits, loaded, "{kind} row {i}");
        }
        // same seed, same bytes
        let again = dir.path().join("h.json");
        ctr(&[
            "gen",
            "--kind",
            kind,
            "--n",
            "7",
            "--m",
            "4",
            "--seed",
            "11",
            "--out",
            again.to_str().unwrap(),
        ]);
        assert_eq!(written, std::fs::read_to_string(again).unwrap());
    }
}

#[test]
fn single_minded_rows_are_unit_vectors() {
    let out = ctr(&[
        "gen",
        "--kind",
        "single-minded",
        "--n",
        "4",
        "--m",
        "2",
        "--seed",
        "5",
    ]);
    assert_eq!(code(&out), 0);
    for row in json(&out)["prefs"].as_array().unwrap() {
        let mut r = floats(row);
        r.sort_by(f64::total_cmp);
        assert_eq!(r, [0.0, 1.0]);
    }
    assert_eq!(
        code(&ctr(&[
            "gen",
            "--kind",
            "dirichlet:1",
            "--n",
            "0",
            "--m",
            "3"
        ])),
        1
    );
    assert_eq!(code(&ctr(&["gen", "--kind", "weird"])), 1);
}

fn sweep_dir_with_profiles(dir: &Path) {
    for (name, seed) in [("a.json", "1"), ("b.json", "2")] {
        let p = dir.join(name);
        ctr(&[
            "gen",
            "--kind",
            "dirichlet:1",
            "--n",
            "5",
            "--m",
            "3",
            "--seed",
            seed,
            "--out",
            p.to_str().unwrap(),
        ]);
    }
}

#[test]
fn sweep_rows_and_determinism() {
    let dir = TempDir::new().unwrap();
    sweep_dir_with_profiles(dir.path());
    let d = dir.path().to_str().unwrap();
    let first = ctr(&["sweep", "--profile", d, "--lambda", "0.5,1,2"]);
    assert_eq!(
        code(&first),
        0,
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let second = ctr(&["sweep", "--profile", d, "--lambda", "0.5,1,2"]);
    assert_eq!(first.stdout, second.stdout);

    let text = String::from_utf8(first.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda,rule,m,n,seed,wl_emp,wl_bound,el_emp,el_bound,min_share,min_share_bound,afs_worst"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0][4], "1");
    assert_eq!(rows[3][4], "2");
    for row in &rows {
        let val = |k: usize| row[k].parse::<f64>().unwrap();
        assert!(val(5) <= val(6) + 1e-6, "welfare loss above bound: {row:?}");
        assert!(val(7) <= val(8) + 1e-6, "egalitarian loss above γ: {row:?}");
        assert!(val(9) >= val(10) - 1e-6, "min share below bound: {row:?}");
        if row[0] == "1" {
            assert_eq!(row[1], "nash");
            assert!(val(11) >= 1.0 - 1e-9, "AFS ratio {row:?}");
        }
    }
    assert_eq!(rows[0][1], "power:0.5");
    assert_eq!(rows[2][1], "negpower:1");
}

#[test]
fn sweep_geometric_grid_and_out_file() {
    let dir = TempDir::new().unwrap();
    sweep_dir_with_profiles(dir.path());
    let csv = dir.path().join("out.csv");
    let out = ctr(&[
        "sweep",
        "--profile",
        dir.path().to_str().unwrap(),
        "--lambda",
        "0.1:10:5",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(csv).unwrap();
    let lambdas: Vec<&str> = text
        .lines()
        .skip(1)
        .take(5)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        lambdas,
        ["0.1", "0.316227766017", "1", "3.16227766017", "10"]
    );
}

#[test]
fn sweep_empty_directory_prints_header() {
    let dir = TempDir::new().unwrap();
    let out = ctr(&["sweep", "--profile", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "lambda,rule,m,n,seed,wl_emp,wl_bound,el_emp,el_bound,min_share,min_share_bound,afs_worst\n"
    );
    assert_eq!(code(&ctr(&["sweep", "--profile", "/nonexistent-dir"])), 1);
    assert_eq!(
        code(&ctr(&[
            "sweep",
            "--profile",
            dir.path().to_str().unwrap(),
            "--rule",
            "other"
        ])),
        1
    );
}

#[test]
fn oracle_verify_passes_and_guards() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "sp.json", SP);
    let out = ctr(&[
        "oracle-verify",
        "--profile",
        &p,
        "--rule",
        "nash",
        "--resolution",
        "0.01",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["gap"].as_f64().unwrap() <= v["tolerance"].as_f64().unwrap());

    let u = write(
        dir.path(),
        "u.json",
        r#"{"n":2,"m":3,"prefs":[[0.2,0.3,0.5],[0.2,0.3,0.5]]}"#,
    );
    for rule in ["nash", "negpower:2", "util", "egal"] {
        let v = json(&ctr(&["oracle-verify", "--profile", &u, "--rule", rule]));
        assert!(v["gap"].as_f64().unwrap().abs() < 1e-9, "{rule}: {v}");
    }

    let wide = write(
        dir.path(),
        "m5.json",
        r#"{"n":1,"m":5,"prefs":[[0.2,0.2,0.2,0.2,0.2]]}"#,
    );
    assert_eq!(code(&ctr(&["oracle-verify", "--profile", &wide])), 3);

    let guarded = Command::new(env!("CARGO_BIN_EXE_ctr"))
        .args(["oracle-verify", "--profile", &u])
        .env("CTR_MAX_GRID", "10")
        .output()
        .unwrap();
    assert_eq!(code(&guarded), 3);
}

#[test]
fn oracle_verify_random_corpus() {
    let dir = TempDir::new().unwrap();
    for seed in 0..8 {
        let path = dir.path().join(format!("{seed}.json"));
        let p = path.to_str().unwrap();
        ctr(&[
            "gen",
            "--kind",
            "dirichlet:1",
            "--n",
            "4",
            "--m",
            "3",
            "--seed",
            &seed.to_string(),
            "--out",
            p,
        ]);
        for rule in ["nash", "power:0.5", "negpower:2"] {
            let out = ctr(&["oracle-verify", "--profile", p, "--rule", rule]);
            assert_eq!(
                code(&out),
                0,
                "seed {seed} {rule}: {}",
                String::from_utf8_lossy(&out.stdout)
            );
        }
    }
}
