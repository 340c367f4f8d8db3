use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.json"))
        .to_string_lossy()
        .into_owned()
}

fn hypan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypan")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn analyze_wave() {
    let out = hypan(&["analyze", &fixture("wave"), "--grid-t", "129"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["hyperbolicity"]["class"], "strict");
    assert_eq!(v["result"]["c1_estimate"], 0.0);
    assert_eq!(v["config"]["command"]["name"], "analyze");
    assert_eq!(v["config"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn analyze_elliptic_exits_two() {
    let out = hypan(&["analyze", &fixture("elliptic"), "--grid-t", "65"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_hyperbolic"));
    assert_eq!(json(&out)["result"]["hyperbolicity"]["class"], "not_hyperbolic");
}

#[test]
fn validation_errors_exit_two() {
    assert_eq!(hypan(&["analyze", "/nonexistent/spec.json"]).status.code(), Some(2));
    assert_eq!(hypan(&["scan", &fixture("wave"), "--xi", "1,2"]).status.code(), Some(2));
    assert_eq!(hypan(&["partition", &fixture("t2"), "--eps", "0.9"]).status.code(), Some(2));
    assert_eq!(hypan(&["dump", &fixture("t2"), "--t", "0.5", "--xi", "0"]).status.code(), Some(2));
}

#[test]
fn scan_levi_compliant_is_polynomial() {
    let out = hypan(&["scan", &fixture("t2_levi_ok"), "--xi", "16..1024"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["verdict"], "polynomial");
    assert_eq!(v["result"]["xi_mags"].as_array().unwrap().len(), 7);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let d = dir.path().join(sub);
        let out = hypan(&["trace", &fixture("t2_levi_ok"), "--xi", "32", "--v0", "random", "--seed", "5", "--out", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        (std::fs::read(d.join("trace.json")).unwrap(), std::fs::read(d.join("trace.csv")).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    // The output directory is part of the embedded config.
    let strip = |s: &[u8]| String::from_utf8_lossy(s).lines().filter(|l| !l.contains("\"out\"")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a.0), strip(&b.0));
    assert_eq!(a.1, b.1);
    let csv = String::from_utf8(a.1).unwrap();
    assert!(csv.starts_with("t,v1_re,v1_im,v2_re,v2_im,e_kov,e_hyp,energy,envelope,slack\n"));
}

#[test]
fn partition_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypan(&[
        "partition",
        &fixture("t4"),
        "--eps-sweep",
        "0.36787944117144233,0.1353352832366127,0.049787068367863944,0.01831563888873418",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("partition.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["q"], 2);
    let csv = std::fs::read_to_string(dir.path().join("partition_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn solve_from_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let n = 64;
    let mut csv = String::from("x,g0,g1\n");
    let mut g0 = Vec::new();
    for k in 0..n {
        let x = std::f64::consts::TAU * k as f64 / n as f64;
        csv.push_str(&format!("{x},{},0\n", x.sin()));
        g0.push(format!("{}", x.sin()));
    }
    let csv_path = dir.path().join("data.csv");
    std::fs::write(&csv_path, csv).unwrap();
    let json_path = dir.path().join("data.json");
    std::fs::write(&json_path, format!(r#"{{"t0": 0, "g": [[{}], [{}]]}}"#, g0.join(","), vec!["0"; n].join(","))).unwrap();
    for (data, sub) in [(&csv_path, "csv"), (&json_path, "json")] {
        let out_dir = dir.path().join(sub);
        let out = hypan(&[
            "solve",
            &fixture("wave"),
            "--data",
            data.to_str().unwrap(),
            "--t-out",
            "0.5,1",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let u = std::fs::read_to_string(out_dir.join("u_t1.csv")).unwrap();
        let mut rows = csv::Reader::from_reader(u.as_bytes());
        for r in rows.records() {
            let r = r.unwrap();
            let x: f64 = r[0].parse().unwrap();
            let re: f64 = r[1].parse().unwrap();
            assert!((re - x.sin() * 1f64.cos()).abs() < 1e-9);
        }
    }
}

#[test]
fn dump_reports_symmetriser() {
    let out = hypan(&["dump", &fixture("t2"), "--t", "0.5", "--xi", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    // Δ = 4 t² ξ²/<ξ>² = 0.8.
    let delta = v["result"]["symmetriser"]["delta"].as_f64().unwrap();
    assert!((delta - 0.8).abs() < 1e-14);
    assert_eq!(v["result"]["classification"]["hyperbolicity"]["class"], "strict");
}

#[test]
fn levi_reports_second_order_checks() {
    let out = hypan(&["levi", &fixture("t2_levi_fail"), "--grid-t", "129"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["levi"]["holds"], false);
    assert_eq!(v["result"]["m2"]["cond_ii"]["holds"], true);
}

#[test]
fn help_lists_subcommands() {
    let out = hypan(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["analyze", "levi", "partition", "scan", "trace", "solve", "dump", "HYPAN_THREADS"] {
        assert!(text.contains(sub), "{sub}");
    }
}
