use std::fs;
use std::process::{Command, Output};

fn scramble(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scramble")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

#[test]
fn map_round_trip() {
    let enc = scramble(&["map", "encode", "0011001"]);
    assert!(enc.status.success());
    assert_eq!(stdout(&enc), "001010001");
    let dec = scramble(&["map", "decode", "001010001"]);
    assert_eq!(stdout(&dec), "0011001");
}

#[test]
fn decode_of_adjacent_pair_is_an_input_error() {
    assert_eq!(scramble(&["map", "decode", "011"]).status.code(), Some(2));
    assert_eq!(scramble(&["map", "encode", "01a"]).status.code(), Some(2));
}

#[test]
fn spectrum_check_cases() {
    let o = scramble(&["spectrum-check", "-L", "12", "-N", "4"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["dim"], 126);
    let o = scramble(&["spectrum-check", "-L", "3", "-N", "2", "--tol", "1e-9"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["dim"], 1);
    assert_eq!(scramble(&["spectrum-check", "-L", "5", "-N", "4"]).status.code(), Some(2));
}

#[test]
fn otoc_above_the_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("otoc.csv");
    let o = scramble(&["otoc", "-L", "30", "-N", "6", "--site", "3", "--t-grid", "0,1", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(dir.path().join("otoc.csv.partial").exists());
    assert!(!out.exists());
}

#[test]
fn otoc_table_starts_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("otoc.csv");
    let o = scramble(&["otoc", "-L", "10", "-N", "3", "--site", "2", "--t-grid", "0,0.5,1", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,j,G"));
    for line in text.lines().skip(1).take(10) {
        let g: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(g.abs() <= 1e-12);
    }
    assert!(dir.path().join("otoc.csv.manifest.json").exists());
}

#[test]
fn empty_time_grid_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"L": 12, "N": 3, "seed": 1, "t_grid": []}"#).unwrap();
    let o = scramble(&["relax", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sampling_runs_require_a_seed() {
    let o = scramble(&["hamming", "-L", "12", "-N", "3", "--t-grid", "0,1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"L": 12, "N": 3, "seed": 1, "t_grid": [0.5], "M_s": 50, "initial_state": "0100100100"}"#).unwrap();
    let out = dir.path().join("s.csv");
    let o = scramble(&["sample", "--config", cfg.to_str().unwrap(), "--samples", "7", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 8);
    for line in text.lines().skip(1) {
        let (logical, physical) = line.split_once(',').unwrap();
        assert_eq!(logical.len(), 10);
        assert_eq!(physical.len(), 12);
        assert!(!physical.contains("11"));
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["M_s"], 7);
    assert_eq!(manifest["config"]["seed"], 1);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = scramble(&[
            "hamming",
            "-L",
            "16",
            "-N",
            "4",
            "--seed",
            "11",
            "--samples",
            "400",
            "--n-initial-states",
            "2",
            "--t-grid",
            "0,0.5,1,2,4,8,16",
            "--threads",
            threads,
            "-o",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read(&out).unwrap(), fs::read(dir.path().join(format!("{name}.fit.json"))).unwrap())
    };
    let a = run("1", "a.csv");
    let b = run("3", "b.csv");
    let c = run("1", "c.csv");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a.0).unwrap();
    assert!(text.starts_with("t,D_mean,D_stderr\n"));
    let d0: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(d0.abs() < 1e-6);
}

#[test]
fn relax_table_carries_the_reference_time() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z.csv");
    let o = scramble(&[
        "relax", "-L", "12", "-N", "3", "--seed", "2", "--samples", "300", "--n-initial-states", "1", "--t-grid", "1,2,4",
        "--t-inf", "1000", "-o", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t,Z,Z_stderr,t_inf\n"));
    assert!(text.lines().skip(1).all(|l| l.ends_with("1.0000000000000000e3")));
}

#[test]
fn nk_of_a_single_particle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nk.csv");
    let o = scramble(&[
        "nk", "-L", "8", "-N", "1", "--seed", "4", "--samples", "200", "--initial-state", "ground", "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let total: f64 = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}
