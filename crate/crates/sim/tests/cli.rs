use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn mmimo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmimo")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s1() -> String {
    scenario("scenario1.toml").display().to_string()
}

fn s2() -> String {
    scenario("scenario2.toml").display().to_string()
}

#[test]
fn simulate_writes_sorted_rows() {
    let out = stdout(&mmimo(&["simulate", "--config", &s1(), "--sweep", "n=16,8", "--trials", "5", "--detectors", "smmse,mrc"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "axis,detector,cell,user,rate_mean,rate_ci95,rate_asymptotic,trials,seed,warning");
    assert_eq!(lines.len(), 1 + 2 * 2 * 8);
    assert!(lines[1].starts_with("8,mrc,0,0,"));
    assert!(lines[9].starts_with("8,smmse,0,0,"));
    assert!(lines[17].starts_with("16,mrc,0,0,"));
    assert!(lines.last().unwrap().starts_with("16,smmse,3,1,"));
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 10);
        assert!(f[4].parse::<f64>().unwrap() > 0.0);
        assert_eq!(f[7], "5");
        assert_eq!(f[8], "1");
    }
}

#[test]
fn analyze_leaves_empirical_columns_empty_and_units_convert() {
    let nats = stdout(&mmimo(&["analyze", "--config", &s1(), "--sweep", "n=8", "--detectors", "mrc"]));
    let bits = stdout(&mmimo(&["analyze", "--config", &s1(), "--sweep", "n=8", "--detectors", "mrc", "--unit", "bits"]));
    for (a, b) in nats.lines().zip(bits.lines()).skip(1) {
        let (fa, fb): (Vec<&str>, Vec<&str>) = (a.split(',').collect(), b.split(',').collect());
        assert_eq!((fa[4], fa[5], fa[7]), ("", "", "0"));
        let (x, y): (f64, f64) = (fa[6].parse().unwrap(), fb[6].parse().unwrap());
        assert!((y - x / std::f64::consts::LN_2).abs() < 1e-12 * y);
    }
}

#[test]
fn scenario2_degenerate_point_is_flagged() {
    let out = stdout(&mmimo(&["analyze", "--config", &s2(), "--sweep", "sigma=0,4", "--detectors", "mmmse"]));
    for line in out.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[0] == "0" {
            assert_eq!((f[6], f[9]), ("", "assumption2_margin=0"));
        } else {
            assert!(f[6].parse::<f64>().unwrap() > 0.0 && f[9].is_empty(), "{line}");
        }
    }
    let margins = stdout(&mmimo(&["check-assumption2", "--config", &s2(), "--sweep", "sigma=0,4"]));
    let lines: Vec<&str> = margins.lines().collect();
    assert_eq!(lines[0], "axis,cell,user,margin,relative_margin,mmmse_asymptotic");
    assert_eq!(lines.len(), 1 + 2 * 8);
    assert!(lines[1..9].iter().all(|l| l.ends_with(",refused")));
    assert!(lines[9..].iter().all(|l| l.ends_with(",ok")));
}

#[test]
fn out_flag_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rates.csv");
    let p = path.display().to_string();
    let o = mmimo(&["simulate", "--config", &s1(), "--sweep", "n=8", "--trials", "3", "--out", &p]);
    assert!(o.status.success() && o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1 + 3 * 8);
}

fn code(args: &[&str]) -> i32 {
    mmimo(args).status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["simulate", "--config", "/nonexistent/scenario.toml"]), 3);
    assert_eq!(code(&["simulate", "--config", &s1(), "--bogus"]), 1);
    assert_eq!(code(&["simulate", "--config", &s1(), "--sweep", "n=0"]), 1);
    assert_eq!(code(&["simulate", "--config", &s1(), "--sweep", "sigma=1"]), 1);
    assert_eq!(code(&["simulate", "--config", &s1(), "--detectors", "zf"]), 1);
    assert_eq!(code(&["simulate", "--config", &s1(), "--unit", "bytes"]), 1);
    assert_eq!(code(&["analyze", "--config", &s1(), "--sweep", "n=8", "--out", "/nonexistent/dir/x.csv"]), 3);
    assert_eq!(code(&["--help"]), 0);

    let negative_kappa = std::fs::read_to_string(scenario("scenario1.toml"))
        .unwrap()
        .replace("mode = \"random\"", "mode = \"value\"\nvalue = -0.5");
    let p = write(dir.path(), "kappa.toml", &negative_kappa);
    let o = mmimo(&["analyze", "--config", &p, "--sweep", "n=8"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kappa must be ≥ 0"));

    let indefinite = r#"
[system]
cells = 1
users = 1
antennas = 2
coherence = 10

[layout]
kind = "explicit"
beta_db = [[[0.0]]]
theta_deg = [[[0.0]]]

[channel]
model = "explicit"
[[channel.matrix]]
link = [0, 0, 0]
re = [[1.0, 3.0], [3.0, 1.0]]
"#;
    let p = write(dir.path(), "indefinite.toml", indefinite);
    assert_eq!(code(&["simulate", "--config", &p, "--trials", "2"]), 2);
}
