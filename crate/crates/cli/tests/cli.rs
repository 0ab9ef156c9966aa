use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_serpentik"));
    c.env_remove("SERPENTIK_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small grid at the mid-depth of the tank so runs stay short.
fn config(dir: &Path) -> PathBuf {
    let path = dir.join("arm.toml");
    let defaults = stdout(&run(&["defaults"]));
    let mut cfg: toml::Table = toml::from_str(&defaults).unwrap();
    let grid = cfg.get_mut("grid").unwrap().as_table_mut().unwrap();
    grid.insert("nr".into(), 3.into());
    grid.insert("nz".into(), 2.into());
    grid.insert("r0".into(), 10.0.into());
    grid.insert("z0".into(), (-50.0).into());
    std::fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    path
}

fn learn(dir: &Path, name: &str) -> PathBuf {
    let out = dir.join(name);
    let cfg = config(dir);
    let o = run(&["learn", "--model", p(&cfg), "--seed", "5", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("converged:"));
    out
}

#[test]
fn learn_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = learn(dir.path(), "a.json");
    let b = learn(dir.path(), "b.json");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["spec"]["nr"], 3);
    assert_eq!(v["spec"]["nz"], 2);
}

#[test]
fn coevolve_writes_table_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let table = learn(dir.path(), "t.json");
    let cfg = config(dir.path());
    let outs: Vec<PathBuf> = (0..2)
        .map(|k| {
            let out = dir.path().join(format!("s{k}.json"));
            let o = run(&[
                "coevolve", "--model", p(&cfg), "--table", p(&table), "--out", p(&out),
                "--method", "alternating", "--passes", "2",
            ]);
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
            out
        })
        .collect();
    assert_eq!(std::fs::read(&outs[0]).unwrap(), std::fs::read(&outs[1]).unwrap());
    let history = std::fs::read_to_string(outs[0].with_extension("history.csv")).unwrap();
    // header plus the initial row plus one per pass
    assert!(history.lines().count() >= 3, "{history}");
}

#[test]
fn eval_reports_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let table = learn(dir.path(), "t.json");
    let csv = dir.path().join("points.csv");
    let o = run(&["eval", "--table", p(&table), "--neighborhood", "moore", "--out", p(&csv)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("mean penalty:"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "i,j,r,z,residual,converged,penalty");
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn traj_needs_a_rate_and_waypoints_in_the_tank() {
    let dir = tempfile::tempdir().unwrap();
    let table = learn(dir.path(), "t.json");
    let cfg = config(dir.path());
    let wp = dir.path().join("wp.csv");
    let out = dir.path().join("traj.csv");

    std::fs::write(&wp, "x,y,z\n10.5,0,-49.5\n11.5,0,-49.5\n").unwrap();
    let o = run(&["traj", "--model", p(&cfg), "--table", p(&table), "--waypoints", p(&wp), "--out", p(&out)]);
    assert_eq!(code(&o), 1);

    let o = run(&[
        "traj", "--model", p(&cfg), "--table", p(&table), "--waypoints", p(&wp), "--out", p(&out),
        "--max-joint-rate", "90", "--step", "0.25",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("rate violations: 0"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 6);

    std::fs::write(&wp, "x,y,z\n10.5,0,-49.5\n40,0,-49.5\n").unwrap();
    let o = run(&[
        "traj", "--model", p(&cfg), "--table", p(&table), "--waypoints", p(&wp), "--out", p(&out),
        "--max-joint-rate", "90",
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside the tank"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = dir.path().join("o.json");

    assert_eq!(code(&run(&["learn", "--bogus"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["learn", "--grid", "3by2", "--out", p(&out)])), 1);
    assert_eq!(code(&run(&["learn", "--grid", "0x2", "--out", p(&out)])), 1);
    assert_eq!(code(&run(&["learn", "--model", p(&missing), "--out", p(&out)])), 1);
    let env = bin().env("SERPENTIK_CONFIG", &missing).args(["learn", "--out", p(&out)]).output().unwrap();
    assert_eq!(code(&env), 1);
    assert_eq!(code(&run(&["eval", "--table", p(&missing)])), 2);
    assert_eq!(code(&run(&["coevolve", "--table", p(&missing), "--out", p(&out), "--passes", "0"])), 1);
    assert_eq!(code(&run(&["coevolve", "--table", p(&missing), "--out", p(&out)])), 2);

    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{\"version\": 1").unwrap();
    assert_eq!(code(&run(&["serve", "--table", p(&junk), "--port", "0"])), 2);
    assert!(!out.exists());
}

#[test]
fn defaults_round_trip_as_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.toml");
    std::fs::write(&path, stdout(&run(&["defaults"]))).unwrap();
    let out = dir.path().join("o.json");
    // a grid of zero rows fails validation after the file loads
    let o = run(&["learn", "--model", p(&path), "--grid", "0x1", "--out", p(&out)]);
    assert_eq!(code(&o), 1);
}
