use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use pcs_sim::parse_config;

fn pcs_sim(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pcs-sim"));
    cmd.args(args).current_dir(dir);
    match threads {
        Some(n) => cmd.env("PCS_SIM_THREADS", n),
        None => cmd.env_remove("PCS_SIM_THREADS"),
    };
    cmd.output().expect("run pcs-sim")
}

fn error_report(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is a JSON error report")
}

fn read_dir(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}

const SMALL_MC: &str = r#"
[space]
cutoff = 6
[params]
xi = 1.0
t_final = 1.0
n_traj = 30
master_seed = 4
output_every = 20
[initial]
n = 2
m = 1
[target]
kind = "none"
[snapshots]
gamma_times = [0, 5]
[output]
trajectories = 1
"#;

#[test]
fn pcs_build_vacuum_has_single_row() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), "[initial]\nkind = \"pcs\"\nxi = 0.0\nq = 0\n").unwrap();
    let out = pcs_sim(&["pcs_build", "--config", "c.toml", "--out", "o"], tmp.path(), None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("o/pnm_pcs.csv")).unwrap();
    assert_eq!(csv, "n,m,p\n0,0,1.0\n");
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenario"], "pcs_build");
    assert_eq!(summary["off_charge"], 0.0);
}

#[test]
fn exit_codes_follow_error_category() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let write = |name: &str, text: &str| std::fs::write(d.join(name), text).unwrap();

    let out = pcs_sim(&["nonsense"], d, None);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_report(&out)["error"]["category"], "config");

    write("unknown.toml", "[params]\nbogus = 1\nxi = { re = 1.0, foo = 2 }\n[other]\n");
    let out = pcs_sim(&["relax_me", "--config", "unknown.toml"], d, None);
    assert_eq!(out.status.code(), Some(2));
    let msg = error_report(&out)["error"]["message"].as_str().unwrap().to_owned();
    for key in ["other", "params.bogus", "params.xi.foo"] {
        assert!(msg.contains(key), "{msg}");
    }

    let out = pcs_sim(&["relax_me", "--cutoff", "3"], d, None);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_report(&out)["error"]["message"].as_str().unwrap().contains("initial.n"));

    write("phase.toml", "[drive]\nphi1 = 0.5\n");
    let out = pcs_sim(&["reduction_check", "--config", "phase.toml", "--out", "r"], d, None);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_report(&out)["error"]["category"], "input");

    write(
        "leak.toml",
        "[space]\ncutoff = 4\n[initial]\nn = 3\nm = 2\n[target]\nkind = \"none\"\n[params]\nt_final = 20.0\n[snapshots]\ntimes = [0]\n",
    );
    let out = pcs_sim(&["relax_me", "--config", "leak.toml", "--out", "l"], d, None);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_report(&out)["error"]["category"], "truncation");

    let out = pcs_sim(&["relax_me", "--config", "missing.toml"], d, None);
    assert_eq!(out.status.code(), Some(5));

    let out = pcs_sim(&["pcs_build"], d, Some("0"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn overrides_are_recorded_and_summary_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), SMALL_MC).unwrap();
    let out = pcs_sim(
        &["relax_mc", "--config", "c.toml", "--seed", "17", "--traj", "12", "--out", "o"],
        tmp.path(),
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let files = read_dir(&tmp.path().join("o"));
    for name in ["series.csv", "series_stderr.csv", "pnm_gt0.csv", "pnm_gt5.csv", "trajectory_0000.csv", "summary.json"] {
        assert!(files.contains_key(name), "missing {name}: {:?}", files.keys());
    }
    let printed = String::from_utf8(out.stdout).unwrap();
    assert_eq!(printed.lines().count(), files.len());

    let summary: Value = serde_json::from_str(&files["summary.json"]).unwrap();
    assert_eq!(summary["config"]["params"]["master_seed"], 17);
    assert_eq!(summary["config"]["params"]["n_traj"], 12);
    assert_eq!(summary["seeds"]["trajectory_seeds"].as_array().unwrap().len(), 12);

    let reparsed = parse_config(&summary["config"].to_string()).unwrap();
    assert_eq!(reparsed.to_json(), summary["config"]);
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), SMALL_MC).unwrap();
    let mut runs = Vec::new();
    for threads in ["1", "4"] {
        let out = pcs_sim(&["relax_mc", "--config", "c.toml", "--out", "o"], tmp.path(), Some(threads));
        assert!(out.status.success());
        runs.push(read_dir(&tmp.path().join("o")));
        std::fs::remove_dir_all(tmp.path().join("o")).unwrap();
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn reduction_check_passes_by_default() {
    let tmp = tempfile::tempdir().unwrap();
    let out = pcs_sim(&["reduction_check", "--out", "o"], tmp.path(), None);
    assert!(out.status.success());
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    assert!(summary["relative_difference"].as_f64().unwrap() < 1e-12);
}
