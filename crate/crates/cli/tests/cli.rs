use std::process::Command;

fn swipt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_swipt"))
}

#[test]
fn sweep_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, "n_t = 4\ntrials = 2\nseed = 9\n").unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.csv"));
        let st = swipt()
            .args([
                "sweep",
                "--config",
                cfg.to_str().unwrap(),
                "--sweep",
                "gamma_req_db=10,20",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(st.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    assert!(text.starts_with("point,n_t,"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 + 2);
}

#[test]
fn scheme_selection_and_trials_override() {
    let out = swipt()
        .args(["sweep", "--trials", "1", "--scheme", "baseline"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().contains(",baseline,1,"));
    assert!(!text.contains("proposed"));
}

#[test]
fn bad_inputs_fail_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "n_t = 4\nunknown_key = 1\n").unwrap();
    let out = swipt()
        .args(["sweep", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_key"));
    let out = swipt()
        .args(["sweep", "--scheme", "isotropic"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scheme"));
    let out = swipt()
        .args(["sweep", "--sweep", "n_t=4.5"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn solve_reports_dumps_and_flags_infeasibility() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("final.dat-s");
    let out = swipt()
        .args(["solve", "--dump", dump.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[proposed]") && text.contains("rank ratio"));
    assert!(std::fs::read_to_string(&dump)
        .unwrap()
        .starts_with("* swipt embedded real SDP"));

    let cfg = dir.path().join("hard.toml");
    std::fs::write(&cfg, "gamma_req_db = 200.0\n").unwrap();
    let out = swipt()
        .args(["solve", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("infeasible"));
}

#[test]
fn full_scale_warns() {
    let out = swipt()
        .args(["solve", "--full-scale", "--scheme", "baseline"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: full scale"));
    assert!(String::from_utf8(out.stdout).unwrap().contains("j_ers 10"));
}
