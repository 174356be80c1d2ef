//! CSV schema and content pinned for three sweeps. Set `UPDATE_GOLDEN=1` to
//! rewrite the files.

use std::path::PathBuf;
use std::process::Command;

fn check(name: &str, config: &str, args: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.cfg");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tdm-ies"))
        .arg("--config")
        .arg(&cfg)
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &out.stdout).unwrap();
    }
    let want = std::fs::read(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&want),
        "{name} drifted"
    );
}

#[test]
fn receivers_sweep() {
    check(
        "receivers.csv",
        "",
        &[
            "sweep",
            "--axis",
            "n",
            "--evaluators",
            "analytic,bound,sim,conventional",
        ],
    );
}

#[test]
fn small_example_capacity_sweep() {
    check(
        "capacity_small.csv",
        "q_c=100\nq_ies=10\nt_d_s=0\nn=6\n",
        &[
            "sweep",
            "--axis",
            "q_ies",
            "--min",
            "1",
            "--max",
            "40",
            "--count",
            "12",
            "--evaluators",
            "analytic,bound,sim",
        ],
    );
}

#[test]
fn practical_power_sweep() {
    check(
        "practical_pr.csv",
        "",
        &["sweep", "--preset", "practical-pr"],
    );
}
