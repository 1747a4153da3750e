use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn uidforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uidforge"))
        .args(args)
        .env_remove("UIDFORGE_SEED")
        .output()
        .unwrap()
}

fn toy_demand_args(out: &Path) -> Vec<String> {
    [
        "demand",
        "--population",
        &fixture("toy_population.csv"),
        "--survival",
        &fixture("toy_survival.csv"),
        "--fertility",
        &fixture("toy_fertility.csv"),
        "--flows",
        &fixture("toy_flows.csv"),
        "--horizon",
        "3",
        "--out",
        &out.display().to_string(),
    ]
    .map(String::from)
    .to_vec()
}

fn run(args: &[String]) -> Output {
    uidforge(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn demand_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&toy_demand_args(dir.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    assert_eq!(
        std::fs::read(dir.path().join("demand.csv")).unwrap(),
        std::fs::read(fixture("demand_toy_golden.csv")).unwrap()
    );
    assert!(dir.path().join("demand.svg").exists());
    let ledger = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 4);
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let args = toy_demand_args(dir.path());
    let conf = dir.path().join("run.conf");
    let mut text = String::from("# toy run\n");
    for pair in args[1..].chunks(2) {
        text.push_str(&format!("{}={}\n", pair[0].trim_start_matches('-'), pair[1]));
    }
    text = text.replace("horizon=3", "horizon=99");
    std::fs::write(&conf, text).unwrap();
    let out = uidforge(&["demand", "--config", conf.to_str().unwrap(), "--horizon", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(dir.path().join("demand.csv")).unwrap(),
        std::fs::read(fixture("demand_toy_golden.csv")).unwrap()
    );
}

#[test]
fn policy_flag_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = toy_demand_args(dir.path());
    args.extend(["--policy".to_string(), "full".to_string()]);
    assert!(run(&args).status.success());
    let full = std::fs::read(dir.path().join("demand.csv")).unwrap();
    assert_ne!(full, std::fs::read(fixture("demand_toy_golden.csv")).unwrap());

    let mut args = toy_demand_args(dir.path());
    args.extend(["--policy".to_string(), "sometimes".to_string()]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sometimes"));
}

#[test]
fn project_writes_frames_and_totals() {
    let dir = tempfile::tempdir().unwrap();
    let out = uidforge(&[
        "project",
        "--population",
        &fixture("national_population.csv"),
        "--survival",
        &fixture("national_survival.csv"),
        "--fertility",
        &fixture("national_fertility.csv"),
        "--horizon",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let totals = std::fs::read_to_string(dir.path().join("totals.csv")).unwrap();
    let mut lines = totals.lines();
    assert_eq!(lines.next(), Some("region,year,male,female,total"));
    assert_eq!(lines.next(), Some("IN,2011,623000000,586000000,1209000000"));
    assert_eq!(lines.count(), 2);
    let frames = std::fs::read_to_string(dir.path().join("projection.csv")).unwrap();
    assert_eq!(frames.lines().count(), 1 + 3 * 202);
}

#[test]
fn coverage_adjusts_totals() {
    let dir = tempfile::tempdir().unwrap();
    let out = uidforge(&[
        "coverage",
        "--population",
        &fixture("national_population.csv"),
        "--unknown-age",
        &fixture("unknown_age.csv"),
        "--omission",
        "20",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("adjusted_population.csv");
    let pyr = uidforge::io::load_population_csv(&path, uidforge::AgeAxis::default(), 2011).unwrap();
    let expected = (1_209_000_000.0 + 2_300_000.0) / 0.98;
    assert!((pyr[0].total() - expected).abs() / expected < 1e-12);
}

#[test]
fn houseless_without_profile_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = uidforge(&[
        "coverage",
        "--population",
        &fixture("national_population.csv"),
        "--houseless-rural",
        "10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("houseless-profile"));
}

fn estimate(dir: &Path, seed: Option<&str>, env_seed: Option<&str>) -> (Output, PathBuf) {
    let out_dir = dir.join(format!("{seed:?}-{env_seed:?}"));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_uidforge"));
    cmd.args([
        "estimate",
        "--observations",
        &fixture("observations.csv"),
        "--prior-shape",
        "1",
        "--prior-rate",
        "1",
        "--samples",
        "2000",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    if let Some(s) = seed {
        cmd.args(["--seed", s]);
    }
    cmd.env_remove("UIDFORGE_SEED");
    if let Some(s) = env_seed {
        cmd.env("UIDFORGE_SEED", s);
    }
    (cmd.output().unwrap(), out_dir.join("posterior_samples.csv"))
}

#[test]
fn estimate_seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let (a, pa) = estimate(dir.path(), Some("11"), None);
    let (b, pb) = estimate(dir.path(), None, Some("11"));
    let (c, pc) = estimate(dir.path(), Some("12"), Some("11"));
    for o in [&a, &b, &c] {
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (sa, sb, sc) = (
        std::fs::read(pa).unwrap(),
        std::fs::read(pb).unwrap(),
        std::fs::read(pc).unwrap(),
    );
    assert_eq!(sa, sb);
    assert_ne!(sa, sc);
    let text = String::from_utf8(sa).unwrap();
    assert!(text.starts_with("iteration,beta,burn_in\n"));
    assert_eq!(text.lines().count(), 2001);
}

#[test]
fn errors_go_to_stderr_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "region,sex,age,count\nIN,F,20,-1\n").unwrap();
    let out = uidforge(&[
        "coverage",
        "--population",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:2"), "{err}");

    let out = uidforge(&["estimate", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--observations"));
}
