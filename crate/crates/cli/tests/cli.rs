use std::process::{Command, Output};

fn foliq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foliq")).args(args).output().expect("runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn flat_all_checks_pass() {
    let o = foliq(&["check", "--model", "flat(1,1)", "--checks", "all", "--samples", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("14 pass, 0 fail, 0 n/a, 0 unexpected"));
}

#[test]
fn s7_expected_failure_exits_zero() {
    let o = foliq(&[
        "check", "--model", "s7_sasakian", "--checks", "h_projectable,q-projectable,q-integrable",
        "--expect", "h_projectable=fail", "--samples", "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn unexpected_verdict_exits_one() {
    let o = foliq(&["check", "--model", "flat", "--checks", "q-projectable", "--expect", "q-projectable=fail", "--samples", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = foliq(&["check", "--model", "s7", "--checks", "h-projectable", "--expect", "h-projectable=pass", "--samples", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn errors_exit_two() {
    for args in [
        vec!["check", "--model", "nope"],
        vec!["check", "--checks", "not-a-check"],
        vec!["check", "--samples", "0"],
        vec!["check", "--tol", "-1"],
        vec!["check", "--expect", "q-projectable"],
        vec!["check", "--config", "/nonexistent.toml"],
    ] {
        let o = foliq(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn json_has_stable_schema_and_is_deterministic_across_threads() {
    let run = |threads: &str| {
        let o = foliq(&[
            "check", "--model", "lchk_h2", "--samples", "8", "--seed", "7", "--format", "json",
            "--threads", threads,
        ]);
        assert_eq!(o.status.code(), Some(0));
        o.stdout
    };
    let one = run("1");
    assert_eq!(one, run("8"));
    let text = String::from_utf8(one).unwrap();
    for key in ["\"config\"", "\"checks\"", "\"summary\"", "\"version\"", "\"paper_anchor\"", "\"max_residual\"", "\"tolerance\"", "\"verdict\""] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn config_file_mirrors_flags() {
    let dir = std::env::temp_dir().join(format!("foliq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        "model = \"s7_sasakian\"\nchecks = [\"h-projectable\", \"q-projectable\"]\nsamples = 4\nformat = \"json\"\n\n[expect]\nh-projectable = \"fail\"\n",
    )
    .unwrap();
    let o = foliq(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with('{'));
    // Flags override the file.
    let o = foliq(&["check", "--config", path.to_str().unwrap(), "--expect", "h-projectable=pass"]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::write(&path, "modle = \"flat\"\n").unwrap();
    assert_eq!(foliq(&["check", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn list_checks_is_stable() {
    let o = foliq(&["list-checks"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("q-projectable"));
    assert!(s.contains("j1-curvature-integrability"));
    let ids: Vec<&str> = s.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    let want: Vec<&str> = foliq_core::suite::CHECKS.iter().map(|c| c.id).collect();
    assert_eq!(&ids[..want.len()], &want[..]);
    assert_eq!(ids.len(), want.len() + foliq_core::suite::STRUCTURAL.len());
    assert_eq!(foliq(&["list-checks"]).stdout, o.stdout);
}
