use std::fs;
use std::path::Path;
use std::process::Command;

use coarselab_cli::{list_instances, run, ExperimentSpec};

const BIN: &str = env!("CARGO_BIN_EXE_coarselab");

fn spec(text: &str) -> ExperimentSpec {
    ExperimentSpec::from_toml(text).unwrap()
}

fn csv_names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn corona_run_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(
        r#"
name = "corona"
kind = "moyal"
[instances]
symbols = ["angular:l=1", "radial:gauss"]
[params]
n_max = 32
check = "corona"
"#,
    );
    let rep = run(&s, dir.path()).unwrap();
    assert!(rep.passed(), "{}", rep.summary());
    let text = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(text.contains("corona,"));
    assert!(text.lines().any(|l| l.ends_with(",pass")));
}

#[test]
fn lift_writes_audit_and_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(
        r#"
name = "lift-id"
kind = "lift"
seed = 3
[instances]
model = "radial-Z2"
maps = ["identity"]
"#,
    );
    let rep = run(&s, dir.path()).unwrap();
    assert!(rep.passed(), "{}", rep.summary());
    let names = csv_names(dir.path());
    assert!(
        names.contains(&"lift-identity-audit.csv".to_string()),
        "{names:?}"
    );
    assert!(
        names.contains(&"lift-identity-rays.csv".to_string()),
        "{names:?}"
    );
    let audit = fs::read_to_string(dir.path().join("lift-identity-audit.csv")).unwrap();
    assert!(audit.lines().count() > 3);
}

#[test]
fn decreasing_schedule_names_the_field() {
    let text = r#"
name = "bad"
kind = "moyal"
[instances]
symbols = ["angular:l=1", "radial:gauss"]
[schedules]
cutoffs = [8, 4]
"#;
    let err = ExperimentSpec::from_toml(text).unwrap_err();
    assert_eq!(err.path, "schedules.cutoffs");
    assert!(
        err.to_string()
            .contains("schedules nonempty and increasing"),
        "{err}"
    );

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, text).unwrap();
    let out = Command::new(BIN)
        .args(["validate", "--spec"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("schedules.cutoffs"), "{stderr}");
}

#[test]
fn rotation_needs_the_circle_model() {
    let err = ExperimentSpec::from_toml(
        r#"
name = "rot"
kind = "lift"
[instances]
model = "radial-Z1"
maps = ["rotation:1"]
"#,
    )
    .unwrap_err();
    assert_eq!(err.path, "instances.maps[0]");
}

#[test]
fn runs_are_byte_identical() {
    let s = spec(
        r#"
name = "det"
kind = "lift"
seed = 11
[instances]
maps = ["identity", "antipodal"]
[params]
window = 32.0
"#,
    );
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&s, a.path()).unwrap();
    run(&s, b.path()).unwrap();
    let names = csv_names(a.path());
    assert_eq!(names, csv_names(b.path()));
    for n in &names {
        assert_eq!(
            fs::read(a.path().join(n)).unwrap(),
            fs::read(b.path().join(n)).unwrap(),
            "{n} differs"
        );
    }
}

#[test]
fn every_artifact_starts_with_the_spec_hash() {
    let s = spec(
        r#"
name = "cone"
kind = "toeplitz-cone"
[params]
size = 128
ramps = 8
stages = 5
"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let rep = run(&s, dir.path()).unwrap();
    let header = format!("# spec-hash: {}", s.hash());
    for p in &rep.artifacts {
        let text = fs::read_to_string(p).unwrap();
        assert_eq!(
            text.lines().next(),
            Some(header.as_str()),
            "{}",
            p.display()
        );
    }
    assert_eq!(rep.artifacts.len(), csv_names(dir.path()).len());
}

#[test]
fn out_flag_beats_environment_and_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("box.toml");
    fs::write(
        &spec_path,
        format!(
            "name = \"box\"\nkind = \"box-space\"\noutput = \"{}\"\n",
            dir.path().join("from-spec").display()
        ),
    )
    .unwrap();
    let status = Command::new(BIN)
        .args(["run", "--jobs", "1", "--spec"])
        .arg(&spec_path)
        .env("COARSELAB_OUT", dir.path().join("from-env"))
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(dir.path().join("from-env/report.csv").exists());
    assert!(!dir.path().join("from-spec").exists());

    Command::new(BIN)
        .args(["run", "--spec"])
        .arg(&spec_path)
        .arg("--out")
        .arg(dir.path().join("from-flag"))
        .env("COARSELAB_OUT", dir.path().join("from-env2"))
        .output()
        .unwrap();
    assert!(dir.path().join("from-flag/box-space.csv").exists());
    assert!(!dir.path().join("from-env2").exists());
}

#[test]
fn list_has_stable_order_and_known_keys() {
    let a = list_instances();
    assert_eq!(a, list_instances());
    let keys: Vec<&str> = a.iter().map(|e| e.key.as_str()).collect();
    assert!(keys.contains(&"radial-Z2"));
    assert!(keys.contains(&"angular:l=1"));
    let out = Command::new(BIN).arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let first: Vec<&str> = text
        .lines()
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    let cats: Vec<&str> = a.iter().map(|e| e.category).collect();
    assert_eq!(first, cats);
}

#[test]
fn sample_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            ExperimentSpec::from_toml(&fs::read_to_string(&p).unwrap())
                .unwrap_or_else(|err| panic!("{}: {err}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 6);
}
