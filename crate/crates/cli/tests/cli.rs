use std::path::Path;
use std::process::{Command, Output};

use weh_cli::config::{ConditionsSection, SpaceSource};
use weh_cli::pipeline::{csv_tables, run_conditions, run_harnack, run_report};
use weh_cli::{Report, RunConfig, Verdict};
use weh_core::spaces::GeneratorSpec;

fn weh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weh"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn torus(n: usize) -> RunConfig {
    RunConfig::new(
        5,
        SpaceSource::Generator(GeneratorSpec::Torus { n, beta: 2.0 }),
    )
}

fn write_config(dir: &Path, name: &str, cfg: &RunConfig) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(cfg).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn empty_toggle_set_gives_an_empty_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = torus(16);
    cfg.conditions = ConditionsSection::none();
    let rep = run_conditions(&cfg).unwrap();
    assert!(rep.checks.is_empty());
    assert!(rep.pass);
    let out = weh(&[
        "conditions",
        "--config",
        &write_config(dir.path(), "c.json", &cfg),
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let mut cfg = torus(24);
    cfg.harnack.delta = Some(0.5);
    cfg.harnack.sigma = 1.0;
    cfg.harnack.variants = true;
    cfg.harnack.variant_trials = 200;
    let a = run_harnack(&cfg).unwrap().to_json();
    let b = run_harnack(&cfg).unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn more_samples_never_lower_the_worst_ratio() {
    let mut cfg = torus(24);
    cfg.harnack.delta = Some(0.5);
    let mut last = 0.0;
    for samples in [2, 4, 8] {
        cfg.harnack.samples = samples;
        let rep = run_harnack(&cfg).unwrap();
        let w = rep.check("wEH").unwrap().constant("worst_ratio").unwrap();
        assert!(w >= last, "{samples} samples: {w} < {last}");
        last = w;
    }
}

#[test]
fn dependent_checks_fail_without_a_certificate() {
    let mut cfg = torus(16);
    cfg.harnack.certificate = false;
    cfg.harnack.variants = true;
    assert!(cfg.validate().is_err());
}

#[test]
fn single_report_passes_through_and_conflicts_are_rejected() {
    let mut cfg = torus(16);
    cfg.conditions = ConditionsSection {
        vd: true,
        ..ConditionsSection::none()
    };
    let a = run_conditions(&cfg).unwrap();
    assert_eq!(run_report(vec![a.clone()]).unwrap(), a);
    assert!(run_report(vec![]).is_err());

    let mut other = cfg.clone();
    other.seed = 6;
    let b = run_conditions(&other).unwrap();
    assert!(run_report(vec![a.clone(), b]).is_err());

    let c = run_harnack(&cfg).unwrap();
    let merged = run_report(vec![a, c]).unwrap();
    assert_eq!(merged.kind, "merged");
    assert_eq!(merged.fragments.len(), 2);
    let back = Report::from_json(&merged.to_json()).unwrap();
    assert_eq!(back, merged);
}

#[test]
fn report_rejects_a_foreign_schema_version() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run_conditions(&RunConfig {
        conditions: ConditionsSection::none(),
        ..torus(8)
    })
    .unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    v["schema_version"] = 7.into();
    let p = dir.path().join("old.json");
    std::fs::write(&p, v.to_string()).unwrap();
    let out = weh(&[
        "report",
        "--out",
        dir.path().join("m").to_str().unwrap(),
        p.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema"));
}

#[test]
fn size_sweep_csv_is_sorted_by_size() {
    let reps: Vec<Report> = [32, 8, 16]
        .into_iter()
        .flat_map(|n| {
            let mut cfg = torus(n);
            cfg.conditions = ConditionsSection {
                pi: true,
                ..ConditionsSection::none()
            };
            [run_harnack(&cfg).unwrap(), run_conditions(&cfg).unwrap()]
        })
        .collect();
    let merged = run_report(reps).unwrap();
    let tables = csv_tables(&merged).unwrap();
    let ratio = &tables
        .iter()
        .find(|(n, _)| n == "worst_ratio.csv")
        .unwrap()
        .1;
    let sizes: Vec<usize> = ratio
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(sizes, vec![8, 16, 32]);
    assert!(tables
        .iter()
        .any(|(n, body)| n == "pi_constant.csv" && body.lines().count() == 4));
}

#[test]
fn generated_files_load_back_to_the_same_constants() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"kind":"stable_torus","n":20,"beta":1.0,"local":false}"#,
    )
    .unwrap();
    let out = weh(&[
        "generate",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let cfg_text =
        r#"{"seed": 3, "space": {"files": {"space": "space.json", "form": "form.json"}}}"#;
    let from_files = RunConfig::from_json(cfg_text, Some(dir.path())).unwrap();
    let generated = RunConfig::new(
        3,
        SpaceSource::Generator(
            serde_json::from_str(&std::fs::read_to_string(&spec).unwrap()).unwrap(),
        ),
    );
    let a = run_conditions(&from_files).unwrap();
    let b = run_conditions(&generated).unwrap();
    assert_eq!(a.checks.len(), b.checks.len());
    for (x, y) in a.checks.iter().zip(&b.checks) {
        assert_eq!(x.constants, y.constants, "{}", x.name);
    }

    let cfg_path = dir.path().join("files.json");
    std::fs::write(&cfg_path, cfg_text).unwrap();
    let out = weh(&["inspect", "--config", cfg_path.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["space"]["n"], 20);
}

#[test]
fn expect_fail_turns_a_failure_into_an_expected_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(
        1,
        SpaceSource::Generator(GeneratorSpec::Dumbbell {
            clique: 8,
            path: 6,
            eps: 0.01,
            beta: 2.0,
        }),
    );
    cfg.conditions = ConditionsSection {
        pi: true,
        ..ConditionsSection::none()
    };
    let path = write_config(dir.path(), "d.json", &cfg);
    let out_dir = dir.path().join("out");
    let out = weh(&[
        "conditions",
        "--config",
        &path,
        "--out",
        out_dir.to_str().unwrap(),
        "--expect-fail",
        "PI",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep = Report::load(&out_dir.join("conditions.json")).unwrap();
    assert_eq!(rep.check("PI").unwrap().verdict, Verdict::ExpectedFail);

    let out = weh(&["conditions", "--config", &path, "--expect-fail", "Bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn witness_dump_replays_the_certificate_witness() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = torus(16);
    cfg.harnack.delta = Some(0.5);
    let path = write_config(dir.path(), "h.json", &cfg);
    let out = weh(&[
        "harnack",
        "--config",
        &path,
        "--out",
        dir.path().to_str().unwrap(),
        "--witness-dump",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dump: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("harnack-witnesses.json")).unwrap(),
    )
    .unwrap();
    assert!(dump.get("wEH").is_some());
}
