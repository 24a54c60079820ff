use std::fs;
use std::path::Path;

use fep_core::experiment::{
    aggregate_csv, load_run, render_report, run_experiment, ExperimentConfig,
};
use fep_core::ErrorKind;

fn config(out: &Path, extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"
seeds = [1, 2, 3]
output_dir = "{}"

[data.synthetic]
n_students = 120
n_checkpoints = 4

[learner]
n_rounds = 20
{extra}
"#,
        out.display()
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

fn read_tree(dir: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                let text: String = fs::read_to_string(&p)
                    .unwrap()
                    .lines()
                    .filter(|l| !l.starts_with("output_dir"))
                    .map(|l| format!("{l}\n"))
                    .collect();
                out.push((rel, text));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn writes_per_seed_and_aggregate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let summary = run_experiment(&config(&out, ""), Some(2)).unwrap();
    assert_eq!(summary.seeds.len(), 3);
    for s in [1, 2, 3] {
        for f in [
            "metrics.csv",
            "predictions_ss.csv",
            "predictions_ms.csv",
            "predictions_fep.csv",
            "gate_grid.csv",
        ] {
            assert!(
                out.join(format!("seed_{s}")).join(f).is_file(),
                "seed {s} {f}"
            );
        }
    }
    for f in ["aggregate.csv", "ess_plot.csv", "manifest.toml"] {
        assert!(out.join(f).is_file(), "{f}");
    }

    let (record, agg) = load_run(&out).unwrap();
    assert_eq!(record.seed.len(), 3);
    assert_eq!(
        aggregate_csv(&agg),
        fs::read_to_string(out.join("aggregate.csv")).unwrap()
    );

    let report = render_report(&out).unwrap();
    assert!(
        report.contains("Consumption: SS 1.00, MS 2.00, FEP "),
        "{report}"
    );
    assert!(report.contains("reduction"), "{report}");
}

#[test]
fn manifest_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    run_experiment(&config(&first, ""), Some(1)).unwrap();
    let mut again = ExperimentConfig::read(&first.join("manifest.toml")).unwrap();
    let second = dir.path().join("b");
    again.output_dir = second.clone();
    run_experiment(&again, Some(3)).unwrap();
    assert_eq!(read_tree(&first), read_tree(&second));
}

#[test]
fn lowest_gate_reproduces_single_source() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let summary =
        run_experiment(&config(&out, "[gate]\nthreshold = 0.5000000001\n"), None).unwrap();
    for s in &summary.seeds {
        let get = |m: &str| s.metrics.iter().find(|x| x.model == m).unwrap();
        let (ss, fep) = (get("ss"), get("fep"));
        for (a, b) in ss.checkpoints.iter().zip(&fep.checkpoints) {
            assert_eq!(a.accuracy, b.accuracy);
            assert_eq!(a.ess, b.ess);
        }
    }
}

#[test]
fn both_data_sources_is_a_config_error() {
    let text = r#"
seeds = [1]
output_dir = "x"

[data]
oulad_dir = "somewhere"

[data.synthetic]
n_students = 10
"#;
    let err = ExperimentConfig::from_toml(text).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Config);
    let none = ExperimentConfig::from_toml("seeds = [1]\noutput_dir = \"x\"\n").unwrap_err();
    assert_eq!(none.kind(), ErrorKind::Config);
}

#[test]
fn report_needs_a_finished_run() {
    let dir = tempfile::tempdir().unwrap();
    let err = render_report(dir.path()).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Data);
    assert!(err.to_string().contains("manifest.toml"), "{err}");
}
