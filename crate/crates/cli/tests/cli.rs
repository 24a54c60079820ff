use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(
        dir.path(),
        "a.toml",
        "seeds = [1]\noutput_dir = \"o\"\nbogus = 3\n",
    );
    let both = write(
        dir.path(),
        "b.toml",
        "seeds = [1]\noutput_dir = \"o\"\n[data]\noulad_dir = \"d\"\n[data.synthetic]\nn_students = 5\n",
    );
    for cfg in [&unknown, &both] {
        let o = fep(&["run", "--config", cfg]);
        assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let spec = write(dir.path(), "s.toml", "n_students = 0\n");
    let out = dir.path().join("syn").display().to_string();
    let o = fep(&["synth", "--spec", &spec, "--seed", "1", "--out", &out]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_students"));
}

#[test]
fn missing_run_dir_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = fep(&["report", &dir.path().display().to_string()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("manifest.toml"));
}

#[test]
fn missing_oulad_files_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "seeds = [1]\noutput_dir = \"o\"\n[data]\noulad_dir = \"empty\"\n",
    );
    fs::create_dir(dir.path().join("empty")).unwrap();
    let o = fep(&["run", "--config", &cfg]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "s.toml", "n_students = 30\nn_checkpoints = 3\n");
    let mut outputs = Vec::new();
    for name in ["x", "y"] {
        let out = dir.path().join(name);
        let o = fep(&[
            "synth",
            "--spec",
            &spec,
            "--seed",
            "4",
            "--out",
            &out.display().to_string(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut files: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        files.sort();
        assert_eq!(files, ["additional.json", "primary.json", "schema.json"]);
        outputs.push(
            files
                .iter()
                .map(|f| fs::read(out.join(f)).unwrap())
                .collect::<Vec<_>>(),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "seeds = [1, 2]\noutput_dir = \"out\"\n[data.synthetic]\nn_students = 80\nn_checkpoints = 3\n[learner]\nn_rounds = 10\n",
    );
    let o = fep(&["run", "--config", &cfg, "--jobs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run_dir = dir.path().join("out");
    assert!(run_dir.join("manifest.toml").is_file());
    let r = fep(&["report", &run_dir.display().to_string()]);
    assert!(r.status.success());
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(text.contains("Accuracy") && text.contains("ESS"), "{text}");
    assert!(text.contains("Consumption: SS 1.00, MS 2.00"), "{text}");
}
