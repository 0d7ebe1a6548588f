use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ehrsim"))
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("out");
    let text = format!(
        r#"
output_dir = "{}"
ks = [1, 5]

[synthetic]
num_patients = 60
num_diseases = 6
seed = 3

[embedding]
vector_size = 16
epochs = 2
min_count = 1
"#,
        out.display()
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_all_produces_metric_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let output = bin().args(["run-all", "--config"]).arg(&config).output().unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("scenario\tmetric\tk\tvalue\tp_value"), "stdout: {stdout}");
    assert!(stdout.contains("SUTTR"));
    assert!(dir.path().join("out/metrics/similarity.tsv").exists());
    assert!(dir.path().join("out/metrics/prediction.tsv").exists());
    assert!(dir.path().join("out/manifest.json").exists());
}

#[test]
fn stage_commands_resume_from_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    for sub in ["synth", "extract", "build-seqs", "train", "eval-sim", "predict"] {
        let output = bin().arg(sub).args(["--config"]).arg(&config).output().unwrap();
        assert!(
            output.status.success(),
            "{sub} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    assert!(dir.path().join("out/metrics/prediction.tsv").exists());
}

#[test]
fn scenario_and_out_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let alt = dir.path().join("alt");
    let output = bin()
        .args(["run-all", "--config"])
        .arg(&config)
        .args(["--scenario", "S", "--scenario", "STT", "--out"])
        .arg(&alt)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(alt.join("seqs/S.txt").exists());
    assert!(alt.join("seqs/STT.txt").exists());
    assert!(!alt.join("seqs/SUTTR.txt").exists());
}

#[test]
fn missing_prerequisites_fail_with_stage_name() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let output = bin().args(["train", "--config"]).arg(&config).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("train"), "stderr: {stderr}");
}

#[test]
fn bad_scenario_value_is_rejected() {
    let output = bin().args(["run-all", "--scenario", "BOGUS"]).output().unwrap();
    assert!(!output.status.success());
}
