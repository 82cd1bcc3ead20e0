//! End-to-end tests of the `qbind` binary: run directories, determinism,
//! exit codes, and artifact output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workdir(name: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&p);
    fs::create_dir_all(&p).unwrap();
    p
}

fn qbind(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbind")).args(args).output().unwrap()
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "qbind failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

/// Small, fast config that exercises the whole pipeline.
fn base_config(out_dir: &Path) -> String {
    format!(
        r#"tag = "t"
out_dir = "{}"
workers = 2

[data]
source = "synthetic"
count = 60
seed = 7
folds = 3
fold_seed = 1

[model]
kind = "quantum"
nn_controlled = true
template = 9
layers = 1
qubits = 2
head = "L1"
embedding_dim = 4

[train]
learning_rate = 0.05
batch_size = 8
max_epochs = 2
patience = 2
restarts = 1
seed = 0
fold = 0

[noise]
p_single = 0.001
p_two = 0.01
shots = 64
seed = 0
factors = [1, 3]
sample = 2
shots_grid = [64]

[attribution]
method = "ig"
steps = 8
sample = 3
seed = 0
"#,
        out_dir.display()
    )
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("exp.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run_dirs(out_dir: &Path) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = match fs::read_dir(out_dir) {
        Ok(entries) => entries.map(|e| e.unwrap().path()).collect(),
        Err(_) => Vec::new(),
    };
    dirs.sort();
    dirs
}

#[test]
fn train_writes_reproducible_run_dir() {
    let dir = workdir("train-repro");
    let out = dir.join("runs");
    let body = base_config(&out);
    let cfg = write_config(&dir, &body);
    let cfg_str = cfg.to_str().unwrap();

    assert_success(&qbind(&["train", "--config", cfg_str]));
    assert_success(&qbind(&["train", "--config", cfg_str]));

    let dirs = run_dirs(&out);
    assert_eq!(dirs.len(), 2, "one run directory per invocation");
    let mut results = Vec::new();
    for d in &dirs {
        assert_eq!(fs::read(d.join("config.toml")).unwrap(), body.as_bytes(), "verbatim echo");
        assert!(d.join("logs/run.log").exists());
        let checkpoint = fs::read_to_string(d.join("artifacts/checkpoint.json")).unwrap();
        assert!(checkpoint.contains("\"params\""));
        results.push(fs::read(d.join("results.txt")).unwrap());
    }
    assert_eq!(results[0], results[1], "results reproduce byte for byte");
    let text = String::from_utf8(results[0].clone()).unwrap();
    assert!(text.contains("test_f1"), "results carry the fold table:\n{text}");
}

#[test]
fn rejected_config_leaves_nothing_behind() {
    let dir = workdir("reject");
    let out = dir.join("runs");
    let body = format!("typo_field = 1\n{}", base_config(&out));
    let cfg = write_config(&dir, &body);

    let run = qbind(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&run), 2, "unknown key is a config error");
    assert!(run_dirs(&out).is_empty(), "no partial output for invalid configs");
}

#[test]
fn bad_model_kind_is_a_config_error() {
    let dir = workdir("bad-kind");
    let out = dir.join("runs");
    let body = base_config(&out).replace("kind = \"quantum\"", "kind = \"quantal\"");
    let cfg = write_config(&dir, &body);

    let run = qbind(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&run), 2);
    assert!(run_dirs(&out).is_empty());
}

#[test]
fn missing_data_file_exits_3() {
    let dir = workdir("missing-data");
    let out = dir.join("runs");
    let body = base_config(&out).replace(
        "source = \"synthetic\"",
        &format!("source = \"file\"\npath = \"{}\"", dir.join("absent.tsv").display()),
    );
    let cfg = write_config(&dir, &body);

    let run = qbind(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&run), 3, "unreadable data is a data error");
    let dirs = run_dirs(&out);
    assert_eq!(dirs.len(), 1);
    assert!(!dirs[0].join("results.txt").exists(), "no results for a failed run");
}

#[test]
fn stats_reports_classes() {
    let dir = workdir("stats");
    let out = dir.join("runs");
    let cfg = write_config(&dir, &base_config(&out));

    assert_success(&qbind(&["stats", "--config", cfg.to_str().unwrap()]));
    let dirs = run_dirs(&out);
    let text = fs::read_to_string(dirs[0].join("results.txt")).unwrap();
    assert!(text.contains("strong share"));
    assert!(text.contains("residue frequencies"));
}

#[test]
fn gate_count_matches_library() {
    let dir = workdir("gate-count");
    let out = dir.join("runs");
    let cfg = write_config(&dir, &base_config(&out));

    assert_success(&qbind(&["gate-count", "--config", cfg.to_str().unwrap()]));
    let dirs = run_dirs(&out);
    let text = fs::read_to_string(dirs[0].join("results.txt")).unwrap();

    // The same numbers, straight from the library.
    use qbind_core::ansatz::{AnsatzTemplate, SequenceCircuitSpec, TemplateId};
    let spec = SequenceCircuitSpec {
        template: AnsatzTemplate::new(TemplateId::T9, 2, 1).unwrap(),
        classifier: None,
    };
    let report =
        qbind_core::compile::count_gates(&spec.build_parametric(9).unwrap()).unwrap();
    let row = text
        .lines()
        .find(|l| l.trim_start().starts_with("9 "))
        .expect("length-9 row present");
    for expected in
        [report.params, report.total_pre, report.total_post, report.two_qubit_pre, report.two_qubit_post]
    {
        assert!(
            row.split(|c: char| !c.is_ascii_digit()).any(|tok| tok == expected.to_string()),
            "row {row:?} lacks {expected}"
        );
    }
}

#[test]
fn attribute_writes_heatmap_artifacts() {
    let dir = workdir("attribute");
    let out = dir.join("runs");
    let cfg = write_config(&dir, &base_config(&out));

    assert_success(&qbind(&["attribute", "--config", cfg.to_str().unwrap()]));
    let dirs = run_dirs(&out);
    let artifacts = dirs[0].join("artifacts");
    assert!(artifacts.join("attributions.tsv").exists());
    assert!(fs::read_to_string(artifacts.join("heatmap.txt")).unwrap().contains('Y'));
    assert!(fs::read_to_string(artifacts.join("heatmap.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn emulate_reuses_a_checkpoint() {
    let dir = workdir("emulate-checkpoint");
    let out = dir.join("runs");
    let cfg = write_config(&dir, &base_config(&out));

    assert_success(&qbind(&["train", "--config", cfg.to_str().unwrap()]));
    let checkpoint = run_dirs(&out)[0].join("artifacts/checkpoint.json");

    let body = format!("checkpoint = \"{}\"\n{}", checkpoint.display(), base_config(&out));
    let cfg2 = dir.join("emulate.toml");
    fs::write(&cfg2, &body).unwrap();
    assert_success(&qbind(&["emulate", "--config", cfg2.to_str().unwrap()]));

    let newest = run_dirs(&out).into_iter().last().unwrap();
    let text = fs::read_to_string(newest.join("results.txt")).unwrap();
    assert!(text.contains("noisy F1"), "results:\n{text}");
    assert!(text.contains("checkpoint"), "origin names the checkpoint");
}

#[test]
fn fold_flag_overrides_config() {
    let dir = workdir("fold-flag");
    let out = dir.join("runs");
    let cfg = write_config(&dir, &base_config(&out));

    assert_success(&qbind(&["train", "--config", cfg.to_str().unwrap(), "--fold", "1"]));
    let text = fs::read_to_string(run_dirs(&out)[0].join("results.txt")).unwrap();
    assert!(text.contains("fold: 1 "), "fold flag takes precedence:\n{text}");
}

#[test]
fn cross_validate_reports_mean() {
    let dir = workdir("cv");
    let out = dir.join("runs");
    let cfg = write_config(&dir, &base_config(&out));

    assert_success(&qbind(&["cross-validate", "--config", cfg.to_str().unwrap()]));
    let text = fs::read_to_string(run_dirs(&out)[0].join("results.txt")).unwrap();
    assert!(text.contains("mean test F1"));
    let fold_rows = text.lines().filter(|l| l.starts_with("   ")).count();
    assert!(fold_rows >= 3, "one table row per fold:\n{text}");
}

#[test]
fn mitigate_reports_extrapolation() {
    let dir = workdir("mitigate");
    let out = dir.join("runs");
    let cfg = write_config(&dir, &base_config(&out));

    assert_success(&qbind(&["mitigate", "--config", cfg.to_str().unwrap()]));
    let text = fs::read_to_string(run_dirs(&out)[0].join("results.txt")).unwrap();
    assert!(text.contains("extrapolated"));
    assert!(text.contains("mean MAE"));
}

#[test]
fn shot_bounds_reports_interval() {
    let dir = workdir("shot-bounds");
    let out = dir.join("runs");
    let cfg = write_config(&dir, &base_config(&out));

    assert_success(&qbind(&["shot-bounds", "--config", cfg.to_str().unwrap()]));
    let text = fs::read_to_string(run_dirs(&out)[0].join("results.txt")).unwrap();
    assert!(text.contains("f1_min"));
    assert!(text.contains("exact F1"));
}

#[test]
fn prepare_data_writes_dataset_artifact() {
    let dir = workdir("prepare");
    let out = dir.join("runs");
    let cfg = write_config(&dir, &base_config(&out));

    assert_success(&qbind(&["prepare-data", "--config", cfg.to_str().unwrap()]));
    let run = &run_dirs(&out)[0];
    let dataset = fs::read_to_string(run.join("artifacts/dataset.tsv")).unwrap();
    assert_eq!(dataset.lines().count(), 62, "provenance + header + one row per record");
}
