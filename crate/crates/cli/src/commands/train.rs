//! `train` and `cross-validate`.

use std::fmt::Write;
use std::time::Instant;

use qbind_core::data::make_folds;
use qbind_core::train::{cross_validate as run_cv, train_model, Checkpoint, FoldResult};
use qbind_core::Result;

use crate::config::ExperimentConfig;
use crate::rundir::RunDir;

use super::load_dataset;

fn fold_line(r: &FoldResult) -> String {
    format!(
        "{:>4}  {:>20}  {:>6}  {:>10.6}  {:>8.6}  {:>8.6}",
        r.fold, r.restart_seed, r.epochs_run, r.validation_loss, r.validation_f1, r.test_f1
    )
}

const FOLD_HEADER: &str =
    "fold          restart_seed  epochs    val_loss    val_f1   test_f1";

pub fn train(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<()> {
    let dataset = load_dataset(&cfg.data)?;
    run.log(&format!("dataset: {} records ({})", dataset.len(), dataset.provenance));
    let folds = make_folds(&dataset, cfg.data.folds, cfg.data.fold_seed)?;
    let fold = &folds[cfg.train.fold];
    let spec = cfg.model.to_spec()?;
    let tcfg = cfg.train.to_config();

    run.log(&format!("training fold {} of {}", fold.fold, folds.len()));
    let t0 = Instant::now();
    let trained = train_model(&spec, &dataset, fold, &tcfg)?;
    run.log(&format!("trained in {:.1} s", t0.elapsed().as_secs_f64()));

    let checkpoint = Checkpoint {
        model: spec,
        params: trained.model.params().to_vec(),
        fold: Some(fold.fold),
        fold_seed: Some(cfg.data.fold_seed),
        train_seed: Some(tcfg.seed),
        restart_seed: Some(trained.result.restart_seed),
        dataset_provenance: dataset.provenance.clone(),
    };
    checkpoint.save(&run.artifact("checkpoint.json"))?;

    let mut out = String::new();
    writeln!(out, "model: {}", trained.model.describe()).unwrap();
    writeln!(out, "parameters: {}", trained.model.num_params()).unwrap();
    writeln!(out, "dataset: {}", dataset.provenance).unwrap();
    writeln!(
        out,
        "fold: {} (train {} / validation {} / test {}, fold_seed {})",
        fold.fold,
        fold.train.len(),
        fold.validation.len(),
        fold.test.len(),
        cfg.data.fold_seed
    )
    .unwrap();
    writeln!(
        out,
        "train config: lr {} batch {} max_epochs {} patience {} restarts {} seed {}",
        tcfg.learning_rate, tcfg.batch_size, tcfg.max_epochs, tcfg.patience, tcfg.restarts,
        tcfg.seed
    )
    .unwrap();
    writeln!(out, "\n{FOLD_HEADER}").unwrap();
    writeln!(out, "{}", fold_line(&trained.result)).unwrap();
    writeln!(out, "\ncheckpoint written to artifacts/checkpoint.json").unwrap();
    run.finish(&out)?;
    Ok(())
}

pub fn cross_validate(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<()> {
    let dataset = load_dataset(&cfg.data)?;
    run.log(&format!("dataset: {} records ({})", dataset.len(), dataset.provenance));
    let spec = cfg.model.to_spec()?;
    let tcfg = cfg.train.to_config();

    run.log(&format!("cross-validating over {} folds", cfg.data.folds));
    let t0 = Instant::now();
    let cv = run_cv(&spec, &dataset, &tcfg, cfg.data.folds, cfg.data.fold_seed)?;
    run.log(&format!("finished in {:.1} s", t0.elapsed().as_secs_f64()));

    let mut out = String::new();
    writeln!(out, "model: {}", spec.build(0)?.describe()).unwrap();
    writeln!(out, "parameters: {}", spec.param_count()?).unwrap();
    writeln!(out, "dataset: {}", dataset.provenance).unwrap();
    writeln!(
        out,
        "folds: {} (fold_seed {}); train config: lr {} batch {} max_epochs {} patience {} restarts {} seed {}",
        cfg.data.folds,
        cfg.data.fold_seed,
        tcfg.learning_rate,
        tcfg.batch_size,
        tcfg.max_epochs,
        tcfg.patience,
        tcfg.restarts,
        tcfg.seed
    )
    .unwrap();
    writeln!(out, "\n{FOLD_HEADER}").unwrap();
    for r in &cv.folds {
        writeln!(out, "{}", fold_line(r)).unwrap();
    }
    writeln!(
        out,
        "\nmean test F1 = {:.6} +/- {:.6} (population SD over {} folds)",
        cv.mean_test_f1,
        cv.sd_test_f1,
        cv.folds.len()
    )
    .unwrap();
    run.finish(&out)?;
    Ok(())
}
