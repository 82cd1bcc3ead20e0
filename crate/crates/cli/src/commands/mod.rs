//! One submodule per command family; shared dataset/model plumbing lives here.

mod attribute;
mod circuit;
mod data;
mod noise;
mod train;

use qbind_core::data::{
    label_records, make_folds, read_dataset_file, read_raw_records, synthetic_rule_dataset,
    Dataset, FoldSplit,
};
use qbind_core::model::{HybridModel, ModelSpec, SequenceModel};
use qbind_core::train::{train_model, Checkpoint};
use qbind_core::{Error, Result};

use crate::config::{DataSection, ExperimentConfig};
use crate::rundir::RunDir;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    PrepareData,
    Stats,
    Train,
    CrossValidate,
    Emulate,
    Mitigate,
    GateCount,
    ShotBounds,
    Attribute,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::PrepareData => "prepare-data",
            CommandKind::Stats => "stats",
            CommandKind::Train => "train",
            CommandKind::CrossValidate => "cross-validate",
            CommandKind::Emulate => "emulate",
            CommandKind::Mitigate => "mitigate",
            CommandKind::GateCount => "gate-count",
            CommandKind::ShotBounds => "shot-bounds",
            CommandKind::Attribute => "attribute",
        }
    }
}

pub fn dispatch(kind: CommandKind, cfg: &ExperimentConfig, run: &mut RunDir) -> Result<()> {
    match kind {
        CommandKind::PrepareData => data::prepare_data(cfg, run),
        CommandKind::Stats => data::stats(cfg, run),
        CommandKind::Train => train::train(cfg, run),
        CommandKind::CrossValidate => train::cross_validate(cfg, run),
        CommandKind::Emulate => noise::emulate(cfg, run),
        CommandKind::Mitigate => noise::mitigate(cfg, run),
        CommandKind::GateCount => circuit::gate_count(cfg, run),
        CommandKind::ShotBounds => noise::shot_bounds(cfg, run),
        CommandKind::Attribute => attribute::attribute(cfg, run),
    }
}

pub fn load_dataset(d: &DataSection) -> Result<Dataset> {
    match d.source.as_str() {
        "synthetic" => Ok(synthetic_rule_dataset(d.count, d.seed)),
        "file" => read_dataset_file(d.path.as_deref().expect("validated")),
        "raw" => {
            let path = d.path.as_deref().expect("validated");
            let ingest = read_raw_records(path)?;
            let records = label_records(&ingest.records);
            match d.strong_share {
                Some(share) => qbind_core::data::downsample(&records, share, d.downsample_seed),
                None => {
                    let provenance =
                        format!("raw {} ({} records, full)", path.display(), records.len());
                    Ok(Dataset { records, provenance })
                }
            }
        }
        other => Err(Error::Config(format!("unknown data source {other}"))),
    }
}

/// The trained model a scoring command works with, either loaded from the
/// configured checkpoint or trained in-line on the selected fold. Also
/// returns the dataset, that fold's split, and the fold index.
pub struct Trained {
    pub model: Box<dyn SequenceModel>,
    pub spec: ModelSpec,
    pub dataset: Dataset,
    pub fold: FoldSplit,
    pub origin: String,
}

pub fn trained_model(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<Trained> {
    let dataset = load_dataset(&cfg.data)?;
    run.log(&format!("dataset: {} records ({})", dataset.len(), dataset.provenance));
    let mut folds = make_folds(&dataset, cfg.data.folds, cfg.data.fold_seed)?;
    match &cfg.checkpoint {
        Some(path) => {
            let cp = Checkpoint::load(path)?;
            let fold_idx = cp.fold.unwrap_or(cfg.train.fold);
            if fold_idx >= folds.len() {
                return Err(Error::Config(format!(
                    "checkpoint fold {fold_idx} is out of range for {} folds",
                    folds.len()
                )));
            }
            let model = cp.instantiate()?;
            run.log(&format!("checkpoint loaded: {} ({})", path.display(), model.describe()));
            let origin = format!("checkpoint {}", path.display());
            Ok(Trained {
                model,
                spec: cp.model,
                dataset,
                fold: folds.swap_remove(fold_idx),
                origin,
            })
        }
        None => {
            let spec = cfg.model.to_spec()?;
            let tcfg = cfg.train.to_config();
            let fold_idx = cfg.train.fold;
            run.log(&format!("training fold {fold_idx} in-line"));
            let trained = train_model(&spec, &dataset, &folds[fold_idx], &tcfg)?;
            run.log(&format!(
                "trained: restart_seed {} test F1 {:.6}",
                trained.result.restart_seed, trained.result.test_f1
            ));
            let origin = format!(
                "trained in-line (fold {fold_idx}, restart_seed {})",
                trained.result.restart_seed
            );
            Ok(Trained {
                model: trained.model,
                spec,
                dataset,
                fold: folds.swap_remove(fold_idx),
                origin,
            })
        }
    }
}

/// `trained_model`, then a concrete circuit-bearing model; commands that run
/// noisy circuits need the hybrid API, not just the scoring trait.
pub fn trained_hybrid(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<(HybridModel, Trained)> {
    let trained = trained_model(cfg, run)?;
    let spec = match &trained.spec {
        ModelSpec::Quantum(q) => *q,
        ModelSpec::Recurrent(_) => {
            return Err(Error::ModelShape {
                what: "circuit form: this command needs a quantum model".into(),
            })
        }
    };
    let mut hybrid = HybridModel::init(spec, 0)?;
    hybrid.params_mut().copy_from_slice(trained.model.params());
    Ok((hybrid, trained))
}
