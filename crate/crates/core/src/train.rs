//! Binary cross-entropy training with Adam, random restarts, early stopping
//! on validation loss, and stratified k-fold cross-validation.
//!
//! Every stochastic choice (init, shuffling, restart selection) is a pure
//! function of the configured seeds, and parallel gradient work reduces in a
//! fixed order, so runs reproduce bit for bit at any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{make_folds, Dataset, FoldSplit};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, SequenceModel};
use crate::rng::{derive_seed, seeded_stream};

/// Scores are clamped to [eps, 1 - eps] inside the loss so certain-and-wrong
/// predictions stay finite.
pub const BCE_EPS: f64 = 1e-12;

/// Mean binary cross-entropy in bits (base-2 logs).
pub fn bce_loss(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: labels.len(), got: scores.len() });
    }
    let mut total = 0.0;
    for (&p, &y) in scores.iter().zip(labels) {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ScoreOutOfRange { value: p });
        }
        let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
        total -= if y { p.log2() } else { (1.0 - p).log2() };
    }
    Ok(total / scores.len() as f64)
}

/// d/dscore of one example's cross-entropy term (in bits).
pub fn bce_grad(score: f64, label: bool) -> f64 {
    let p = score.clamp(BCE_EPS, 1.0 - BCE_EPS);
    let ln2 = std::f64::consts::LN_2;
    if label {
        -1.0 / (p * ln2)
    } else {
        1.0 / ((1.0 - p) * ln2)
    }
}

/// F1 of the positive (strong) class; 0 when the score has no support
/// (no true positives and no positive predictions or labels).
pub fn f1_score(predictions: &[bool], labels: &[bool]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: labels.len(), got: predictions.len() });
    }
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fn_ = 0.0;
    for (&pred, &y) in predictions.iter().zip(labels) {
        match (pred, y) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            (false, false) => {}
        }
    }
    let denom = 2.0 * tp + fp + fn_;
    Ok(if denom == 0.0 { 0.0 } else { 2.0 * tp / denom })
}

/// Scores above 1/2 predict the strong class.
pub fn classify(score: f64) -> bool {
    score > 0.5
}

pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, dim: usize) -> Adam {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; dim], v: vec![0.0; dim] }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    /// Independent seeded initializations; the best by validation F1 wins.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 16,
            max_epochs: 200,
            patience: 10,
            restarts: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!("learning_rate {} must be finite and >= 0", self.learning_rate)));
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
            ("restarts", self.restarts),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Per-fold training outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    /// Seed of the winning restart.
    pub restart_seed: u64,
    pub epochs_run: usize,
    pub validation_loss: f64,
    pub validation_f1: f64,
    pub test_f1: f64,
}

pub struct TrainedFold {
    pub model: Box<dyn SequenceModel>,
    pub result: FoldResult,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossValidation {
    pub folds: Vec<FoldResult>,
    pub mean_test_f1: f64,
    /// Population standard deviation over the fold test F1 scores.
    pub sd_test_f1: f64,
}

struct RestartOutcome {
    seed: u64,
    params: Vec<f64>,
    epochs_run: usize,
    validation_loss: f64,
    validation_f1: f64,
}

fn scores_for(
    model: &dyn SequenceModel,
    dataset: &Dataset,
    idx: &[usize],
) -> Result<(Vec<f64>, Vec<bool>)> {
    let scores: Vec<f64> = idx
        .par_iter()
        .map(|&i| model.forward(&dataset.records[i].peptide))
        .collect::<Result<_>>()?;
    let labels: Vec<bool> = idx.iter().map(|&i| dataset.records[i].strong).collect();
    Ok((scores, labels))
}

fn f1_of_scores(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let preds: Vec<bool> = scores.iter().map(|&s| classify(s)).collect();
    f1_score(&preds, labels)
}

/// Mean-BCE gradient over one batch, reduced in index order regardless of
/// how the per-example work was scheduled.
fn batch_gradient(
    model: &dyn SequenceModel,
    dataset: &Dataset,
    batch: &[usize],
) -> Result<(f64, Vec<f64>)> {
    let n = model.num_params();
    let per_example: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .map(|&i| {
            let mut g = vec![0.0; n];
            let score = model.backward(&dataset.records[i].peptide, 1.0, &mut g)?;
            Ok((score, g))
        })
        .collect::<Result<_>>()?;
    let mut grads = vec![0.0; n];
    let mut loss = 0.0;
    let inv = 1.0 / batch.len() as f64;
    for (&i, (score, g)) in batch.iter().zip(&per_example) {
        let label = dataset.records[i].strong;
        let p = score.clamp(BCE_EPS, 1.0 - BCE_EPS);
        loss -= if label { p.log2() } else { (1.0 - p).log2() };
        let w = bce_grad(*score, label) * inv;
        for (acc, gi) in grads.iter_mut().zip(g) {
            *acc += w * gi;
        }
    }
    Ok((loss * inv, grads))
}

fn run_restart(
    spec: &ModelSpec,
    dataset: &Dataset,
    fold: &FoldSplit,
    cfg: &TrainConfig,
    restart: usize,
    restart_seed: u64,
) -> Result<RestartOutcome> {
    let mut model = spec.build(restart_seed)?;
    let mut adam = Adam::new(cfg.learning_rate, model.num_params());
    let mut shuffle_rng = seeded_stream(restart_seed, 5);
    let mut order: Vec<usize> = fold.train.clone();

    let mut best_loss = f64::INFINITY;
    let mut best_params = model.params().to_vec();
    let mut epochs_run = 0;
    let mut bad_epochs = 0;

    for epoch in 0..cfg.max_epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            let (batch_loss, grads) = batch_gradient(model.as_ref(), dataset, batch)?;
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { restart, epoch });
            }
            adam.step(model.params_mut(), &grads);
        }
        epochs_run = epoch + 1;

        let (val_scores, val_labels) = scores_for(model.as_ref(), dataset, &fold.validation)?;
        let val_loss = bce_loss(&val_scores, &val_labels)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss { restart, epoch });
        }
        if val_loss < best_loss {
            best_loss = val_loss;
            best_params.copy_from_slice(model.params());
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
            if bad_epochs >= cfg.patience {
                break;
            }
        }
    }

    model.params_mut().copy_from_slice(&best_params);
    let (val_scores, val_labels) = scores_for(model.as_ref(), dataset, &fold.validation)?;
    let validation_f1 = f1_of_scores(&val_scores, &val_labels)?;
    let validation_loss = if best_loss.is_finite() { best_loss } else { bce_loss(&val_scores, &val_labels)? };
    Ok(RestartOutcome {
        seed: restart_seed,
        params: best_params,
        epochs_run,
        validation_loss,
        validation_f1,
    })
}

/// Trains `cfg.restarts` seeded initializations on the fold's training set,
/// early-stops each on validation loss (restoring the best checkpoint), and
/// keeps the restart with the highest validation F1 (ties: lower validation
/// loss, then lower seed). Test F1 is computed once, for the winner.
pub fn train_model(
    spec: &ModelSpec,
    dataset: &Dataset,
    fold: &FoldSplit,
    cfg: &TrainConfig,
) -> Result<TrainedFold> {
    cfg.validate()?;
    for idx in [&fold.train, &fold.validation, &fold.test] {
        if idx.is_empty() {
            return Err(Error::DatasetTooSmall { got: 0, needed: 1 });
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= dataset.len()) {
            return Err(Error::LengthMismatch { expected: dataset.len(), got: bad });
        }
    }

    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            let restart_seed = derive_seed(cfg.seed, (fold.fold as u64) << 16 | restart as u64);
            run_restart(spec, dataset, fold, cfg, restart, restart_seed)
        })
        .collect::<Result<_>>()?;

    let winner = outcomes
        .iter()
        .max_by(|a, b| {
            a.validation_f1
                .total_cmp(&b.validation_f1)
                .then(b.validation_loss.total_cmp(&a.validation_loss))
                .then(b.seed.cmp(&a.seed))
        })
        .unwrap();

    let mut model = spec.build(winner.seed)?;
    model.params_mut().copy_from_slice(&winner.params);
    let (test_scores, test_labels) = scores_for(model.as_ref(), dataset, &fold.test)?;
    let test_f1 = f1_of_scores(&test_scores, &test_labels)?;
    let result = FoldResult {
        fold: fold.fold,
        restart_seed: winner.seed,
        epochs_run: winner.epochs_run,
        validation_loss: winner.validation_loss,
        validation_f1: winner.validation_f1,
        test_f1,
    };
    Ok(TrainedFold { model, result })
}

/// k-fold cross-validation: stratified folds from `fold_seed`, one
/// [`train_model`] run per fold, mean and population SD of the test F1s.
pub fn cross_validate(
    spec: &ModelSpec,
    dataset: &Dataset,
    cfg: &TrainConfig,
    k: usize,
    fold_seed: u64,
) -> Result<CrossValidation> {
    let folds = make_folds(dataset, k, fold_seed)?;
    let results: Vec<FoldResult> = folds
        .par_iter()
        .map(|fold| train_model(spec, dataset, fold, cfg).map(|t| t.result))
        .collect::<Result<_>>()?;
    let mean = results.iter().map(|r| r.test_f1).sum::<f64>() / results.len() as f64;
    let var = results.iter().map(|r| (r.test_f1 - mean).powi(2)).sum::<f64>() / results.len() as f64;
    Ok(CrossValidation { folds: results, mean_test_f1: mean, sd_test_f1: var.sqrt() })
}

/// Serializable trained-model snapshot. JSON round-trips f64 exactly, so a
/// reloaded checkpoint scores identically.
#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: ModelSpec,
    pub params: Vec<f64>,
    pub fold: Option<usize>,
    pub fold_seed: Option<u64>,
    pub train_seed: Option<u64>,
    pub restart_seed: Option<u64>,
    pub dataset_provenance: String,
}

impl Checkpoint {
    pub fn instantiate(&self) -> Result<Box<dyn SequenceModel>> {
        let mut model = self.model.build(0)?;
        if self.params.len() != model.num_params() {
            return Err(Error::ParamCountMismatch { expected: model.num_params(), got: self.params.len() });
        }
        model.params_mut().copy_from_slice(&self.params);
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Checkpoint> {
        let json = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&json)?)
    }
}

/// Scores every indexed record; convenience for evaluation commands.
pub fn evaluate(
    model: &dyn SequenceModel,
    dataset: &Dataset,
    idx: &[usize],
) -> Result<(Vec<f64>, Vec<bool>, f64)> {
    let (scores, labels) = scores_for(model, dataset, idx)?;
    let f1 = f1_of_scores(&scores, &labels)?;
    Ok((scores, labels, f1))
}
