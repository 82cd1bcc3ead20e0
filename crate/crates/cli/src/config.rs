//! Typed experiment configuration. Every command reads one TOML file; unknown
//! keys are rejected, omitted keys take the defaults documented in the README.
//! Validation runs in full before any output directory is created, so a
//! rejected config never leaves a partial run behind.

use std::path::PathBuf;

use serde::Deserialize;

use qbind_core::ansatz::TemplateId;
use qbind_core::baselines::{CellKind, RecurrentSpec};
use qbind_core::model::{HeadKind, ModelSpec, QuantumModelSpec};
use qbind_core::noise::NoiseModel;
use qbind_core::train::TrainConfig;
use qbind_core::{Error, Result};

use crate::commands::CommandKind;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Run-directory suffix; defaults to the command name.
    pub tag: Option<String>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Worker threads; 0 means all available cores.
    #[serde(default)]
    pub workers: usize,
    /// Reuse a trained model instead of training in-line.
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub attribution: AttributionSection,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// "synthetic", "raw" (unlabeled measurements), or "file" (labeled TSV).
    pub source: String,
    pub path: Option<PathBuf>,
    /// Synthetic record count.
    pub count: usize,
    /// Synthetic generator seed.
    pub seed: u64,
    /// Raw only: strong-class share to downsample toward, in (0, 1).
    pub strong_share: Option<f64>,
    pub downsample_seed: u64,
    pub folds: usize,
    pub fold_seed: u64,
}

impl Default for DataSection {
    fn default() -> DataSection {
        DataSection {
            source: "synthetic".into(),
            path: None,
            count: 500,
            seed: 7,
            strong_share: None,
            downsample_seed: 0,
            folds: 5,
            fold_seed: 1,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// "quantum" or "recurrent".
    pub kind: String,
    pub nn_controlled: bool,
    /// Ansatz template number: 8, 9, or 14. Required for quantum models.
    pub template: Option<u8>,
    pub layers: usize,
    pub qubits: Option<usize>,
    /// "L1", "L2", or "L3".
    pub head: String,
    pub embedding_dim: usize,
    pub classifier: bool,
    /// "rnn", "gru", or "lstm". Required for recurrent models.
    pub cell: Option<String>,
    pub input_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
}

impl Default for ModelSection {
    fn default() -> ModelSection {
        ModelSection {
            kind: "quantum".into(),
            nn_controlled: true,
            template: None,
            layers: 1,
            qubits: None,
            head: "L1".into(),
            embedding_dim: 10,
            classifier: false,
            cell: None,
            input_dim: None,
            hidden_dim: None,
        }
    }
}

impl ModelSection {
    fn require<T: Copy>(field: Option<T>, name: &str, kind: &str) -> Result<T> {
        field.ok_or_else(|| {
            Error::Config(format!("[model] {name} is required when kind = \"{kind}\""))
        })
    }

    pub fn to_spec(&self) -> Result<ModelSpec> {
        match self.kind.as_str() {
            "quantum" => {
                let id = Self::require(self.template, "template", "quantum")?;
                let template = TemplateId::try_from(id)?;
                let qubits = Self::require(self.qubits, "qubits", "quantum")?;
                let head = match self.head.as_str() {
                    "L1" => HeadKind::L1,
                    "L2" => HeadKind::L2,
                    "L3" => HeadKind::L3,
                    other => {
                        return Err(Error::Config(format!(
                            "[model] head \"{other}\" is not one of L1, L2, L3"
                        )))
                    }
                };
                Ok(ModelSpec::Quantum(QuantumModelSpec {
                    nn_controlled: self.nn_controlled,
                    template,
                    layers: self.layers,
                    qubits,
                    head,
                    embedding_dim: self.embedding_dim,
                    classifier: self.classifier,
                }))
            }
            "recurrent" => {
                let cell = match self.cell.as_deref() {
                    Some("rnn") => CellKind::Rnn,
                    Some("gru") => CellKind::Gru,
                    Some("lstm") => CellKind::Lstm,
                    Some(other) => {
                        return Err(Error::Config(format!(
                            "[model] cell \"{other}\" is not one of rnn, gru, lstm"
                        )))
                    }
                    None => {
                        return Err(Error::Config(
                            "[model] cell is required when kind = \"recurrent\"".into(),
                        ))
                    }
                };
                Ok(ModelSpec::Recurrent(RecurrentSpec {
                    cell,
                    layers: self.layers,
                    input_dim: Self::require(self.input_dim, "input_dim", "recurrent")?,
                    hidden_dim: Self::require(self.hidden_dim, "hidden_dim", "recurrent")?,
                }))
            }
            other => Err(Error::Config(format!(
                "[model] kind \"{other}\" is not one of quantum, recurrent"
            ))),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Fold index for single-fold commands.
    pub fold: usize,
}

impl Default for TrainSection {
    fn default() -> TrainSection {
        let base = TrainConfig::default();
        TrainSection {
            learning_rate: base.learning_rate,
            batch_size: base.batch_size,
            max_epochs: base.max_epochs,
            patience: base.patience,
            restarts: base.restarts,
            seed: base.seed,
            fold: 0,
        }
    }
}

impl TrainSection {
    pub fn to_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            restarts: self.restarts,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub p_single: f64,
    pub p_two: f64,
    pub shots: u64,
    pub seed: u64,
    /// CNOT fold factors for extrapolation; odd, ascending, starting at 1.
    pub factors: Vec<u64>,
    /// How many test peptides `mitigate` works through.
    pub sample: usize,
    /// Shot budgets for `shot-bounds`.
    pub shots_grid: Vec<u64>,
}

impl Default for NoiseSection {
    fn default() -> NoiseSection {
        let base = NoiseModel::default();
        NoiseSection {
            p_single: base.p_single,
            p_two: base.p_two,
            shots: base.shots,
            seed: base.seed,
            factors: vec![1, 3, 5, 7],
            sample: 8,
            shots_grid: vec![64, 1024, 16384],
        }
    }
}

impl NoiseSection {
    pub fn to_model(&self) -> NoiseModel {
        NoiseModel {
            p_single: self.p_single,
            p_two: self.p_two,
            shots: self.shots,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttributionSection {
    /// "ig" (integrated gradients) or "svs" (Shapley value sampling).
    pub method: String,
    pub steps: usize,
    pub permutations: usize,
    pub seed: u64,
    /// How many test peptides to attribute.
    pub sample: usize,
}

impl Default for AttributionSection {
    fn default() -> AttributionSection {
        AttributionSection { method: "ig".into(), steps: 64, permutations: 25, seed: 0, sample: 16 }
    }
}

impl ExperimentConfig {
    /// Command-line flags win over config fields.
    pub fn apply_overrides(
        &mut self,
        tag: Option<&str>,
        out_dir: Option<&PathBuf>,
        workers: Option<usize>,
        fold: Option<usize>,
    ) {
        if let Some(t) = tag {
            self.tag = Some(t.to_string());
        }
        if let Some(d) = out_dir {
            self.out_dir = d.clone();
        }
        if let Some(w) = workers {
            self.workers = w;
        }
        if let Some(f) = fold {
            self.train.fold = f;
        }
    }

    fn validate_data(&self, cmd: CommandKind) -> Result<()> {
        let d = &self.data;
        match d.source.as_str() {
            "synthetic" => {
                if d.count == 0 {
                    return Err(Error::Config("[data] count must be positive".into()));
                }
            }
            "raw" | "file" => {
                if d.path.is_none() {
                    return Err(Error::Config(format!(
                        "[data] path is required when source = \"{}\"",
                        d.source
                    )));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "[data] source \"{other}\" is not one of synthetic, raw, file"
                )))
            }
        }
        if let Some(s) = d.strong_share {
            if !(0.0..1.0).contains(&s) || s <= 0.0 {
                return Err(Error::Config(format!(
                    "[data] strong_share {s} must lie strictly between 0 and 1"
                )));
            }
        }
        if cmd == CommandKind::PrepareData && d.source == "file" {
            return Err(Error::Config(
                "prepare-data expects source = \"synthetic\" or \"raw\"".into(),
            ));
        }
        if cmd != CommandKind::PrepareData && cmd != CommandKind::Stats {
            if d.folds < 2 {
                return Err(Error::Config(format!("[data] folds {} must be at least 2", d.folds)));
            }
            if self.train.fold >= d.folds {
                return Err(Error::Config(format!(
                    "[train] fold {} is out of range for {} folds",
                    self.train.fold, d.folds
                )));
            }
        }
        Ok(())
    }

    fn validate_noise(&self, cmd: CommandKind) -> Result<()> {
        let n = &self.noise;
        n.to_model().validate()?;
        if cmd == CommandKind::Mitigate {
            if n.factors.is_empty() || n.factors[0] != 1 {
                return Err(Error::Config("[noise] factors must start at 1".into()));
            }
            if n.sample == 0 {
                return Err(Error::Config("[noise] sample must be positive".into()));
            }
        }
        if cmd == CommandKind::ShotBounds && n.shots_grid.is_empty() {
            return Err(Error::Config("[noise] shots_grid must not be empty".into()));
        }
        Ok(())
    }

    fn validate_attribution(&self) -> Result<()> {
        let a = &self.attribution;
        match a.method.as_str() {
            "ig" => {
                if a.steps == 0 {
                    return Err(Error::Config("[attribution] steps must be positive".into()));
                }
            }
            "svs" => {
                if a.permutations == 0 {
                    return Err(Error::Config(
                        "[attribution] permutations must be positive".into(),
                    ));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "[attribution] method \"{other}\" is not one of ig, svs"
                )))
            }
        }
        if a.sample == 0 {
            return Err(Error::Config("[attribution] sample must be positive".into()));
        }
        Ok(())
    }

    /// A trained model is needed; either a checkpoint whose spec suits the
    /// command, or a trainable [model] + [train] pair.
    fn validate_model_source(&self, cmd: CommandKind) -> Result<()> {
        use CommandKind::*;
        let spec = match &self.checkpoint {
            Some(path) => {
                let cp = qbind_core::train::Checkpoint::load(path)?;
                cp.model
            }
            None => {
                self.train.to_config().validate()?;
                self.model.to_spec()?
            }
        };
        let quantum_only = matches!(cmd, Emulate | Mitigate | ShotBounds);
        match &spec {
            ModelSpec::Quantum(q) => {
                if cmd == ShotBounds && q.head != HeadKind::L1 {
                    return Err(Error::Config(
                        "shot-bounds needs an L1 head: the bound is on a linear read-out".into(),
                    ));
                }
            }
            ModelSpec::Recurrent(_) if quantum_only => {
                return Err(Error::Config(format!(
                    "{} runs circuits and needs a quantum model",
                    cmd.name()
                )));
            }
            ModelSpec::Recurrent(_) => {}
        }
        Ok(())
    }

    /// Full per-command validation; errors here leave no output behind.
    pub fn validate_for(&self, cmd: CommandKind) -> Result<()> {
        use CommandKind::*;
        match cmd {
            PrepareData | Stats => self.validate_data(cmd),
            Train | CrossValidate => {
                self.validate_data(cmd)?;
                self.model.to_spec()?;
                self.train.to_config().validate()
            }
            Emulate | Mitigate | ShotBounds => {
                self.validate_data(cmd)?;
                self.validate_noise(cmd)?;
                self.validate_model_source(cmd)
            }
            Attribute => {
                self.validate_data(cmd)?;
                self.validate_attribution()?;
                self.validate_model_source(cmd)
            }
            GateCount => match self.model.to_spec()? {
                ModelSpec::Quantum(_) => Ok(()),
                ModelSpec::Recurrent(_) => {
                    Err(Error::Config("gate-count needs a quantum model".into()))
                }
            },
        }
    }
}
