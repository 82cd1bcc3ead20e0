//! Hybrid sequence classifiers: per-residue angles drive a layered ansatz
//! circuit, and a scalar head turns final Z expectations into a binding
//! score in [0, 1].
//!
//! Two angle sources exist. In NN-controlled mode each residue has a learned
//! embedding fed through a one-layer perceptron controller, and the sigmoid
//! outputs are scaled by 2*pi. In direct mode each residue owns its angle
//! row outright. All trainable values live in one flat `Vec<f64>` described
//! by an offset layout, which keeps optimizers, checkpoints, and numerical
//! gradient checks trivial.

use std::f64::consts::TAU;
use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzTemplate, SequenceCircuitSpec, TemplateId};
use crate::data::Peptide;
use crate::error::{Error, Result};
use crate::rng::seeded_stream;
use crate::sim::{backward_from, Circuit, Cotangent, QuantumState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    /// Sigmoid of a trained affine map over all qubit Z expectations.
    L1,
    /// Sigmoid of a trained scale-and-shift of qubit 0's Z expectation.
    L2,
    /// Parameter-free (1 + <Z_0>) / 2.
    L3,
}

impl HeadKind {
    pub fn param_count(self, qubits: usize) -> usize {
        match self {
            HeadKind::L1 => qubits + 1,
            HeadKind::L2 => 2,
            HeadKind::L3 => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumModelSpec {
    /// NN-controlled (embeddings + perceptron) when true, direct angle table
    /// when false.
    pub nn_controlled: bool,
    pub template: TemplateId,
    /// Encoding layers per residue block.
    pub layers: usize,
    pub qubits: usize,
    pub head: HeadKind,
    /// Embedding width in NN mode; ignored in direct mode.
    pub embedding_dim: usize,
    /// Append one trained block of the same template after the residue blocks.
    pub classifier: bool,
}

impl QuantumModelSpec {
    pub fn ansatz(&self) -> Result<AnsatzTemplate> {
        AnsatzTemplate::new(self.template, self.qubits, self.layers)
    }

    /// Per-residue circuit layout this spec induces, classifier block included.
    pub fn circuit_spec(&self) -> Result<SequenceCircuitSpec> {
        let template = self.ansatz()?;
        let classifier = if self.classifier {
            Some(AnsatzTemplate::new(self.template, self.qubits, 1)?)
        } else {
            None
        };
        Ok(SequenceCircuitSpec { template, classifier })
    }
}

/// Slices of the flat parameter vector. Empty ranges mark absent groups.
#[derive(Clone, Debug)]
struct Layout {
    embeddings: Range<usize>,
    ctrl_w: Range<usize>,
    ctrl_b: Range<usize>,
    table: Range<usize>,
    head: Range<usize>,
    classifier: Range<usize>,
    total: usize,
}

impl Layout {
    fn build(spec: &QuantumModelSpec, block_params: usize, classifier_params: usize) -> Result<Layout> {
        let d = block_params;
        let mut at = 0;
        let mut take = |len: usize| {
            let r = at..at + len;
            at += len;
            r
        };
        let (embeddings, ctrl_w, ctrl_b, table);
        if spec.nn_controlled {
            if spec.embedding_dim == 0 {
                return Err(Error::Config("embedding_dim must be positive in NN mode".into()));
            }
            embeddings = take(20 * spec.embedding_dim);
            ctrl_w = take(d * spec.embedding_dim);
            ctrl_b = take(d);
            table = take(0);
        } else {
            embeddings = take(0);
            ctrl_w = take(0);
            ctrl_b = take(0);
            table = take(20 * d);
        }
        let head = take(spec.head.param_count(spec.qubits));
        let classifier = take(classifier_params);
        Ok(Layout { embeddings, ctrl_w, ctrl_b, table, head, classifier, total: at })
    }
}

/// Common interface of the trainable sequence classifiers (quantum hybrid
/// and classical recurrent). Scores are probabilities of the strong class.
///
/// The input-space methods view a peptide as one real vector per position —
/// embedding rows for NN-controlled and recurrent models, angle rows for
/// direct models — which is the space attribution methods perturb.
pub trait SequenceModel: Send + Sync {
    /// Short human-readable identity for reports.
    fn describe(&self) -> String;

    fn num_params(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    /// Binding score in [0, 1].
    fn forward(&self, peptide: &Peptide) -> Result<f64>;

    /// Computes the score and adds `upstream * dscore/dparam` into `grads`
    /// (same length as `params`).
    fn backward(&self, peptide: &Peptide, upstream: f64, grads: &mut [f64]) -> Result<f64>;

    /// Width of one position's input vector.
    fn input_width(&self) -> usize;

    /// The model's own input vectors for `peptide`, one per position.
    fn peptide_inputs(&self, peptide: &Peptide) -> Result<Vec<Vec<f64>>>;

    /// Score when the per-position inputs are supplied directly.
    fn forward_inputs(&self, inputs: &[Vec<f64>]) -> Result<f64>;

    /// Score and its gradient with respect to each input coordinate.
    fn input_gradient(&self, inputs: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)>;
}

pub struct HybridModel {
    spec: QuantumModelSpec,
    circuit_spec: SequenceCircuitSpec,
    layout: Layout,
    params: Vec<f64>,
}

impl HybridModel {
    /// Fresh model with seeded initialization: embeddings from N(0, 1),
    /// controller weights from N(0, 1/embedding_dim), controller biases zero,
    /// direct angle rows and classifier angles uniform in [0, 2*pi), L1 head
    /// weights from N(0, 1/qubits) with zero bias, L2 head at identity
    /// (a = 1, b = 0).
    pub fn init(spec: QuantumModelSpec, seed: u64) -> Result<Self> {
        let circuit_spec = spec.circuit_spec()?;
        let d = circuit_spec.template.block_params();
        let cls = circuit_spec.classifier.map_or(0, |c| c.block_params());
        let layout = Layout::build(&spec, d, cls)?;
        let mut params = vec![0.0; layout.total];
        let mut rng = seeded_stream(seed, 3);

        for i in layout.embeddings.clone() {
            params[i] = StandardNormal.sample(&mut rng);
        }
        let w_scale = 1.0 / (spec.embedding_dim.max(1) as f64).sqrt();
        for i in layout.ctrl_w.clone() {
            let g: f64 = StandardNormal.sample(&mut rng);
            params[i] = g * w_scale;
        }
        for i in layout.table.clone() {
            params[i] = rng.gen::<f64>() * TAU;
        }
        if spec.head == HeadKind::L1 {
            let scale = 1.0 / (spec.qubits as f64).sqrt();
            let head = layout.head.clone();
            for i in head.start..head.end - 1 {
                let g: f64 = StandardNormal.sample(&mut rng);
                params[i] = g * scale;
            }
        } else if spec.head == HeadKind::L2 {
            params[layout.head.start] = 1.0;
        }
        for i in layout.classifier.clone() {
            params[i] = rng.gen::<f64>() * TAU;
        }
        Ok(HybridModel { spec, circuit_spec, layout, params })
    }

    pub fn spec(&self) -> &QuantumModelSpec {
        &self.spec
    }

    /// Angles per residue block.
    pub fn block_params(&self) -> usize {
        self.circuit_spec.template.block_params()
    }

    /// The block angles the controller (or table) produces for one residue.
    pub fn controller_angles(&self, token: u8) -> Result<Vec<f64>> {
        if token >= 20 {
            return Err(Error::UnknownToken { token: (b'0' + token.min(9)) as char });
        }
        if self.spec.nn_controlled {
            Ok(self.angles_from_input(&self.embedding_row(token)).0)
        } else {
            let d = self.block_params();
            let t = self.layout.table.start + token as usize * d;
            Ok(self.params[t..t + d].to_vec())
        }
    }

    /// The L1 head's affine map (weights over qubit Z expectations, bias),
    /// for analyses that reuse the trained readout.
    pub fn l1_head(&self) -> Option<(&[f64], f64)> {
        if self.spec.head != HeadKind::L1 {
            return None;
        }
        let h = &self.params[self.layout.head.clone()];
        Some((&h[..h.len() - 1], h[h.len() - 1]))
    }

    fn embedding_row(&self, token: u8) -> Vec<f64> {
        let dim = self.spec.embedding_dim;
        let start = self.layout.embeddings.start + token as usize * dim;
        self.params[start..start + dim].to_vec()
    }

    /// (angles, sigmoid outputs) of the controller on input `x`; in direct
    /// mode the input row is the angle row.
    fn angles_from_input(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.block_params();
        if !self.spec.nn_controlled {
            return (x.to_vec(), Vec::new());
        }
        let dim = self.spec.embedding_dim;
        let w = &self.params[self.layout.ctrl_w.clone()];
        let b = &self.params[self.layout.ctrl_b.clone()];
        let mut act = Vec::with_capacity(d);
        let mut angles = Vec::with_capacity(d);
        for j in 0..d {
            let mut u = b[j];
            for k in 0..dim {
                u += w[j * dim + k] * x[k];
            }
            let s = sigmoid(u);
            act.push(s);
            angles.push(TAU * s);
        }
        (angles, act)
    }

    fn check_inputs(&self, inputs: &[Vec<f64>]) -> Result<()> {
        if inputs.is_empty() {
            return Err(Error::EmptySequence);
        }
        let width = self.input_width();
        for row in inputs {
            if row.len() != width {
                return Err(Error::LengthMismatch { expected: width, got: row.len() });
            }
        }
        Ok(())
    }

    /// Assembles the parametric circuit and flat angle vector for the given
    /// per-position inputs, remembering each position's sigmoid activations
    /// for the backward pass.
    fn assemble(&self, inputs: &[Vec<f64>]) -> Result<Assembled> {
        let positions = inputs.len();
        let mut flat = Vec::with_capacity(self.circuit_spec.total_params(positions));
        let mut activations = Vec::with_capacity(positions);
        for row in inputs {
            let (angles, act) = self.angles_from_input(row);
            flat.extend_from_slice(&angles);
            activations.push(act);
        }
        flat.extend_from_slice(&self.params[self.layout.classifier.clone()]);
        let circuit = self.circuit_spec.build_parametric(positions)?;
        debug_assert_eq!(circuit.num_params(), flat.len());
        Ok(Assembled { circuit, flat, activations })
    }

    fn head_score(&self, state: &QuantumState) -> (f64, Vec<f64>) {
        let z = state.expectations_z();
        let score = self.head_on_z(&z);
        (score, z)
    }

    fn head_on_z(&self, z: &[f64]) -> f64 {
        let head = &self.params[self.layout.head.clone()];
        match self.spec.head {
            HeadKind::L1 => {
                let (w, b) = head.split_at(head.len() - 1);
                sigmoid(w.iter().zip(z).map(|(wi, zi)| wi * zi).sum::<f64>() + b[0])
            }
            HeadKind::L2 => sigmoid(head[0] * z[0] + head[1]),
            HeadKind::L3 => (1.0 + z[0]) / 2.0,
        }
    }

    /// The fully bound circuit this model runs for one peptide — the unit
    /// that emulation and mitigation execute under a noise model.
    pub fn peptide_circuit(&self, peptide: &Peptide) -> Result<Circuit> {
        let inputs = self.peptide_inputs(peptide)?;
        let assembled = self.assemble(&inputs)?;
        crate::sim::bind(&assembled.circuit, &assembled.flat)
    }

    /// Score from an externally measured per-qubit Z-expectation vector
    /// (noisy readouts included); must be one value per model qubit.
    pub fn score_from_z(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.spec.qubits {
            return Err(Error::ModelShape {
                what: format!("{} Z expectations for a {}-qubit model", z.len(), self.spec.qubits),
            });
        }
        Ok(self.head_on_z(z))
    }

    /// dscore/dz per qubit and dscore/dhead_param.
    fn head_gradients(&self, z: &[f64], score: f64) -> (Vec<f64>, Vec<f64>) {
        let head = &self.params[self.layout.head.clone()];
        let n = z.len();
        match self.spec.head {
            HeadKind::L1 => {
                let sp = score * (1.0 - score);
                let (w, _) = head.split_at(head.len() - 1);
                let dz: Vec<f64> = (0..n).map(|i| sp * w[i]).collect();
                let mut dhead: Vec<f64> = (0..n).map(|i| sp * z[i]).collect();
                dhead.push(sp);
                (dz, dhead)
            }
            HeadKind::L2 => {
                let sp = score * (1.0 - score);
                let mut dz = vec![0.0; n];
                dz[0] = sp * head[0];
                (dz, vec![sp * z[0], sp])
            }
            HeadKind::L3 => {
                let mut dz = vec![0.0; n];
                dz[0] = 0.5;
                (dz, Vec::new())
            }
        }
    }

    /// Shared backward core: returns the score plus the gradient pieces that
    /// params-space and input-space callers each consume.
    fn backward_core(&self, inputs: &[Vec<f64>], upstream: f64) -> Result<BackwardCore> {
        let assembled = self.assemble(inputs)?;
        let state = assembled.circuit.simulate(&assembled.flat)?;
        let (score, z) = self.head_score(&state);
        let (dz, dhead) = self.head_gradients(&z, score);
        let z_cot: Vec<f64> = dz.iter().map(|g| upstream * g).collect();
        let dflat = backward_from(&assembled.circuit, &assembled.flat, &state, Cotangent::ZExpectations(&z_cot))?;
        Ok(BackwardCore { score, dhead, dflat, assembled })
    }
}

struct Assembled {
    circuit: crate::sim::Circuit,
    flat: Vec<f64>,
    activations: Vec<Vec<f64>>,
}

struct BackwardCore {
    score: f64,
    dhead: Vec<f64>,
    dflat: Vec<f64>,
    assembled: Assembled,
}

impl SequenceModel for HybridModel {
    fn describe(&self) -> String {
        format!(
            "quantum {} template={} layers={} qubits={} head={:?} classifier={}",
            if self.spec.nn_controlled { "nn" } else { "direct" },
            u8::from(self.spec.template),
            self.spec.layers,
            self.spec.qubits,
            self.spec.head,
            self.spec.classifier,
        )
    }

    fn num_params(&self) -> usize {
        self.layout.total
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, peptide: &Peptide) -> Result<f64> {
        self.forward_inputs(&self.peptide_inputs(peptide)?)
    }

    fn backward(&self, peptide: &Peptide, upstream: f64, grads: &mut [f64]) -> Result<f64> {
        if grads.len() != self.layout.total {
            return Err(Error::LengthMismatch { expected: self.layout.total, got: grads.len() });
        }
        let inputs = self.peptide_inputs(peptide)?;
        let core = self.backward_core(&inputs, upstream)?;
        let d = self.block_params();
        let dim = self.spec.embedding_dim;

        for (h, g) in core.dhead.iter().enumerate() {
            grads[self.layout.head.start + h] += upstream * g;
        }
        for (c, g) in core.dflat[inputs.len() * d..].iter().enumerate() {
            grads[self.layout.classifier.start + c] += g;
        }
        for (pos, token) in peptide.tokens().iter().enumerate() {
            let dangles = &core.dflat[pos * d..(pos + 1) * d];
            if self.spec.nn_controlled {
                let act = &core.assembled.activations[pos];
                let x = &inputs[pos];
                let w = self.layout.ctrl_w.start;
                for j in 0..d {
                    let du = dangles[j] * TAU * act[j] * (1.0 - act[j]);
                    for k in 0..dim {
                        grads[w + j * dim + k] += du * x[k];
                    }
                    grads[self.layout.ctrl_b.start + j] += du;
                    let e_row = self.layout.embeddings.start + *token as usize * dim;
                    let wj = &self.params[w + j * dim..w + (j + 1) * dim];
                    for k in 0..dim {
                        grads[e_row + k] += wj[k] * du;
                    }
                }
            } else {
                let row = self.layout.table.start + *token as usize * d;
                for j in 0..d {
                    grads[row + j] += dangles[j];
                }
            }
        }
        Ok(core.score)
    }

    fn input_width(&self) -> usize {
        if self.spec.nn_controlled {
            self.spec.embedding_dim
        } else {
            self.block_params()
        }
    }

    fn peptide_inputs(&self, peptide: &Peptide) -> Result<Vec<Vec<f64>>> {
        if peptide.is_empty() {
            return Err(Error::EmptySequence);
        }
        peptide
            .tokens()
            .iter()
            .map(|&t| {
                if self.spec.nn_controlled {
                    Ok(self.embedding_row(t))
                } else {
                    self.controller_angles(t)
                }
            })
            .collect()
    }

    fn forward_inputs(&self, inputs: &[Vec<f64>]) -> Result<f64> {
        self.check_inputs(inputs)?;
        let assembled = self.assemble(inputs)?;
        let state = assembled.circuit.simulate(&assembled.flat)?;
        Ok(self.head_score(&state).0)
    }

    fn input_gradient(&self, inputs: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
        self.check_inputs(inputs)?;
        let core = self.backward_core(inputs, 1.0)?;
        let d = self.block_params();
        let dim = self.spec.embedding_dim;
        let mut dinputs = Vec::with_capacity(inputs.len());
        for pos in 0..inputs.len() {
            let dangles = &core.dflat[pos * d..(pos + 1) * d];
            if self.spec.nn_controlled {
                let act = &core.assembled.activations[pos];
                let w = &self.params[self.layout.ctrl_w.clone()];
                let mut dx = vec![0.0; dim];
                for j in 0..d {
                    let du = dangles[j] * TAU * act[j] * (1.0 - act[j]);
                    for k in 0..dim {
                        dx[k] += w[j * dim + k] * du;
                    }
                }
                dinputs.push(dx);
            } else {
                dinputs.push(dangles.to_vec());
            }
        }
        Ok((core.score, dinputs))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Specification of any trainable model, closed over both families; maps
/// directly to configuration and checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Quantum(QuantumModelSpec),
    Recurrent(crate::baselines::RecurrentSpec),
}

impl ModelSpec {
    pub fn build(&self, seed: u64) -> Result<Box<dyn SequenceModel>> {
        match self {
            ModelSpec::Quantum(spec) => Ok(Box::new(HybridModel::init(*spec, seed)?)),
            ModelSpec::Recurrent(spec) => Ok(Box::new(crate::baselines::RecurrentModel::init(*spec, seed)?)),
        }
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.build(0)?.num_params())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Peptide;

    fn spec(nn: bool, template: TemplateId, head: HeadKind) -> QuantumModelSpec {
        QuantumModelSpec {
            nn_controlled: nn,
            template,
            layers: 1,
            qubits: 2,
            head,
            embedding_dim: 10,
            classifier: false,
        }
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        for nn in [true, false] {
            for head in [HeadKind::L1, HeadKind::L2, HeadKind::L3] {
                let m = HybridModel::init(spec(nn, TemplateId::T9, head), 5).unwrap();
                for s in ["ACDEFGHIK", "YYYYYYYY", "AAAAAAAAAAAAAAA"] {
                    let p = m.forward(&Peptide::parse(s).unwrap()).unwrap();
                    assert!((0.0..=1.0).contains(&p), "{p}");
                }
            }
        }
    }

    #[test]
    fn l3_head_is_half_at_zero_angles() {
        // One zero-angle template-9 block on two qubits leaves <Z_0> = 0, so
        // the parameter-free head gives 1/2 on any single-residue probe.
        let mut m = HybridModel::init(spec(false, TemplateId::T9, HeadKind::L3), 0).unwrap();
        for p in m.params_mut() {
            *p = 0.0;
        }
        for probe in ["A", "C", "Y"] {
            let score = m.forward(&Peptide::parse(probe).unwrap()).unwrap();
            assert!((score - 0.5).abs() < 1e-12);
        }
        // The zero-angle block CZ (H x H) has period 3 on |00>, so nine
        // blocks return to |00> where <Z_0> = 1.
        let score9 = m.forward(&Peptide::parse("ACDEFGHIK").unwrap()).unwrap();
        assert!((score9 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l2_identity_head_at_zero_angles() {
        let mut m = HybridModel::init(spec(false, TemplateId::T9, HeadKind::L2), 0).unwrap();
        let head = m.layout.head.clone();
        for p in m.params_mut().iter_mut().take(head.start) {
            *p = 0.0;
        }
        m.params_mut()[head.start] = 1.0;
        m.params_mut()[head.start + 1] = 0.0;
        // Single block: <Z_0> = 0, so the identity L2 head reads sigmoid(0).
        let score = m.forward(&Peptide::parse("A").unwrap()).unwrap();
        assert!((score - 0.5).abs() < 1e-12);
    }

    #[test]
    fn param_counts_by_mode() {
        // Template 9, n=2, 1 layer: d = 2.
        let nn = HybridModel::init(spec(true, TemplateId::T9, HeadKind::L1), 0).unwrap();
        assert_eq!(nn.num_params(), 20 * 10 + 2 * 10 + 2 + 3);
        let direct = HybridModel::init(spec(false, TemplateId::T9, HeadKind::L3), 0).unwrap();
        assert_eq!(direct.num_params(), 20 * 2);
        let mut with_cls = spec(false, TemplateId::T9, HeadKind::L3);
        with_cls.classifier = true;
        let m = HybridModel::init(with_cls, 0).unwrap();
        assert_eq!(m.num_params(), 40 + 2);
    }

    #[test]
    fn direct_mode_reproduces_frozen_controller() {
        let nn = HybridModel::init(spec(true, TemplateId::T14, HeadKind::L3), 11).unwrap();
        let mut direct = HybridModel::init(spec(false, TemplateId::T14, HeadKind::L3), 0).unwrap();
        let d = direct.block_params();
        for token in 0..20u8 {
            let angles = nn.controller_angles(token).unwrap();
            let row = direct.layout.table.start + token as usize * d;
            direct.params_mut()[row..row + d].copy_from_slice(&angles);
        }
        for s in ["ACDEFGHIK", "YWYWYWYW", "MNPQRSTVWYACDEF"] {
            let p = Peptide::parse(s).unwrap();
            let a = nn.forward(&p).unwrap();
            let b = direct.forward(&p).unwrap();
            assert_eq!(a.to_bits(), b.to_bits(), "scores must match bit for bit");
        }
    }

    #[test]
    fn permuting_residues_changes_score() {
        let m = HybridModel::init(spec(true, TemplateId::T9, HeadKind::L2), 23).unwrap();
        let a = m.forward(&Peptide::parse("ACDEFGHIK").unwrap()).unwrap();
        let b = m.forward(&Peptide::parse("KIHGFEDCA").unwrap()).unwrap();
        assert!((a - b).abs() > 1e-9, "order must matter: {a} vs {b}");
    }

    #[test]
    fn repeated_tokens_share_angles() {
        let m = HybridModel::init(spec(true, TemplateId::T9, HeadKind::L2), 23).unwrap();
        let a1 = m.controller_angles(0).unwrap();
        let a2 = m.controller_angles(0).unwrap();
        assert_eq!(a1, a2);
        // Angles land in [0, 2*pi] by construction.
        for token in 0..20 {
            for angle in m.controller_angles(token).unwrap() {
                assert!((0.0..=TAU).contains(&angle));
            }
        }
    }

    fn finite_diff_check(spec: QuantumModelSpec, seed: u64) {
        let mut m = HybridModel::init(spec, seed).unwrap();
        let peptide = Peptide::parse("AYCADEFGH").unwrap();
        let n = m.num_params();
        let mut grads = vec![0.0; n];
        m.backward(&peptide, 1.0, &mut grads).unwrap();
        let h = 1e-5;
        for i in (0..n).step_by(7) {
            let orig = m.params()[i];
            m.params_mut()[i] = orig + h;
            let plus = m.forward(&peptide).unwrap();
            m.params_mut()[i] = orig - h;
            let minus = m.forward(&peptide).unwrap();
            m.params_mut()[i] = orig;
            let fd = (plus - minus) / (2.0 * h);
            let diff = (grads[i] - fd).abs();
            let scale = grads[i].abs().max(fd.abs());
            assert!(
                diff <= 1e-8 || diff / scale <= 1e-4,
                "param {i}: adjoint {} vs fd {fd}",
                grads[i]
            );
        }
    }

    #[test]
    fn backward_matches_finite_differences_nn() {
        finite_diff_check(spec(true, TemplateId::T9, HeadKind::L1), 41);
    }

    #[test]
    fn backward_matches_finite_differences_direct_with_classifier() {
        let mut s = spec(false, TemplateId::T14, HeadKind::L2);
        s.classifier = true;
        finite_diff_check(s, 42);
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let m = HybridModel::init(spec(true, TemplateId::T8, HeadKind::L1), 13).unwrap();
        let peptide = Peptide::parse("AYCADEFGH").unwrap();
        let inputs = m.peptide_inputs(&peptide).unwrap();
        let (score, di) = m.input_gradient(&inputs).unwrap();
        assert!((score - m.forward(&peptide).unwrap()).abs() < 1e-15);
        let h = 1e-5;
        for pos in [0usize, 4, 8] {
            for k in 0..m.input_width() {
                let mut plus = inputs.clone();
                plus[pos][k] += h;
                let mut minus = inputs.clone();
                minus[pos][k] -= h;
                let fd = (m.forward_inputs(&plus).unwrap() - m.forward_inputs(&minus).unwrap()) / (2.0 * h);
                let diff = (di[pos][k] - fd).abs();
                let scale = di[pos][k].abs().max(fd.abs());
                assert!(diff <= 1e-8 || diff / scale <= 1e-4, "pos {pos} k {k}");
            }
        }
    }

    #[test]
    fn init_is_seeded() {
        let a = HybridModel::init(spec(true, TemplateId::T9, HeadKind::L1), 7).unwrap();
        let b = HybridModel::init(spec(true, TemplateId::T9, HeadKind::L1), 7).unwrap();
        let c = HybridModel::init(spec(true, TemplateId::T9, HeadKind::L1), 8).unwrap();
        assert_eq!(a.params(), b.params());
        assert_ne!(a.params(), c.params());
    }
}
