//! Layered ansatz circuit templates and per-residue circuit assembly.
//!
//! Three fixed entangling layouts (template ids 8, 9, 14) generate one block
//! per residue; a peptide of length P becomes P blocks applied in sequence,
//! optionally followed by one trained classifier block of the same layout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Circuit, Gate, GateKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum TemplateId {
    T8,
    T9,
    T14,
}

impl TryFrom<u8> for TemplateId {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        match value {
            8 => Ok(TemplateId::T8),
            9 => Ok(TemplateId::T9),
            14 => Ok(TemplateId::T14),
            other => Err(Error::Config(format!("unknown ansatz template {other}; supported: 8, 9, 14"))),
        }
    }
}

impl From<TemplateId> for u8 {
    fn from(id: TemplateId) -> u8 {
        match id {
            TemplateId::T8 => 8,
            TemplateId::T9 => 9,
            TemplateId::T14 => 14,
        }
    }
}

/// A template instantiated at a qubit count and layer depth. Parameter count
/// per block is `layers * params_per_layer`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzTemplate {
    pub id: TemplateId,
    pub qubits: usize,
    pub layers: usize,
}

impl AnsatzTemplate {
    pub fn new(id: TemplateId, qubits: usize, layers: usize) -> Result<Self> {
        if !(2..=crate::sim::MAX_QUBITS).contains(&qubits) {
            return Err(Error::QubitCountUnsupported { n: qubits, min: 2, max: crate::sim::MAX_QUBITS });
        }
        if layers == 0 {
            return Err(Error::Config("ansatz needs at least one layer".into()));
        }
        Ok(AnsatzTemplate { id, qubits, layers })
    }

    pub fn params_per_layer(&self) -> usize {
        let n = self.qubits;
        match self.id {
            // RX row + RZ row + two even/odd brick passes of CRX.
            TemplateId::T8 => 2 * n + 2 * (n - 1),
            // H row + CZ chain + RX row.
            TemplateId::T9 => n,
            // Two RY rows + two CRX rings (which degenerate to one gate each
            // at n = 2, where both ring directions name the same pair).
            TemplateId::T14 => {
                if n == 2 {
                    6
                } else {
                    4 * n
                }
            }
        }
    }

    /// Parameters consumed by one block (angles per residue).
    pub fn block_params(&self) -> usize {
        self.layers * self.params_per_layer()
    }

    /// Gate sequence of one block as (kind, control, target, slot) where
    /// `slot` numbers the block's angles in emission order.
    fn block_gates(&self) -> Vec<(GateKind, Option<usize>, usize, Option<usize>)> {
        let n = self.qubits;
        let mut gates = Vec::new();
        let mut slot = 0;
        let mut rot = |gates: &mut Vec<_>, kind, control, target| {
            gates.push((kind, control, target, Some(slot)));
            slot += 1;
        };
        for _ in 0..self.layers {
            match self.id {
                TemplateId::T8 => {
                    for q in 0..n {
                        rot(&mut gates, GateKind::RX, None, q);
                    }
                    for q in 0..n {
                        rot(&mut gates, GateKind::RZ, None, q);
                    }
                    for _ in 0..2 {
                        for q in (0..n - 1).step_by(2) {
                            rot(&mut gates, GateKind::CRX, Some(q), q + 1);
                        }
                        for q in (1..n - 1).step_by(2) {
                            rot(&mut gates, GateKind::CRX, Some(q), q + 1);
                        }
                    }
                }
                TemplateId::T9 => {
                    for q in 0..n {
                        gates.push((GateKind::H, None, q, None));
                    }
                    for q in 0..n - 1 {
                        gates.push((GateKind::CZ, Some(q), q + 1, None));
                    }
                    for q in 0..n {
                        rot(&mut gates, GateKind::RX, None, q);
                    }
                }
                TemplateId::T14 => {
                    for q in 0..n {
                        rot(&mut gates, GateKind::RY, None, q);
                    }
                    if n == 2 {
                        rot(&mut gates, GateKind::CRX, Some(1), 0);
                    } else {
                        for c in (0..n).rev() {
                            rot(&mut gates, GateKind::CRX, Some(c), (c + 1) % n);
                        }
                    }
                    for q in 0..n {
                        rot(&mut gates, GateKind::RY, None, q);
                    }
                    if n == 2 {
                        rot(&mut gates, GateKind::CRX, Some(0), 1);
                    } else {
                        for c in 0..n {
                            rot(&mut gates, GateKind::CRX, Some(c), (c + n - 1) % n);
                        }
                    }
                }
            }
        }
        debug_assert_eq!(slot, self.block_params());
        gates
    }

    /// Appends one block with angles bound from `angles`.
    pub fn push_block(&self, circuit: &mut Circuit, angles: &[f64]) -> Result<()> {
        if angles.len() != self.block_params() {
            return Err(Error::ParamCountMismatch { expected: self.block_params(), got: angles.len() });
        }
        for (kind, control, target, slot) in self.block_gates() {
            let gate = match slot {
                Some(s) => match control {
                    Some(c) => Gate { kind, target, control: Some(c), theta: Some(angles[s]), param_id: None },
                    None => Gate { kind, target, control: None, theta: Some(angles[s]), param_id: None },
                },
                None => match kind {
                    GateKind::H => Gate::h(target),
                    GateKind::CZ => Gate::cz(control.unwrap(), target),
                    _ => unreachable!(),
                },
            };
            circuit.push(gate)?;
        }
        Ok(())
    }

    /// Appends one block whose angles reference params
    /// `[param_offset, param_offset + block_params())`.
    pub fn push_parametric_block(&self, circuit: &mut Circuit, param_offset: usize) -> Result<()> {
        for (kind, control, target, slot) in self.block_gates() {
            let gate = match slot {
                Some(s) => Gate::parametric(kind, control, target, param_offset + s),
                None => match kind {
                    GateKind::H => Gate::h(target),
                    GateKind::CZ => Gate::cz(control.unwrap(), target),
                    _ => unreachable!(),
                },
            };
            circuit.push(gate)?;
        }
        Ok(())
    }
}

/// One block on its own circuit, angles bound.
pub fn build_block(template: &AnsatzTemplate, angles: &[f64]) -> Result<Circuit> {
    let mut circuit = Circuit::new(template.qubits)?;
    template.push_block(&mut circuit, angles)?;
    Ok(circuit)
}

/// Layout of a full per-peptide circuit: one block per residue plus an
/// optional trailing classifier block.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SequenceCircuitSpec {
    pub template: AnsatzTemplate,
    pub classifier: Option<AnsatzTemplate>,
}

impl SequenceCircuitSpec {
    pub fn total_params(&self, positions: usize) -> usize {
        positions * self.template.block_params()
            + self.classifier.map_or(0, |c| c.block_params())
    }

    /// Bound circuit for one peptide: `position_angles[p]` drives block `p`,
    /// then the classifier block runs on `classifier_angles` if configured.
    pub fn build(
        &self,
        position_angles: &[Vec<f64>],
        classifier_angles: Option<&[f64]>,
    ) -> Result<Circuit> {
        if position_angles.is_empty() {
            return Err(Error::EmptySequence);
        }
        if self.classifier.is_some() != classifier_angles.is_some() {
            return Err(Error::ModelShape { what: "classifier angles matching the spec".into() });
        }
        let mut circuit = Circuit::new(self.template.qubits)?;
        for angles in position_angles {
            self.template.push_block(&mut circuit, angles)?;
        }
        if let (Some(cls), Some(angles)) = (self.classifier, classifier_angles) {
            cls.push_block(&mut circuit, angles)?;
        }
        Ok(circuit)
    }

    /// Parametric variant: block `p` reads params
    /// `[p*d, (p+1)*d)` for block size `d`, and the classifier block (if any)
    /// reads the trailing slice.
    pub fn build_parametric(&self, positions: usize) -> Result<Circuit> {
        if positions == 0 {
            return Err(Error::EmptySequence);
        }
        let d = self.template.block_params();
        let mut circuit = Circuit::new(self.template.qubits)?;
        for p in 0..positions {
            self.template.push_parametric_block(&mut circuit, p * d)?;
        }
        if let Some(cls) = self.classifier {
            cls.push_parametric_block(&mut circuit, positions * d)?;
        }
        circuit.validate()?;
        Ok(circuit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn template9_two_qubit_block_gate_list() {
        let t = AnsatzTemplate::new(TemplateId::T9, 2, 1).unwrap();
        let c = build_block(&t, &[0.1, 0.2]).unwrap();
        let kinds: Vec<_> = c.gates().iter().map(|g| (g.kind, g.control, g.target)).collect();
        assert_eq!(
            kinds,
            vec![
                (GateKind::H, None, 0),
                (GateKind::H, None, 1),
                (GateKind::CZ, Some(0), 1),
                (GateKind::RX, None, 0),
                (GateKind::RX, None, 1),
            ]
        );
        assert_eq!(c.gates()[3].theta, Some(0.1));
        assert_eq!(c.gates()[4].theta, Some(0.2));
    }

    #[test]
    fn template9_zero_angles_state() {
        // H H CZ with RX(0) leaves (|00> + |01> + |10> - |11>)/2, and <Z_0> = 0.
        let t = AnsatzTemplate::new(TemplateId::T9, 2, 1).unwrap();
        let st = build_block(&t, &[0.0, 0.0]).unwrap().simulate(&[]).unwrap();
        let expect = [0.5, 0.5, 0.5, -0.5];
        for (amp, e) in st.amps().iter().zip(expect) {
            assert!((amp - Complex64::new(e, 0.0)).norm() < 1e-12);
        }
        assert!(st.expectation_z(0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn params_per_layer_by_template() {
        let ppl = |id, n| AnsatzTemplate::new(id, n, 1).unwrap().params_per_layer();
        assert_eq!(ppl(TemplateId::T9, 2), 2);
        assert_eq!(ppl(TemplateId::T9, 4), 4);
        assert_eq!(ppl(TemplateId::T14, 2), 6);
        assert_eq!(ppl(TemplateId::T14, 4), 16);
        assert_eq!(ppl(TemplateId::T8, 2), 6);
        assert_eq!(ppl(TemplateId::T8, 4), 14);
        // Layers multiply.
        assert_eq!(AnsatzTemplate::new(TemplateId::T9, 4, 2).unwrap().block_params(), 8);
    }

    #[test]
    fn template14_ring_structure() {
        let t = AnsatzTemplate::new(TemplateId::T14, 4, 1).unwrap();
        let c = t.block_gates();
        let crx: Vec<_> = c
            .iter()
            .filter(|(k, ..)| *k == GateKind::CRX)
            .map(|(_, ctrl, tgt, _)| (ctrl.unwrap(), *tgt))
            .collect();
        assert_eq!(
            crx,
            vec![
                // descending ring
                (3, 0),
                (2, 3),
                (1, 2),
                (0, 1),
                // ascending ring
                (0, 3),
                (1, 0),
                (2, 1),
                (3, 2),
            ]
        );
    }

    #[test]
    fn template8_brick_pattern() {
        let t = AnsatzTemplate::new(TemplateId::T8, 4, 1).unwrap();
        let crx: Vec<_> = t
            .block_gates()
            .iter()
            .filter(|(k, ..)| *k == GateKind::CRX)
            .map(|(_, ctrl, tgt, _)| (ctrl.unwrap(), *tgt))
            .collect();
        assert_eq!(crx, vec![(0, 1), (2, 3), (1, 2), (0, 1), (2, 3), (1, 2)]);
    }

    #[test]
    fn sequence_block_count_with_classifier() {
        let t = AnsatzTemplate::new(TemplateId::T9, 2, 1).unwrap();
        let spec = SequenceCircuitSpec { template: t, classifier: Some(t) };
        let c = spec.build_parametric(9).unwrap();
        // 10 blocks total: 9 residues plus the classifier, 2 params each.
        assert_eq!(c.num_params(), 20);
        assert_eq!(spec.total_params(9), 20);
        // Per block: 2 H + 1 CZ + 2 RX = 5 gates, 10 blocks.
        assert_eq!(c.gates().len(), 50);
    }

    #[test]
    fn same_angles_same_circuit() {
        let t = AnsatzTemplate::new(TemplateId::T14, 3, 2).unwrap();
        let spec = SequenceCircuitSpec { template: t, classifier: None };
        let angles: Vec<Vec<f64>> = (0..9)
            .map(|p| (0..t.block_params()).map(|i| (p * 31 + i) as f64 * 0.01).collect())
            .collect();
        let a = spec.build(&angles, None).unwrap();
        let b = spec.build(&angles, None).unwrap();
        let sa = a.simulate(&[]).unwrap();
        let sb = b.simulate(&[]).unwrap();
        assert_eq!(sa.amps(), sb.amps());
    }

    #[test]
    fn parametric_and_bound_agree() {
        let t = AnsatzTemplate::new(TemplateId::T8, 3, 1).unwrap();
        let spec = SequenceCircuitSpec { template: t, classifier: Some(t) };
        let d = t.block_params();
        let flat: Vec<f64> = (0..spec.total_params(4)).map(|i| 0.13 * i as f64 - 1.0).collect();
        let per_pos: Vec<Vec<f64>> = (0..4).map(|p| flat[p * d..(p + 1) * d].to_vec()).collect();
        let cls = &flat[4 * d..];
        let bound = spec.build(&per_pos, Some(cls)).unwrap().simulate(&[]).unwrap();
        let parametric = spec.build_parametric(4).unwrap().simulate(&flat).unwrap();
        assert_eq!(bound.amps(), parametric.amps());
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(AnsatzTemplate::new(TemplateId::T9, 1, 1).is_err());
        assert!(AnsatzTemplate::new(TemplateId::T9, 2, 0).is_err());
        let t = AnsatzTemplate::new(TemplateId::T9, 2, 1).unwrap();
        assert!(build_block(&t, &[0.0]).is_err());
        let spec = SequenceCircuitSpec { template: t, classifier: None };
        assert!(spec.build(&[], None).is_err());
    }
}
