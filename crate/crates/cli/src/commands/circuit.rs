//! `gate-count`: native vs decomposed gate tallies for the configured model.

use std::fmt::Write;

use qbind_core::compile::count_gates;
use qbind_core::model::ModelSpec;
use qbind_core::{Error, Result};

use crate::config::ExperimentConfig;
use crate::rundir::RunDir;

/// Sequence lengths the tallies are reported for; spans the modeled range's
/// common sizes without flooding the report.
const LENGTHS: [usize; 4] = [8, 9, 10, 11];

pub fn gate_count(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<()> {
    let spec = match cfg.model.to_spec()? {
        ModelSpec::Quantum(q) => q,
        ModelSpec::Recurrent(_) => {
            return Err(Error::Config("gate-count needs a quantum model".into()))
        }
    };
    let seq = spec.circuit_spec()?;
    run.log(&format!("counting gates for lengths {LENGTHS:?}"));

    let mut out = String::new();
    writeln!(
        out,
        "model: template {} layers {} qubits {} classifier {}",
        u8::from(spec.template),
        spec.layers,
        spec.qubits,
        spec.classifier
    )
    .unwrap();
    writeln!(out, "decomposition target: rotations, H, CNOT").unwrap();
    writeln!(
        out,
        "\nlength  params  gates native->decomposed  two-qubit native->decomposed"
    )
    .unwrap();
    let mut nine = None;
    for len in LENGTHS {
        let circuit = seq.build_parametric(len)?;
        let report = count_gates(&circuit)?;
        writeln!(
            out,
            "{len:>6}  {:>6}  {:>12} -> {:<10}  {:>14} -> {:<10}",
            report.params,
            report.total_pre,
            report.total_post,
            report.two_qubit_pre,
            report.two_qubit_post
        )
        .unwrap();
        if len == 9 {
            nine = Some(report);
        }
    }

    let report = nine.expect("length 9 is in LENGTHS");
    writeln!(out, "\nper-kind counts at length 9").unwrap();
    writeln!(out, "kind    native  decomposed").unwrap();
    let kinds: std::collections::BTreeSet<&String> =
        report.per_kind_pre.keys().chain(report.per_kind_post.keys()).collect();
    for kind in kinds {
        writeln!(
            out,
            "{kind:<6}  {:>6}  {:>10}",
            report.per_kind_pre.get(kind).copied().unwrap_or(0),
            report.per_kind_post.get(kind).copied().unwrap_or(0)
        )
        .unwrap();
    }
    run.finish(&out)?;
    Ok(())
}
