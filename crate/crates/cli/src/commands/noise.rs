//! `emulate`, `mitigate`, and `shot-bounds`: how the trained circuits behave
//! under shot sampling, depolarizing noise, and mitigation.

use std::fmt::Write;

use rayon::prelude::*;

use qbind_core::model::SequenceModel;
use qbind_core::noise::{noisy_expectations, zne_estimate, NoiseModel};
use qbind_core::rng::derive_seed;
use qbind_core::train::{classify, f1_score};
use qbind_core::{Error, Result};

use crate::config::ExperimentConfig;
use crate::rundir::RunDir;

use super::trained_hybrid;

pub fn emulate(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<()> {
    let (model, trained) = trained_hybrid(cfg, run)?;
    let noise = cfg.noise.to_model();
    run.log(&format!(
        "emulating {} test circuits at {} shots",
        trained.fold.test.len(),
        noise.shots
    ));

    struct Row {
        idx: usize,
        sequence: String,
        label: bool,
        exact: f64,
        noisy: f64,
    }
    let rows: Vec<Row> = trained
        .fold
        .test
        .par_iter()
        .map(|&idx| {
            let record = &trained.dataset.records[idx];
            let circuit = model.peptide_circuit(&record.peptide)?;
            let exact_z = circuit.simulate(&[])?.expectations_z();
            let per_peptide =
                NoiseModel { seed: derive_seed(noise.seed, idx as u64), ..noise };
            let noisy_z = noisy_expectations(&circuit, &per_peptide)?;
            Ok(Row {
                idx,
                sequence: record.peptide.to_string(),
                label: record.strong,
                exact: model.score_from_z(&exact_z)?,
                noisy: model.score_from_z(&noisy_z)?,
            })
        })
        .collect::<Result<_>>()?;

    let labels: Vec<bool> = rows.iter().map(|r| r.label).collect();
    let exact_preds: Vec<bool> = rows.iter().map(|r| classify(r.exact)).collect();
    let noisy_preds: Vec<bool> = rows.iter().map(|r| classify(r.noisy)).collect();
    let exact_f1 = f1_score(&exact_preds, &labels)?;
    let noisy_f1 = f1_score(&noisy_preds, &labels)?;
    let drift =
        rows.iter().map(|r| (r.noisy - r.exact).abs()).sum::<f64>() / rows.len().max(1) as f64;
    let flips =
        exact_preds.iter().zip(&noisy_preds).filter(|(a, b)| a != b).count();

    let mut out = String::new();
    writeln!(out, "model: {} ({})", model.describe(), trained.origin).unwrap();
    writeln!(
        out,
        "noise: p_single {} p_two {} shots {} seed {}",
        noise.p_single, noise.p_two, noise.shots, noise.seed
    )
    .unwrap();
    writeln!(out, "fold: {} ({} test peptides)", trained.fold.fold, rows.len()).unwrap();
    writeln!(out, "\nindex  sequence         label  exact     noisy     |diff|").unwrap();
    for r in &rows {
        writeln!(
            out,
            "{:>5}  {:<15}  {:>5}  {:.6}  {:.6}  {:.6}",
            r.idx,
            r.sequence,
            if r.label { "1" } else { "0" },
            r.exact,
            r.noisy,
            (r.noisy - r.exact).abs()
        )
        .unwrap();
    }
    writeln!(out, "\nexact F1 = {exact_f1:.6}").unwrap();
    writeln!(out, "noisy F1 = {noisy_f1:.6}").unwrap();
    writeln!(out, "mean |score drift| = {drift:.6}; {flips} prediction flips").unwrap();
    run.finish(&out)?;
    Ok(())
}

pub fn mitigate(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<()> {
    let (model, trained) = trained_hybrid(cfg, run)?;
    let noise = cfg.noise.to_model();
    let picks: Vec<usize> =
        trained.fold.test.iter().copied().take(cfg.noise.sample).collect();
    run.log(&format!(
        "extrapolating {} circuits over factors {:?}",
        picks.len(),
        cfg.noise.factors
    ));

    struct Item {
        idx: usize,
        sequence: String,
        exact: Vec<f64>,
        report: qbind_core::noise::ZneReport,
    }
    let items: Vec<Item> = picks
        .par_iter()
        .map(|&idx| {
            let record = &trained.dataset.records[idx];
            let circuit = model.peptide_circuit(&record.peptide)?;
            let exact = circuit.simulate(&[])?.expectations_z();
            let per_peptide =
                NoiseModel { seed: derive_seed(noise.seed, idx as u64), ..noise };
            let report = zne_estimate(&circuit, &per_peptide, &cfg.noise.factors)?;
            Ok(Item { idx, sequence: record.peptide.to_string(), exact, report })
        })
        .collect::<Result<_>>()?;

    let mut out = String::new();
    writeln!(out, "model: {} ({})", model.describe(), trained.origin).unwrap();
    writeln!(
        out,
        "noise: p_single {} p_two {} shots {} seed {}; fold factors {:?}",
        noise.p_single, noise.p_two, noise.shots, noise.seed, cfg.noise.factors
    )
    .unwrap();

    let (mut raw_mae_sum, mut zne_mae_sum, mut wins) = (0.0, 0.0, 0usize);
    for item in &items {
        writeln!(out, "\npeptide {} ({})", item.idx, item.sequence).unwrap();
        let mut header = String::from("qubit     exact");
        for f in &item.report.factors {
            write!(header, "  {:>8}", format!("x{f}")).unwrap();
        }
        header.push_str("  extrapolated");
        writeln!(out, "{header}").unwrap();
        let qubits = item.exact.len();
        for q in 0..qubits {
            write!(out, "{q:>5}  {:>8.5}", item.exact[q]).unwrap();
            for per in &item.report.per_factor {
                write!(out, "  {:>8.5}", per[q]).unwrap();
            }
            writeln!(out, "  {:>12.5}", item.report.extrapolated[q]).unwrap();
        }
        let raw_mae = (0..qubits)
            .map(|q| (item.report.per_factor[0][q] - item.exact[q]).abs())
            .sum::<f64>()
            / qubits as f64;
        let zne_mae = (0..qubits)
            .map(|q| (item.report.extrapolated[q] - item.exact[q]).abs())
            .sum::<f64>()
            / qubits as f64;
        writeln!(out, "MAE raw {raw_mae:.5} -> mitigated {zne_mae:.5}").unwrap();
        raw_mae_sum += raw_mae;
        zne_mae_sum += zne_mae;
        wins += (zne_mae < raw_mae) as usize;
    }
    let n = items.len().max(1) as f64;
    writeln!(
        out,
        "\nmean MAE: raw {:.5} -> mitigated {:.5}; improved on {wins}/{} circuits",
        raw_mae_sum / n,
        zne_mae_sum / n,
        items.len()
    )
    .unwrap();
    run.finish(&out)?;
    Ok(())
}

pub fn shot_bounds(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<()> {
    let (model, trained) = trained_hybrid(cfg, run)?;
    let (weights, bias) = model.l1_head().ok_or_else(|| Error::ModelShape {
        what: "L1 read-out: shot bounds cover a linear head".into(),
    })?;
    run.log(&format!(
        "bounding F1 over {} test peptides at {} shot budgets",
        trained.fold.test.len(),
        cfg.noise.shots_grid.len()
    ));

    let z: Vec<Vec<f64>> = trained
        .fold
        .test
        .par_iter()
        .map(|&idx| {
            let circuit = model.peptide_circuit(&trained.dataset.records[idx].peptide)?;
            Ok(circuit.simulate(&[])?.expectations_z())
        })
        .collect::<Result<_>>()?;
    let labels: Vec<bool> =
        trained.fold.test.iter().map(|&idx| trained.dataset.records[idx].strong).collect();
    let preds: Vec<bool> = z
        .iter()
        .map(|row| Ok(classify(model.score_from_z(row)?)))
        .collect::<Result<_>>()?;
    let exact_f1 = f1_score(&preds, &labels)?;

    let mut out = String::new();
    writeln!(out, "model: {} ({})", model.describe(), trained.origin).unwrap();
    writeln!(
        out,
        "fold: {} ({} test peptides); exact F1 = {exact_f1:.6}",
        trained.fold.fold,
        labels.len()
    )
    .unwrap();
    writeln!(out, "\n   shots     delta  sign_vectors    f1_min    f1_max").unwrap();
    for &shots in &cfg.noise.shots_grid {
        let b = qbind_core::noise::shot_noise_f1_bounds(&z, weights, bias, &labels, shots)?;
        writeln!(
            out,
            "{shots:>8}  {:>8.6}  {:>12}  {:>8.6}  {:>8.6}",
            b.delta, b.vectors, b.f1_min, b.f1_max
        )
        .unwrap();
    }
    writeln!(
        out,
        "\nbounds are worst-case over correlated per-qubit readout shifts of +/- 1/sqrt(shots)"
    )
    .unwrap();
    run.finish(&out)?;
    Ok(())
}
