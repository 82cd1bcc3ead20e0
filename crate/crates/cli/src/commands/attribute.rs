//! `attribute`: per-position attributions for test peptides, plus aggregated
//! residue-by-position heatmaps over the 9-mers.

use std::fmt::Write as _;

use rayon::prelude::*;

use qbind_core::attrib::{
    aggregate_heatmap, integrated_gradients, render_svg, render_text, shapley_value_sampling,
    Attribution,
};
use qbind_core::data::Peptide;
use qbind_core::rng::derive_seed;
use qbind_core::Result;

use crate::config::ExperimentConfig;
use crate::rundir::RunDir;

use super::trained_model;

pub fn attribute(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<()> {
    let trained = trained_model(cfg, run)?;
    let a = &cfg.attribution;
    let picks: Vec<usize> = trained.fold.test.iter().copied().take(a.sample).collect();
    run.log(&format!("attributing {} test peptides via {}", picks.len(), a.method));

    struct Row {
        idx: usize,
        peptide: Peptide,
        label: bool,
        attribution: Attribution,
    }
    let model = trained.model.as_ref();
    let rows: Vec<Row> = picks
        .par_iter()
        .map(|&idx| {
            let record = &trained.dataset.records[idx];
            let attribution = match a.method.as_str() {
                "ig" => integrated_gradients(model, &record.peptide, a.steps)?,
                _ => shapley_value_sampling(
                    model,
                    &record.peptide,
                    a.permutations,
                    derive_seed(a.seed, idx as u64),
                )?,
            };
            Ok(Row { idx, peptide: record.peptide.clone(), label: record.strong, attribution })
        })
        .collect::<Result<_>>()?;

    let mut out = String::new();
    writeln!(out, "model: {} ({})", model.describe(), trained.origin).unwrap();
    match a.method.as_str() {
        "ig" => writeln!(out, "method: integrated gradients, {} steps", a.steps).unwrap(),
        _ => writeln!(
            out,
            "method: Shapley value sampling, {} permutations, seed {}",
            a.permutations, a.seed
        )
        .unwrap(),
    }
    writeln!(out, "fold: {} ({} peptides attributed)", trained.fold.fold, rows.len()).unwrap();
    writeln!(out, "\nindex  sequence         label  score     sum(attr)  gap").unwrap();
    let mut tsv = String::from("sequence\tlabel\tscore\tper_position\n");
    for r in &rows {
        let sequence = r.peptide.to_string();
        let sum: f64 = r.attribution.per_position.iter().sum();
        writeln!(
            out,
            "{:>5}  {:<15}  {:>5}  {:.6}  {:>+9.6}  {:>+.2e}",
            r.idx,
            sequence,
            if r.label { "1" } else { "0" },
            r.attribution.score,
            sum,
            r.attribution.gap()
        )
        .unwrap();
        let values: Vec<String> =
            r.attribution.per_position.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(tsv, "{}\t{}\t{:.6}\t{}", sequence, u8::from(r.label), r.attribution.score, values.join(","))
            .unwrap();
    }
    std::fs::write(run.artifact("attributions.tsv"), &tsv)?;
    writeln!(out, "\nper-peptide values written to artifacts/attributions.tsv").unwrap();

    let nine_mers: Vec<(Peptide, Vec<f64>)> = rows
        .iter()
        .filter(|r| r.peptide.len() == 9)
        .map(|r| (r.peptide.clone(), r.attribution.per_position.clone()))
        .collect();
    if nine_mers.is_empty() {
        writeln!(out, "no length-9 peptides in the sample; heatmap skipped").unwrap();
    } else {
        let map = aggregate_heatmap(&nine_mers)?;
        std::fs::write(run.artifact("heatmap.txt"), render_text(&map))?;
        std::fs::write(run.artifact("heatmap.svg"), render_svg(&map))?;
        writeln!(
            out,
            "heatmap over {} nine-mers written to artifacts/heatmap.txt and heatmap.svg",
            map.peptides
        )
        .unwrap();
        let mut cells: Vec<(char, usize, f64)> = Vec::new();
        for (r, aa) in qbind_core::data::AMINO_ACIDS.iter().enumerate() {
            for p in 0..qbind_core::attrib::HEATMAP_LENGTH {
                if map.counts[r][p] > 0 {
                    cells.push((*aa as char, p, map.mean[r][p]));
                }
            }
        }
        cells.sort_by(|a, b| b.2.total_cmp(&a.2));
        let top: Vec<String> =
            cells.iter().take(5).map(|(c, p, v)| format!("({c}, {p}) {v:+.4}")).collect();
        writeln!(out, "strongest positive cells: {}", top.join(", ")).unwrap();
    }
    run.finish(&out)?;
    Ok(())
}
