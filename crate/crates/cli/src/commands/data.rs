//! `prepare-data` and `stats`: dataset ingestion and class-balance reports.

use std::fmt::Write;

use qbind_core::data::{
    class_statistics, label_records, read_raw_records, synthetic_rule_dataset, top_residues,
    write_dataset_file, ClassStatistics, Dataset, AMINO_ACIDS,
};
use qbind_core::Result;

use crate::config::ExperimentConfig;
use crate::rundir::RunDir;

use super::load_dataset;

pub fn prepare_data(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<()> {
    let d = &cfg.data;
    let mut out = String::new();
    let dataset: Dataset = match d.source.as_str() {
        "synthetic" => {
            let ds = synthetic_rule_dataset(d.count, d.seed);
            writeln!(out, "source: synthetic (count = {}, seed = {})", d.count, d.seed).unwrap();
            ds
        }
        _ => {
            // "raw"; "file" is rejected during validation.
            let path = d.path.as_deref().expect("validated");
            let ingest = read_raw_records(path)?;
            writeln!(out, "source: raw {}", path.display()).unwrap();
            writeln!(
                out,
                "rows: {} usable, {} excluded",
                ingest.records.len(),
                ingest.excluded.len()
            )
            .unwrap();
            for (line, reason) in ingest.excluded.iter().take(20) {
                writeln!(out, "  excluded line {line}: {reason}").unwrap();
            }
            if ingest.excluded.len() > 20 {
                writeln!(out, "  ... {} more", ingest.excluded.len() - 20).unwrap();
            }
            let records = label_records(&ingest.records);
            let strong = records.iter().filter(|r| r.strong).count();
            writeln!(
                out,
                "labeled: {} strong / {} weak before balancing",
                strong,
                records.len() - strong
            )
            .unwrap();
            match d.strong_share {
                Some(share) => {
                    let ds =
                        qbind_core::data::downsample(&records, share, d.downsample_seed)?;
                    writeln!(
                        out,
                        "downsampled toward strong share {share} (seed {})",
                        d.downsample_seed
                    )
                    .unwrap();
                    ds
                }
                None => {
                    let provenance =
                        format!("raw {} ({} records, full)", path.display(), records.len());
                    Dataset { records, provenance }
                }
            }
        }
    };
    run.log(&format!("prepared {} records", dataset.len()));

    let stats = class_statistics(&dataset)?;
    writeln!(out).unwrap();
    write_summary(&mut out, &dataset, &stats);

    let artifact = run.artifact("dataset.tsv");
    write_dataset_file(&artifact, &dataset)?;
    writeln!(out, "\ndataset written to artifacts/dataset.tsv").unwrap();
    run.finish(&out)?;
    Ok(())
}

pub fn stats(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<()> {
    let dataset = load_dataset(&cfg.data)?;
    run.log(&format!("dataset: {} records", dataset.len()));
    let stats = class_statistics(&dataset)?;

    let mut out = String::new();
    write_summary(&mut out, &dataset, &stats);

    writeln!(out, "\nresidue frequencies (% of residues in class)").unwrap();
    writeln!(out, "residue    weak  strong").unwrap();
    for (t, &aa) in AMINO_ACIDS.iter().enumerate() {
        writeln!(
            out,
            "{:>7}  {:>6.2}  {:>6.2}",
            aa as char,
            100.0 * stats.residue_freq[0][t],
            100.0 * stats.residue_freq[1][t]
        )
        .unwrap();
    }

    writeln!(out, "\ntop residues by class").unwrap();
    for (label, strong) in [("strong", true), ("weak", false)] {
        let top: Vec<String> = top_residues(&stats, strong)
            .into_iter()
            .take(5)
            .map(|(c, f)| format!("{c} {:.2}%", 100.0 * f))
            .collect();
        writeln!(out, "  {label}: {}", top.join(", ")).unwrap();
    }
    run.finish(&out)?;
    Ok(())
}

fn write_summary(out: &mut String, dataset: &Dataset, stats: &ClassStatistics) {
    writeln!(out, "dataset: {}", dataset.provenance).unwrap();
    writeln!(
        out,
        "records: {} ({} strong / {} weak, strong share {:.3})",
        stats.total,
        stats.strong,
        stats.weak,
        stats.strong as f64 / stats.total as f64
    )
    .unwrap();
    writeln!(out, "\nlength  strong  weak").unwrap();
    for (len, strong, weak) in qbind_core::data::length_table(stats) {
        if strong + weak > 0 {
            writeln!(out, "{len:>6}  {strong:>6}  {weak:>4}").unwrap();
        }
    }
}
