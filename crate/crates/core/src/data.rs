//! Binding-affinity data pipeline: ingestion of delimited affinity files,
//! pIC50 labeling, class rebalancing by downsampling, stratified fold
//! construction, and composition statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded_stream;

/// The 20 standard residues, in the fixed vocabulary order used everywhere
/// (embedding rows, angle tables, statistics).
pub const AMINO_ACIDS: [u8; 20] = *b"ACDEFGHIKLMNPQRSTVWY";

pub const MIN_PEPTIDE_LEN: usize = 8;
pub const MAX_PEPTIDE_LEN: usize = 15;

/// pIC50 at or above this is a strong binder.
pub const STRONG_PIC50_THRESHOLD: f64 = 8.0;

pub fn token_index(residue: u8) -> Option<usize> {
    AMINO_ACIDS.iter().position(|&a| a == residue)
}

/// A peptide as vocabulary token indices. Construction validates the
/// alphabet; length gating (8–15) applies to dataset records, not to the
/// type itself, so short probe sequences remain expressible in tests.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Peptide {
    tokens: Vec<u8>,
}

impl Peptide {
    pub fn parse(seq: &str) -> Result<Self> {
        if seq.is_empty() {
            return Err(Error::EmptySequence);
        }
        let mut tokens = Vec::with_capacity(seq.len());
        for ch in seq.chars() {
            let upper = ch.to_ascii_uppercase();
            match token_index(upper as u8) {
                Some(idx) => tokens.push(idx as u8),
                None => return Err(Error::UnknownToken { token: ch }),
            }
        }
        Ok(Peptide { tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token indices into [`AMINO_ACIDS`].
    pub fn tokens(&self) -> &[u8] {
        &self.tokens
    }
}

impl fmt::Display for Peptide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &t in &self.tokens {
            write!(f, "{}", AMINO_ACIDS[t as usize] as char)?;
        }
        Ok(())
    }
}

/// One labeled example. `pic50` is kept when the label came from an affinity
/// value rather than being given directly.
#[derive(Clone, Debug)]
pub struct PeptideRecord {
    pub peptide: Peptide,
    pub strong: bool,
    pub pic50: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub records: Vec<PeptideRecord>,
    /// Free-text origin note carried into reports.
    pub provenance: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn strong_count(&self) -> usize {
        self.records.iter().filter(|r| r.strong).count()
    }

    pub fn strong_fraction(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.strong_count() as f64 / self.records.len() as f64
        }
    }

    pub fn labels(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.strong).collect()
    }
}

/// How a raw row states its measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RawValue {
    /// IC50 in molar units.
    Ic50Molar(f64),
    Label(bool),
}

#[derive(Clone, Debug)]
pub struct RawRecord {
    pub peptide: Peptide,
    pub value: RawValue,
    pub line: usize,
}

/// Result of reading a raw affinity file: parsed rows plus the rows excluded
/// for being outside the modeled domain (length or alphabet), which real
/// database extracts routinely contain.
#[derive(Debug, Default)]
pub struct RawIngest {
    pub records: Vec<RawRecord>,
    pub excluded: Vec<(usize, String)>,
}

/// Reads a delimited affinity file. The first non-comment line is a header
/// naming a `sequence` column and exactly one of `ic50_nm`, `ic50_m`, or
/// `label`; the separator (tab or comma) is sniffed from it. `#` lines and
/// blank lines are ignored. Structurally malformed rows are hard errors with
/// line numbers; rows whose sequence falls outside the 8–15 standard-residue
/// domain are excluded and reported, not fatal.
pub fn read_raw_records(path: &Path) -> Result<RawIngest> {
    let file = std::fs::File::open(path).map_err(|e| Error::DataFormat {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    parse_raw_records(BufReader::new(file), &path.display().to_string())
}

pub fn parse_raw_records<R: Read>(reader: BufReader<R>, path: &str) -> Result<RawIngest> {
    let err = |line: usize, message: String| Error::DataFormat { path: path.to_string(), line, message };

    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| err(i + 1, e.to_string()))?;
        lines.push((i + 1, line));
    }

    let mut content = lines
        .into_iter()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));

    let (header_line, header) = content.next().ok_or_else(|| err(0, "empty file".into()))?;
    let sep = if header.contains('\t') { '\t' } else { ',' };
    let columns: Vec<String> = header.split(sep).map(|c| c.trim().to_ascii_lowercase()).collect();

    let find = |name: &str| columns.iter().position(|c| c == name);
    let seq_col = find("sequence")
        .ok_or_else(|| err(header_line, format!("no 'sequence' column in header '{header}'")))?;
    let value_cols: Vec<(&str, usize)> = [("ic50_nm", find("ic50_nm")), ("ic50_m", find("ic50_m")), ("label", find("label"))]
        .into_iter()
        .filter_map(|(n, c)| c.map(|c| (n, c)))
        .collect();
    let (value_kind, value_col) = match value_cols.as_slice() {
        [one] => *one,
        [] => return Err(err(header_line, "need one of: ic50_nm, ic50_m, label".into())),
        many => {
            let names: Vec<_> = many.iter().map(|(n, _)| *n).collect();
            return Err(err(header_line, format!("ambiguous value columns: {}", names.join(", "))));
        }
    };

    let mut ingest = RawIngest::default();
    for (line_no, line) in content {
        let fields: Vec<&str> = line.split(sep).map(|f| f.trim()).collect();
        let need = seq_col.max(value_col) + 1;
        if fields.len() < need {
            return Err(err(line_no, format!("expected at least {need} fields, got {}", fields.len())));
        }
        let seq = fields[seq_col];
        let peptide = match Peptide::parse(seq) {
            Ok(p) => p,
            Err(Error::UnknownToken { token }) => {
                ingest.excluded.push((line_no, format!("non-standard residue '{token}'")));
                continue;
            }
            Err(e) => return Err(e),
        };
        if !(MIN_PEPTIDE_LEN..=MAX_PEPTIDE_LEN).contains(&peptide.len()) {
            ingest.excluded.push((line_no, format!("length {} outside [8, 15]", peptide.len())));
            continue;
        }
        let raw = fields[value_col];
        let value = match value_kind {
            "label" => match raw {
                "0" => RawValue::Label(false),
                "1" => RawValue::Label(true),
                other => return Err(err(line_no, format!("label must be 0 or 1, got '{other}'"))),
            },
            "ic50_nm" | "ic50_m" => {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| err(line_no, format!("bad {value_kind} value '{raw}'")))?;
                if !v.is_finite() || v <= 0.0 {
                    return Err(err(line_no, format!("{value_kind} must be positive, got '{raw}'")));
                }
                RawValue::Ic50Molar(if value_kind == "ic50_nm" { v * 1e-9 } else { v })
            }
            _ => unreachable!(),
        };
        ingest.records.push(RawRecord { peptide, value, line: line_no });
    }
    Ok(ingest)
}

/// Turns raw measurements into labeled records: pIC50 = -log10(IC50 in
/// molar), strong iff pIC50 >= 8 (i.e. IC50 <= 10 nM). Direct labels pass
/// through with no pIC50.
pub fn label_records(raw: &[RawRecord]) -> Vec<PeptideRecord> {
    raw.iter()
        .map(|r| match r.value {
            RawValue::Ic50Molar(m) => {
                let pic50 = -m.log10();
                PeptideRecord {
                    peptide: r.peptide.clone(),
                    strong: pic50 >= STRONG_PIC50_THRESHOLD,
                    pic50: Some(pic50),
                }
            }
            RawValue::Label(strong) => PeptideRecord { peptide: r.peptide.clone(), strong, pic50: None },
        })
        .collect()
}

/// Rebalances by keeping every strong binder and a seeded random subset of
/// the weak ones sized so the strong fraction reaches `target` (weak kept =
/// floor(s*(1-target)/target) for s strong). Record order is preserved.
pub fn downsample(records: &[PeptideRecord], target: f64, seed: u64) -> Result<Dataset> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::BadTargetFraction { value: target });
    }
    let strong: Vec<usize> = (0..records.len()).filter(|&i| records[i].strong).collect();
    let weak: Vec<usize> = (0..records.len()).filter(|&i| !records[i].strong).collect();
    if strong.is_empty() || weak.is_empty() {
        return Err(Error::DatasetTooSmall { got: records.len(), needed: 2 });
    }
    let actual = strong.len() as f64 / records.len() as f64;
    if actual >= target {
        return Err(Error::AlreadyBalanced { actual, target });
    }
    let keep_weak = ((strong.len() as f64) * (1.0 - target) / target).floor() as usize;
    let mut rng = seeded_stream(seed, 0);
    let mut shuffled = weak.clone();
    shuffled.shuffle(&mut rng);
    let mut kept: Vec<usize> = strong.iter().chain(shuffled[..keep_weak.min(shuffled.len())].iter()).copied().collect();
    kept.sort_unstable();
    Ok(Dataset {
        records: kept.into_iter().map(|i| records[i].clone()).collect(),
        provenance: format!("downsampled to strong fraction {target} with seed {seed}"),
    })
}

/// Index sets of one cross-validation fold.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold splits. Each class is shuffled (seeded) and dealt
/// round-robin into k partitions; fold i trains on the other k-1 partitions
/// and halves partition i into validation and test, stratified again. Pure
/// function of the labels and seed.
pub fn make_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if k < 2 {
        return Err(Error::Config(format!("fold count {k} must be at least 2")));
    }
    let strong_n = dataset.strong_count();
    let weak_n = dataset.len() - strong_n;
    if strong_n < 2 * k || weak_n < 2 * k {
        return Err(Error::DatasetTooSmall { got: strong_n.min(weak_n), needed: 2 * k });
    }

    let mut rng = seeded_stream(seed, 1);
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, r) in dataset.records.iter().enumerate() {
        by_class[r.strong as usize].push(i);
    }
    let mut partitions: Vec<Vec<usize>> = vec![Vec::new(); k];
    for class in &mut by_class {
        class.shuffle(&mut rng);
        for (j, &idx) in class.iter().enumerate() {
            partitions[j % k].push(idx);
        }
    }

    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let mut train = Vec::new();
        for (p, part) in partitions.iter().enumerate() {
            if p != fold {
                train.extend_from_slice(part);
            }
        }
        let mut validation = Vec::new();
        let mut test = Vec::new();
        // Halve the held-out partition, alternating within each class so both
        // halves keep the class balance.
        for strong in [false, true] {
            for (j, &idx) in partitions[fold]
                .iter()
                .filter(|&&idx| dataset.records[idx].strong == strong)
                .enumerate()
            {
                if j % 2 == 0 {
                    validation.push(idx);
                } else {
                    test.push(idx);
                }
            }
        }
        train.sort_unstable();
        validation.sort_unstable();
        test.sort_unstable();
        folds.push(FoldSplit { fold, train, validation, test });
    }
    Ok(folds)
}

/// Residue- and length-composition summary, split by class.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassStatistics {
    pub total: usize,
    pub strong: usize,
    pub weak: usize,
    /// Fraction of all residues in each class that are a given token;
    /// indexed [class][token] with class 0 = weak, 1 = strong.
    pub residue_freq: [[f64; 20]; 2],
    /// Peptide counts by length 8..=15, per class (same class indexing).
    pub length_counts: [[u64; 8]; 2],
}

pub fn class_statistics(dataset: &Dataset) -> Result<ClassStatistics> {
    if dataset.is_empty() {
        return Err(Error::DatasetTooSmall { got: 0, needed: 1 });
    }
    let mut residue_counts = [[0u64; 20]; 2];
    let mut residue_totals = [0u64; 2];
    let mut length_counts = [[0u64; 8]; 2];
    for r in &dataset.records {
        let class = r.strong as usize;
        for &t in r.peptide.tokens() {
            residue_counts[class][t as usize] += 1;
            residue_totals[class] += 1;
        }
        let len = r.peptide.len();
        if (MIN_PEPTIDE_LEN..=MAX_PEPTIDE_LEN).contains(&len) {
            length_counts[class][len - MIN_PEPTIDE_LEN] += 1;
        }
    }
    let mut residue_freq = [[0.0; 20]; 2];
    for class in 0..2 {
        if residue_totals[class] > 0 {
            for t in 0..20 {
                residue_freq[class][t] = residue_counts[class][t] as f64 / residue_totals[class] as f64;
            }
        }
    }
    let strong = dataset.strong_count();
    Ok(ClassStatistics {
        total: dataset.len(),
        strong,
        weak: dataset.len() - strong,
        residue_freq,
        length_counts,
    })
}

/// Balanced synthetic dataset governed by one rule: a 9-mer is strong iff
/// its final residue is tyrosine. Non-final positions are uniform over the
/// vocabulary. Fixed length keeps the rule representable by every sequence
/// model in the library, so training sanity checks measure optimization,
/// not capacity.
pub fn synthetic_rule_dataset(count: usize, seed: u64) -> Dataset {
    let mut rng = seeded_stream(seed, 2);
    let y_token = token_index(b'Y').unwrap() as u8;
    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let strong = i % 2 == 0;
        let len = 9;
        let mut tokens: Vec<u8> = (0..len - 1).map(|_| rng.gen_range(0..20) as u8).collect();
        tokens.push(if strong {
            y_token
        } else {
            // Any residue but Y.
            let mut t = rng.gen_range(0..19) as u8;
            if t >= y_token {
                t += 1;
            }
            t
        });
        records.push(PeptideRecord { peptide: Peptide { tokens }, strong, pic50: None });
    }
    Dataset { records, provenance: format!("synthetic final-Y rule, {count} records, seed {seed}") }
}

/// Writes the canonical tab-separated dataset file: comment header with
/// provenance, then `sequence  label  pic50` rows (pic50 blank when absent).
pub fn write_dataset<W: Write>(mut w: W, dataset: &Dataset) -> Result<()> {
    writeln!(w, "# provenance: {}", dataset.provenance.replace('\n', " "))?;
    writeln!(w, "sequence\tlabel\tpic50")?;
    for r in &dataset.records {
        let pic50 = r.pic50.map(|p| p.to_string()).unwrap_or_default();
        writeln!(w, "{}\t{}\t{}", r.peptide, r.strong as u8, pic50)?;
    }
    Ok(())
}

pub fn write_dataset_file(path: &Path, dataset: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dataset(std::io::BufWriter::new(file), dataset)
}

/// Reads a file produced by [`write_dataset`] (also accepts any raw file
/// with a `label` column plus optional `pic50`).
pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    let err = |line: usize, message: String| Error::DataFormat {
        path: path.display().to_string(),
        line,
        message,
    };
    let file = std::fs::File::open(path).map_err(|e| err(0, e.to_string()))?;
    let reader = BufReader::new(file);

    let mut provenance = String::new();
    let mut header: Option<(usize, String)> = None;
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| err(i + 1, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some(p) = rest.trim().strip_prefix("provenance:") {
                provenance = p.trim().to_string();
            }
            continue;
        }
        match header {
            None => header = Some((i + 1, line)),
            Some(_) => rows.push((i + 1, line)),
        }
    }
    let (header_line, header) = header.ok_or_else(|| err(0, "empty file".into()))?;
    let sep = if header.contains('\t') { '\t' } else { ',' };
    let columns: Vec<String> = header.split(sep).map(|c| c.trim().to_ascii_lowercase()).collect();
    let col = |name: &str| columns.iter().position(|c| c == name);
    let seq_col = col("sequence").ok_or_else(|| err(header_line, "no 'sequence' column".into()))?;
    let label_col = col("label").ok_or_else(|| err(header_line, "no 'label' column".into()))?;
    let pic50_col = col("pic50");

    let mut records = Vec::with_capacity(rows.len());
    for (line_no, line) in rows {
        let fields: Vec<&str> = line.split(sep).map(|f| f.trim()).collect();
        let need = seq_col.max(label_col) + 1;
        if fields.len() < need {
            return Err(err(line_no, format!("expected at least {need} fields, got {}", fields.len())));
        }
        let peptide = Peptide::parse(fields[seq_col])
            .map_err(|e| err(line_no, e.to_string()))?;
        if !(MIN_PEPTIDE_LEN..=MAX_PEPTIDE_LEN).contains(&peptide.len()) {
            return Err(err(line_no, format!("length {} outside [8, 15]", peptide.len())));
        }
        let strong = match fields[label_col] {
            "0" => false,
            "1" => true,
            other => return Err(err(line_no, format!("label must be 0 or 1, got '{other}'"))),
        };
        let pic50 = match pic50_col.and_then(|c| fields.get(c)) {
            None => None,
            Some(&"") => None,
            Some(&v) => Some(
                v.parse::<f64>()
                    .map_err(|_| err(line_no, format!("bad pic50 value '{v}'")))?,
            ),
        };
        records.push(PeptideRecord { peptide, strong, pic50 });
    }
    Ok(Dataset { records, provenance })
}

/// Length histogram as (length, strong count, weak count), lengths 8..=15.
pub fn length_table(stats: &ClassStatistics) -> Vec<(usize, u64, u64)> {
    (0..8)
        .map(|i| (MIN_PEPTIDE_LEN + i, stats.length_counts[1][i], stats.length_counts[0][i]))
        .collect()
}

/// Residue frequencies sorted descending for one class, as (residue, fraction).
pub fn top_residues(stats: &ClassStatistics, strong: bool) -> Vec<(char, f64)> {
    let class = strong as usize;
    let mut v: Vec<(char, f64)> = (0..20)
        .map(|t| (AMINO_ACIDS[t] as char, stats.residue_freq[class][t]))
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

/// Deduplicated, order-preserving map from token to the positions where it
/// appears; used by models to share per-token work within one peptide.
pub fn token_positions(peptide: &Peptide) -> BTreeMap<u8, Vec<usize>> {
    let mut map: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (pos, &t) in peptide.tokens().iter().enumerate() {
        map.entry(t).or_default().push(pos);
    }
    map
}
