//! Per-residue attribution: integrated gradients, Shapley value sampling,
//! and position/residue heatmap aggregation with text and SVG rendering.
//!
//! Both methods attribute a model's score to sequence positions relative to
//! the all-zero input baseline, and both satisfy the completeness property:
//! the attributions sum to score(x) - score(baseline) (exactly for Shapley
//! sampling, in the step-count limit for integrated gradients).

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Peptide, AMINO_ACIDS};
use crate::error::{Error, Result};
use crate::model::SequenceModel;
use crate::rng::seeded_stream;

/// Residue-length of sequences the heatmap aggregates.
pub const HEATMAP_LENGTH: usize = 9;

/// RNG stream reserved for Shapley permutation draws.
const SHAPLEY_STREAM_BASE: u64 = 6;

/// One sequence's attribution: a signed contribution per position.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Attribution {
    pub score: f64,
    pub baseline_score: f64,
    pub per_position: Vec<f64>,
}

impl Attribution {
    /// score - baseline_score, the total the positions should account for.
    pub fn gap(&self) -> f64 {
        self.score - self.baseline_score
    }
}

fn zero_like(inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    inputs.iter().map(|row| vec![0.0; row.len()]).collect()
}

/// Integrated gradients on explicit input rows, midpoint rule with `steps`
/// evaluation points along the straight line from the all-zero baseline.
pub fn integrated_gradients_on(
    model: &dyn SequenceModel,
    inputs: &[Vec<f64>],
    steps: usize,
) -> Result<Attribution> {
    if steps == 0 {
        return Err(Error::Config("integrated gradients needs at least one step".into()));
    }
    if inputs.is_empty() {
        return Err(Error::EmptySequence);
    }
    let score = model.forward_inputs(inputs)?;
    let baseline_score = model.forward_inputs(&zero_like(inputs))?;
    let grads: Vec<Vec<Vec<f64>>> = (0..steps)
        .into_par_iter()
        .map(|k| {
            let alpha = (k as f64 + 0.5) / steps as f64;
            let scaled: Vec<Vec<f64>> =
                inputs.iter().map(|row| row.iter().map(|v| v * alpha).collect()).collect();
            model.input_gradient(&scaled).map(|(_, g)| g)
        })
        .collect::<Result<_>>()?;
    let per_position = inputs
        .iter()
        .enumerate()
        .map(|(p, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &x)| {
                    let mean: f64 = grads.iter().map(|g| g[p][j]).sum::<f64>() / steps as f64;
                    x * mean
                })
                .sum()
        })
        .collect();
    Ok(Attribution { score, baseline_score, per_position })
}

/// Integrated gradients for a peptide using the model's own input encoding.
pub fn integrated_gradients(
    model: &dyn SequenceModel,
    peptide: &Peptide,
    steps: usize,
) -> Result<Attribution> {
    integrated_gradients_on(model, &model.peptide_inputs(peptide)?, steps)
}

/// Shapley value sampling on explicit input rows. Positions are the
/// players; `samples` random position orders are drawn and each position is
/// credited with its average marginal score change when its true input row
/// replaces the zero baseline. Sample `s` uses its own RNG stream, so the
/// estimate is bit-deterministic at any thread count.
pub fn shapley_value_sampling_on(
    model: &dyn SequenceModel,
    inputs: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<Attribution> {
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    if inputs.is_empty() {
        return Err(Error::EmptySequence);
    }
    let len = inputs.len();
    let score = model.forward_inputs(inputs)?;
    let baseline_score = model.forward_inputs(&zero_like(inputs))?;
    let marginal_sets: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = seeded_stream(seed, SHAPLEY_STREAM_BASE + s as u64);
            let mut order: Vec<usize> = (0..len).collect();
            order.shuffle(&mut rng);
            let mut current = zero_like(inputs);
            let mut prev = baseline_score;
            let mut marginals = vec![0.0; len];
            for &p in &order {
                current[p].clone_from(&inputs[p]);
                let next = model.forward_inputs(&current)?;
                marginals[p] = next - prev;
                prev = next;
            }
            Ok(marginals)
        })
        .collect::<Result<_>>()?;
    let mut per_position = vec![0.0; len];
    for marginals in &marginal_sets {
        for (acc, m) in per_position.iter_mut().zip(marginals) {
            *acc += m;
        }
    }
    for v in &mut per_position {
        *v /= samples as f64;
    }
    Ok(Attribution { score, baseline_score, per_position })
}

/// Shapley value sampling for a peptide using the model's input encoding.
pub fn shapley_value_sampling(
    model: &dyn SequenceModel,
    peptide: &Peptide,
    samples: usize,
    seed: u64,
) -> Result<Attribution> {
    shapley_value_sampling_on(model, &model.peptide_inputs(peptide)?, samples, seed)
}

/// Residue-by-position aggregation of attributions over 9-mers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Heatmap {
    /// Sequences that contributed (length-9 only).
    pub peptides: usize,
    /// `counts[r][p]`: occurrences of residue r at position p.
    pub counts: Vec<Vec<u64>>,
    /// Raw mean attribution per cell (0 where the cell is empty).
    pub mean: Vec<Vec<f64>>,
    /// Means scaled by the largest |mean| into [-1, 1].
    pub values: Vec<Vec<f64>>,
    /// Counts scaled by the largest count into [0, 1].
    pub frequencies: Vec<Vec<f64>>,
}

/// Builds the 20 x 9 heatmap from per-peptide attributions. Sequences of
/// any other length are skipped; at least one 9-mer is required.
pub fn aggregate_heatmap(items: &[(Peptide, Vec<f64>)]) -> Result<Heatmap> {
    let mut counts = vec![vec![0u64; HEATMAP_LENGTH]; AMINO_ACIDS.len()];
    let mut sums = vec![vec![0.0f64; HEATMAP_LENGTH]; AMINO_ACIDS.len()];
    let mut peptides = 0usize;
    for (peptide, attr) in items {
        if peptide.tokens().len() != HEATMAP_LENGTH {
            continue;
        }
        if attr.len() != HEATMAP_LENGTH {
            return Err(Error::LengthMismatch { expected: HEATMAP_LENGTH, got: attr.len() });
        }
        peptides += 1;
        for (p, (&token, &a)) in peptide.tokens().iter().zip(attr).enumerate() {
            counts[token as usize][p] += 1;
            sums[token as usize][p] += a;
        }
    }
    if peptides == 0 {
        return Err(Error::NoLengthNine);
    }
    let mean: Vec<Vec<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(srow, crow)| {
            srow.iter()
                .zip(crow)
                .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
                .collect()
        })
        .collect();
    let max_abs = mean.iter().flatten().fold(0.0f64, |m, &v| m.max(v.abs()));
    let values = mean
        .iter()
        .map(|row| row.iter().map(|&v| if max_abs > 0.0 { v / max_abs } else { 0.0 }).collect())
        .collect();
    let max_count = counts.iter().flatten().copied().max().unwrap_or(0);
    let frequencies = counts
        .iter()
        .map(|row| {
            row.iter()
                .map(|&c| if max_count > 0 { c as f64 / max_count as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(Heatmap { peptides, counts, mean, values, frequencies })
}

/// Fixed-width text rendering: one row per residue, one column per position.
/// Empty cells print as dots.
pub fn render_text(map: &Heatmap) -> String {
    let mut out = String::new();
    out.push_str("res");
    for p in 0..HEATMAP_LENGTH {
        out.push_str(&format!("  pos{}", p + 1));
    }
    out.push('\n');
    for (r, &residue) in AMINO_ACIDS.iter().enumerate() {
        out.push(residue as char);
        out.push_str("  ");
        for p in 0..HEATMAP_LENGTH {
            if map.counts[r][p] == 0 {
                out.push_str("     .");
            } else {
                out.push_str(&format!(" {:+.2}", map.values[r][p]));
            }
        }
        out.push('\n');
    }
    out
}

fn cell_color(value: f64) -> String {
    // Mix white toward green (positive) or red (negative) by |value|.
    let t = value.abs().clamp(0.0, 1.0);
    let (tr, tg, tb) = if value >= 0.0 { (46, 125, 50) } else { (198, 40, 40) };
    let mix = |target: i32| (255.0 + (target as f64 - 255.0) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(tr), mix(tg), mix(tb))
}

/// Standalone SVG rendering of the heatmap: color encodes the signed mean
/// attribution, opacity encodes how often the residue occurs at that
/// position, and unobserved cells are flat gray.
pub fn render_svg(map: &Heatmap) -> String {
    const CELL_W: usize = 34;
    const CELL_H: usize = 18;
    const LEFT: usize = 30;
    const TOP: usize = 26;
    let width = LEFT + HEATMAP_LENGTH * CELL_W + 10;
    let height = TOP + AMINO_ACIDS.len() * CELL_H + 10;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         font-family=\"monospace\" font-size=\"11\">\n"
    );
    for p in 0..HEATMAP_LENGTH {
        let x = LEFT + p * CELL_W + CELL_W / 2;
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"16\" text-anchor=\"middle\">{}</text>\n",
            p + 1
        ));
    }
    for (r, &residue) in AMINO_ACIDS.iter().enumerate() {
        let y = TOP + r * CELL_H;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            LEFT / 2,
            y + CELL_H / 2 + 4,
            residue as char
        ));
        for p in 0..HEATMAP_LENGTH {
            let x = LEFT + p * CELL_W;
            if map.counts[r][p] == 0 {
                svg.push_str(&format!(
                    "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL_W}\" height=\"{CELL_H}\" \
                     fill=\"#d7d7d7\" stroke=\"#ffffff\"/>\n"
                ));
            } else {
                let fill = cell_color(map.values[r][p]);
                let opacity = 0.2 + 0.8 * map.frequencies[r][p];
                svg.push_str(&format!(
                    "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL_W}\" height=\"{CELL_H}\" \
                     fill=\"{fill}\" fill-opacity=\"{opacity:.3}\" stroke=\"#ffffff\"/>\n"
                ));
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}
