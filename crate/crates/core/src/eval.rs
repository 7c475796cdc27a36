//! Evaluation harness: recognition metrics, reproducibility, rank
//! correlation, and the train/recognize comparison grid.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hsmm::{
    self, GenerateMode, ModelBank, ModelKind, ModelParams, TrainConfig, TrainedModel,
};
use crate::ilp_hsmm;
use crate::is_hsmm;
use crate::math::sqrt;
use crate::seq::Dataset;

/// Confusion counts and derived rates for one label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMetrics {
    pub label: usize,
    /// Correct predictions of this label.
    pub tp: usize,
    /// Predicted-positive count.
    pub pp: usize,
    /// Actual-positive count.
    pub ap: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

/// Per-label confusion metrics plus macro averages over the labels that
/// actually occur.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_label: Vec<LabelMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f: f64,
}

impl MetricsReport {
    pub fn validate(&self) -> Result<()> {
        for row in &self.per_label {
            if row.tp > row.pp.min(row.ap) {
                return Err(Error::validation("TP exceeds PP or AP"));
            }
            for x in [row.precision, row.recall, row.f_measure] {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::validation("metric outside [0, 1]"));
                }
            }
        }
        for x in [self.macro_precision, self.macro_recall, self.macro_f] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::validation("macro metric outside [0, 1]"));
            }
        }
        Ok(())
    }
}

fn rate(num: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

/// Per-label precision, recall and f-measure from (true, predicted) pairs.
/// Rows cover every label mentioned on either side; macro averages run over
/// the labels with at least one actual positive. An empty input yields an
/// empty report.
pub fn confusion_metrics(pairs: &[(usize, usize)]) -> MetricsReport {
    let num_labels = pairs
        .iter()
        .map(|&(t, p)| t.max(p) + 1)
        .max()
        .unwrap_or(0);
    let mut per_label = Vec::with_capacity(num_labels);
    let mut sums = (0.0, 0.0, 0.0);
    let mut averaged = 0usize;
    for label in 0..num_labels {
        let tp = pairs.iter().filter(|&&(t, p)| t == label && p == label).count();
        let pp = pairs.iter().filter(|&&(_, p)| p == label).count();
        let ap = pairs.iter().filter(|&&(t, _)| t == label).count();
        let precision = rate(tp, pp);
        let recall = rate(tp, ap);
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        if ap > 0 {
            sums.0 += precision;
            sums.1 += recall;
            sums.2 += f_measure;
            averaged += 1;
        }
        per_label.push(LabelMetrics {
            label,
            tp,
            pp,
            ap,
            precision,
            recall,
            f_measure,
        });
    }
    let denom = averaged.max(1) as f64;
    MetricsReport {
        per_label,
        macro_precision: sums.0 / denom,
        macro_recall: sums.1 / denom,
        macro_f: sums.2 / denom,
    }
}

/// Fraction of ticks where the model's greedy generation of the same length
/// reproduces the original sequence.
pub fn reproducibility(model: &TrainedModel, obs: &[usize]) -> f64 {
    if obs.is_empty() {
        return 0.0;
    }
    let generated = hsmm::generate(model, obs.len(), GenerateMode::MostLikely, 0);
    let matches = obs
        .iter()
        .zip(&generated)
        .filter(|(a, b)| a == b)
        .count();
    matches as f64 / obs.len() as f64
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(core::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &at in &order[i..=j] {
            ranks[at] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties; zero when either
/// input is constant or shorter than two points.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "rank correlation needs paired samples");
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let mean = (n + 1) as f64 / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for k in 0..n {
        let a = rx[k] - mean;
        let b = ry[k] - mean;
        num += a * b;
        dx += a * a;
        dy += b * b;
    }
    if dx == 0.0 || dy == 0.0 {
        return 0.0;
    }
    num / (sqrt(dx) * sqrt(dy))
}

/// Train one model per label of the given kind over the dataset's train
/// split.
pub fn train_bank(
    kind: ModelKind,
    data: &Dataset,
    m: usize,
    dmax: usize,
    dmax_int: usize,
    config: &TrainConfig,
) -> Result<ModelBank> {
    data.validate()?;
    let n = data.table.len();
    let mut models = Vec::with_capacity(data.labels.len());
    for label in 0..data.labels.len() {
        let seqs: Vec<&[usize]> = data
            .with_label(label)
            .into_iter()
            .map(|s| s.obs.as_slice())
            .collect();
        let model = match kind {
            ModelKind::Hsmm => hsmm::train(label, &seqs, m, n, dmax, config)?,
            ModelKind::IsHsmm => is_hsmm::train_is(label, &seqs, m, n, dmax, dmax_int, config)?,
            ModelKind::IlpHsmm => ilp_hsmm::train_ilp(label, &seqs, m, n, dmax, config)?,
        };
        models.push(model);
    }
    let bank = ModelBank {
        labels: data.labels.clone(),
        symbols: data.table.names().to_vec(),
        models,
    };
    bank.validate()?;
    Ok(bank)
}

/// (true, predicted) pairs over a labeled dataset. With `ilp_sum` set, the
/// interval-length models score via the sum criterion instead of the
/// default max criterion.
pub fn classify(bank: &ModelBank, data: &Dataset, ilp_sum: bool) -> Result<Vec<(usize, usize)>> {
    data.validate()?;
    bank.validate()?;
    let mut pairs = Vec::with_capacity(data.sequences.len());
    for seq in &data.sequences {
        let truth = seq
            .label
            .ok_or_else(|| Error::validation("classification needs labeled sequences"))?;
        let predicted = if ilp_sum && bank.kind()? == ModelKind::IlpHsmm {
            let mut label = usize::MAX;
            let mut best = f64::NEG_INFINITY;
            for model in &bank.models {
                let ModelParams::Ilp(p) = &model.params else {
                    return Err(Error::validation("bank does not hold interval-length models"));
                };
                let score = ilp_hsmm::forward_ilp(p, &seq.obs)?;
                if score > best || (score == best && score != f64::NEG_INFINITY && model.label < label)
                {
                    best = score;
                    label = model.label;
                }
            }
            if best == f64::NEG_INFINITY {
                bank.models.iter().map(|m| m.label).min().unwrap_or(0)
            } else {
                label
            }
        } else {
            hsmm::recognize(bank, &seq.obs)?.label
        };
        pairs.push((truth, predicted));
    }
    Ok(pairs)
}

/// Mean reproducibility per interval count, ascending. Every sequence
/// scores under its own label's model.
pub fn repro_curve(bank: &ModelBank, data: &Dataset) -> Result<Vec<(usize, f64)>> {
    data.validate()?;
    bank.validate()?;
    let mut by_count: Vec<(usize, f64, usize)> = Vec::new();
    for seq in &data.sequences {
        let label = seq
            .label
            .ok_or_else(|| Error::validation("reproducibility needs labeled sequences"))?;
        let model = bank
            .models
            .iter()
            .find(|m| m.label == label)
            .ok_or_else(|| Error::validation("bank lacks a model for a dataset label"))?;
        let r = reproducibility(model, &seq.obs);
        let k = seq.num_intervals();
        match by_count.iter_mut().find(|(count, _, _)| *count == k) {
            Some(slot) => {
                slot.1 += r;
                slot.2 += 1;
            }
            None => by_count.push((k, r, 1)),
        }
    }
    by_count.sort_unstable_by_key(|&(k, _, _)| k);
    Ok(by_count
        .into_iter()
        .map(|(k, sum, n)| (k, sum / n as f64))
        .collect())
}

/// One grid cell of the comparison: either a metrics report or the error
/// that prevented it.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCell {
    pub kind: ModelKind,
    pub states: usize,
    pub report: Option<MetricsReport>,
    pub error: Option<String>,
}

/// Mean reproducibility of the test sequences holding a given number of
/// intervals, under their own label's model.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproPoint {
    pub kind: ModelKind,
    pub states: usize,
    pub num_intervals: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub cells: Vec<ComparisonCell>,
    pub repro: Vec<ReproPoint>,
}

/// Train and evaluate every (kind, state count) cell on a train/test pair.
/// Cells that fail to train record the error and keep the grid going.
/// Ordering is deterministic: kinds in the given order, then state counts,
/// then interval counts ascending.
#[allow(clippy::too_many_arguments)]
pub fn run_comparison(
    train: &Dataset,
    test: &Dataset,
    kinds: &[ModelKind],
    state_counts: &[usize],
    dmax: usize,
    dmax_int: usize,
    config: &TrainConfig,
    ilp_sum: bool,
) -> Result<Comparison> {
    train.validate()?;
    test.validate()?;
    let mut cells = Vec::new();
    let mut repro = Vec::new();
    for &kind in kinds {
        for &states in state_counts {
            match train_bank(kind, train, states, dmax, dmax_int, config) {
                Ok(bank) => {
                    let pairs = classify(&bank, test, ilp_sum)?;
                    cells.push(ComparisonCell {
                        kind,
                        states,
                        report: Some(confusion_metrics(&pairs)),
                        error: None,
                    });
                    for (num_intervals, r) in repro_curve(&bank, test)? {
                        repro.push(ReproPoint {
                            kind,
                            states,
                            num_intervals,
                            r,
                        });
                    }
                }
                Err(err) => cells.push(ComparisonCell {
                    kind,
                    states,
                    report: None,
                    error: Some(format!("{err}")),
                }),
            }
        }
    }
    Ok(Comparison { cells, repro })
}
