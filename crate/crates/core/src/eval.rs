//! Accuracy, top-k oracle and per-domain reports.
//!
//! Correctness is exact match of normal forms. For Overnight-style data this
//! under-approximates denotation equality, so every report carries a metric
//! label.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Beams, DatasetExample};
use crate::lf::{lf_equal, LfError, LfTree};
use crate::rerank::Predictions;

pub const METRIC_LABEL: &str = "normalized exact match";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no result for example {0:?}")]
    MissingResult(String),
    #[error("no beam for example {0:?}")]
    MissingBeam(String),
    #[error("oracle depth must be at least 1")]
    InvalidK,
    #[error("{id}: {source}")]
    Lf { id: String, source: LfError },
}

fn correct(id: &str, predicted: &LfTree, gold: &LfTree) -> Result<bool, EvalError> {
    lf_equal(predicted, gold).map_err(|source| EvalError::Lf { id: id.to_string(), source })
}

fn rate(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Per-example correctness of `predictions` against the gold forms.
pub fn correctness(predictions: &Predictions, dataset: &[DatasetExample]) -> Result<Vec<bool>, EvalError> {
    dataset
        .iter()
        .map(|ex| {
            let p = predictions.get(ex.id()).ok_or_else(|| EvalError::MissingResult(ex.id().to_string()))?;
            correct(ex.id(), p, &ex.gold_lf)
        })
        .collect()
}

pub fn top1_accuracy(predictions: &Predictions, dataset: &[DatasetExample]) -> Result<f64, EvalError> {
    let hits = correctness(predictions, dataset)?.into_iter().filter(|c| *c).count();
    Ok(rate(hits, dataset.len()))
}

/// The generator's own choice: the rank-1 candidate of every beam.
pub fn generator_predictions(dataset: &[DatasetExample], beams: &Beams) -> Result<Predictions, EvalError> {
    dataset
        .iter()
        .map(|ex| {
            let beam = beams.get(ex.id()).ok_or_else(|| EvalError::MissingBeam(ex.id().to_string()))?;
            let top = beam.iter().min_by_key(|c| c.rank).ok_or_else(|| EvalError::MissingBeam(ex.id().to_string()))?;
            Ok((ex.id().to_string(), top.lf.clone()))
        })
        .collect()
}

/// Whether some candidate of rank at most `k` equals the gold form.
pub fn oracle_hits(beams: &Beams, dataset: &[DatasetExample], k: usize) -> Result<Vec<bool>, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    dataset
        .iter()
        .map(|ex| {
            let beam = beams.get(ex.id()).ok_or_else(|| EvalError::MissingBeam(ex.id().to_string()))?;
            for c in beam.iter().filter(|c| c.rank <= k) {
                if correct(ex.id(), &c.lf, &ex.gold_lf)? {
                    return Ok(true);
                }
            }
            Ok(false)
        })
        .collect()
}

pub fn oracle_at_k(beams: &Beams, dataset: &[DatasetExample], k: usize) -> Result<f64, EvalError> {
    let hits = oracle_hits(beams, dataset, k)?.into_iter().filter(|h| *h).count();
    Ok(rate(hits, dataset.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainStats {
    pub examples: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub generator_correct: usize,
    pub generator_accuracy: f64,
    /// Oracle rate per depth.
    pub oracle: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub metric: String,
    /// How the headline average is computed.
    pub average: String,
    pub domains: BTreeMap<String, DomainStats>,
    /// Unweighted mean over non-empty domains; `None` when all are empty.
    pub macro_accuracy: Option<f64>,
    pub macro_generator_accuracy: Option<f64>,
    pub micro_accuracy: f64,
    pub generator_accuracy: f64,
    pub oracle: BTreeMap<usize, f64>,
    pub examples: usize,
    pub correct: usize,
    /// Domains that were requested but have no examples.
    pub empty_domains: Vec<String>,
    pub warnings: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ReportConfig {
    pub ks: Vec<usize>,
    /// Domains expected in the report. Domains present in the data are
    /// always included; listed domains without examples are reported empty.
    pub domains: Vec<String>,
}

fn macro_mean<'a>(values: impl Iterator<Item = &'a DomainStats>, f: impl Fn(&DomainStats) -> f64) -> Option<f64> {
    let vals: Vec<f64> = values.filter(|d| d.examples > 0).map(f).collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

pub fn report(
    dataset: &[DatasetExample],
    beams: &Beams,
    predictions: &Predictions,
    config: &ReportConfig,
) -> Result<EvalReport, EvalError> {
    let chosen = correctness(predictions, dataset)?;
    let generator = correctness(&generator_predictions(dataset, beams)?, dataset)?;
    let mut ks = config.ks.clone();
    ks.sort_unstable();
    ks.dedup();
    let oracle: Vec<(usize, Vec<bool>)> =
        ks.iter().map(|k| Ok((*k, oracle_hits(beams, dataset, *k)?))).collect::<Result<_, EvalError>>()?;

    let mut groups: BTreeMap<String, Vec<usize>> = config.domains.iter().map(|d| (d.clone(), Vec::new())).collect();
    for (i, ex) in dataset.iter().enumerate() {
        groups.entry(ex.domain().to_string()).or_default().push(i);
    }

    let count = |flags: &[bool], idx: &[usize]| idx.iter().filter(|i| flags[**i]).count();
    let mut domains = BTreeMap::new();
    let mut empty_domains = Vec::new();
    for (name, idx) in &groups {
        if idx.is_empty() {
            log::warn!("domain {name:?} has no examples; left out of the average");
            empty_domains.push(name.clone());
        }
        let c = count(&chosen, idx);
        let g = count(&generator, idx);
        domains.insert(
            name.clone(),
            DomainStats {
                examples: idx.len(),
                correct: c,
                accuracy: rate(c, idx.len()),
                generator_correct: g,
                generator_accuracy: rate(g, idx.len()),
                oracle: oracle.iter().map(|(k, hits)| (*k, rate(count(hits, idx), idx.len()))).collect(),
            },
        );
    }

    let all: Vec<usize> = (0..dataset.len()).collect();
    let correct = count(&chosen, &all);
    Ok(EvalReport {
        metric: METRIC_LABEL.to_string(),
        average: "macro (unweighted mean of per-domain accuracy)".to_string(),
        macro_accuracy: macro_mean(domains.values(), |d| d.accuracy),
        macro_generator_accuracy: macro_mean(domains.values(), |d| d.generator_accuracy),
        micro_accuracy: rate(correct, dataset.len()),
        generator_accuracy: rate(count(&generator, &all), dataset.len()),
        oracle: oracle.iter().map(|(k, hits)| (*k, rate(count(hits, &all), dataset.len()))).collect(),
        examples: dataset.len(),
        correct,
        warnings: empty_domains.len(),
        empty_domains,
        domains,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn pct(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.1}", 100.0 * v),
        None => "-".to_string(),
    }
}

/// One row of a per-domain comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    /// Accuracy per domain; `None` for an empty domain.
    pub domains: BTreeMap<String, Option<f64>>,
    pub average: Option<f64>,
}

impl TableRow {
    pub fn reranked(label: &str, report: &EvalReport) -> Self {
        Self::from_stats(label, report, |d| d.accuracy, report.macro_accuracy)
    }

    pub fn generator(label: &str, report: &EvalReport) -> Self {
        Self::from_stats(label, report, |d| d.generator_accuracy, report.macro_generator_accuracy)
    }

    pub fn oracle(label: &str, report: &EvalReport, k: usize) -> Self {
        let get = |d: &DomainStats| d.oracle.get(&k).copied().unwrap_or(0.0);
        let avg = macro_mean(report.domains.values(), get);
        Self::from_stats(label, report, get, avg)
    }

    fn from_stats(label: &str, report: &EvalReport, f: impl Fn(&DomainStats) -> f64, average: Option<f64>) -> Self {
        TableRow {
            label: label.to_string(),
            domains: report
                .domains
                .iter()
                .map(|(name, d)| (name.clone(), if d.examples == 0 { None } else { Some(f(d)) }))
                .collect(),
            average,
        }
    }
}

/// Aligned text table: one row per system, one column per domain, then the
/// macro average. Values are percentages.
pub fn render_table(rows: &[TableRow]) -> String {
    let mut domains: Vec<&str> = rows.iter().flat_map(|r| r.domains.keys().map(String::as_str)).collect();
    domains.sort_unstable();
    domains.dedup();
    let label_w = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(6);
    let col_w: Vec<usize> = domains.iter().map(|d| d.len().max(5)).collect();

    let mut out = String::new();
    let _ = write!(out, "{:<label_w$}", "");
    for (d, w) in domains.iter().zip(&col_w) {
        let _ = write!(out, "  {d:>w$}");
    }
    let _ = writeln!(out, "  {:>5}", "Avg.");
    for r in rows {
        let _ = write!(out, "{:<label_w$}", r.label);
        for (d, w) in domains.iter().zip(&col_w) {
            let _ = write!(out, "  {:>w$}", pct(r.domains.get(*d).copied().flatten()));
        }
        let _ = writeln!(out, "  {:>5}", pct(r.average));
    }
    out
}

/// Top-1 accuracy and oracle rates over all examples; `label` names the
/// reranked system's row.
pub fn render_summary(report: &EvalReport, label: &str) -> String {
    let mut headers = vec!["".to_string(), "Top-1 Acc.".to_string()];
    headers.extend(report.oracle.keys().map(|k| format!("Top-{k} Oracle")));
    let oracle: Vec<String> = report.oracle.values().map(|v| pct(Some(*v))).collect();
    let mut generator = vec!["Generator".to_string(), pct(Some(report.generator_accuracy))];
    generator.extend(oracle.iter().cloned());
    let mut reranked = vec![label.to_string(), pct(Some(report.micro_accuracy))];
    reranked.extend(oracle);

    let rows = [headers, generator, reranked];
    let widths: Vec<usize> = (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = format!("metric: {} over {} examples\n", report.metric, report.examples);
    for r in &rows {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (v, w))| if c == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    if report.warnings > 0 {
        let _ = writeln!(out, "warning: empty domains left out of the average: {}", report.empty_domains.join(", "));
    }
    out
}
