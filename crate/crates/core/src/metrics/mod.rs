//! Task accuracy and explanation-quality metrics.
//!
//! Generation metrics take the maximum over references per pair (BLEU uses
//! per-n-gram maximum clip counts and the closest reference length instead)
//! and ignore pairs without references.

pub mod bleu;
pub mod meteor;
pub mod rouge;
pub mod tokenize;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taskformat::normalize_label;

pub use bleu::{bleu_from_stats, corpus_bleu_streams, segment_stats, BleuScore, BleuStats};
pub use meteor::{meteor_tokens, MeteorDetail};
pub use rouge::{lcs_len, rouge_l_f1};
pub use tokenize::{tokenize_13a, words};

/// One evaluated instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub id: String,
    /// Generated explanation.
    pub candidate: String,
    /// Gold explanations to score the candidate against.
    pub references: Vec<String>,
    pub gold_label: String,
    pub predicted_label: String,
    /// False when the model output did not parse cleanly.
    #[serde(default = "default_true")]
    pub clean_parse: bool,
}

fn default_true() -> bool {
    true
}

/// Which gold explanations serve as references.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferencePolicy {
    /// The first two gold explanations (the e-SNLI dev/test convention).
    #[default]
    First2,
    All,
}

impl ReferencePolicy {
    pub fn select(self, gold: &[String]) -> Vec<String> {
        match self {
            ReferencePolicy::First2 => gold.iter().take(2).cloned().collect(),
            ReferencePolicy::All => gold.to_vec(),
        }
    }
}

impl std::str::FromStr for ReferencePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first2" => Ok(ReferencePolicy::First2),
            "all" => Ok(ReferencePolicy::All),
            other => Err(Error::InvalidInput(format!(
                "unknown reference policy `{other}`"
            ))),
        }
    }
}

/// Fraction of pairs whose normalized predicted label equals the gold label.
pub fn accuracy(pairs: &[EvalPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let correct = pairs
        .iter()
        .filter(|p| normalize_label(&p.predicted_label) == normalize_label(&p.gold_label))
        .count();
    Ok(correct as f64 / pairs.len() as f64)
}

fn with_references(pairs: &[EvalPair]) -> Result<Vec<&EvalPair>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let scored: Vec<&EvalPair> = pairs.iter().filter(|p| !p.references.is_empty()).collect();
    if scored.is_empty() {
        return Err(Error::InvalidInput(
            "no pair carries a reference explanation".into(),
        ));
    }
    Ok(scored)
}

/// Corpus BLEU on the 0-100 scale.
pub fn corpus_bleu(pairs: &[EvalPair]) -> Result<f64> {
    let scored = with_references(pairs)?;
    let mut total = BleuStats::default();
    for p in scored {
        let refs: Vec<&str> = p.references.iter().map(String::as_str).collect();
        total += segment_stats(&p.candidate, &refs)?;
    }
    Ok(bleu_from_stats(&total).score)
}

fn mean_of_max(pairs: &[EvalPair], score: impl Fn(&[String], &[String]) -> f64) -> Result<f64> {
    let scored = with_references(pairs)?;
    let sum: f64 = scored
        .iter()
        .map(|p| {
            let cand = words(&p.candidate);
            p.references
                .iter()
                .map(|r| score(&cand, &words(r)))
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(sum / scored.len() as f64)
}

/// Mean over pairs of the best ROUGE-L F1 against any reference.
pub fn rouge_l(pairs: &[EvalPair]) -> Result<f64> {
    mean_of_max(pairs, rouge_l_f1)
}

/// Mean over pairs of the best METEOR score against any reference.
pub fn meteor(pairs: &[EvalPair]) -> Result<f64> {
    mean_of_max(pairs, |c, r| meteor_tokens(c, r).score)
}

/// `acc_generated / acc_gold` as a percentage.
pub fn recover_ratio(acc_generated: f64, acc_gold: f64) -> Result<f64> {
    if acc_gold == 0.0 {
        return Err(Error::ZeroGoldAccuracy);
    }
    if !(acc_gold > 0.0) || acc_generated < 0.0 {
        return Err(Error::InvalidInput(format!(
            "accuracies must be non-negative, got {acc_generated} / {acc_gold}"
        )));
    }
    Ok(100.0 * acc_generated / acc_gold)
}

/// Scores of one run. Generation metrics are absent when no pair had a
/// reference explanation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub bleu: Option<f64>,
    pub rouge_l: Option<f64>,
    pub meteor: Option<f64>,
    pub n_evaluated: usize,
    pub n_parse_failures: usize,
}

pub fn evaluate(pairs: &[EvalPair]) -> Result<MetricReport> {
    let accuracy = accuracy(pairs)?;
    let has_refs = pairs.iter().any(|p| !p.references.is_empty());
    let (bleu, rouge_l, meteor) = if has_refs {
        (
            Some(corpus_bleu(pairs)?),
            Some(rouge_l(pairs)?),
            Some(meteor(pairs)?),
        )
    } else {
        (None, None, None)
    };
    Ok(MetricReport {
        accuracy,
        bleu,
        rouge_l,
        meteor,
        n_evaluated: pairs.len(),
        n_parse_failures: pairs.iter().filter(|p| !p.clean_parse).count(),
    })
}

impl MetricReport {
    /// Arithmetic mean of each metric; counts are summed.
    pub fn mean(reports: &[MetricReport]) -> Option<MetricReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg = |get: &dyn Fn(&MetricReport) -> Option<f64>| -> Option<f64> {
            reports
                .iter()
                .map(get)
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.iter().sum::<f64>() / n)
        };
        Some(MetricReport {
            accuracy: reports.iter().map(|r| r.accuracy).sum::<f64>() / n,
            bleu: avg(&|r| r.bleu),
            rouge_l: avg(&|r| r.rouge_l),
            meteor: avg(&|r| r.meteor),
            n_evaluated: reports.iter().map(|r| r.n_evaluated).sum(),
            n_parse_failures: reports.iter().map(|r| r.n_parse_failures).sum(),
        })
    }
}

fn cell(v: Option<f64>, scale: f64) -> String {
    v.map(|x| format!("{:.2}", x * scale))
        .unwrap_or_else(|| "-".into())
}

/// Fixed-width table with columns Model, Acc, BLEU, METEOR, Rouge-L.
/// Accuracy, METEOR and ROUGE-L are shown as percentages.
pub fn render_table(rows: &[(String, MetricReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$} | {:>7} | {:>7} | {:>7} | {:>7}",
        "Model", "Acc", "BLEU", "METEOR", "Rouge-L"
    );
    let _ = writeln!(out, "{}", "-".repeat(width + 40));
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{:<width$} | {:>7} | {:>7} | {:>7} | {:>7}",
            name,
            cell(Some(r.accuracy), 100.0),
            cell(r.bleu, 1.0),
            cell(r.meteor, 100.0),
            cell(r.rouge_l, 100.0),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(cand: &str, refs: &[&str], gold: &str, pred: &str) -> EvalPair {
        EvalPair {
            id: cand.into(),
            candidate: cand.into(),
            references: refs.iter().map(|s| s.to_string()).collect(),
            gold_label: gold.into(),
            predicted_label: pred.into(),
            clean_parse: true,
        }
    }

    #[test]
    fn accuracy_examples() {
        let all = vec![pair("a", &["a"], "neutral", "neutral"); 3];
        assert_eq!(accuracy(&all).unwrap(), 1.0);
        let quarter = vec![
            pair("a", &["a"], "neutral", "neutral"),
            pair("a", &["a"], "neutral", "entailment"),
            pair("a", &["a"], "neutral", "maybe"),
            pair("a", &["a"], "contradiction", ""),
        ];
        assert_eq!(accuracy(&quarter).unwrap(), 0.25);
        assert_eq!(
            accuracy(&[pair("a", &["a"], "neutral", " Neutral")]).unwrap(),
            1.0
        );
        assert!(matches!(accuracy(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn rouge_examples() {
        assert_eq!(
            rouge_l(&[pair("a b c", &["a b c"], "x", "x")]).unwrap(),
            1.0
        );
        assert_eq!(rouge_l(&[pair("", &["a b c"], "x", "x")]).unwrap(), 0.0);
        let r = rouge_l(&[pair("the cat sat", &["the cat sat on the mat"], "x", "x")]).unwrap();
        assert!((r - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn max_over_references() {
        let p = pair("the cat sat", &["dog", "the cat sat"], "x", "x");
        assert_eq!(rouge_l(std::slice::from_ref(&p)).unwrap(), 1.0);
        assert!((meteor(&[p]).unwrap() - (1.0 - 0.5 / 27.0)).abs() < 1e-12);
    }

    #[test]
    fn recover_ratio_examples() {
        assert!((recover_ratio(90.31, 97.81).unwrap() - 92.33).abs() < 0.01);
        assert!((recover_ratio(61.54, 86.63).unwrap() - 71.04).abs() < 0.01);
        assert_eq!(recover_ratio(0.42, 0.42).unwrap(), 100.0);
        assert!(matches!(
            recover_ratio(0.5, 0.0),
            Err(Error::ZeroGoldAccuracy)
        ));
    }

    #[test]
    fn evaluate_counts_parse_failures() {
        let mut bad = pair("x", &["x"], "neutral", "maybe");
        bad.clean_parse = false;
        let report = evaluate(&[pair("x", &["x"], "neutral", "neutral"), bad]).unwrap();
        assert_eq!(report.n_evaluated, 2);
        assert_eq!(report.n_parse_failures, 1);
        assert_eq!(report.accuracy, 0.5);
    }

    #[test]
    fn evaluate_without_references_has_no_generation_metrics() {
        let report = evaluate(&[pair("x", &[], "neutral", "neutral")]).unwrap();
        assert_eq!(report.bleu, None);
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn reference_policy() {
        let gold: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(ReferencePolicy::First2.select(&gold), vec!["a", "b"]);
        assert_eq!(ReferencePolicy::All.select(&gold).len(), 3);
    }

    #[test]
    fn table_layout() {
        let r = evaluate(&[pair("a b c d", &["a b c d"], "n", "n")]).unwrap();
        let table = render_table(&[("PtE".into(), r)]);
        let header = table.lines().next().unwrap();
        assert!(header.contains("Acc") && header.contains("BLEU") && header.contains("Rouge-L"));
        assert!(table.lines().nth(2).unwrap().contains("100.00"));
    }
}
