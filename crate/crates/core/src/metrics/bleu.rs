//! Corpus BLEU, numerically matching sacreBLEU 1.5.0 with its defaults:
//! 13a tokenization, mixed case, exponential smoothing, 4-gram order.

use std::collections::HashMap;
use std::ops::AddAssign;

use serde::Serialize;

use super::tokenize::tokenize_13a;
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

/// Floor used for `log(0)`, as in the reference scorer.
const LOG_ZERO: f64 = -9_999_999_999.0;

/// Sufficient statistics of corpus BLEU; sums over segments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BleuStats {
    pub correct: [u64; MAX_ORDER],
    pub total: [u64; MAX_ORDER],
    pub sys_len: u64,
    pub ref_len: u64,
}

impl AddAssign for BleuStats {
    fn add_assign(&mut self, rhs: Self) {
        for n in 0..MAX_ORDER {
            self.correct[n] += rhs.correct[n];
            self.total[n] += rhs.total[n];
        }
        self.sys_len += rhs.sys_len;
        self.ref_len += rhs.ref_len;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BleuScore {
    /// 0-100.
    pub score: f64,
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub stats: BleuStats,
}

fn ngram_counts(tokens: &[&str]) -> HashMap<Vec<String>, u64> {
    let mut counts = HashMap::new();
    for n in 1..=MAX_ORDER {
        for window in tokens.windows(n) {
            *counts
                .entry(window.iter().map(|s| s.to_string()).collect())
                .or_insert(0) += 1;
        }
    }
    counts
}

/// Statistics of one segment. Empty references are dropped; at least one
/// non-empty reference must remain.
pub fn segment_stats(candidate: &str, references: &[&str]) -> Result<BleuStats> {
    let refs: Vec<String> = references
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| tokenize_13a(r.trim_end()))
        .collect();
    if refs.is_empty() {
        return Err(Error::InvalidInput(
            "segment has no non-empty reference".into(),
        ));
    }
    let hyp = tokenize_13a(candidate.trim_end());
    let hyp_tokens: Vec<&str> = hyp.split_whitespace().collect();
    let hyp_len = hyp_tokens.len() as u64;

    let mut max_ref_counts: HashMap<Vec<String>, u64> = HashMap::new();
    let mut closest: Option<(u64, u64)> = None; // (diff, len)
    for r in &refs {
        let tokens: Vec<&str> = r.split_whitespace().collect();
        let len = tokens.len() as u64;
        let diff = hyp_len.abs_diff(len);
        closest = match closest {
            None => Some((diff, len)),
            Some((d, l)) if diff < d || (diff == d && len < l) => Some((diff, len)),
            keep => keep,
        };
        for (gram, count) in ngram_counts(&tokens) {
            let slot = max_ref_counts.entry(gram).or_insert(0);
            *slot = (*slot).max(count);
        }
    }

    let mut stats = BleuStats {
        sys_len: hyp_len,
        ref_len: closest.map(|(_, l)| l).unwrap_or(0),
        ..Default::default()
    };
    for (gram, count) in ngram_counts(&hyp_tokens) {
        let n = gram.len() - 1;
        stats.correct[n] += count.min(max_ref_counts.get(&gram).copied().unwrap_or(0));
        stats.total[n] += count;
    }
    Ok(stats)
}

/// BLEU from corpus statistics with exponential smoothing of zero counts.
pub fn bleu_from_stats(stats: &BleuStats) -> BleuScore {
    let mut precisions = [0.0; MAX_ORDER];
    let mut smooth = 1.0;
    for n in 0..MAX_ORDER {
        if stats.total[n] == 0 {
            break;
        }
        precisions[n] = if stats.correct[n] == 0 {
            smooth *= 2.0;
            100.0 / (smooth * stats.total[n] as f64)
        } else {
            100.0 * stats.correct[n] as f64 / stats.total[n] as f64
        };
    }
    let brevity_penalty = if stats.sys_len < stats.ref_len {
        if stats.sys_len > 0 {
            (1.0 - stats.ref_len as f64 / stats.sys_len as f64).exp()
        } else {
            0.0
        }
    } else {
        1.0
    };
    let log_sum: f64 = precisions
        .iter()
        .map(|&p| if p == 0.0 { LOG_ZERO } else { p.ln() })
        .sum();
    BleuScore {
        score: brevity_penalty * (log_sum / MAX_ORDER as f64).exp(),
        precisions,
        brevity_penalty,
        stats: *stats,
    }
}

/// Corpus BLEU over parallel streams: `references[i]` are the references of
/// `candidates[i]`.
pub fn corpus_bleu_streams<S: AsRef<str>>(
    candidates: &[S],
    references: &[Vec<S>],
) -> Result<BleuScore> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput);
    }
    if candidates.len() != references.len() {
        return Err(Error::InvalidInput(format!(
            "{} candidates but {} reference sets",
            candidates.len(),
            references.len()
        )));
    }
    let mut total = BleuStats::default();
    for (cand, refs) in candidates.iter().zip(references) {
        let refs: Vec<&str> = refs.iter().map(AsRef::as_ref).collect();
        total += segment_stats(cand.as_ref(), &refs)?;
    }
    Ok(bleu_from_stats(&total))
}
