//! METEOR with exact and stem matching modules.
//!
//! Alignment runs in two stages. The first aligns identical words, the second
//! aligns words with equal Porter2 stems among those left unmatched. Each
//! stage picks, among alignments with the maximum number of matches, one with
//! the fewest chunks (runs of matches contiguous in both strings).

use std::collections::HashMap;

use rust_stemmers::{Algorithm, Stemmer};
use serde::Serialize;

pub const ALPHA: f64 = 0.9;
pub const BETA: f64 = 3.0;
pub const GAMMA: f64 = 0.5;

const BEAM_WIDTH: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeteorDetail {
    pub matches: usize,
    pub chunks: usize,
    pub precision: f64,
    pub recall: f64,
    pub fmean: f64,
    pub penalty: f64,
    pub score: f64,
}

/// Scores tokenized `candidate` against a single tokenized `reference`.
pub fn meteor_tokens(candidate: &[String], reference: &[String]) -> MeteorDetail {
    let alignment = align(candidate, reference);
    let matches = alignment.iter().flatten().count();
    if matches == 0 {
        return MeteorDetail {
            matches: 0,
            chunks: 0,
            precision: 0.0,
            recall: 0.0,
            fmean: 0.0,
            penalty: 0.0,
            score: 0.0,
        };
    }
    let chunks = count_chunks(&alignment);
    let precision = matches as f64 / candidate.len() as f64;
    let recall = matches as f64 / reference.len() as f64;
    let fmean = precision * recall / (ALPHA * precision + (1.0 - ALPHA) * recall);
    let penalty = GAMMA * (chunks as f64 / matches as f64).powf(BETA);
    MeteorDetail {
        matches,
        chunks,
        precision,
        recall,
        fmean,
        penalty,
        score: fmean * (1.0 - penalty),
    }
}

/// `alignment[i]` is the reference position matched to candidate word `i`.
pub fn count_chunks(alignment: &[Option<usize>]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<usize> = None;
    for slot in alignment {
        match (*slot, prev) {
            (Some(j), Some(p)) if j == p + 1 => {}
            (Some(_), _) => chunks += 1,
            (None, _) => {}
        }
        prev = *slot;
    }
    chunks
}

fn align(candidate: &[String], reference: &[String]) -> Vec<Option<usize>> {
    let none = vec![None; candidate.len()];
    let exact = align_stage(candidate, reference, &none);
    let stemmer = Stemmer::create(Algorithm::English);
    let cand_stems: Vec<String> = candidate
        .iter()
        .map(|w| stemmer.stem(w).into_owned())
        .collect();
    let ref_stems: Vec<String> = reference
        .iter()
        .map(|w| stemmer.stem(w).into_owned())
        .collect();
    align_stage(&cand_stems, &ref_stems, &exact)
}

#[derive(Clone)]
struct State {
    assigned: Vec<Option<usize>>,
    used: Vec<bool>,
    skips: Vec<u32>,
    chunks: usize,
    displacement: usize,
}

/// One alignment stage. Words are matchable when their keys are equal;
/// positions fixed by `prior` stay as they are and their reference words are
/// unavailable.
fn align_stage(cand: &[String], refs: &[String], prior: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut ref_used = vec![false; refs.len()];
    for j in prior.iter().flatten() {
        ref_used[*j] = true;
    }

    // Equivalence classes over free words; per class the maximum number of
    // matches is min(free candidate count, free reference count).
    let mut class_of: HashMap<&str, usize> = HashMap::new();
    let mut cand_count: Vec<u32> = Vec::new();
    let mut ref_count: Vec<u32> = Vec::new();
    let cand_class: Vec<Option<usize>> = cand
        .iter()
        .zip(prior)
        .map(|(w, fixed)| {
            if fixed.is_some() {
                return None;
            }
            let next = class_of.len();
            let c = *class_of.entry(w.as_str()).or_insert(next);
            if c == cand_count.len() {
                cand_count.push(0);
                ref_count.push(0);
            }
            cand_count[c] += 1;
            Some(c)
        })
        .collect();
    let mut ref_class: Vec<Option<usize>> = vec![None; refs.len()];
    for (j, w) in refs.iter().enumerate() {
        if ref_used[j] {
            continue;
        }
        if let Some(&c) = class_of.get(w.as_str()) {
            ref_class[j] = Some(c);
            ref_count[c] += 1;
        }
    }
    // Skipping a matchable word is allowed only while the class can still
    // reach its maximum.
    let allowed_skips: Vec<u32> = cand_count
        .iter()
        .zip(&ref_count)
        .map(|(&c, &r)| c - c.min(r))
        .collect();

    let mut beam = vec![State {
        assigned: Vec::with_capacity(cand.len()),
        used: ref_used,
        skips: vec![0; allowed_skips.len()],
        chunks: 0,
        displacement: 0,
    }];

    for i in 0..cand.len() {
        let mut next: Vec<State> = Vec::new();
        for state in &beam {
            if let Some(j) = prior[i] {
                next.push(extend(state, i, Some(j)));
                continue;
            }
            let Some(c) = cand_class[i] else {
                next.push(extend(state, i, None));
                continue;
            };
            let mut any = false;
            for j in 0..refs.len() {
                if ref_class[j] == Some(c) && !state.used[j] {
                    next.push(extend(state, i, Some(j)));
                    any = true;
                }
            }
            if !any || state.skips[c] < allowed_skips[c] {
                let mut skipped = extend(state, i, None);
                if any {
                    skipped.skips[c] += 1;
                }
                next.push(skipped);
            }
        }
        beam = prune(next);
    }
    beam.into_iter()
        .next()
        .map(|s| s.assigned)
        .unwrap_or_else(|| prior.to_vec())
}

fn extend(state: &State, i: usize, target: Option<usize>) -> State {
    let mut s = state.clone();
    if let Some(j) = target {
        let continues = i > 0 && j > 0 && s.assigned[i - 1] == Some(j - 1);
        if !continues {
            s.chunks += 1;
        }
        s.used[j] = true;
        s.displacement += i.abs_diff(j);
    }
    s.assigned.push(target);
    s
}

/// Keeps the best state per (used references, last assignment, skip counts)
/// and at most `BEAM_WIDTH` states, ordered by chunks then displacement.
fn prune(mut states: Vec<State>) -> Vec<State> {
    states.sort_by(|a, b| {
        (a.chunks, a.displacement)
            .cmp(&(b.chunks, b.displacement))
            .then_with(|| a.assigned.cmp(&b.assigned))
    });
    let mut seen = std::collections::HashSet::new();
    states.retain(|s| seen.insert((s.used.clone(), s.assigned.last().copied(), s.skips.clone())));
    states.truncate(BEAM_WIDTH);
    states
}
