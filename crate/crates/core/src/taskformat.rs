//! Text-to-text rendering of instances for every stage, and parsing of model
//! outputs back into labels and explanations.
//!
//! The templates are wire-visible: single spaces between segments, no
//! trailing space.
//!
//! | stage           | NLI input                                                   | target                         |
//! |-----------------|-------------------------------------------------------------|--------------------------------|
//! | `joint`         | `explain nli Premise: {p} Hypothesis: {h}`                  | `{label} explanation {expl}`   |
//! | `pte_predictor` | `nli Premise: {p} Hypothesis: {h}`                          | `{label}`                      |
//! | `pte_explainer` | `explain nli Premise: {p} Hypothesis: {h} Label: {label}`   | `{expl}`                       |
//! | `etp_explainer` | `explain nli Premise: {p} Hypothesis: {h}`                  | `{expl}`                       |
//! | `etp_predictor` | `nli Premise: {p} Hypothesis: {h} Explanation: {expl}`      | `{label}`                      |
//! | `r_to_l`        | `nli Explanation: {expl}`                                   | `{label}`                      |
//!
//! CQA replaces the premise/hypothesis body with `cos Question: {q}` followed
//! by one ` Choice: {c}` per choice. Its label-from-explanation input is
//! `cos Question-free. Choice: {c0} ... Explanation: {expl}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Instance, TaskInput};
use crate::error::{Error, Result};

/// One trainable text-to-text stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    #[serde(rename = "joint")]
    JointStage,
    PtePredictor,
    PteExplainer,
    EtpExplainer,
    EtpPredictor,
    /// Predicts the label from an explanation alone.
    #[serde(rename = "r_to_l")]
    RtoL,
}

impl StageKind {
    pub const ALL: [StageKind; 6] = [
        StageKind::JointStage,
        StageKind::PtePredictor,
        StageKind::PteExplainer,
        StageKind::EtpExplainer,
        StageKind::EtpPredictor,
        StageKind::RtoL,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            StageKind::JointStage => "joint",
            StageKind::PtePredictor => "pte_predictor",
            StageKind::PteExplainer => "pte_explainer",
            StageKind::EtpExplainer => "etp_explainer",
            StageKind::EtpPredictor => "etp_predictor",
            StageKind::RtoL => "r_to_l",
        }
    }

    /// What the stage's output carries.
    pub fn output(self) -> StageOutput {
        match self {
            StageKind::JointStage => StageOutput::LabelAndExplanation,
            StageKind::PtePredictor | StageKind::EtpPredictor | StageKind::RtoL => {
                StageOutput::Label
            }
            StageKind::PteExplainer | StageKind::EtpExplainer => StageOutput::Explanation,
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for StageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StageKind::ALL
            .into_iter()
            .find(|k| k.slug() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown stage `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageOutput {
    Label,
    Explanation,
    LabelAndExplanation,
}

/// Values substituted into a stage input in place of (or in addition to)
/// gold fields: a label for the PtE explainer, an explanation for the EtP
/// predictor and the label-from-explanation stage.
#[derive(Clone, Copy, Debug, Default)]
pub struct Injected<'a> {
    pub label: Option<&'a str>,
    pub explanation: Option<&'a str>,
}

impl<'a> Injected<'a> {
    pub fn label(label: &'a str) -> Self {
        Injected {
            label: Some(label),
            explanation: None,
        }
    }

    pub fn explanation(explanation: &'a str) -> Self {
        Injected {
            label: None,
            explanation: Some(explanation),
        }
    }
}

const JOINT_DELIMITER: &str = "explanation";

fn body(out: &mut String, input: &TaskInput) {
    match input {
        TaskInput::Nli {
            premise,
            hypothesis,
        } => {
            out.push_str("nli Premise: ");
            out.push_str(premise);
            out.push_str(" Hypothesis: ");
            out.push_str(hypothesis);
        }
        TaskInput::Cqa { question, choices } => {
            out.push_str("cos Question: ");
            out.push_str(question);
            push_choices(out, choices);
        }
    }
}

fn push_choices(out: &mut String, choices: &[String]) {
    for choice in choices {
        out.push_str(" Choice: ");
        out.push_str(choice);
    }
}

/// Renders the model input of `inst` for `stage`.
pub fn render_input<'a>(
    inst: &Instance,
    stage: StageKind,
    injected: Injected<'a>,
) -> Result<String> {
    let require = |value: Option<&'a str>, field: &'static str| {
        value.ok_or(Error::MissingInjected {
            stage: stage.slug(),
            field,
        })
    };
    let mut out = String::with_capacity(128);
    match stage {
        StageKind::JointStage | StageKind::EtpExplainer => {
            out.push_str("explain ");
            body(&mut out, &inst.input);
        }
        StageKind::PtePredictor => body(&mut out, &inst.input),
        StageKind::PteExplainer => {
            let label = require(injected.label, "label")?;
            out.push_str("explain ");
            body(&mut out, &inst.input);
            out.push_str(" Label: ");
            out.push_str(label);
        }
        StageKind::EtpPredictor => {
            let explanation = require(injected.explanation, "explanation")?;
            body(&mut out, &inst.input);
            out.push_str(" Explanation: ");
            out.push_str(explanation);
        }
        StageKind::RtoL => {
            let explanation = require(injected.explanation, "explanation")?;
            match &inst.input {
                TaskInput::Nli { .. } => out.push_str("nli"),
                TaskInput::Cqa { choices, .. } => {
                    out.push_str("cos Question-free.");
                    push_choices(&mut out, choices);
                }
            }
            out.push_str(" Explanation: ");
            out.push_str(explanation);
        }
    }
    Ok(out)
}

/// Renders the gold training target of `inst` for `stage`.
pub fn render_target(inst: &Instance, stage: StageKind) -> Result<String> {
    let explanation = || {
        inst.first_explanation()
            .ok_or_else(|| Error::MissingGoldExplanation {
                id: inst.id.clone(),
                stage: stage.slug(),
            })
    };
    Ok(match stage.output() {
        StageOutput::Label => inst.gold_label.clone(),
        StageOutput::Explanation => explanation()?.to_string(),
        StageOutput::LabelAndExplanation => joint_target(&inst.gold_label, explanation()?),
    })
}

/// `{label} explanation {explanation}`.
pub fn joint_target(label: &str, explanation: &str) -> String {
    format!("{label} {JOINT_DELIMITER} {explanation}")
}

/// Result of parsing one generation. `clean_parse` is true only when the
/// output matched the stage grammar and any label is in the vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedOutput {
    pub label: Option<String>,
    pub explanation: Option<String>,
    pub raw: String,
    pub clean_parse: bool,
}

/// Case-insensitive, whitespace-trimmed label comparison key.
pub fn normalize_label(label: &str) -> String {
    label.trim().to_lowercase()
}

fn resolve_label(candidate: &str, vocabulary: &[String]) -> (String, bool) {
    let key = normalize_label(candidate);
    match vocabulary.iter().find(|v| normalize_label(v) == key) {
        Some(v) => (v.clone(), true),
        None => (candidate.trim().to_string(), false),
    }
}

/// Byte offset of the first standalone `explanation` token: preceded by a
/// space or the start, followed by a space or the end.
fn find_delimiter(text: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    text.match_indices(JOINT_DELIMITER)
        .map(|(i, _)| i)
        .find(|&i| {
            let end = i + JOINT_DELIMITER.len();
            (i == 0 || bytes[i - 1] == b' ') && (end == bytes.len() || bytes[end] == b' ')
        })
}

/// Splits at a vocabulary label immediately followed by the delimiter; lets
/// labels that themselves contain the delimiter word parse correctly.
fn split_at_vocabulary(text: &str, vocabulary: &[String]) -> Option<(usize, usize)> {
    let mut labels: Vec<&str> = vocabulary
        .iter()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .collect();
    labels.sort_by_key(|l| std::cmp::Reverse(l.len()));
    for label in labels {
        let Some(prefix) = text.get(..label.len()) else {
            continue;
        };
        if prefix.to_lowercase() != label.to_lowercase() {
            continue;
        }
        let rest = &text[label.len()..];
        let Some(after) = rest
            .strip_prefix(' ')
            .and_then(|r| r.strip_prefix(JOINT_DELIMITER))
        else {
            continue;
        };
        if after.is_empty() || after.starts_with(' ') {
            let start = label.len() + 1;
            return Some((label.len(), start + JOINT_DELIMITER.len()));
        }
    }
    None
}

/// Parses a raw generation for `stage`. Never fails: degraded outputs come
/// back with `clean_parse = false`.
pub fn parse_output(raw: &str, stage: StageKind, vocabulary: &[String]) -> ParsedOutput {
    let text = raw.trim();
    match stage.output() {
        StageOutput::Label => {
            let (label, in_vocab) = resolve_label(text, vocabulary);
            ParsedOutput {
                clean_parse: in_vocab,
                label: Some(label),
                explanation: None,
                raw: raw.to_string(),
            }
        }
        StageOutput::Explanation => ParsedOutput {
            label: None,
            clean_parse: !text.is_empty(),
            explanation: Some(text.to_string()),
            raw: raw.to_string(),
        },
        StageOutput::LabelAndExplanation => {
            let split = split_at_vocabulary(text, vocabulary)
                .or_else(|| find_delimiter(text).map(|i| (i, i + JOINT_DELIMITER.len())));
            match split {
                Some((label_end, expl_start)) => {
                    let (label, in_vocab) = resolve_label(&text[..label_end], vocabulary);
                    let explanation = text[expl_start..].trim().to_string();
                    ParsedOutput {
                        clean_parse: in_vocab && !explanation.is_empty(),
                        label: Some(label),
                        explanation: Some(explanation),
                        raw: raw.to_string(),
                    }
                }
                None => {
                    let (label, _) = resolve_label(text, vocabulary);
                    ParsedOutput {
                        label: Some(label),
                        explanation: Some(String::new()),
                        raw: raw.to_string(),
                        clean_parse: false,
                    }
                }
            }
        }
    }
}
