//! Canonical data model for NLI and commonsense-QA instances, source-file
//! ingestion, explanation-budget sampling and dataset statistics.

mod budget;
mod ingest;
mod stats;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use budget::{sample_budget, DatasetView};
pub use ingest::{
    ingest, parse_canonical_jsonl, read_canonical, to_canonical_jsonl, write_canonical,
    ChoicesMapping, CoseMapping, IngestReport, RowError, SourceFormat,
};
pub use stats::{compute_stats, whitespace_tokens, DatasetStats};

/// Label set of the NLI task, in canonical order.
pub const NLI_LABELS: [&str; 3] = ["entailment", "neutral", "contradiction"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Nli,
    Cqa,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Nli => "nli",
            Task::Cqa => "cqa",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "validation" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidInput(format!("unknown split `{other}`"))),
        }
    }
}

/// Task-specific input fields of an instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TaskInput {
    Nli {
        premise: String,
        hypothesis: String,
    },
    Cqa {
        question: String,
        choices: Vec<String>,
    },
}

/// One task example with its gold label and zero or more gold explanations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub input: TaskInput,
    pub gold_label: String,
    pub gold_explanations: Vec<String>,
}

impl Instance {
    pub fn nli(
        id: impl Into<String>,
        premise: impl Into<String>,
        hypothesis: impl Into<String>,
        label: impl Into<String>,
        explanations: Vec<String>,
    ) -> Self {
        Instance {
            id: id.into(),
            input: TaskInput::Nli {
                premise: premise.into(),
                hypothesis: hypothesis.into(),
            },
            gold_label: label.into(),
            gold_explanations: explanations,
        }
    }

    pub fn cqa(
        id: impl Into<String>,
        question: impl Into<String>,
        choices: Vec<String>,
        answer: impl Into<String>,
        explanations: Vec<String>,
    ) -> Self {
        Instance {
            id: id.into(),
            input: TaskInput::Cqa {
                question: question.into(),
                choices,
            },
            gold_label: answer.into(),
            gold_explanations: explanations,
        }
    }

    pub fn task(&self) -> Task {
        match self.input {
            TaskInput::Nli { .. } => Task::Nli,
            TaskInput::Cqa { .. } => Task::Cqa,
        }
    }

    /// Labels a prediction for this instance may take: the three NLI classes,
    /// or the instance's own answer choices for CQA.
    pub fn label_vocabulary(&self) -> Vec<String> {
        match &self.input {
            TaskInput::Nli { .. } => NLI_LABELS.iter().map(|s| s.to_string()).collect(),
            TaskInput::Cqa { choices, .. } => choices.clone(),
        }
    }

    pub fn first_explanation(&self) -> Option<&str> {
        self.gold_explanations.first().map(String::as_str)
    }

    pub fn has_explanation(&self) -> bool {
        !self.gold_explanations.is_empty()
    }

    pub fn validate(&self, split: Split) -> Result<()> {
        let bad = |message: String| Error::InvalidInstance {
            id: self.id.clone(),
            message,
        };
        if self.id.is_empty() {
            return Err(bad("empty id".into()));
        }
        if self.gold_label.trim().is_empty() {
            return Err(bad("empty gold label".into()));
        }
        match &self.input {
            TaskInput::Nli {
                premise,
                hypothesis,
            } => {
                if premise.trim().is_empty() || hypothesis.trim().is_empty() {
                    return Err(bad("NLI instance needs a premise and a hypothesis".into()));
                }
                if !NLI_LABELS.contains(&self.gold_label.as_str()) {
                    return Err(bad(format!("unknown NLI label `{}`", self.gold_label)));
                }
            }
            TaskInput::Cqa { question, choices } => {
                if question.trim().is_empty() {
                    return Err(bad("CQA instance needs a question".into()));
                }
                if choices.len() != 3 && choices.len() != 5 {
                    return Err(bad(format!(
                        "CQA instance needs 3 or 5 choices, got {}",
                        choices.len()
                    )));
                }
                if !choices.iter().any(|c| c == &self.gold_label) {
                    return Err(bad(format!(
                        "answer `{}` is not among the choices",
                        self.gold_label
                    )));
                }
            }
        }
        if self.gold_explanations.len() > 3 {
            return Err(bad("more than 3 gold explanations".into()));
        }
        if split == Split::Train && self.gold_explanations.len() > 1 {
            return Err(bad(
                "training instances carry at most one explanation".into()
            ));
        }
        if self.gold_explanations.iter().any(|e| e.trim().is_empty()) {
            return Err(bad("empty gold explanation".into()));
        }
        Ok(())
    }
}

/// An ordered collection of instances from one split.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub split: Split,
    instances: Vec<Instance>,
    index: HashMap<String, usize>,
}

impl Dataset {
    /// Builds a dataset, validating every instance and id uniqueness.
    pub fn new(name: impl Into<String>, split: Split, instances: Vec<Instance>) -> Result<Self> {
        let mut index = HashMap::with_capacity(instances.len());
        for (i, inst) in instances.iter().enumerate() {
            inst.validate(split)?;
            if index.insert(inst.id.clone(), i).is_some() {
                return Err(Error::InvalidInstance {
                    id: inst.id.clone(),
                    message: "duplicate id".into(),
                });
            }
        }
        Ok(Dataset {
            name: name.into(),
            split,
            instances,
            index,
        })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Instance> {
        self.instances.iter()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Instance> {
        self.index.get(id).map(|&i| &self.instances[i])
    }

    pub fn task(&self) -> Option<Task> {
        self.instances.first().map(Instance::task)
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Instance;
    type IntoIter = std::slice::Iter<'a, Instance>;

    fn into_iter(self) -> Self::IntoIter {
        self.instances.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nli(id: &str, label: &str) -> Instance {
        Instance::nli(id, "A man walks.", "A person moves.", label, vec![])
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = Dataset::new(
            "d",
            Split::Dev,
            vec![nli("a", "neutral"), nli("a", "neutral")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn rejects_unknown_nli_label() {
        assert!(nli("a", "dog").validate(Split::Dev).is_err());
    }

    #[test]
    fn cqa_answer_must_be_a_choice() {
        let choices = vec!["a".to_string(), "b".into(), "c".into()];
        let ok = Instance::cqa("q", "Which?", choices.clone(), "b", vec![]);
        assert!(ok.validate(Split::Dev).is_ok());
        let bad = Instance::cqa("q", "Which?", choices, "z", vec![]);
        assert!(bad.validate(Split::Dev).is_err());
    }

    #[test]
    fn cqa_needs_three_or_five_choices() {
        let four = vec!["a".to_string(), "b".into(), "c".into(), "d".into()];
        let inst = Instance::cqa("q", "Which?", four, "a", vec![]);
        assert!(inst.validate(Split::Dev).is_err());
    }

    #[test]
    fn training_instances_carry_one_explanation() {
        let inst = Instance::nli("a", "p", "h", "neutral", vec!["x".into(), "y".into()]);
        assert!(inst.validate(Split::Train).is_err());
        assert!(inst.validate(Split::Dev).is_ok());
    }

    #[test]
    fn lookup_by_id() {
        let ds = Dataset::new(
            "d",
            Split::Dev,
            vec![nli("a", "neutral"), nli("b", "entailment")],
        )
        .unwrap();
        assert_eq!(ds.get("b").unwrap().gold_label, "entailment");
        assert!(ds.get("c").is_none());
    }
}
