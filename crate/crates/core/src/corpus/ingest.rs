use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Instance, Split, Task, TaskInput};
use crate::error::{Error, Result};
use crate::kv;

/// Source layouts accepted by [`ingest`].
#[derive(Clone, Debug, PartialEq)]
pub enum SourceFormat {
    /// e-SNLI CSV: `gold_label, Sentence1, Sentence2, Explanation_1[, Explanation_2, Explanation_3]`,
    /// optionally with a `pairID` column used as the instance id.
    EsnliCsv,
    /// CoS-E CSV with configurable column names.
    CoseCsv(CoseMapping),
    /// One canonical JSON record per line.
    CanonicalJsonl,
}

/// How answer choices are laid out in a CoS-E CSV.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChoicesMapping {
    /// One column per choice, in order.
    Columns(Vec<String>),
    /// A single column holding all choices joined by `separator`.
    Joined { column: String, separator: String },
}

/// Column names of a CoS-E CSV.
///
/// Loaded from a `key = value` file with keys `id`, `question`, `answer`,
/// `explanation`, and either `choices = col0,col1,...` or
/// `choices_column` + `choices_separator`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoseMapping {
    pub id: Option<String>,
    pub question: String,
    pub choices: ChoicesMapping,
    pub answer: String,
    pub explanation: String,
}

impl Default for CoseMapping {
    fn default() -> Self {
        CoseMapping {
            id: Some("id".into()),
            question: "question".into(),
            choices: ChoicesMapping::Joined {
                column: "choices".into(),
                separator: "|".into(),
            },
            answer: "answer".into(),
            explanation: "explanation".into(),
        }
    }
}

impl CoseMapping {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut mapping = CoseMapping::default();
        let mut joined_column = None;
        let mut separator = None;
        for (key, value) in kv::parse(text)? {
            match key.as_str() {
                "id" => mapping.id = (!value.is_empty()).then_some(value),
                "question" => mapping.question = value,
                "answer" => mapping.answer = value,
                "explanation" => mapping.explanation = value,
                "choices" => {
                    let cols: Vec<String> = value
                        .split(',')
                        .map(|c| c.trim().to_string())
                        .filter(|c| !c.is_empty())
                        .collect();
                    if cols.is_empty() {
                        return Err("`choices` lists no columns".into());
                    }
                    mapping.choices = ChoicesMapping::Columns(cols);
                }
                "choices_column" => joined_column = Some(value),
                "choices_separator" => separator = Some(value),
                other => return Err(format!("unknown mapping key `{other}`")),
            }
        }
        if joined_column.is_some() || separator.is_some() {
            if matches!(mapping.choices, ChoicesMapping::Columns(_)) {
                return Err("use either `choices` or `choices_column`, not both".into());
            }
            let default_sep = "|".to_string();
            mapping.choices = ChoicesMapping::Joined {
                column: joined_column.unwrap_or_else(|| "choices".into()),
                separator: separator.unwrap_or(default_sep),
            };
        }
        Ok(mapping)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|m| Error::format(path, m))
    }
}

/// A source row that could not become an instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RowError {
    /// 1-based record number (header excluded for CSV, line number for JSONL).
    pub row: usize,
    pub message: String,
}

#[derive(Debug)]
pub struct IngestReport {
    pub dataset: Dataset,
    pub rejected: Vec<RowError>,
}

/// Reads a source file into a [`Dataset`].
///
/// Row-level problems (empty or unknown label, answer not among the choices,
/// duplicate id, malformed record) reject that row and are collected in the
/// report; only file-level problems fail the whole call.
pub fn ingest(path: &Path, format: &SourceFormat, split: Split) -> Result<IngestReport> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let (rows, mut rejected) = match format {
        SourceFormat::EsnliCsv => read_esnli(path, split)?,
        SourceFormat::CoseCsv(mapping) => read_cose(path, mapping, split)?,
        SourceFormat::CanonicalJsonl => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let mut rows = Vec::new();
            let mut rejected = Vec::new();
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CanonicalRecord>(line)
                    .map_err(|e| e.to_string())
                    .and_then(CanonicalRecord::into_instance)
                {
                    Ok(inst) => rows.push((i + 1, inst)),
                    Err(message) => rejected.push(RowError {
                        row: i + 1,
                        message,
                    }),
                }
            }
            (rows, rejected)
        }
    };

    let mut seen = HashSet::new();
    let mut instances = Vec::with_capacity(rows.len());
    for (row, inst) in rows {
        if let Err(e) = inst.validate(split) {
            rejected.push(RowError {
                row,
                message: e.to_string(),
            });
            continue;
        }
        if !seen.insert(inst.id.clone()) {
            rejected.push(RowError {
                row,
                message: format!("duplicate id `{}`", inst.id),
            });
            continue;
        }
        instances.push(inst);
    }
    rejected.sort_by_key(|r| r.row);
    let dataset = Dataset::new(name, split, instances)?;
    Ok(IngestReport { dataset, rejected })
}

type Rows = (Vec<(usize, Instance)>, Vec<RowError>);

fn open_csv(path: &Path) -> Result<(csv::Reader<fs::File>, csv::StringRecord)> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    Ok((reader, headers))
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn require_column(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    column(headers, name).ok_or_else(|| Error::format(path, format!("missing column `{name}`")))
}

fn field(record: &csv::StringRecord, idx: usize) -> String {
    record.get(idx).unwrap_or("").trim().to_string()
}

fn read_esnli(path: &Path, split: Split) -> Result<Rows> {
    let (mut reader, headers) = open_csv(path)?;
    let label_col = require_column(path, &headers, "gold_label")?;
    let premise_col = require_column(path, &headers, "Sentence1")?;
    let hypothesis_col = require_column(path, &headers, "Sentence2")?;
    let id_col = column(&headers, "pairID");
    // Training rows carry a single explanation.
    let max_expl = if split == Split::Train { 1 } else { 3 };
    let expl_cols: Vec<usize> = (1..=max_expl)
        .filter_map(|k| column(&headers, &format!("Explanation_{k}")))
        .collect();

    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                rejected.push(RowError {
                    row,
                    message: format!("malformed row: {e}"),
                });
                continue;
            }
        };
        let label = field(&record, label_col).to_lowercase();
        if label.is_empty() {
            rejected.push(RowError {
                row,
                message: "empty gold_label".into(),
            });
            continue;
        }
        let id = id_col
            .map(|c| field(&record, c))
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| format!("{split}-{row}"));
        let explanations = expl_cols
            .iter()
            .map(|&c| field(&record, c))
            .filter(|e| !e.is_empty())
            .collect();
        rows.push((
            row,
            Instance::nli(
                id,
                field(&record, premise_col),
                field(&record, hypothesis_col),
                label,
                explanations,
            ),
        ));
    }
    Ok((rows, rejected))
}

fn read_cose(path: &Path, mapping: &CoseMapping, split: Split) -> Result<Rows> {
    let (mut reader, headers) = open_csv(path)?;
    let question_col = require_column(path, &headers, &mapping.question)?;
    let answer_col = require_column(path, &headers, &mapping.answer)?;
    let expl_col = require_column(path, &headers, &mapping.explanation)?;
    let id_col = match &mapping.id {
        Some(name) => column(&headers, name),
        None => None,
    };
    enum Choices {
        Columns(Vec<usize>),
        Joined(usize, String),
    }
    let choices = match &mapping.choices {
        ChoicesMapping::Columns(cols) => Choices::Columns(
            cols.iter()
                .map(|c| require_column(path, &headers, c))
                .collect::<Result<_>>()?,
        ),
        ChoicesMapping::Joined { column, separator } => {
            Choices::Joined(require_column(path, &headers, column)?, separator.clone())
        }
    };

    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                rejected.push(RowError {
                    row,
                    message: format!("malformed row: {e}"),
                });
                continue;
            }
        };
        let answer = field(&record, answer_col);
        if answer.is_empty() {
            rejected.push(RowError {
                row,
                message: "empty answer".into(),
            });
            continue;
        }
        let choice_list: Vec<String> = match &choices {
            Choices::Columns(cols) => cols
                .iter()
                .map(|&c| field(&record, c))
                .filter(|c| !c.is_empty())
                .collect(),
            Choices::Joined(col, sep) => field(&record, *col)
                .split(sep.as_str())
                .map(|c| c.trim().to_string())
                .filter(|c| !c.is_empty())
                .collect(),
        };
        let id = id_col
            .map(|c| field(&record, c))
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| format!("{split}-{row}"));
        let explanation = field(&record, expl_col);
        let explanations = if explanation.is_empty() {
            vec![]
        } else {
            vec![explanation]
        };
        rows.push((
            row,
            Instance::cqa(
                id,
                field(&record, question_col),
                choice_list,
                answer,
                explanations,
            ),
        ));
    }
    Ok((rows, rejected))
}

/// Canonical line record; field names are the on-disk contract.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalRecord {
    id: String,
    task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    premise: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hypothesis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    choices: Option<Vec<String>>,
    label: String,
    #[serde(default)]
    explanations: Vec<String>,
}

impl CanonicalRecord {
    fn from_instance(inst: &Instance) -> Self {
        let (premise, hypothesis, question, choices) = match &inst.input {
            TaskInput::Nli {
                premise,
                hypothesis,
            } => (Some(premise.clone()), Some(hypothesis.clone()), None, None),
            TaskInput::Cqa { question, choices } => {
                (None, None, Some(question.clone()), Some(choices.clone()))
            }
        };
        CanonicalRecord {
            id: inst.id.clone(),
            task: inst.task(),
            premise,
            hypothesis,
            question,
            choices,
            label: inst.gold_label.clone(),
            explanations: inst.gold_explanations.clone(),
        }
    }

    fn into_instance(self) -> std::result::Result<Instance, String> {
        let input = match self.task {
            Task::Nli => {
                if self.question.is_some() || self.choices.is_some() {
                    return Err("NLI record must not carry question/choices".into());
                }
                TaskInput::Nli {
                    premise: self.premise.ok_or("NLI record without premise")?,
                    hypothesis: self.hypothesis.ok_or("NLI record without hypothesis")?,
                }
            }
            Task::Cqa => {
                if self.premise.is_some() || self.hypothesis.is_some() {
                    return Err("CQA record must not carry premise/hypothesis".into());
                }
                TaskInput::Cqa {
                    question: self.question.ok_or("CQA record without question")?,
                    choices: self.choices.ok_or("CQA record without choices")?,
                }
            }
        };
        Ok(Instance {
            id: self.id,
            input,
            gold_label: self.label,
            gold_explanations: self.explanations,
        })
    }
}

/// Serializes a dataset as canonical JSONL (one record per line, trailing newline).
pub fn to_canonical_jsonl(ds: &Dataset) -> String {
    let mut out = String::new();
    for inst in ds {
        let line = serde_json::to_string(&CanonicalRecord::from_instance(inst))
            .expect("canonical record serializes");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn write_canonical(ds: &Dataset, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, to_canonical_jsonl(ds)).map_err(|e| Error::io(path, e))
}

/// Parses canonical JSONL strictly: any bad record is an error.
pub fn parse_canonical_jsonl(name: &str, split: Split, text: &str) -> Result<Dataset> {
    let mut instances = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: CanonicalRecord = serde_json::from_str(line)
            .map_err(|e| Error::InvalidInput(format!("{name}: line {}: {e}", i + 1)))?;
        let inst = record
            .into_instance()
            .map_err(|m| Error::InvalidInput(format!("{name}: line {}: {m}", i + 1)))?;
        instances.push(inst);
    }
    Dataset::new(name, split, instances)
}

/// Reads a canonical dataset, failing on any rejected row.
pub fn read_canonical(path: &Path, split: Split) -> Result<Dataset> {
    let report = ingest(path, &SourceFormat::CanonicalJsonl, split)?;
    if let Some(first) = report.rejected.first() {
        return Err(Error::format(
            path,
            format!(
                "{} rejected record(s); line {}: {}",
                report.rejected.len(),
                first.row,
                first.message
            ),
        ));
    }
    Ok(report.dataset)
}
