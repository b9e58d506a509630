use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::backend::{default_hyper, train_and_wait, Backend, GenerationConfig, Hyper, PollPolicy};
use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{accuracy, recover_ratio, EvalPair};
use crate::pipelines::{Provenance, TrainingPair};
use crate::taskformat::{parse_output, render_input, Injected, StageKind};

/// Explanation text per instance id.
pub type ExplanationSource = BTreeMap<String, String>;

#[derive(Clone, Debug)]
pub struct InformednessOptions {
    /// Model names are `{namespace}/{source}/r_to_l`.
    pub namespace: String,
    pub hyper: Hyper,
    pub decode: GenerationConfig,
    pub batch_size: usize,
    pub poll: PollPolicy,
}

impl Default for InformednessOptions {
    fn default() -> Self {
        InformednessOptions {
            namespace: "informedness".into(),
            hyper: default_hyper(),
            decode: GenerationConfig::default(),
            batch_size: 64,
            poll: PollPolicy::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InformednessRow {
    pub source: String,
    pub accuracy: f64,
    /// Percent of the gold row's accuracy.
    pub recover_ratio: f64,
    pub is_gold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InformednessTable {
    /// Gold row first, then the other sources in name order.
    pub rows: Vec<InformednessRow>,
}

impl InformednessTable {
    pub fn render(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.source.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$} | {:>16}", "Source", "Acc (recover %)");
        let _ = writeln!(out, "{}", "-".repeat(width + 19));
        for r in &self.rows {
            let name = if r.is_gold {
                format!("{} (R*)", r.source)
            } else {
                r.source.clone()
            };
            let _ = writeln!(
                out,
                "{:<width$} | {:>16}",
                name,
                format!("{:.2} ({:.2})", r.accuracy * 100.0, r.recover_ratio)
            );
        }
        out
    }
}

/// First gold explanation of every instance that has one.
pub fn gold_source<'a>(datasets: impl IntoIterator<Item = &'a Dataset>) -> ExplanationSource {
    datasets
        .into_iter()
        .flat_map(|ds| ds.iter())
        .filter_map(|inst| {
            inst.first_explanation()
                .map(|e| (inst.id.clone(), e.to_string()))
        })
        .collect()
}

fn check_coverage(name: &str, source: &ExplanationSource, datasets: [&Dataset; 2]) -> Result<()> {
    let missing: Vec<&str> = datasets
        .iter()
        .flat_map(|ds| ds.iter())
        .filter(|inst| !source.contains_key(&inst.id))
        .map(|inst| inst.id.as_str())
        .collect();
    match missing.first() {
        None => Ok(()),
        Some(first) => Err(Error::SourceMissingIds {
            source_name: name.to_string(),
            missing: missing.len(),
            first: first.to_string(),
        }),
    }
}

fn source_accuracy(
    name: &str,
    source: &ExplanationSource,
    train: &Dataset,
    eval: &Dataset,
    backend: &dyn Backend,
    opts: &InformednessOptions,
) -> Result<f64> {
    let stage = StageKind::RtoL;
    let pairs = train
        .iter()
        .map(|inst| {
            Ok(TrainingPair {
                stage,
                input: render_input(inst, stage, Injected::explanation(&source[&inst.id]))?,
                target: inst.gold_label.clone(),
                source_id: inst.id.clone(),
                provenance: Provenance::Gold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let model = format!("{}/{name}/{}", opts.namespace, stage.slug());
    train_and_wait(backend, &model, &pairs, &opts.hyper, opts.poll)?;

    let inputs = eval
        .iter()
        .map(|inst| render_input(inst, stage, Injected::explanation(&source[&inst.id])))
        .collect::<Result<Vec<_>>>()?;
    let mut outputs = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(opts.batch_size.max(1)) {
        outputs.extend(backend.generate(&model, chunk, &opts.decode)?.outputs);
    }
    let pairs: Vec<EvalPair> = eval
        .iter()
        .zip(&outputs)
        .map(|(inst, out)| {
            let parsed = parse_output(out, stage, &inst.label_vocabulary());
            EvalPair {
                id: inst.id.clone(),
                candidate: String::new(),
                references: Vec::new(),
                gold_label: inst.gold_label.clone(),
                predicted_label: parsed.label.unwrap_or_default(),
                clean_parse: parsed.clean_parse,
            }
        })
        .collect();
    accuracy(&pairs)
}

/// Trains one label-from-explanation model per source on `train` and scores
/// it on `eval`. Each source must cover the ids of both datasets; `gold`
/// names the reference source.
pub fn label_informedness(
    train: &Dataset,
    eval: &Dataset,
    sources: &BTreeMap<String, ExplanationSource>,
    gold: &str,
    backend: &dyn Backend,
    opts: &InformednessOptions,
) -> Result<InformednessTable> {
    let gold_map = sources.get(gold).ok_or_else(|| {
        Error::InvalidInput(format!("gold source `{gold}` not among the sources"))
    })?;
    for (name, source) in sources {
        check_coverage(name, source, [train, eval])?;
    }
    let gold_acc = source_accuracy(gold, gold_map, train, eval, backend, opts)?;
    let mut rows = vec![InformednessRow {
        source: gold.to_string(),
        accuracy: gold_acc,
        recover_ratio: recover_ratio(gold_acc, gold_acc)?,
        is_gold: true,
    }];
    for (name, source) in sources.iter().filter(|(n, _)| n.as_str() != gold) {
        let acc = source_accuracy(name, source, train, eval, backend, opts)?;
        rows.push(InformednessRow {
            source: name.clone(),
            accuracy: acc,
            recover_ratio: recover_ratio(acc, gold_acc)?,
            is_gold: false,
        });
    }
    Ok(InformednessTable { rows })
}
