use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ModelNames, StructureKind, StructureSpec};
use crate::backend::{Backend, GenerationConfig, Ledger, LedgerEntry, Phase};
use crate::corpus::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::metrics::{EvalPair, ReferencePolicy};
use crate::taskformat::{normalize_label, parse_output, render_input, Injected, StageKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceOptions {
    pub decode: GenerationConfig,
    /// Inputs per backend call; a failed call fails only its own instances.
    pub batch_size: usize,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            decode: GenerationConfig::default(),
            batch_size: 64,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub id: String,
    pub predicted_label: String,
    pub generated_explanation: String,
    pub per_stage_input: BTreeMap<StageKind, String>,
    pub per_stage_raw: BTreeMap<StageKind, String>,
    pub clean_parse: bool,
    /// Set when a backend call for this instance failed; later stages were
    /// skipped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Runner<'a> {
    backend: &'a dyn Backend,
    models: &'a ModelNames,
    opts: &'a InferenceOptions,
    ledger: &'a mut Ledger,
    ds: &'a Dataset,
    results: Vec<InferenceResult>,
}

impl Runner<'_> {
    /// Runs `stage` for every still-healthy instance, with inputs from
    /// `input_for`. Returns the raw output per instance (None if failed).
    fn stage(
        &mut self,
        stage: StageKind,
        input_for: impl Fn(&Instance, &InferenceResult) -> Result<String>,
    ) -> Result<Vec<Option<String>>> {
        let mut todo: Vec<(usize, String)> = Vec::new();
        for (i, (inst, res)) in self.ds.iter().zip(&self.results).enumerate() {
            if res.error.is_none() {
                todo.push((i, input_for(inst, res)?));
            }
        }
        let model = self.models.model(stage);
        let mut raw = vec![None; self.results.len()];
        let mut elapsed = Duration::ZERO;
        for chunk in todo.chunks(self.opts.batch_size.max(1)) {
            let inputs: Vec<String> = chunk.iter().map(|(_, s)| s.clone()).collect();
            let outcome = self.backend.generate(&model, &inputs, &self.opts.decode);
            for (i, input) in chunk {
                self.results[*i]
                    .per_stage_input
                    .insert(stage, input.clone());
            }
            match outcome {
                Ok(generation) => {
                    elapsed += generation.elapsed;
                    if !generation.misses.is_empty() {
                        log::debug!("{model}: {} misses", generation.misses.len());
                    }
                    for ((i, _), out) in chunk.iter().zip(generation.outputs) {
                        self.results[*i].per_stage_raw.insert(stage, out.clone());
                        raw[*i] = Some(out);
                    }
                }
                Err(e) => {
                    log::warn!("{model}: {e}");
                    for (i, _) in chunk {
                        let r = &mut self.results[*i];
                        r.error = Some(e.to_string());
                        r.clean_parse = false;
                    }
                }
            }
        }
        self.ledger.record_entry(LedgerEntry {
            stage: stage.slug().to_string(),
            phase: Phase::Inference,
            split: Some(self.ds.split),
            calls: todo.len() as u64,
            wall_time_ns: elapsed.as_nanos() as u64,
            pairs_used: 0,
        });
        Ok(raw)
    }
}

/// Runs the stages of `spec` over `ds` in inference order and parses their
/// outputs. The EtP predictor sees the explainer's raw output, the PtE
/// explainer the predictor's parsed label. Backend failures are recorded per
/// instance.
pub fn run_inference(
    ds: &Dataset,
    spec: &StructureSpec,
    backend: &dyn Backend,
    models: &ModelNames,
    opts: &InferenceOptions,
    ledger: &mut Ledger,
) -> Result<Vec<InferenceResult>> {
    opts.decode.validate()?;
    let results = ds
        .iter()
        .map(|inst| InferenceResult {
            id: inst.id.clone(),
            clean_parse: true,
            ..Default::default()
        })
        .collect();
    let mut run = Runner {
        backend,
        models,
        opts,
        ledger,
        ds,
        results,
    };
    let vocabs: Vec<Vec<String>> = ds.iter().map(Instance::label_vocabulary).collect();
    let no_injection = |inst: &Instance, _: &InferenceResult| {
        render_input(inst, StageKind::PtePredictor, Injected::default())
    };

    match spec.kind {
        StructureKind::Joint => {
            let raw = run.stage(StageKind::JointStage, |inst, _| {
                render_input(inst, StageKind::JointStage, Injected::default())
            })?;
            for (i, out) in raw.iter().enumerate() {
                let Some(out) = out else { continue };
                let parsed = parse_output(out, StageKind::JointStage, &vocabs[i]);
                let r = &mut run.results[i];
                r.predicted_label = parsed.label.unwrap_or_default();
                r.generated_explanation = parsed.explanation.unwrap_or_default();
                r.clean_parse &= parsed.clean_parse;
            }
        }
        StructureKind::EtP | StructureKind::EtPSl => {
            let raw = run.stage(StageKind::EtpExplainer, |inst, _| {
                render_input(inst, StageKind::EtpExplainer, Injected::default())
            })?;
            for (i, out) in raw.iter().enumerate() {
                let Some(out) = out else { continue };
                let parsed = parse_output(out, StageKind::EtpExplainer, &vocabs[i]);
                let r = &mut run.results[i];
                r.generated_explanation = parsed.explanation.unwrap_or_default();
                r.clean_parse &= parsed.clean_parse;
            }
            let raw = run.stage(StageKind::EtpPredictor, |inst, res| {
                let expl = &res.per_stage_raw[&StageKind::EtpExplainer];
                render_input(inst, StageKind::EtpPredictor, Injected::explanation(expl))
            })?;
            for (i, out) in raw.iter().enumerate() {
                let Some(out) = out else { continue };
                let parsed = parse_output(out, StageKind::EtpPredictor, &vocabs[i]);
                let r = &mut run.results[i];
                r.predicted_label = parsed.label.unwrap_or_default();
                r.clean_parse &= parsed.clean_parse;
            }
        }
        StructureKind::PtE => {
            let raw = run.stage(StageKind::PtePredictor, no_injection)?;
            for (i, out) in raw.iter().enumerate() {
                let Some(out) = out else { continue };
                let parsed = parse_output(out, StageKind::PtePredictor, &vocabs[i]);
                let r = &mut run.results[i];
                r.predicted_label = parsed.label.unwrap_or_default();
                r.clean_parse &= parsed.clean_parse;
            }
            let raw = run.stage(StageKind::PteExplainer, |inst, res| {
                render_input(
                    inst,
                    StageKind::PteExplainer,
                    Injected::label(&res.predicted_label),
                )
            })?;
            for (i, out) in raw.iter().enumerate() {
                let Some(out) = out else { continue };
                let parsed = parse_output(out, StageKind::PteExplainer, &vocabs[i]);
                let r = &mut run.results[i];
                r.generated_explanation = parsed.explanation.unwrap_or_default();
                r.clean_parse &= parsed.clean_parse;
            }
        }
    }
    Ok(run.results)
}

/// Pairs inference results with gold data for scoring. Failed instances
/// count as wrong with an empty explanation.
pub fn to_eval_pairs(
    ds: &Dataset,
    results: &[InferenceResult],
    policy: ReferencePolicy,
) -> Result<Vec<EvalPair>> {
    results
        .iter()
        .map(|r| {
            let inst = ds.get(&r.id).ok_or_else(|| {
                Error::InvalidInput(format!("result for unknown instance `{}`", r.id))
            })?;
            Ok(EvalPair {
                id: r.id.clone(),
                candidate: r.generated_explanation.clone(),
                references: policy.select(&inst.gold_explanations),
                gold_label: inst.gold_label.clone(),
                predicted_label: r.predicted_label.clone(),
                clean_parse: r.clean_parse && r.error.is_none(),
            })
        })
        .collect()
}

/// Explains `inst` as if its label were `label`, using the PtE explainer.
pub fn generate_conditioned(
    inst: &Instance,
    label: &str,
    backend: &dyn Backend,
    model: &str,
    decode: &GenerationConfig,
) -> Result<String> {
    let key = normalize_label(label);
    let resolved = inst
        .label_vocabulary()
        .into_iter()
        .find(|v| normalize_label(v) == key)
        .ok_or_else(|| Error::LabelOutOfVocabulary {
            id: inst.id.clone(),
            label: label.to_string(),
        })?;
    let input = render_input(inst, StageKind::PteExplainer, Injected::label(&resolved))?;
    let generation = backend.generate(model, &[input], decode)?;
    let raw = generation.outputs.into_iter().next().unwrap_or_default();
    Ok(raw.trim().to_string())
}
