use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Provenance, StructureKind, StructureSpec, TrainingPair};
use crate::backend::{Backend, GenerationConfig, Ledger, LedgerEntry, Phase, SEMI_LABELING_STAGE};
use crate::corpus::{DatasetView, Instance};
use crate::error::{Error, Result};
use crate::taskformat::{render_input, render_target, Injected, StageKind};

/// Generated explanations for training instances, by id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemiLabels {
    pub explanations: BTreeMap<String, String>,
    /// Ids whose generation failed; pass the value back to `semi_label` to
    /// retry just these.
    pub failed: Vec<String>,
}

/// What semi-labeling needs: a backend serving a trained explainer.
pub struct SemiLabelContext<'a> {
    pub backend: &'a dyn Backend,
    pub explainer_model: String,
    pub decode: GenerationConfig,
    pub batch_size: usize,
    pub ledger: &'a mut Ledger,
}

/// Generates an explanation for every instance of the base dataset,
/// explained or not. Instances already present in `resume` are kept as they
/// are. One `semi_labeling` ledger entry is recorded.
pub fn semi_label(
    view: &DatasetView<'_>,
    ctx: &mut SemiLabelContext<'_>,
    resume: Option<&SemiLabels>,
) -> Result<SemiLabels> {
    let mut out = SemiLabels {
        explanations: resume.map(|r| r.explanations.clone()).unwrap_or_default(),
        failed: Vec::new(),
    };
    let todo: Vec<&Instance> = view
        .base()
        .iter()
        .filter(|inst| !out.explanations.contains_key(&inst.id))
        .collect();
    let inputs = todo
        .iter()
        .map(|inst| render_input(inst, StageKind::EtpExplainer, Injected::default()))
        .collect::<Result<Vec<_>>>()?;

    let mut elapsed = Duration::ZERO;
    let batch_size = ctx.batch_size.max(1);
    for (chunk_ids, chunk_inputs) in todo.chunks(batch_size).zip(inputs.chunks(batch_size)) {
        match ctx
            .backend
            .generate(&ctx.explainer_model, chunk_inputs, &ctx.decode)
        {
            Ok(generation) => {
                elapsed += generation.elapsed;
                for (inst, text) in chunk_ids.iter().zip(generation.outputs) {
                    out.explanations.insert(inst.id.clone(), text);
                }
            }
            Err(e) => {
                log::warn!("semi-labeling batch failed: {e}");
                out.failed
                    .extend(chunk_ids.iter().map(|inst| inst.id.clone()));
            }
        }
    }
    ctx.ledger.record_entry(LedgerEntry {
        stage: SEMI_LABELING_STAGE.to_string(),
        phase: Phase::SemiLabel,
        split: Some(view.base().split),
        calls: inputs.len() as u64,
        wall_time_ns: elapsed.as_nanos() as u64,
        pairs_used: 0,
    });
    Ok(out)
}

fn gold_pair(inst: &Instance, stage: StageKind, injected: Injected<'_>) -> Result<TrainingPair> {
    Ok(TrainingPair {
        stage,
        input: render_input(inst, stage, injected)?,
        target: render_target(inst, stage)?,
        source_id: inst.id.clone(),
        provenance: Provenance::Gold,
    })
}

/// Pairs of one stage of `structure`. The EtP (SL) predictor needs
/// `semi_labels` covering every base instance.
pub fn compile_stage(
    view: &DatasetView<'_>,
    structure: StructureKind,
    stage: StageKind,
    semi_labels: Option<&SemiLabels>,
) -> Result<Vec<TrainingPair>> {
    if !structure.stages().contains(&stage) {
        return Err(Error::InvalidInput(format!(
            "stage {stage} is not part of structure {structure}"
        )));
    }
    let explained = || view.iter().filter(|(_, e)| *e).map(|(inst, _)| inst);
    match (structure, stage) {
        (StructureKind::EtPSl, StageKind::EtpPredictor) => {
            let labels = semi_labels.ok_or(Error::BackendRequired("etp_sl"))?;
            let missing: Vec<&str> = view
                .base()
                .iter()
                .filter(|i| !labels.explanations.contains_key(&i.id))
                .map(|i| i.id.as_str())
                .collect();
            if let Some(first) = missing.first() {
                return Err(Error::InvalidInput(format!(
                    "{} instances lack a generated explanation (first: {first})",
                    missing.len()
                )));
            }
            view.base()
                .iter()
                .map(|inst| {
                    let expl = &labels.explanations[&inst.id];
                    Ok(TrainingPair {
                        stage,
                        input: render_input(inst, stage, Injected::explanation(expl))?,
                        target: render_target(inst, stage)?,
                        source_id: inst.id.clone(),
                        provenance: Provenance::SemiLabeled,
                    })
                })
                .collect()
        }
        (_, StageKind::PtePredictor) => view
            .base()
            .iter()
            .map(|inst| gold_pair(inst, stage, Injected::default()))
            .collect(),
        (_, StageKind::PteExplainer) => explained()
            .map(|inst| gold_pair(inst, stage, Injected::label(&inst.gold_label)))
            .collect(),
        (_, StageKind::EtpPredictor) => explained()
            .map(|inst| {
                let expl = inst.first_explanation().unwrap_or_default();
                gold_pair(inst, stage, Injected::explanation(expl))
            })
            .collect(),
        (_, StageKind::JointStage | StageKind::EtpExplainer) => explained()
            .map(|inst| gold_pair(inst, stage, Injected::default()))
            .collect(),
        (_, StageKind::RtoL) => unreachable!("no structure contains r_to_l"),
    }
}

/// Training pairs of every stage of one structure, in stage order.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledPairs {
    pub structure: StructureKind,
    pub stages: Vec<(StageKind, Vec<TrainingPair>)>,
    pub semi_labels: Option<SemiLabels>,
}

#[derive(Serialize, Deserialize)]
struct ExportRecord<'a> {
    stage: StageKind,
    input: &'a str,
    target: &'a str,
    provenance: Provenance,
}

impl CompiledPairs {
    pub fn pairs(&self, stage: StageKind) -> &[TrainingPair] {
        self.stages
            .iter()
            .find(|(s, _)| *s == stage)
            .map(|(_, p)| p.as_slice())
            .unwrap_or(&[])
    }

    pub fn total(&self) -> usize {
        self.stages.iter().map(|(_, p)| p.len()).sum()
    }

    /// `{stage, input, target, provenance}` per line.
    pub fn to_jsonl(pairs: &[TrainingPair]) -> String {
        let mut out = String::new();
        for p in pairs {
            let rec = ExportRecord {
                stage: p.stage,
                input: &p.input,
                target: &p.target,
                provenance: p.provenance,
            };
            out.push_str(&serde_json::to_string(&rec).expect("pair serializes"));
            out.push('\n');
        }
        out
    }

    /// Writes `{dir}/{stage}.jsonl` per stage and returns the paths.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = Vec::new();
        for (stage, pairs) in &self.stages {
            let path = dir.join(format!("{}.jsonl", stage.slug()));
            std::fs::write(&path, Self::to_jsonl(pairs)).map_err(|e| Error::io(&path, e))?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Reads pairs exported by [`CompiledPairs::to_jsonl`].
pub fn read_pairs_jsonl(text: &str) -> Result<Vec<TrainingPair>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Owned {
                stage: StageKind,
                input: String,
                target: String,
                provenance: Provenance,
            }
            let rec: Owned = serde_json::from_str(line)
                .map_err(|e| Error::InvalidInput(format!("line {}: {e}", i + 1)))?;
            Ok(TrainingPair {
                stage: rec.stage,
                input: rec.input,
                target: rec.target,
                source_id: format!("line-{}", i + 1),
                provenance: rec.provenance,
            })
        })
        .collect()
}

/// Compiles every stage of `spec`. EtP (SL) semi-labels the base dataset
/// through `semi`, which must then be given.
pub fn compile_training_pairs(
    view: &DatasetView<'_>,
    spec: &StructureSpec,
    semi: Option<&mut SemiLabelContext<'_>>,
) -> Result<CompiledPairs> {
    let semi_labels = if spec.kind == StructureKind::EtPSl {
        let ctx = semi.ok_or(Error::BackendRequired("etp_sl"))?;
        Some(semi_label(view, ctx, None)?)
    } else {
        None
    };
    let stages = spec
        .stages
        .iter()
        .map(|&stage| {
            Ok((
                stage,
                compile_stage(view, spec.kind, stage, semi_labels.as_ref())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompiledPairs {
        structure: spec.kind,
        stages,
        semi_labels,
    })
}
