//! Experiment grids over structures and explanation budgets, the
//! label-informedness protocol, and training-cost comparisons.

mod efficiency;
mod informedness;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::backend::{
    default_hyper, train_and_wait, Backend, GenerationConfig, Hyper, Ledger, Phase, PollPolicy,
};
use crate::corpus::{sample_budget, Dataset, Split, Task};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, render_table, MetricReport, ReferencePolicy};
use crate::pipelines::{
    compile_stage, run_inference, semi_label, to_eval_pairs, CompiledPairs, InferenceOptions,
    ModelNames, SemiLabelContext, StructureKind, StructureSpec, TrainingPair,
};
use crate::taskformat::StageKind;

pub use efficiency::{efficiency_report, EfficiencyCheck, EfficiencyReport, EfficiencyRow};
pub use informedness::{
    gold_source, label_informedness, ExplanationSource, InformednessOptions, InformednessRow,
    InformednessTable,
};

fn default_structures() -> Vec<StructureKind> {
    StructureKind::ALL.to_vec()
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_repetitions() -> u32 {
    3
}

fn default_batch_size() -> usize {
    64
}

fn default_jobs() -> usize {
    1
}

fn default_poll_ms() -> u64 {
    5000
}

/// A grid of cells (structure x budget), each run `repetitions` times.
///
/// Dataset paths are resolved against the plan file's directory when
/// relative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub dataset: String,
    pub train: PathBuf,
    pub dev: PathBuf,
    /// Ignored for CQA datasets, which are evaluated on dev only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    /// Percent budgets; by default [30, 100] for CoS-E style datasets and
    /// [10, 30, 100] otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<Vec<f64>>,
    #[serde(default = "default_structures")]
    pub structures: Vec<StructureKind>,
    /// One seed per repetition, or a single seed `s` expanded to
    /// `s, s+1, ...`.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default)]
    pub decode: GenerationConfig,
    /// Overrides of the default training hyperparameters.
    #[serde(default)]
    pub hyper: Hyper,
    #[serde(default)]
    pub reference_policy: ReferencePolicy,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// Cells run concurrently.
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default = "default_poll_ms")]
    pub poll_interval_ms: u64,
}

impl ExperimentPlan {
    pub fn new(dataset: impl Into<String>, train: PathBuf, dev: PathBuf) -> Self {
        ExperimentPlan {
            dataset: dataset.into(),
            train,
            dev,
            test: None,
            budgets: None,
            structures: default_structures(),
            seeds: default_seeds(),
            repetitions: default_repetitions(),
            decode: GenerationConfig::default(),
            hyper: Hyper::new(),
            reference_policy: ReferencePolicy::default(),
            batch_size: default_batch_size(),
            jobs: default_jobs(),
            poll_interval_ms: default_poll_ms(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut plan: ExperimentPlan =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut plan.train);
        resolve(&mut plan.dev);
        if let Some(t) = plan.test.as_mut() {
            resolve(t);
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidInput("repetitions must be at least 1".into()));
        }
        if self.structures.is_empty() {
            return Err(Error::InvalidInput("plan has no structures".into()));
        }
        for b in self.effective_budgets() {
            if !(b > 0.0 && b <= 100.0) {
                return Err(Error::BudgetOutOfRange(b));
            }
        }
        self.seeds_per_repetition()?;
        self.decode.validate()?;
        Ok(())
    }

    fn is_cose(&self) -> bool {
        self.dataset
            .to_lowercase()
            .replace(['-', '_'], "")
            .starts_with("cose")
    }

    pub fn effective_budgets(&self) -> Vec<f64> {
        match &self.budgets {
            Some(b) => b.clone(),
            None if self.is_cose() => vec![30.0, 100.0],
            None => vec![10.0, 30.0, 100.0],
        }
    }

    pub fn seeds_per_repetition(&self) -> Result<Vec<u64>> {
        let r = self.repetitions as usize;
        match self.seeds.as_slice() {
            [] => Err(Error::InvalidInput("plan has no seeds".into())),
            [s] => Ok((0..r as u64).map(|i| s + i).collect()),
            seeds if seeds.len() == r => Ok(seeds.to_vec()),
            seeds => Err(Error::InvalidInput(format!(
                "{} seeds given for {r} repetitions",
                seeds.len()
            ))),
        }
    }

    /// Default hyperparameters with the plan's overrides applied.
    pub fn effective_hyper(&self) -> Hyper {
        let mut h = default_hyper();
        h.extend(self.hyper.clone());
        h
    }

    pub fn poll_policy(&self) -> PollPolicy {
        PollPolicy {
            interval: Duration::from_millis(self.poll_interval_ms),
            ..PollPolicy::default()
        }
    }

    /// Cells in grid order (structure-major).
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &structure in &self.structures {
            for budget in self.effective_budgets() {
                cells.push(Cell { structure, budget });
            }
        }
        cells
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub structure: StructureKind,
    pub budget: f64,
}

impl Cell {
    pub fn id(&self) -> String {
        format!("{}-b{}", self.structure.slug(), format_budget(self.budget))
    }
}

fn format_budget(b: f64) -> String {
    if b.fract() == 0.0 {
        format!("{b:.0}")
    } else {
        format!("{b}")
    }
}

/// Datasets a grid runs on.
pub struct GridData {
    pub train: Dataset,
    /// Evaluation splits in reporting order.
    pub evals: Vec<Dataset>,
}

impl GridData {
    /// Loads the plan's canonical dataset files. CQA datasets skip `test`.
    pub fn load(plan: &ExperimentPlan) -> Result<Self> {
        use crate::corpus::read_canonical;
        let train = read_canonical(&plan.train, Split::Train)?;
        let mut evals = vec![read_canonical(&plan.dev, Split::Dev)?];
        if let Some(test) = &plan.test {
            if train.task() == Some(Task::Cqa) {
                log::warn!("{}: CQA datasets are evaluated on dev only", plan.dataset);
            } else {
                evals.push(read_canonical(test, Split::Test)?);
            }
        }
        Ok(GridData { train, evals })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell_id: String,
    pub structure: StructureKind,
    pub budget: f64,
    pub repetition: u32,
    pub seed: u64,
    /// Absent when the run failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub reports: BTreeMap<Split, MetricReport>,
    pub pair_counts: BTreeMap<StageKind, usize>,
    pub ledger: Ledger,
    /// Written files, relative to the results directory.
    pub artifacts: Vec<PathBuf>,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// Per-cell averages over the successful repetitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell_id: String,
    pub structure: StructureKind,
    pub budget: f64,
    pub completed: usize,
    pub failed: usize,
    pub mean: BTreeMap<Split, MetricReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridOutcome {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<CellSummary>,
}

struct RunContext<'a> {
    plan: &'a ExperimentPlan,
    data: &'a GridData,
    backend: &'a dyn Backend,
    results_dir: Option<&'a Path>,
}

fn train_stage(
    ctx: &RunContext<'_>,
    models: &ModelNames,
    stage: StageKind,
    pairs: &[TrainingPair],
    hyper: &Hyper,
    ledger: &mut Ledger,
) -> Result<()> {
    let (_, took) = train_and_wait(
        ctx.backend,
        &models.model(stage),
        pairs,
        hyper,
        ctx.plan.poll_policy(),
    )?;
    ledger.record(stage.slug(), Phase::Train, 1, took, pairs.len() as u64);
    Ok(())
}

fn write_file(root: &Path, rel: &Path, contents: &str, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    artifacts.push(rel.to_path_buf());
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// One repetition of one cell: sample, compile, train, infer, score.
fn run_once(ctx: &RunContext<'_>, cell: Cell, repetition: u32, seed: u64) -> RunRecord {
    let mut record = RunRecord {
        cell_id: cell.id(),
        structure: cell.structure,
        budget: cell.budget,
        repetition,
        seed,
        error: None,
        reports: BTreeMap::new(),
        pair_counts: BTreeMap::new(),
        ledger: Ledger::new(),
        artifacts: Vec::new(),
    };
    if let Err(e) = run_once_inner(ctx, cell, repetition, seed, &mut record) {
        log::warn!("{} rep {repetition} failed: {e}", record.cell_id);
        record.error = Some(e.to_string());
    }
    if let Some(root) = ctx.results_dir {
        let dir = rep_dir(&record.cell_id, repetition);
        let mut artifacts = std::mem::take(&mut record.artifacts);
        let written = write_file(
            root,
            &dir.join("ledger.json"),
            &to_json(&record.ledger),
            &mut artifacts,
        )
        .and_then(|_| {
            let report = serde_json::json!({
                "cell_id": record.cell_id,
                "repetition": repetition,
                "seed": seed,
                "error": record.error,
                "pair_counts": record.pair_counts,
                "reports": record.reports,
            });
            write_file(
                root,
                &dir.join("report.json"),
                &to_json(&report),
                &mut artifacts,
            )
        });
        record.artifacts = artifacts;
        if let Err(e) = written {
            record.error.get_or_insert_with(|| e.to_string());
        }
    }
    record
}

fn rep_dir(cell_id: &str, repetition: u32) -> PathBuf {
    PathBuf::from(cell_id).join(format!("rep{repetition}"))
}

fn run_once_inner(
    ctx: &RunContext<'_>,
    cell: Cell,
    repetition: u32,
    seed: u64,
    record: &mut RunRecord,
) -> Result<()> {
    let plan = ctx.plan;
    let view = sample_budget(&ctx.data.train, cell.budget, seed)?;
    let spec = StructureSpec::new(cell.structure);
    let models = ModelNames::new(format!("{}/{}/rep{repetition}", plan.dataset, cell.id()));
    let mut hyper = plan.effective_hyper();
    hyper.entry("seed".to_string()).or_insert(seed.into());
    let dir = rep_dir(&cell.id(), repetition);

    let mut semi_labels = None;
    for &stage in &spec.stages {
        if cell.structure == StructureKind::EtPSl && stage == StageKind::EtpPredictor {
            let mut semi_ctx = SemiLabelContext {
                backend: ctx.backend,
                explainer_model: models.model(StageKind::EtpExplainer),
                decode: plan.decode.clone(),
                batch_size: plan.batch_size,
                ledger: &mut record.ledger,
            };
            let labels = semi_label(&view, &mut semi_ctx, None)?;
            if !labels.failed.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "semi-labeling failed for {} instances",
                    labels.failed.len()
                )));
            }
            semi_labels = Some(labels);
        }
        let pairs = compile_stage(&view, cell.structure, stage, semi_labels.as_ref())?;
        record.pair_counts.insert(stage, pairs.len());
        if let Some(root) = ctx.results_dir {
            let rel = dir.join("pairs").join(format!("{}.jsonl", stage.slug()));
            write_file(
                root,
                &rel,
                &CompiledPairs::to_jsonl(&pairs),
                &mut record.artifacts,
            )?;
        }
        train_stage(ctx, &models, stage, &pairs, &hyper, &mut record.ledger)?;
    }

    let opts = InferenceOptions {
        decode: plan.decode.clone(),
        batch_size: plan.batch_size,
    };
    for eval in &ctx.data.evals {
        let results = run_inference(eval, &spec, ctx.backend, &models, &opts, &mut record.ledger)?;
        if let Some(root) = ctx.results_dir {
            let mut text = String::new();
            for r in &results {
                text.push_str(&serde_json::to_string(r)?);
                text.push('\n');
            }
            let rel = dir
                .join("generations")
                .join(format!("{}.jsonl", eval.split));
            write_file(root, &rel, &text, &mut record.artifacts)?;
        }
        let pairs = to_eval_pairs(eval, &results, plan.reference_policy)?;
        record.reports.insert(eval.split, evaluate(&pairs)?);
    }
    Ok(())
}

/// Runs every (cell, repetition) of `plan`, up to `plan.jobs` at a time.
/// A failed run is recorded and does not stop the grid. With a results
/// directory, artifacts and summary tables are written there.
pub fn run_grid(
    plan: &ExperimentPlan,
    data: &GridData,
    backend: &dyn Backend,
    results_dir: Option<&Path>,
) -> Result<GridOutcome> {
    plan.validate()?;
    if let Some(root) = results_dir {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let path = root.join("plan.json");
        std::fs::write(&path, to_json(plan)).map_err(|e| Error::io(&path, e))?;
    }
    let seeds = plan.seeds_per_repetition()?;
    let runs: Vec<(Cell, u32, u64)> = plan
        .cells()
        .into_iter()
        .flat_map(|cell| {
            seeds
                .iter()
                .enumerate()
                .map(move |(r, &s)| (cell, r as u32, s))
        })
        .collect();
    let ctx = RunContext {
        plan,
        data,
        backend,
        results_dir,
    };
    let slots: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; runs.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..plan.jobs.clamp(1, runs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(cell, rep, seed)) = runs.get(i) else {
                    break;
                };
                log::info!("running {} rep {rep} (seed {seed})", cell.id());
                let record = run_once(&ctx, cell, rep, seed);
                slots.lock().expect("slots poisoned")[i] = Some(record);
            });
        }
    });
    let records: Vec<RunRecord> = slots
        .into_inner()
        .expect("slots poisoned")
        .into_iter()
        .map(|r| r.expect("every run produces a record"))
        .collect();
    let summaries = summarize(plan, &records);
    if let Some(root) = results_dir {
        for (name, text) in [
            ("summary.tsv", summary_tsv(&summaries)),
            ("summary.txt", summary_text(&summaries)),
            ("efficiency.txt", efficiency_report(&records).render()),
        ] {
            let path = root.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(GridOutcome { records, summaries })
}

fn summarize(plan: &ExperimentPlan, records: &[RunRecord]) -> Vec<CellSummary> {
    plan.cells()
        .into_iter()
        .map(|cell| {
            let id = cell.id();
            let runs: Vec<&RunRecord> = records.iter().filter(|r| r.cell_id == id).collect();
            let ok: Vec<&&RunRecord> = runs.iter().filter(|r| r.succeeded()).collect();
            let mut splits: BTreeMap<Split, Vec<MetricReport>> = BTreeMap::new();
            for r in &ok {
                for (split, report) in &r.reports {
                    splits.entry(*split).or_default().push(report.clone());
                }
            }
            CellSummary {
                cell_id: id,
                structure: cell.structure,
                budget: cell.budget,
                completed: ok.len(),
                failed: runs.len() - ok.len(),
                mean: splits
                    .into_iter()
                    .filter_map(|(s, reports)| MetricReport::mean(&reports).map(|m| (s, m)))
                    .collect(),
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Tab-separated summary, one line per (cell, split).
pub fn summary_tsv(summaries: &[CellSummary]) -> String {
    let mut out = String::from(
        "structure\tbudget\tsplit\tcompleted\tfailed\taccuracy\tbleu\tmeteor\trouge_l\n",
    );
    for s in summaries {
        if s.mean.is_empty() {
            let _ = writeln!(
                out,
                "{}\t{}\t\t{}\t{}\t\t\t\t",
                s.structure.slug(),
                format_budget(s.budget),
                s.completed,
                s.failed
            );
        }
        for (split, m) in &s.mean {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                s.structure.slug(),
                format_budget(s.budget),
                split,
                s.completed,
                s.failed,
                m.accuracy,
                opt(m.bleu),
                opt(m.meteor),
                opt(m.rouge_l)
            );
        }
    }
    out
}

/// One table per split, rows labelled `{structure} {budget}%`; failed runs
/// are listed below the tables.
pub fn summary_text(summaries: &[CellSummary]) -> String {
    let mut out = String::new();
    let splits: std::collections::BTreeSet<Split> = summaries
        .iter()
        .flat_map(|s| s.mean.keys().copied())
        .collect();
    for split in splits {
        let rows: Vec<(String, MetricReport)> = summaries
            .iter()
            .filter_map(|s| {
                s.mean.get(&split).map(|m| {
                    let name = format!(
                        "{} {}%",
                        s.structure.display_name(),
                        format_budget(s.budget)
                    );
                    (name, m.clone())
                })
            })
            .collect();
        let _ = writeln!(out, "[{split}]");
        out.push_str(&render_table(&rows));
        out.push('\n');
    }
    let failed: Vec<&CellSummary> = summaries.iter().filter(|s| s.failed > 0).collect();
    if !failed.is_empty() {
        out.push_str("Failed runs:\n");
        for s in failed {
            let _ = writeln!(
                out,
                "  {}: {} of {}",
                s.cell_id,
                s.failed,
                s.failed + s.completed
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_budgets() {
        let mut plan = ExperimentPlan::new("esnli", "t".into(), "d".into());
        assert_eq!(plan.effective_budgets(), vec![10.0, 30.0, 100.0]);
        assert_eq!(plan.cells().len(), 12);
        plan.dataset = "CoS-E".into();
        assert_eq!(plan.effective_budgets(), vec![30.0, 100.0]);
    }

    #[test]
    fn seeds_expand() {
        let mut plan = ExperimentPlan::new("esnli", "t".into(), "d".into());
        plan.seeds = vec![7];
        assert_eq!(plan.seeds_per_repetition().unwrap(), vec![7, 8, 9]);
        plan.seeds = vec![1, 5, 9];
        assert_eq!(plan.seeds_per_repetition().unwrap(), vec![1, 5, 9]);
        plan.seeds = vec![1, 2];
        assert!(plan.validate().is_err());
        plan.seeds = vec![1];
        plan.repetitions = 0;
        assert!(plan.validate().is_err());
    }

    #[test]
    fn plan_json_defaults() {
        let plan: ExperimentPlan = serde_json::from_str(
            r#"{"dataset":"esnli","train":"a","dev":"b","hyper":{"epochs":1}}"#,
        )
        .unwrap();
        assert_eq!(plan.repetitions, 3);
        assert_eq!(plan.structures.len(), 4);
        assert_eq!(plan.effective_hyper()["epochs"], 1);
        assert_eq!(plan.effective_hyper()["batch_size"], 8);
        assert!(serde_json::from_str::<ExperimentPlan>(
            r#"{"dataset":"x","train":"a","dev":"b","typo":1}"#
        )
        .is_err());
    }

    #[test]
    fn cell_ids() {
        let c = Cell {
            structure: StructureKind::EtPSl,
            budget: 10.0,
        };
        assert_eq!(c.id(), "etp_sl-b10");
        assert_eq!(format_budget(12.5), "12.5");
    }
}
