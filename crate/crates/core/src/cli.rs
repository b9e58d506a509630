//! The `explkit` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::backend::{
    default_hyper, parse_hyper_override, train_and_wait, Backend, GenerationConfig, Ledger,
    MockBackend, PollPolicy, RemoteBackend, RemoteConfig,
};
use crate::config::{self, CliConfig, FileConfig};
use crate::corpus::{
    compute_stats, ingest, read_canonical, sample_budget, write_canonical, CoseMapping, Dataset,
    SourceFormat, Split,
};
use crate::error::{Error, Result};
use crate::experiments::{
    gold_source, label_informedness, run_grid, ExperimentPlan, ExplanationSource, GridData,
    InformednessOptions,
};
use crate::metrics::{evaluate, render_table, ReferencePolicy};
use crate::pipelines::{
    compile_training_pairs, generate_conditioned, read_pairs_jsonl, run_inference, to_eval_pairs,
    InferenceOptions, InferenceResult, ModelNames, SemiLabelContext, StructureKind, StructureSpec,
};
use crate::taskformat::{parse_output, render_input, Injected, StageKind};

#[derive(Parser, Debug)]
#[command(
    name = "explkit",
    version,
    about = "Train and evaluate predict/explain model structures"
)]
pub struct Cli {
    /// `key = value` settings file.
    #[arg(long, global = true, env = config::ENV_CONFIG)]
    pub config: Option<PathBuf>,
    /// Directory relative input paths are looked up in.
    #[arg(long, global = true, env = config::ENV_DATA_DIR)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, global = true, env = config::ENV_RESULTS_DIR)]
    pub results_dir: Option<PathBuf>,
    /// Model server base URL; required by `--backend remote`.
    #[arg(long, global = true, env = config::ENV_BACKEND_URL)]
    pub backend_url: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true)]
    pub log_level: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert a source file to the canonical JSONL format.
    Ingest(IngestArgs),
    /// Token-length statistics of a dataset.
    Stats(StatsArgs),
    /// Write the training pairs of each stage of a structure.
    Compile(CompileArgs),
    /// Submit a training job for one stage.
    Train(TrainArgs),
    /// Run a structure over a dataset and write its generations.
    Infer(InferArgs),
    /// Score a generations file against gold data.
    Evaluate(EvaluateArgs),
    /// Explain an instance conditioned on its true and predicted labels.
    Explain(ExplainArgs),
    /// Label-informedness table of explanation sources.
    Informedness(InformednessArgs),
    /// Run an experiment plan into the results directory.
    Grid(GridArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Esnli,
    Cose,
    Jsonl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    /// Answers from the gold data of the datasets the command loads.
    MockOracle,
    /// Returns every input unchanged.
    MockEcho,
    /// The model server at `--backend-url`.
    Remote,
}

#[derive(Args, Debug)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value = "mock-oracle")]
    pub backend: BackendKind,
    /// Concurrent requests to the model server.
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    /// Simulated generation time per input for mock backends.
    #[arg(long, default_value_t = 0)]
    pub mock_latency_ms: u64,
    /// Model names are `{prefix}/{stage}`.
    #[arg(long, default_value = "")]
    pub model_prefix: String,
}

#[derive(Args, Debug)]
pub struct DatasetArg {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Defaults to the split named in the file name.
    #[arg(long)]
    pub split: Option<Split>,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long, value_enum)]
    pub format: FormatArg,
    #[arg(long)]
    pub split: Split,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Column mapping for `--format cose`.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long)]
    pub structure: StructureKind,
    /// Percent of explanation-bearing instances that keep their explanation.
    #[arg(long, default_value_t = 100.0)]
    pub budget: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Used by `etp_sl` to semi-label with a trained explainer.
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub stage: StageKind,
    /// Defaults to `{model-prefix}/{stage}`.
    #[arg(long)]
    pub model: Option<String>,
    /// Hyperparameter override, repeatable.
    #[arg(long = "hyper", value_parser = parse_hyper_override)]
    pub hyper: Vec<(String, serde_json::Value)>,
    /// Return after submitting instead of waiting for completion.
    #[arg(long)]
    pub no_wait: bool,
    #[arg(long, default_value_t = 5000)]
    pub poll_ms: u64,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[arg(long, default_value_t = 100)]
    pub max_new_tokens: u32,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
}

impl DecodeArgs {
    fn options(&self) -> InferenceOptions {
        InferenceOptions {
            decode: GenerationConfig {
                max_new_tokens: self.max_new_tokens,
                ..GenerationConfig::default()
            },
            batch_size: self.batch_size,
        }
    }
}

#[derive(Args, Debug)]
pub struct InferArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long)]
    pub structure: StructureKind,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub generations: PathBuf,
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long, default_value = "first2")]
    pub refs: ReferencePolicy,
    /// Row name in the table output.
    #[arg(long, default_value = "model")]
    pub name: String,
    #[arg(long)]
    pub table: bool,
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub data: DatasetArg,
    #[arg(long)]
    pub id: String,
    /// An extra label to condition on.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub max_new_tokens: u32,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Args, Debug)]
pub struct InformednessArgs {
    /// Training split the label-from-explanation models learn from.
    #[arg(long)]
    pub train: PathBuf,
    /// Evaluation split.
    #[command(flatten)]
    pub data: DatasetArg,
    /// `name=path` of a JSONL file with `id` and `explanation` (or
    /// `generated_explanation`) per line; repeatable.
    #[arg(long = "source", value_parser = parse_named_path)]
    pub sources: Vec<(String, PathBuf)>,
    /// Reference source; built from gold explanations unless given.
    #[arg(long, default_value = "gold")]
    pub gold: String,
    #[arg(long, default_value_t = 5000)]
    pub poll_ms: u64,
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long)]
    pub plan: PathBuf,
    /// Overrides the plan's concurrency.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub backend: BackendArgs,
}

fn parse_named_path(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (name, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=path, got `{s}`"))?;
    if name.trim().is_empty() {
        return Err(format!("empty source name in `{s}`"));
    }
    Ok((name.trim().to_string(), PathBuf::from(path.trim())))
}

/// Parses arguments, runs the command and returns the exit code. Failures
/// print `{"error": code, "message": ...}` to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let record = serde_json::json!({ "error": e.code(), "message": e.to_string() });
            eprintln!("{record}");
            1
        }
    }
}

fn init_logging(level: &str) {
    let env = env_logger::Env::default().default_filter_or(level);
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = CliConfig::resolve(
        cli.data_dir,
        cli.results_dir,
        cli.backend_url,
        cli.seed,
        cli.log_level,
        file,
    );
    init_logging(&cfg.log_level);
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&cfg, a),
        Command::Stats(a) => cmd_stats(&cfg, a),
        Command::Compile(a) => cmd_compile(&cfg, a),
        Command::Train(a) => cmd_train(&cfg, a),
        Command::Infer(a) => cmd_infer(&cfg, a),
        Command::Evaluate(a) => cmd_evaluate(&cfg, a),
        Command::Explain(a) => cmd_explain(&cfg, a),
        Command::Informedness(a) => cmd_informedness(&cfg, a),
        Command::Grid(a) => cmd_grid(&cfg, a),
    }
}

fn split_from_name(path: &Path) -> Option<Split> {
    let stem = path.file_stem()?.to_string_lossy().to_lowercase();
    [Split::Train, Split::Dev, Split::Test]
        .into_iter()
        .find(|s| {
            stem.split(|c: char| !c.is_alphanumeric())
                .any(|part| part == s.as_str())
        })
        .or_else(|| stem.contains("validation").then_some(Split::Dev))
}

fn load_dataset(cfg: &CliConfig, path: &Path, split: Option<Split>) -> Result<Dataset> {
    let path = cfg.input_path(path);
    let split = split.or_else(|| split_from_name(&path)).ok_or_else(|| {
        Error::InvalidInput(format!(
            "cannot tell the split of {}; pass --split",
            path.display()
        ))
    })?;
    read_canonical(&path, split)
}

fn make_backend(
    cfg: &CliConfig,
    args: &BackendArgs,
    gold: &[&Dataset],
) -> Result<Box<dyn Backend>> {
    let latency = Duration::from_millis(args.mock_latency_ms);
    Ok(match args.backend {
        BackendKind::MockOracle => {
            Box::new(MockBackend::oracle(gold.iter().copied()).with_latency(latency))
        }
        BackendKind::MockEcho => Box::new(MockBackend::echo().with_latency(latency)),
        BackendKind::Remote => {
            let url = cfg.backend_url.clone().ok_or_else(|| {
                Error::InvalidInput(
                    "--backend remote needs --backend-url or EXPLKIT_BACKEND_URL".into(),
                )
            })?;
            let mut rc = RemoteConfig::new(url);
            rc.max_in_flight = args.max_in_flight.max(1);
            Box::new(RemoteBackend::new(rc)?)
        }
    })
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_ingest(cfg: &CliConfig, a: IngestArgs) -> Result<()> {
    let format = match a.format {
        FormatArg::Esnli => SourceFormat::EsnliCsv,
        FormatArg::Jsonl => SourceFormat::CanonicalJsonl,
        FormatArg::Cose => SourceFormat::CoseCsv(match &a.mapping {
            Some(m) => CoseMapping::load(&cfg.input_path(m))?,
            None => CoseMapping::default(),
        }),
    };
    let report = ingest(&cfg.input_path(&a.input), &format, a.split)?;
    let mut stderr = std::io::stderr().lock();
    for row in &report.rejected {
        let _ = writeln!(stderr, "{}", serde_json::to_string(row)?);
    }
    write_canonical(&report.dataset, &a.out)?;
    println!(
        "ingested {} instances ({} rejected) into {}",
        report.dataset.len(),
        report.rejected.len(),
        a.out.display()
    );
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into())
}

fn cmd_stats(cfg: &CliConfig, a: StatsArgs) -> Result<()> {
    let ds = load_dataset(cfg, &a.data.dataset, a.data.split)?;
    let stats = compute_stats(&ds);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&stats)?);
        return Ok(());
    }
    println!("dataset            {} ({})", ds.name, ds.split);
    println!("instances          {}", stats.count);
    println!(
        "input tokens       {} +/- {}",
        fmt_opt(stats.mean_input_tokens),
        fmt_opt(stats.sd_input_tokens)
    );
    println!("explanations       {}", stats.explanation_count);
    println!(
        "explanation tokens {} +/- {}",
        fmt_opt(stats.mean_expl_tokens),
        fmt_opt(stats.sd_expl_tokens)
    );
    Ok(())
}

fn cmd_compile(cfg: &CliConfig, a: CompileArgs) -> Result<()> {
    let ds = load_dataset(cfg, &a.data.dataset, a.data.split)?;
    let view = sample_budget(&ds, a.budget, cfg.seed)?;
    let spec = StructureSpec::new(a.structure);
    let compiled = if a.structure == StructureKind::EtPSl {
        let backend = make_backend(cfg, &a.backend, &[&ds])?;
        let mut ledger = Ledger::new();
        let mut ctx = SemiLabelContext {
            backend: backend.as_ref(),
            explainer_model: ModelNames::new(&a.backend.model_prefix)
                .model(StageKind::EtpExplainer),
            decode: GenerationConfig::default(),
            batch_size: 64,
            ledger: &mut ledger,
        };
        compile_training_pairs(&view, &spec, Some(&mut ctx))?
    } else {
        compile_training_pairs(&view, &spec, None)?
    };
    for path in compiled.write_dir(&a.out)? {
        println!("{}", path.display());
    }
    for (stage, pairs) in &compiled.stages {
        println!("{stage}\t{}", pairs.len());
    }
    Ok(())
}

fn cmd_train(cfg: &CliConfig, a: TrainArgs) -> Result<()> {
    let path = cfg.input_path(&a.pairs);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let pairs = read_pairs_jsonl(&text)?;
    if let Some(p) = pairs.iter().find(|p| p.stage != a.stage) {
        return Err(Error::InvalidInput(format!(
            "{} holds {} pairs, not {}",
            path.display(),
            p.stage,
            a.stage
        )));
    }
    let mut hyper = default_hyper();
    hyper.entry("seed".to_string()).or_insert(cfg.seed.into());
    hyper.extend(a.hyper);
    let backend = make_backend(cfg, &a.backend, &[])?;
    let model = a
        .model
        .unwrap_or_else(|| ModelNames::new(&a.backend.model_prefix).model(a.stage));
    let (job, state) = if a.no_wait {
        (backend.train(&model, &pairs, &hyper)?, "submitted")
    } else {
        let poll = PollPolicy {
            interval: Duration::from_millis(a.poll_ms),
            ..PollPolicy::default()
        };
        (
            train_and_wait(backend.as_ref(), &model, &pairs, &hyper, poll)?.0,
            "done",
        )
    };
    println!(
        "{}",
        serde_json::json!({ "job_id": job.id, "model": job.model, "pairs": pairs.len(), "state": state })
    );
    Ok(())
}

fn cmd_infer(cfg: &CliConfig, a: InferArgs) -> Result<()> {
    let ds = load_dataset(cfg, &a.data.dataset, a.data.split)?;
    let backend = make_backend(cfg, &a.backend, &[&ds])?;
    let mut ledger = Ledger::new();
    let results = run_inference(
        &ds,
        &StructureSpec::new(a.structure),
        backend.as_ref(),
        &ModelNames::new(&a.backend.model_prefix),
        &a.decode.options(),
        &mut ledger,
    )?;
    let mut text = String::new();
    for r in &results {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    write_output(&a.out, &text)?;
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    println!(
        "{} generations ({failed} failed) written to {}",
        results.len(),
        a.out.display()
    );
    Ok(())
}

fn read_generations(path: &Path) -> Result<Vec<InferenceResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

fn cmd_evaluate(cfg: &CliConfig, a: EvaluateArgs) -> Result<()> {
    let ds = load_dataset(cfg, &a.data.dataset, a.data.split)?;
    let results = read_generations(&cfg.input_path(&a.generations))?;
    let pairs = to_eval_pairs(&ds, &results, a.refs)?;
    let report = evaluate(&pairs)?;
    if a.table {
        print!("{}", render_table(&[(a.name, report)]));
    } else {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(())
}

fn cmd_explain(cfg: &CliConfig, a: ExplainArgs) -> Result<()> {
    let ds = load_dataset(cfg, &a.data.dataset, a.data.split)?;
    let inst = ds
        .get(&a.id)
        .ok_or_else(|| Error::InvalidInput(format!("no instance `{}` in {}", a.id, ds.name)))?;
    let backend = make_backend(cfg, &a.backend, &[&ds])?;
    let models = ModelNames::new(&a.backend.model_prefix);
    let decode = GenerationConfig {
        max_new_tokens: a.max_new_tokens,
        ..GenerationConfig::default()
    };
    let input = render_input(inst, StageKind::PtePredictor, Injected::default())?;
    let raw = backend
        .generate(&models.model(StageKind::PtePredictor), &[input], &decode)?
        .outputs
        .pop()
        .unwrap_or_default();
    let predicted = parse_output(&raw, StageKind::PtePredictor, &inst.label_vocabulary())
        .label
        .unwrap_or_default();
    let explainer = models.model(StageKind::PteExplainer);
    let mut rows = vec![("true", inst.gold_label.clone())];
    if predicted.is_empty() {
        log::warn!("predictor gave no label for {}", inst.id);
    } else {
        rows.push(("predicted", predicted));
    }
    if let Some(l) = a.label {
        rows.push(("requested", l));
    }
    for (kind, label) in rows {
        match generate_conditioned(inst, &label, backend.as_ref(), &explainer, &decode) {
            Ok(text) => println!("{kind}\t{label}\t{text}"),
            Err(Error::LabelOutOfVocabulary { .. }) if kind == "predicted" => {
                println!("{kind}\t{label}\t(label outside the vocabulary)")
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct SourceLine {
    id: String,
    #[serde(default)]
    explanation: Option<String>,
    #[serde(default)]
    generated_explanation: Option<String>,
}

fn read_source(path: &Path) -> Result<ExplanationSource> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = ExplanationSource::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let rec: SourceLine = serde_json::from_str(line)
            .map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))?;
        let expl = rec
            .explanation
            .or(rec.generated_explanation)
            .ok_or_else(|| Error::format(path, format!("line {}: no explanation field", i + 1)))?;
        out.insert(rec.id, expl);
    }
    Ok(out)
}

fn cmd_informedness(cfg: &CliConfig, a: InformednessArgs) -> Result<()> {
    let train = load_dataset(cfg, &a.train, Some(Split::Train))?;
    let eval = load_dataset(cfg, &a.data.dataset, a.data.split)?;
    let mut sources: BTreeMap<String, ExplanationSource> = BTreeMap::new();
    for (name, path) in &a.sources {
        sources.insert(name.clone(), read_source(&cfg.input_path(path))?);
    }
    sources
        .entry(a.gold.clone())
        .or_insert_with(|| gold_source([&train, &eval]));
    let backend = make_backend(cfg, &a.backend, &[&train, &eval])?;
    let mut hyper = default_hyper();
    hyper.insert("seed".into(), cfg.seed.into());
    let opts = InformednessOptions {
        namespace: if a.backend.model_prefix.is_empty() {
            "informedness".into()
        } else {
            a.backend.model_prefix.clone()
        },
        hyper,
        decode: a.decode.options().decode,
        batch_size: a.decode.batch_size,
        poll: PollPolicy {
            interval: Duration::from_millis(a.poll_ms),
            ..PollPolicy::default()
        },
    };
    let table = label_informedness(&train, &eval, &sources, &a.gold, backend.as_ref(), &opts)?;
    print!("{}", table.render());
    Ok(())
}

fn cmd_grid(cfg: &CliConfig, a: GridArgs) -> Result<()> {
    let mut plan = ExperimentPlan::load(&cfg.input_path(&a.plan))?;
    if let Some(j) = a.jobs {
        plan.jobs = j;
    }
    let data = GridData::load(&plan)?;
    let mut gold: Vec<&Dataset> = vec![&data.train];
    gold.extend(data.evals.iter());
    let backend = make_backend(cfg, &a.backend, &gold)?;
    let outcome = run_grid(&plan, &data, backend.as_ref(), Some(&cfg.results_dir))?;
    let summary = cfg.results_dir.join("summary.txt");
    let text = std::fs::read_to_string(&summary).map_err(|e| Error::io(&summary, e))?;
    print!("{text}");
    let failed = outcome.records.iter().filter(|r| !r.succeeded()).count();
    println!(
        "{} runs ({failed} failed); results in {}",
        outcome.records.len(),
        cfg.results_dir.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_inference() {
        assert_eq!(
            split_from_name(Path::new("esnli_train.jsonl")),
            Some(Split::Train)
        );
        assert_eq!(
            split_from_name(Path::new("cose-dev.jsonl")),
            Some(Split::Dev)
        );
        assert_eq!(
            split_from_name(Path::new("x/validation.jsonl")),
            Some(Split::Dev)
        );
        assert_eq!(split_from_name(Path::new("contest.jsonl")), None);
    }

    #[test]
    fn named_paths() {
        assert_eq!(
            parse_named_path("pte=a/b.jsonl").unwrap(),
            ("pte".into(), "a/b.jsonl".into())
        );
        assert!(parse_named_path("nopath").is_err());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
