use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::{
    Backend, BackendError, Generation, GenerationConfig, Hyper, JobHandle, JobState, JobStatus,
};
use crate::corpus::Dataset;
use crate::pipelines::TrainingPair;
use crate::taskformat::{joint_target, render_input, Injected, StageKind};

type ScriptFn = dyn Fn(&str, &str) -> Option<String> + Send + Sync;
type FailFn = dyn Fn(&str) -> bool + Send + Sync;

/// Gold answers for every stage input derivable from a set of datasets,
/// keyed by (stage, rendered input).
#[derive(Clone, Debug, Default)]
pub struct OracleTable {
    answers: HashMap<(StageKind, String), String>,
    conflicts: usize,
}

impl OracleTable {
    pub fn from_datasets<'a>(datasets: impl IntoIterator<Item = &'a Dataset>) -> Self {
        let mut table = OracleTable::default();
        for ds in datasets {
            for inst in ds {
                let label = inst.gold_label.as_str();
                let none = Injected::default();
                let mut put = |stage: StageKind, injected: Injected<'_>, target: String| {
                    if let Ok(input) = render_input(inst, stage, injected) {
                        table.insert(stage, input, target);
                    }
                };
                put(StageKind::PtePredictor, none, label.to_string());
                if let Some(first) = inst.first_explanation() {
                    put(StageKind::JointStage, none, joint_target(label, first));
                    put(StageKind::EtpExplainer, none, first.to_string());
                    put(
                        StageKind::PteExplainer,
                        Injected::label(label),
                        first.to_string(),
                    );
                }
                for expl in &inst.gold_explanations {
                    put(
                        StageKind::EtpPredictor,
                        Injected::explanation(expl),
                        label.to_string(),
                    );
                    put(
                        StageKind::RtoL,
                        Injected::explanation(expl),
                        label.to_string(),
                    );
                }
            }
        }
        table
    }

    /// First insertion wins; later conflicting answers are counted.
    pub fn insert(&mut self, stage: StageKind, input: String, target: String) {
        match self.answers.get(&(stage, input.clone())) {
            Some(existing) if *existing != target => self.conflicts += 1,
            Some(_) => {}
            None => {
                self.answers.insert((stage, input), target);
            }
        }
    }

    pub fn lookup(&self, stage: StageKind, input: &str) -> Option<&str> {
        self.answers
            .get(&(stage, input.to_string()))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    /// Inputs seen with more than one distinct answer.
    pub fn conflicts(&self) -> usize {
        self.conflicts
    }
}

#[derive(Clone)]
pub enum MockMode {
    /// Returns each input unchanged.
    Echo,
    /// Looks inputs up verbatim; misses yield "" and are flagged.
    Table(HashMap<String, String>),
    /// Answers from gold data. The stage is the last `/`-separated segment of
    /// the model name.
    Oracle(Arc<OracleTable>),
    Constant(String),
    /// `f(model, input)`; `None` is a miss.
    Script(Arc<ScriptFn>),
}

impl fmt::Debug for MockMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MockMode::Echo => f.write_str("Echo"),
            MockMode::Table(t) => write!(f, "Table({} entries)", t.len()),
            MockMode::Oracle(t) => write!(f, "Oracle({} entries)", t.len()),
            MockMode::Constant(s) => write!(f, "Constant({s:?})"),
            MockMode::Script(_) => f.write_str("Script"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CallRecord {
    Generate {
        model: String,
        inputs: Vec<String>,
        config: GenerationConfig,
    },
    Train {
        model: String,
        pairs: Vec<TrainingPair>,
        hyper: Hyper,
    },
}

#[derive(Default)]
struct MockState {
    log: Vec<CallRecord>,
    jobs: Vec<JobHandle>,
}

/// In-process backend with deterministic answers.
///
/// Latency is simulated: it is reported in `Generation::elapsed` and
/// `JobStatus::elapsed` but never slept.
pub struct MockBackend {
    mode: MockMode,
    latency_per_call: Duration,
    train_latency: Duration,
    fail_when: Option<Arc<FailFn>>,
    state: Mutex<MockState>,
}

impl fmt::Debug for MockBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MockBackend")
            .field("mode", &self.mode)
            .field("latency_per_call", &self.latency_per_call)
            .field("train_latency", &self.train_latency)
            .finish_non_exhaustive()
    }
}

impl MockBackend {
    pub fn new(mode: MockMode) -> Self {
        MockBackend {
            mode,
            latency_per_call: Duration::ZERO,
            train_latency: Duration::ZERO,
            fail_when: None,
            state: Mutex::new(MockState::default()),
        }
    }

    pub fn echo() -> Self {
        MockBackend::new(MockMode::Echo)
    }

    pub fn table(entries: impl IntoIterator<Item = (String, String)>) -> Self {
        MockBackend::new(MockMode::Table(entries.into_iter().collect()))
    }

    pub fn oracle<'a>(datasets: impl IntoIterator<Item = &'a Dataset>) -> Self {
        MockBackend::new(MockMode::Oracle(Arc::new(OracleTable::from_datasets(
            datasets,
        ))))
    }

    pub fn constant(output: impl Into<String>) -> Self {
        MockBackend::new(MockMode::Constant(output.into()))
    }

    pub fn script(f: impl Fn(&str, &str) -> Option<String> + Send + Sync + 'static) -> Self {
        MockBackend::new(MockMode::Script(Arc::new(f)))
    }

    /// Simulated generation time per input.
    pub fn with_latency(mut self, per_call: Duration) -> Self {
        self.latency_per_call = per_call;
        self
    }

    /// Simulated time per training job.
    pub fn with_train_latency(mut self, per_job: Duration) -> Self {
        self.train_latency = per_job;
        self
    }

    /// Fails any generate call containing an input matching `pred`, as a
    /// transport failure would.
    pub fn with_failure(mut self, pred: impl Fn(&str) -> bool + Send + Sync + 'static) -> Self {
        self.fail_when = Some(Arc::new(pred));
        self
    }

    pub fn mode(&self) -> &MockMode {
        &self.mode
    }

    pub fn call_log(&self) -> Vec<CallRecord> {
        self.state.lock().expect("mock state poisoned").log.clone()
    }

    /// Every generated input, in call order.
    pub fn generated_inputs(&self) -> Vec<(String, String)> {
        self.call_log()
            .into_iter()
            .filter_map(|c| match c {
                CallRecord::Generate { model, inputs, .. } => Some((model, inputs)),
                CallRecord::Train { .. } => None,
            })
            .flat_map(|(model, inputs)| inputs.into_iter().map(move |i| (model.clone(), i)))
            .collect()
    }

    fn answer(&self, model: &str, input: &str) -> Option<String> {
        match &self.mode {
            MockMode::Echo => Some(input.to_string()),
            MockMode::Table(t) => t.get(input).cloned(),
            MockMode::Oracle(t) => {
                let slug = model.rsplit('/').next().unwrap_or(model);
                let stage: StageKind = slug.parse().ok()?;
                t.lookup(stage, input).map(str::to_string)
            }
            MockMode::Constant(s) => Some(s.clone()),
            MockMode::Script(f) => f(model, input),
        }
    }
}

impl Backend for MockBackend {
    fn identity(&self) -> String {
        let mode = match &self.mode {
            MockMode::Echo => "echo",
            MockMode::Table(_) => "table",
            MockMode::Oracle(_) => "oracle",
            MockMode::Constant(_) => "constant",
            MockMode::Script(_) => "script",
        };
        format!("mock:{mode}")
    }

    fn generate(
        &self,
        model: &str,
        inputs: &[String],
        config: &GenerationConfig,
    ) -> Result<Generation, BackendError> {
        config.validate()?;
        self.state
            .lock()
            .expect("mock state poisoned")
            .log
            .push(CallRecord::Generate {
                model: model.to_string(),
                inputs: inputs.to_vec(),
                config: config.clone(),
            });
        if let Some(fail) = &self.fail_when {
            if inputs.iter().any(|i| fail(i)) {
                return Err(BackendError::Transport {
                    batch_index: 0,
                    message: "injected failure".into(),
                });
            }
        }
        let mut outputs = Vec::with_capacity(inputs.len());
        let mut misses = Vec::new();
        for (i, input) in inputs.iter().enumerate() {
            match self.answer(model, input) {
                Some(out) => outputs.push(out),
                None => {
                    outputs.push(String::new());
                    misses.push(i);
                }
            }
        }
        Ok(Generation {
            outputs,
            misses,
            elapsed: self.latency_per_call * inputs.len() as u32,
        })
    }

    fn train(
        &self,
        model: &str,
        pairs: &[TrainingPair],
        hyper: &Hyper,
    ) -> Result<JobHandle, BackendError> {
        if pairs.is_empty() {
            return Err(BackendError::Precondition(
                "training needs at least one pair".into(),
            ));
        }
        let mut state = self.state.lock().expect("mock state poisoned");
        state.log.push(CallRecord::Train {
            model: model.to_string(),
            pairs: pairs.to_vec(),
            hyper: hyper.clone(),
        });
        let job = JobHandle {
            id: format!("mock-{}", state.jobs.len()),
            model: model.to_string(),
        };
        state.jobs.push(job.clone());
        Ok(job)
    }

    fn job_status(&self, job: &JobHandle) -> Result<JobStatus, BackendError> {
        let state = self.state.lock().expect("mock state poisoned");
        if !state.jobs.contains(job) {
            return Err(BackendError::Server {
                batch_index: None,
                status: 404,
                code: "unknown_job".into(),
                message: format!("no job {}", job.id),
            });
        }
        Ok(JobStatus {
            state: JobState::Done,
            detail: String::new(),
            elapsed: Some(self.train_latency),
        })
    }
}
