//! The text-to-text model interface the pipelines drive, with deterministic
//! mocks, an HTTP client for the model-server protocol, and the stage ledger.

mod ledger;
mod mock;
mod remote;
pub mod wire;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipelines::TrainingPair;

pub use ledger::{Ledger, LedgerEntry, Phase, SEMI_LABELING_STAGE};
pub use mock::{CallRecord, MockBackend, MockMode, OracleTable};
pub use remote::{RemoteBackend, RemoteConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("transport failure on batch {batch_index}: {message}")]
    Transport { batch_index: usize, message: String },

    #[error("server error {status} ({code}) on batch {batch_index:?}: {message}")]
    Server {
        batch_index: Option<usize>,
        status: u16,
        code: String,
        message: String,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("job {job_id} failed: {detail}")]
    JobFailed { job_id: String, detail: String },

    #[error("job {job_id} did not finish within {waited:?}")]
    JobTimeout { job_id: String, waited: Duration },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeStrategy {
    #[default]
    Greedy,
}

impl DecodeStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            DecodeStrategy::Greedy => "greedy",
        }
    }
}

/// Decoding settings: greedy for up to 100 new tokens or until end-of-sequence
/// by default.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub max_new_tokens: u32,
    pub decode: DecodeStrategy,
    pub stop_on_eos: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            max_new_tokens: 100,
            decode: DecodeStrategy::Greedy,
            stop_on_eos: true,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_new_tokens == 0 {
            return Err(BackendError::Precondition(
                "max_new_tokens must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outputs of one `generate` call, index-aligned with its inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Generation {
    pub outputs: Vec<String>,
    /// Indices the backend had no answer for (their output is empty).
    pub misses: Vec<usize>,
    pub elapsed: Duration,
}

/// Training hyperparameters, forwarded to the server unvalidated.
pub type Hyper = BTreeMap<String, serde_json::Value>;

/// Server-side training defaults. Both learning-rate keys are forwarded: the
/// optimizer rate and the initial rate of the linear decay schedule.
pub fn default_hyper() -> Hyper {
    let mut h = Hyper::new();
    h.insert("epochs".into(), 20.into());
    h.insert("batch_size".into(), 8.into());
    h.insert("optimizer".into(), "adamw".into());
    h.insert("learning_rate".into(), 1e-4.into());
    h.insert("adam_epsilon".into(), 1e-8.into());
    h.insert("max_grad_norm".into(), 1.0.into());
    h.insert("lr_schedule".into(), "linear".into());
    h.insert("lr_schedule_initial".into(), 5e-5.into());
    h.insert("early_stopping_patience".into(), 10.into());
    h
}

/// Parses `key=value`; the value is read as JSON when it parses, otherwise
/// kept as a string.
pub fn parse_hyper_override(s: &str) -> Result<(String, serde_json::Value), String> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(format!("empty key in `{s}`"));
    }
    let value = value.trim();
    let parsed = serde_json::from_str(value).unwrap_or_else(|_| value.into());
    Ok((key.to_string(), parsed))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobHandle {
    pub id: String,
    pub model: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobStatus {
    pub state: JobState,
    pub detail: String,
    /// Training time as reported by the backend, when it reports one.
    pub elapsed: Option<Duration>,
}

/// A text-to-text model service. `model` names a trained state, one per
/// stage; `generate` is deterministic for a fixed state under greedy decoding.
pub trait Backend: Send + Sync {
    fn identity(&self) -> String;

    fn generate(
        &self,
        model: &str,
        inputs: &[String],
        config: &GenerationConfig,
    ) -> Result<Generation, BackendError>;

    /// Starts an asynchronous fine-tuning job that produces state `model`.
    fn train(
        &self,
        model: &str,
        pairs: &[TrainingPair],
        hyper: &Hyper,
    ) -> Result<JobHandle, BackendError>;

    fn job_status(&self, job: &JobHandle) -> Result<JobStatus, BackendError>;
}

#[derive(Clone, Copy, Debug)]
pub struct PollPolicy {
    pub interval: Duration,
    pub timeout: Duration,
}

impl Default for PollPolicy {
    fn default() -> Self {
        PollPolicy {
            interval: Duration::from_secs(5),
            timeout: Duration::from_secs(7 * 24 * 3600),
        }
    }
}

/// Submits a training job and polls until it is done. Returns the handle
/// and the training time (backend-reported when available, else measured).
pub fn train_and_wait(
    backend: &dyn Backend,
    model: &str,
    pairs: &[TrainingPair],
    hyper: &Hyper,
    poll: PollPolicy,
) -> Result<(JobHandle, Duration), BackendError> {
    let started = Instant::now();
    let job = backend.train(model, pairs, hyper)?;
    loop {
        let status = backend.job_status(&job)?;
        match status.state {
            JobState::Done => {
                let elapsed = status.elapsed.unwrap_or_else(|| started.elapsed());
                return Ok((job, elapsed));
            }
            JobState::Failed => {
                return Err(BackendError::JobFailed {
                    job_id: job.id,
                    detail: status.detail,
                })
            }
            JobState::Queued | JobState::Running => {
                if started.elapsed() >= poll.timeout {
                    return Err(BackendError::JobTimeout {
                        job_id: job.id,
                        waited: started.elapsed(),
                    });
                }
                std::thread::sleep(poll.interval);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyper_defaults() {
        let h = default_hyper();
        assert_eq!(h["epochs"], 20);
        assert_eq!(h["batch_size"], 8);
        assert_eq!(h["learning_rate"], 1e-4);
        assert_eq!(h["lr_schedule_initial"], 5e-5);
    }

    #[test]
    fn hyper_override_parsing() {
        assert_eq!(
            parse_hyper_override("epochs=1").unwrap(),
            ("epochs".into(), 1.into())
        );
        assert_eq!(
            parse_hyper_override("optimizer = adafactor").unwrap(),
            ("optimizer".into(), "adafactor".into())
        );
        assert!(parse_hyper_override("noequals").is_err());
    }

    #[test]
    fn generation_config_defaults() {
        let c = GenerationConfig::default();
        assert_eq!(c.max_new_tokens, 100);
        assert!(c.stop_on_eos);
        assert!(c.validate().is_ok());
        let bad = GenerationConfig {
            max_new_tokens: 0,
            ..c
        };
        assert!(bad.validate().is_err());
    }
}
