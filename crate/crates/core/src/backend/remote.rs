use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use reqwest::blocking::{Client, Response};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::{
    ErrorBody, GenerateRequest, GenerateResponse, JobResponse, TrainRequest, TrainResponse,
    WirePair, GENERATE_PATH, JOBS_PATH, TRAIN_PATH,
};
use super::{Backend, BackendError, Generation, GenerationConfig, Hyper, JobHandle, JobStatus};
use crate::pipelines::TrainingPair;

#[derive(Clone, Debug)]
pub struct RemoteConfig {
    /// e.g. `http://127.0.0.1:8080`
    pub base_url: String,
    /// Inputs per `/v1/generate` request.
    pub batch_size: usize,
    /// Concurrent generate requests.
    pub max_in_flight: usize,
    /// Attempts per request, counting the first.
    pub max_attempts: u32,
    /// Delay before the first retry; doubled on each further retry.
    pub initial_backoff: Duration,
    pub request_timeout: Duration,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        RemoteConfig {
            base_url: base_url.into(),
            batch_size: 64,
            max_in_flight: 4,
            max_attempts: 3,
            initial_backoff: Duration::from_millis(500),
            request_timeout: Duration::from_secs(600),
        }
    }
}

/// Client of the model-server HTTP protocol.
#[derive(Debug)]
pub struct RemoteBackend {
    config: RemoteConfig,
    client: Client,
}

enum Attempt<T> {
    Done(T),
    Retry(BackendError),
    Fail(BackendError),
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        if config.batch_size == 0 || config.max_in_flight == 0 || config.max_attempts == 0 {
            return Err(BackendError::Precondition(
                "batch_size, max_in_flight and max_attempts must be positive".into(),
            ));
        }
        let client = Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| BackendError::Precondition(format!("http client: {e}")))?;
        Ok(RemoteBackend { config, client })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.base_url.trim_end_matches('/'), path)
    }

    fn with_retries<T>(
        &self,
        batch: Option<usize>,
        send: impl Fn() -> reqwest::Result<Response>,
    ) -> Result<T, BackendError>
    where
        T: DeserializeOwned,
    {
        let mut backoff = self.config.initial_backoff;
        let mut attempt = 1;
        loop {
            let outcome = match send() {
                Err(e) => Attempt::Retry(BackendError::Transport {
                    batch_index: batch.unwrap_or(0),
                    message: e.to_string(),
                }),
                Ok(resp) => classify(resp, batch),
            };
            match outcome {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) if attempt >= self.config.max_attempts => return Err(e),
                Attempt::Retry(e) => {
                    log::warn!("attempt {attempt} failed, retrying in {backoff:?}: {e}");
                    std::thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
            }
        }
    }

    fn post<B: Serialize, T: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
        batch: Option<usize>,
    ) -> Result<T, BackendError> {
        let url = self.url(path);
        self.with_retries(batch, || self.client.post(&url).json(body).send())
    }

    fn generate_batch(
        &self,
        index: usize,
        model: &str,
        inputs: &[String],
        config: &GenerationConfig,
    ) -> Result<Vec<String>, BackendError> {
        let req = GenerateRequest {
            model: model.to_string(),
            inputs: inputs.to_vec(),
            max_new_tokens: config.max_new_tokens,
            decode: config.decode.as_str().to_string(),
        };
        let resp: GenerateResponse = self.post(GENERATE_PATH, &req, Some(index))?;
        if resp.outputs.len() != inputs.len() {
            return Err(BackendError::Server {
                batch_index: Some(index),
                status: 200,
                code: "misaligned".into(),
                message: format!("{} inputs but {} outputs", inputs.len(), resp.outputs.len()),
            });
        }
        Ok(resp.outputs)
    }
}

fn classify<T: DeserializeOwned>(resp: Response, batch: Option<usize>) -> Attempt<T> {
    let status = resp.status();
    let text = match resp.text() {
        Ok(t) => t,
        Err(e) => {
            return Attempt::Retry(BackendError::Transport {
                batch_index: batch.unwrap_or(0),
                message: e.to_string(),
            })
        }
    };
    if status.is_success() {
        return match serde_json::from_str(&text) {
            Ok(v) => Attempt::Done(v),
            Err(e) => Attempt::Fail(BackendError::Server {
                batch_index: batch,
                status: status.as_u16(),
                code: "bad_response".into(),
                message: format!("{e}: {}", excerpt(&text)),
            }),
        };
    }
    let (code, message) = match serde_json::from_str::<ErrorBody>(&text) {
        Ok(body) => (body.error, body.message),
        Err(_) => (
            status
                .canonical_reason()
                .unwrap_or("error")
                .to_lowercase()
                .replace(' ', "_"),
            excerpt(&text),
        ),
    };
    let err = BackendError::Server {
        batch_index: batch,
        status: status.as_u16(),
        code,
        message,
    };
    if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS {
        Attempt::Retry(err)
    } else {
        Attempt::Fail(err)
    }
}

fn excerpt(text: &str) -> String {
    text.chars().take(500).collect()
}

impl Backend for RemoteBackend {
    fn identity(&self) -> String {
        format!("remote:{}", self.config.base_url)
    }

    /// Splits `inputs` into batches sent with up to `max_in_flight` requests
    /// outstanding. The first failing batch (lowest index) is reported.
    fn generate(
        &self,
        model: &str,
        inputs: &[String],
        config: &GenerationConfig,
    ) -> Result<Generation, BackendError> {
        config.validate()?;
        let started = Instant::now();
        let batches: Vec<&[String]> = inputs.chunks(self.config.batch_size).collect();
        let results: Mutex<Vec<Option<Result<Vec<String>, BackendError>>>> =
            Mutex::new(vec![None; batches.len()]);
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.min(batches.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= batches.len() {
                        break;
                    }
                    let r = self.generate_batch(i, model, batches[i], config);
                    let failed = r.is_err();
                    results.lock().expect("results poisoned")[i] = Some(r);
                    if failed {
                        // stop handing out new batches
                        next.fetch_max(batches.len(), Ordering::SeqCst);
                        break;
                    }
                });
            }
        });
        let mut outputs = Vec::with_capacity(inputs.len());
        for slot in results.into_inner().expect("results poisoned") {
            match slot {
                Some(Ok(batch)) => outputs.extend(batch),
                Some(Err(e)) => return Err(e),
                None => break,
            }
        }
        debug_assert_eq!(outputs.len(), inputs.len());
        Ok(Generation {
            outputs,
            misses: Vec::new(),
            elapsed: started.elapsed(),
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
        let req = TrainRequest {
            model: model.to_string(),
            pairs: pairs
                .iter()
                .map(|p| WirePair {
                    input: p.input.clone(),
                    target: p.target.clone(),
                })
                .collect(),
            hyper: hyper.clone(),
        };
        let resp: TrainResponse = self.post(TRAIN_PATH, &req, None)?;
        Ok(JobHandle {
            id: resp.job_id,
            model: model.to_string(),
        })
    }

    fn job_status(&self, job: &JobHandle) -> Result<JobStatus, BackendError> {
        let url = self.url(&format!("{JOBS_PATH}/{}", job.id));
        let resp: JobResponse = self.with_retries(None, || self.client.get(&url).send())?;
        Ok(JobStatus {
            state: resp.state,
            detail: resp.detail,
            elapsed: None,
        })
    }
}
