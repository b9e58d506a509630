//! JSON bodies of the model-server protocol.

use serde::{Deserialize, Serialize};

use super::{Hyper, JobState};

pub const GENERATE_PATH: &str = "/v1/generate";
pub const TRAIN_PATH: &str = "/v1/train";
pub const JOBS_PATH: &str = "/v1/jobs";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub model: String,
    pub inputs: Vec<String>,
    pub max_new_tokens: u32,
    pub decode: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WirePair {
    pub input: String,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRequest {
    pub model: String,
    pub pairs: Vec<WirePair>,
    pub hyper: Hyper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainResponse {
    pub job_id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobResponse {
    pub state: JobState,
    #[serde(default)]
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default)]
    pub message: String,
}
