//! The four model structures: which pairs each stage is trained on, and how
//! stages are chained at inference.
//!
//! With `n` explained and `m` label-only training instances:
//!
//! | structure | stages (inference order)           | training pairs                    |
//! |-----------|------------------------------------|-----------------------------------|
//! | Joint     | joint                              | n                                 |
//! | EtP       | etp_explainer, etp_predictor       | n + n (gold explanations)         |
//! | EtP (SL)  | etp_explainer, etp_predictor       | n + (m+n) (generated explanations)|
//! | PtE       | pte_predictor, pte_explainer       | (m+n) + n                         |

mod compile;
mod inference;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taskformat::StageKind;

pub use compile::{
    compile_stage, compile_training_pairs, read_pairs_jsonl, semi_label, CompiledPairs,
    SemiLabelContext, SemiLabels,
};
pub use inference::{
    generate_conditioned, run_inference, to_eval_pairs, InferenceOptions, InferenceResult,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StructureKind {
    #[serde(rename = "joint")]
    Joint,
    #[serde(rename = "etp")]
    EtP,
    #[serde(rename = "pte")]
    PtE,
    #[serde(rename = "etp_sl")]
    EtPSl,
}

impl StructureKind {
    pub const ALL: [StructureKind; 4] = [
        StructureKind::Joint,
        StructureKind::EtP,
        StructureKind::EtPSl,
        StructureKind::PtE,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            StructureKind::Joint => "joint",
            StructureKind::EtP => "etp",
            StructureKind::PtE => "pte",
            StructureKind::EtPSl => "etp_sl",
        }
    }

    /// Name used in result tables.
    pub fn display_name(self) -> &'static str {
        match self {
            StructureKind::Joint => "Joint",
            StructureKind::EtP => "EtP",
            StructureKind::PtE => "PtE",
            StructureKind::EtPSl => "EtP (SL)",
        }
    }

    pub fn stages(self) -> &'static [StageKind] {
        match self {
            StructureKind::Joint => &[StageKind::JointStage],
            StructureKind::EtP | StructureKind::EtPSl => {
                &[StageKind::EtpExplainer, StageKind::EtpPredictor]
            }
            StructureKind::PtE => &[StageKind::PtePredictor, StageKind::PteExplainer],
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_lowercase().replace(['-', ' '], "_");
        StructureKind::ALL
            .into_iter()
            .find(|k| k.slug() == key || k.display_name().to_lowercase() == s.trim().to_lowercase())
            .ok_or_else(|| Error::InvalidInput(format!("unknown structure `{s}`")))
    }
}

/// A structure with its stages in inference order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub kind: StructureKind,
    pub stages: Vec<StageKind>,
}

impl StructureSpec {
    pub fn new(kind: StructureKind) -> Self {
        StructureSpec {
            kind,
            stages: kind.stages().to_vec(),
        }
    }

    /// The stage whose output is the label.
    pub fn predictor(&self) -> StageKind {
        match self.kind {
            StructureKind::Joint => StageKind::JointStage,
            StructureKind::EtP | StructureKind::EtPSl => StageKind::EtpPredictor,
            StructureKind::PtE => StageKind::PtePredictor,
        }
    }

    /// The stage whose output is the explanation.
    pub fn explainer(&self) -> StageKind {
        match self.kind {
            StructureKind::Joint => StageKind::JointStage,
            StructureKind::EtP | StructureKind::EtPSl => StageKind::EtpExplainer,
            StructureKind::PtE => StageKind::PteExplainer,
        }
    }
}

impl From<StructureKind> for StructureSpec {
    fn from(kind: StructureKind) -> Self {
        StructureSpec::new(kind)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Gold,
    /// Explanation in the input was generated by a trained explainer.
    SemiLabeled,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingPair {
    pub stage: StageKind,
    pub input: String,
    pub target: String,
    pub source_id: String,
    pub provenance: Provenance,
}

/// Maps stages to backend model names: `{namespace}/{stage}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelNames {
    namespace: String,
}

impl ModelNames {
    pub fn new(namespace: impl Into<String>) -> Self {
        ModelNames {
            namespace: namespace.into(),
        }
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    pub fn model(&self, stage: StageKind) -> String {
        if self.namespace.is_empty() {
            stage.slug().to_string()
        } else {
            format!("{}/{}", self.namespace, stage.slug())
        }
    }
}

impl Default for ModelNames {
    fn default() -> Self {
        ModelNames::new("")
    }
}
