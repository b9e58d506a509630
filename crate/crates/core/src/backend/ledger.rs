use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::Split;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    SemiLabel,
    Inference,
}

/// Cost of one stage of a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub stage: String,
    pub phase: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    /// Model invocations (one per input for generation, one per job for
    /// training).
    pub calls: u64,
    pub wall_time_ns: u64,
    pub pairs_used: u64,
}

impl LedgerEntry {
    pub fn wall_time(&self) -> Duration {
        Duration::from_nanos(self.wall_time_ns)
    }
}

/// Append-only cost accounting of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
}

pub const SEMI_LABELING_STAGE: &str = "semi_labeling";

impl Ledger {
    pub fn new() -> Self {
        Ledger::default()
    }

    pub fn record(
        &mut self,
        stage: impl Into<String>,
        phase: Phase,
        calls: u64,
        wall_time: Duration,
        pairs_used: u64,
    ) -> &LedgerEntry {
        self.record_entry(LedgerEntry {
            stage: stage.into(),
            phase,
            split: None,
            calls,
            wall_time_ns: wall_time.as_nanos().min(u64::MAX as u128) as u64,
            pairs_used,
        })
    }

    pub fn record_entry(&mut self, entry: LedgerEntry) -> &LedgerEntry {
        self.entries.push(entry);
        self.entries.last().expect("just pushed")
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn extend(&mut self, other: Ledger) {
        self.entries.extend(other.entries);
    }

    pub fn total_time(&self) -> Duration {
        self.entries.iter().map(LedgerEntry::wall_time).sum()
    }

    pub fn phase_time(&self, phase: Phase) -> Duration {
        self.entries
            .iter()
            .filter(|e| e.phase == phase)
            .map(LedgerEntry::wall_time)
            .sum()
    }

    pub fn phase_calls(&self, phase: Phase) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.phase == phase)
            .map(|e| e.calls)
            .sum()
    }

    /// Training pairs consumed, summed over training entries.
    pub fn pairs_trained(&self) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.phase == Phase::Train)
            .map(|e| e.pairs_used)
            .sum()
    }

    pub fn pairs_for(&self, stage: &str) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.phase == Phase::Train && e.stage == stage)
            .map(|e| e.pairs_used)
            .sum()
    }

    pub fn has_stage(&self, stage: &str) -> bool {
        self.entries.iter().any(|e| e.stage == stage)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals() {
        let mut l = Ledger::new();
        l.record(
            "pte_predictor",
            Phase::Train,
            1,
            Duration::from_millis(5),
            5,
        );
        l.record(
            "pte_explainer",
            Phase::Train,
            1,
            Duration::from_millis(3),
            3,
        );
        l.record(
            SEMI_LABELING_STAGE,
            Phase::SemiLabel,
            7,
            Duration::from_millis(7),
            0,
        );
        assert_eq!(l.pairs_trained(), 8);
        assert_eq!(l.pairs_for("pte_predictor"), 5);
        assert_eq!(l.total_time(), Duration::from_millis(15));
        assert_eq!(l.phase_time(Phase::SemiLabel), Duration::from_millis(7));
        assert!(l.has_stage(SEMI_LABELING_STAGE));
    }

    #[test]
    fn serde_roundtrip() {
        let mut l = Ledger::new();
        l.record("joint", Phase::Inference, 4, Duration::from_nanos(12), 0);
        let json = serde_json::to_string(&l).unwrap();
        assert_eq!(serde_json::from_str::<Ledger>(&json).unwrap(), l);
    }
}
