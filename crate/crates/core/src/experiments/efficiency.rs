use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;

use super::{format_budget, RunRecord};
use crate::backend::Phase;
use crate::pipelines::StructureKind;

/// Mean cost of one (structure, budget) over its successful runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfficiencyRow {
    pub structure: StructureKind,
    pub budget: f64,
    pub runs: usize,
    pub train_time: Duration,
    pub semi_label_time: Duration,
    pub inference_time: Duration,
    pub total_time: Duration,
    pub pairs_trained: u64,
    pub semi_label_calls: u64,
}

/// `total(EtP (SL)) >= total(EtP)` at one budget.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EfficiencyCheck {
    pub budget: f64,
    pub etp_total: Duration,
    pub etp_sl_total: Duration,
    pub holds: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub rows: Vec<EfficiencyRow>,
    pub checks: Vec<EfficiencyCheck>,
}

fn mean_duration(values: impl Iterator<Item = Duration>, n: usize) -> Duration {
    if n == 0 {
        return Duration::ZERO;
    }
    let total: u128 = values.map(|d| d.as_nanos()).sum();
    Duration::from_nanos((total / n as u128) as u64)
}

/// Per-structure training cost from run ledgers, with semi-labeling shown
/// separately.
pub fn efficiency_report(records: &[RunRecord]) -> EfficiencyReport {
    let mut groups: BTreeMap<(StructureKind, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.succeeded()) {
        groups
            .entry((r.structure, r.budget.to_bits()))
            .or_default()
            .push(r);
    }
    let rows: Vec<EfficiencyRow> = groups
        .into_iter()
        .map(|((structure, bits), runs)| {
            let n = runs.len();
            let phase = |p: Phase| mean_duration(runs.iter().map(|r| r.ledger.phase_time(p)), n);
            EfficiencyRow {
                structure,
                budget: f64::from_bits(bits),
                runs: n,
                train_time: phase(Phase::Train),
                semi_label_time: phase(Phase::SemiLabel),
                inference_time: phase(Phase::Inference),
                total_time: mean_duration(runs.iter().map(|r| r.ledger.total_time()), n),
                pairs_trained: runs.iter().map(|r| r.ledger.pairs_trained()).sum::<u64>()
                    / n as u64,
                semi_label_calls: runs
                    .iter()
                    .map(|r| r.ledger.phase_calls(Phase::SemiLabel))
                    .sum::<u64>()
                    / n as u64,
            }
        })
        .collect();
    let checks = rows
        .iter()
        .filter(|r| r.structure == StructureKind::EtPSl)
        .filter_map(|sl| {
            rows.iter()
                .find(|r| r.structure == StructureKind::EtP && r.budget == sl.budget)
                .map(|etp| EfficiencyCheck {
                    budget: sl.budget,
                    etp_total: etp.total_time,
                    etp_sl_total: sl.total_time,
                    holds: sl.total_time >= etp.total_time,
                })
        })
        .collect();
    EfficiencyReport { rows, checks }
}

impl EfficiencyReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} | {:>6} | {:>4} | {:>12} | {:>12} | {:>12} | {:>12} | {:>10}",
            "Structure", "Budget", "Runs", "Train s", "SemiLabel s", "Infer s", "Total s", "Pairs"
        );
        let _ = writeln!(out, "{}", "-".repeat(100));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} | {:>6} | {:>4} | {:>12.3} | {:>12.3} | {:>12.3} | {:>12.3} | {:>10}",
                r.structure.display_name(),
                format!("{}%", format_budget(r.budget)),
                r.runs,
                r.train_time.as_secs_f64(),
                r.semi_label_time.as_secs_f64(),
                r.inference_time.as_secs_f64(),
                r.total_time.as_secs_f64(),
                r.pairs_trained
            );
        }
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{}% EtP (SL) total {:.3}s vs EtP {:.3}s: {}",
                format_budget(c.budget),
                c.etp_sl_total.as_secs_f64(),
                c.etp_total.as_secs_f64(),
                if c.holds { "ok" } else { "VIOLATED" }
            );
        }
        out
    }
}
