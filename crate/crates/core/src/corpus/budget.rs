use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Instance};
use crate::error::{Error, Result};

/// A seeded budget view: which instances of `base` expose their gold
/// explanation (`n` explained) and which are label-only (`m`).
#[derive(Clone, Debug)]
pub struct DatasetView<'a> {
    base: &'a Dataset,
    budget_percent: f64,
    seed: u64,
    explained: BTreeSet<String>,
}

impl<'a> DatasetView<'a> {
    pub fn base(&self) -> &'a Dataset {
        self.base
    }

    pub fn budget_percent(&self) -> f64 {
        self.budget_percent
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn explained_ids(&self) -> &BTreeSet<String> {
        &self.explained
    }

    pub fn is_explained(&self, id: &str) -> bool {
        self.explained.contains(id)
    }

    /// `n`: instances whose gold explanation is visible to training.
    pub fn explained_count(&self) -> usize {
        self.explained.len()
    }

    /// `m`: instances used with their label only.
    pub fn label_only_count(&self) -> usize {
        self.base.len() - self.explained.len()
    }

    /// Instances in dataset order, tagged with whether they are explained.
    pub fn iter(&self) -> impl Iterator<Item = (&'a Instance, bool)> + '_ {
        self.base
            .iter()
            .map(move |inst| (inst, self.explained.contains(&inst.id)))
    }

    /// The 100% view: every explanation-bearing instance is explained.
    pub fn full(base: &'a Dataset) -> Self {
        DatasetView {
            base,
            budget_percent: 100.0,
            seed: 0,
            explained: base
                .iter()
                .filter(|i| i.has_explanation())
                .map(|i| i.id.clone())
                .collect(),
        }
    }
}

/// Samples `floor(budget_percent / 100 * |base|)` explained instances.
///
/// The explanation-bearing ids are shuffled once with a ChaCha8 stream seeded
/// by `seed` and the view takes a prefix, so for a fixed seed smaller budgets
/// are subsets of larger ones. At 100% every explanation-bearing instance is
/// explained regardless of seed.
pub fn sample_budget(base: &Dataset, budget_percent: f64, seed: u64) -> Result<DatasetView<'_>> {
    if !(budget_percent > 0.0 && budget_percent <= 100.0) {
        return Err(Error::BudgetOutOfRange(budget_percent));
    }
    let mut bearing: Vec<&str> = base
        .iter()
        .filter(|i| i.has_explanation())
        .map(|i| i.id.as_str())
        .collect();

    if budget_percent == 100.0 {
        return Ok(DatasetView {
            base,
            budget_percent,
            seed,
            explained: bearing.into_iter().map(str::to_string).collect(),
        });
    }

    let requested = (budget_percent * base.len() as f64 / 100.0).floor() as usize;
    if requested > bearing.len() {
        return Err(Error::InsufficientExplanations {
            requested,
            available: bearing.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bearing.shuffle(&mut rng);
    Ok(DatasetView {
        base,
        budget_percent,
        seed,
        explained: bearing[..requested].iter().map(|s| s.to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;
    use proptest::prelude::*;

    fn dataset(n: usize, with_expl: impl Fn(usize) -> bool) -> Dataset {
        let instances = (0..n)
            .map(|i| {
                let expl = if with_expl(i) {
                    vec![format!("because {i}")]
                } else {
                    vec![]
                };
                Instance::nli(format!("id{i}"), "p", "h", "neutral", expl)
            })
            .collect();
        Dataset::new("synthetic", Split::Train, instances).unwrap()
    }

    #[test]
    fn thirty_percent_of_ten_is_three() {
        let ds = dataset(10, |_| true);
        let view = sample_budget(&ds, 30.0, 7).unwrap();
        assert_eq!(view.explained_count(), 3);
        assert_eq!(view.label_only_count(), 7);
    }

    #[test]
    fn full_budget_ignores_seed() {
        let ds = dataset(10, |_| true);
        for seed in [0, 1, 99] {
            assert_eq!(
                sample_budget(&ds, 100.0, seed).unwrap().explained_count(),
                10
            );
        }
    }

    #[test]
    fn ten_percent_of_esnli_train_size() {
        // floor(0.10 * 549_367) = 54_936
        assert_eq!(549_367usize / 10, 54_936);
        let ds = dataset(549_367, |_| true);
        let view = sample_budget(&ds, 10.0, 3).unwrap();
        assert_eq!(view.explained_count(), 54_936);
    }

    #[test]
    fn out_of_range_budgets() {
        let ds = dataset(4, |_| true);
        for b in [0.0, -5.0, 100.5, f64::NAN] {
            assert!(matches!(
                sample_budget(&ds, b, 0),
                Err(Error::BudgetOutOfRange(_))
            ));
        }
    }

    #[test]
    fn only_explanation_bearing_instances_are_sampled() {
        let ds = dataset(10, |i| i % 2 == 0);
        let view = sample_budget(&ds, 50.0, 1).unwrap();
        assert_eq!(view.explained_count(), 5);
        for id in view.explained_ids() {
            assert!(ds.get(id).unwrap().has_explanation());
        }
        assert!(matches!(
            sample_budget(&ds, 60.0, 1),
            Err(Error::InsufficientExplanations {
                requested: 6,
                available: 5
            })
        ));
        assert_eq!(sample_budget(&ds, 100.0, 1).unwrap().explained_count(), 5);
    }

    proptest! {
        #[test]
        fn budgets_nest_for_equal_seed(n in 1usize..200, seed in any::<u64>()) {
            let ds = dataset(n, |_| true);
            let v10 = sample_budget(&ds, 10.0, seed).unwrap();
            let v30 = sample_budget(&ds, 30.0, seed).unwrap();
            let v100 = sample_budget(&ds, 100.0, seed).unwrap();
            prop_assert!(v10.explained_ids().is_subset(v30.explained_ids()));
            prop_assert!(v30.explained_ids().is_subset(v100.explained_ids()));
            prop_assert_eq!(v30.explained_count(), (3 * n) / 10);
            for v in [&v10, &v30, &v100] {
                prop_assert_eq!(v.explained_count() + v.label_only_count(), n);
            }
        }

        #[test]
        fn sampling_is_deterministic(n in 1usize..100, budget in 1u32..=100, seed in any::<u64>()) {
            let ds = dataset(n, |_| true);
            let a = sample_budget(&ds, budget as f64, seed).unwrap();
            let b = sample_budget(&ds, budget as f64, seed).unwrap();
            prop_assert_eq!(a.explained_ids(), b.explained_ids());
            prop_assert_eq!(a.explained_count(), (budget as usize * n) / 100);
        }
    }
}
