use serde::Serialize;

use super::{Dataset, TaskInput};

/// Token-length statistics of a dataset. Means and deviations are `None`
/// when there is nothing to average.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetStats {
    pub count: usize,
    pub mean_input_tokens: Option<f64>,
    pub sd_input_tokens: Option<f64>,
    pub explanation_count: usize,
    pub mean_expl_tokens: Option<f64>,
    pub sd_expl_tokens: Option<f64>,
}

pub fn whitespace_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Input length is premise plus hypothesis for NLI and the question for CQA;
/// explanation length is taken over every gold explanation. Deviations are
/// sample (n - 1) deviations, 0 for a single value.
pub fn compute_stats(ds: &Dataset) -> DatasetStats {
    let inputs: Vec<f64> = ds
        .iter()
        .map(|inst| match &inst.input {
            TaskInput::Nli {
                premise,
                hypothesis,
            } => whitespace_tokens(premise) + whitespace_tokens(hypothesis),
            TaskInput::Cqa { question, .. } => whitespace_tokens(question),
        } as f64)
        .collect();
    let explanations: Vec<f64> = ds
        .iter()
        .flat_map(|inst| inst.gold_explanations.iter())
        .map(|e| whitespace_tokens(e) as f64)
        .collect();
    let (mean_input_tokens, sd_input_tokens) = mean_sd(&inputs);
    let (mean_expl_tokens, sd_expl_tokens) = mean_sd(&explanations);
    DatasetStats {
        count: ds.len(),
        mean_input_tokens,
        sd_input_tokens,
        explanation_count: explanations.len(),
        mean_expl_tokens,
        sd_expl_tokens,
    }
}

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    match values.len() {
        0 => (None, None),
        1 => (Some(values[0]), Some(0.0)),
        n => {
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (Some(mean), Some(var.sqrt()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Instance, Split};

    #[test]
    fn single_instance() {
        let ds = Dataset::new(
            "one",
            Split::Dev,
            vec![Instance::nli(
                "a",
                "one two three",
                "four five",
                "neutral",
                vec![],
            )],
        )
        .unwrap();
        let stats = compute_stats(&ds);
        assert_eq!(stats.count, 1);
        assert_eq!(stats.mean_input_tokens, Some(5.0));
        assert_eq!(stats.sd_input_tokens, Some(0.0));
        assert_eq!(stats.mean_expl_tokens, None);
    }

    #[test]
    fn sample_deviation_of_four_and_six() {
        let ds = Dataset::new(
            "two",
            Split::Dev,
            vec![
                Instance::nli("a", "w w", "w w", "neutral", vec!["x y".into()]),
                Instance::nli("b", "w w w", "w w w", "neutral", vec!["x y z w".into()]),
            ],
        )
        .unwrap();
        let stats = compute_stats(&ds);
        assert_eq!(stats.mean_input_tokens, Some(5.0));
        // ((4-5)^2 + (6-5)^2) / (2-1) = 2
        assert!((stats.sd_input_tokens.unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(stats.mean_expl_tokens, Some(3.0));
    }

    #[test]
    fn empty_dataset_has_undefined_means() {
        let ds = Dataset::new("none", Split::Dev, vec![]).unwrap();
        let stats = compute_stats(&ds);
        assert_eq!(stats.count, 0);
        assert_eq!(stats.mean_input_tokens, None);
        assert_eq!(stats.sd_input_tokens, None);
    }

    #[test]
    fn cqa_uses_question_only() {
        let ds = Dataset::new(
            "c",
            Split::Dev,
            vec![Instance::cqa(
                "q",
                "where do rats hide",
                vec!["a b c".into(), "d".into(), "e".into()],
                "d",
                vec![],
            )],
        )
        .unwrap();
        assert_eq!(compute_stats(&ds).mean_input_tokens, Some(4.0));
    }
}
