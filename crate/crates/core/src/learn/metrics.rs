//! Classification metrics over class indices `0..n_classes`.

use serde::Serialize;

use super::LearnError;

pub fn accuracy<T: PartialEq>(truth: &[T], predicted: &[T]) -> f64 {
    let hits = truth.iter().zip(predicted).filter(|(t, p)| t == p).count();
    hits as f64 / truth.len() as f64
}

/// Dense `truth × predicted` count grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassScores {
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn zeros(n_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], n_classes: usize) -> Self {
        let mut m = Self::zeros(n_classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            m.counts[t][p] += 1;
        }
        m
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }

    pub fn class_scores(&self, class: usize) -> ClassScores {
        let tp = self.counts[class][class];
        let support: u64 = self.counts[class].iter().sum();
        let predicted: u64 = self.counts.iter().map(|row| row[class]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassScores {
            support,
            precision,
            recall,
            f1,
        }
    }

    /// Unweighted mean F1 over classes that occur in the truth labels.
    pub fn macro_f1(&self) -> f64 {
        let present: Vec<f64> = (0..self.n_classes())
            .map(|c| self.class_scores(c))
            .filter(|s| s.support > 0)
            .map(|s| s.f1)
            .collect();
        if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        }
    }
}

pub fn macro_f1(truth: &[usize], predicted: &[usize], n_classes: usize) -> f64 {
    ConfusionMatrix::from_predictions(truth, predicted, n_classes).macro_f1()
}

/// Binary ROC-AUC as the Mann-Whitney U statistic with average ranks for ties.
/// `None` when either side is empty.
pub fn binary_roc_auc(positive: &[bool], scores: &[f64]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of (1-based, tie-averaged) ranks of the positives, doubled to stay integral.
    let mut twice_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let twice_avg_rank = (start + 1 + end) as u128;
        let pos_in_group = order[start..end].iter().filter(|&&i| positive[i]).count() as u128;
        twice_rank_sum += twice_avg_rank * pos_in_group;
        start = end;
    }
    let n_pos = n_pos as u128;
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    Some(twice_u as f64 / (2 * n_pos * n_neg as u128) as f64)
}

/// One-vs-rest ROC-AUC per class, averaged over classes that have both
/// positives and negatives. `probabilities[i][c]` scores row `i` for class `c`.
pub fn roc_auc_ovr_macro(
    truth: &[usize],
    probabilities: &[Vec<f64>],
    n_classes: usize,
) -> Result<f64, LearnError> {
    let mut aucs = Vec::new();
    for class in 0..n_classes {
        let positive: Vec<bool> = truth.iter().map(|&t| t == class).collect();
        let scores: Vec<f64> = probabilities.iter().map(|p| p[class]).collect();
        if let Some(auc) = binary_roc_auc(&positive, &scores) {
            aucs.push(auc);
        }
    }
    if aucs.is_empty() {
        return Err(LearnError::UndefinedMetric("roc_auc"));
    }
    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
}
