//! Random-guess reference classifiers.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

/// Predictions of a baseline. Every row shares the same probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselinePredictions {
    pub labels: Vec<usize>,
    pub probabilities: Vec<f64>,
}

/// Samples each label in proportion to its training frequency.
///
/// `train_counts[c]` is the training count of class `c`; at least one must be nonzero.
pub fn weighted_random_baseline<R: Rng>(
    train_counts: &[usize],
    test_size: usize,
    rng: &mut R,
) -> BaselinePredictions {
    let total: usize = train_counts.iter().sum();
    let probabilities: Vec<f64> = train_counts
        .iter()
        .map(|&c| c as f64 / total as f64)
        .collect();
    let dist = WeightedIndex::new(train_counts).expect("training histogram has positive mass");
    BaselinePredictions {
        labels: (0..test_size).map(|_| dist.sample(rng)).collect(),
        probabilities,
    }
}

/// Samples each of `n_classes` labels with equal probability.
pub fn uniform_random_baseline<R: Rng>(
    n_classes: usize,
    test_size: usize,
    rng: &mut R,
) -> BaselinePredictions {
    BaselinePredictions {
        labels: (0..test_size)
            .map(|_| rng.random_range(0..n_classes))
            .collect(),
        probabilities: vec![1.0 / n_classes as f64; n_classes],
    }
}
