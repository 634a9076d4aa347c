use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::LearnError;
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldAssignment {
    pub k: usize,
    /// Fold index of each input row.
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

/// Shuffles each class with a seeded generator and deals its rows round-robin
/// into `k` folds. Each class starts where the previous one stopped, which keeps
/// overall fold sizes balanced as well.
pub fn stratified_kfold<S: AsRef<str>>(
    labels: &[S],
    k: usize,
    seed: u64,
) -> Result<FoldAssignment, LearnError> {
    if k < 2 {
        return Err(LearnError::InvalidFoldCount(k));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        by_class.entry(label.as_ref()).or_default().push(i);
    }
    if let Some((class, members)) = by_class.iter().find(|(_, m)| m.len() < k) {
        return Err(LearnError::ClassTooSmall {
            class: class.to_string(),
            count: members.len(),
            k,
        });
    }

    let mut rng = seeded(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sizes(a: &FoldAssignment) -> Vec<usize> {
        (0..a.k).map(|f| a.test_indices(f).len()).collect()
    }

    #[test]
    fn thirty_rows_make_folds_of_six() {
        let labels = vec!["u"; 30];
        let a = stratified_kfold(&labels, 5, 1).unwrap();
        assert_eq!(sizes(&a), vec![6; 5]);
    }

    #[test]
    fn thirty_one_rows() {
        let labels = vec!["u"; 31];
        let mut s = sizes(&stratified_kfold(&labels, 5, 1).unwrap());
        s.sort();
        assert_eq!(s, vec![6, 6, 6, 6, 7]);
    }

    #[test]
    fn per_class_balance_and_determinism() {
        let mut labels = Vec::new();
        for (c, n) in [("a", 31), ("b", 47), ("c", 30), ("d", 99)] {
            labels.extend(std::iter::repeat_n(c, n));
        }
        let a = stratified_kfold(&labels, 5, 42).unwrap();
        assert_eq!(a, stratified_kfold(&labels, 5, 42).unwrap());
        assert_ne!(a, stratified_kfold(&labels, 5, 43).unwrap());
        for class in ["a", "b", "c", "d"] {
            let mut per_fold = vec![0; 5];
            for (i, l) in labels.iter().enumerate() {
                if *l == class {
                    per_fold[a.fold_of[i]] += 1;
                }
            }
            let (lo, hi) = (
                per_fold.iter().min().unwrap(),
                per_fold.iter().max().unwrap(),
            );
            assert!(hi - lo <= 1, "{class}: {per_fold:?}");
            assert!(*lo >= 6);
        }
        let s = sizes(&a);
        assert!(s.iter().max().unwrap() - s.iter().min().unwrap() <= 1);
        for f in 0..5 {
            assert_eq!(
                a.train_indices(f).len() + a.test_indices(f).len(),
                labels.len()
            );
        }
    }

    #[test]
    fn small_class_rejected() {
        let labels = ["a", "a", "a", "a", "b", "b", "b", "b", "b"];
        assert!(matches!(
            stratified_kfold(&labels, 5, 0),
            Err(LearnError::ClassTooSmall { count: 4, .. })
        ));
    }
}
