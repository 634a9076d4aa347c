//! CART classification tree with Gini impurity.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{LabeledVector, LearnError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or cannot be split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

/// Node in the flattened tree. Children are indices into [`DecisionTree::nodes`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Indexed like [`DecisionTree::classes`].
        class_counts: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionTree {
    classes: Vec<String>,
    n_features: usize,
    nodes: Vec<TreeNode>,
}

/// Score of a split as the exact rational `num / den` of
/// `sum_sq_left / n_left + sum_sq_right / n_right` (larger = purer children).
#[derive(Debug, Clone, Copy)]
struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    fn better_than(&self, other: &SplitScore) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: SplitScore,
}

struct Builder<'a> {
    x: &'a [&'a [f64]],
    y: &'a [usize],
    n_classes: usize,
    params: TreeParams,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    fn best_split(&self, idx: &[usize], counts: &[usize]) -> Option<Candidate> {
        let n = idx.len() as u128;
        let total_sq: u128 = counts.iter().map(|&c| (c * c) as u128).sum();
        let mut best: Option<Candidate> = None;
        let mut order = idx.to_vec();
        let mut left = vec![0u128; self.n_classes];

        for feature in 0..self.x[0].len() {
            order.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
            left.iter_mut().for_each(|c| *c = 0);
            let (mut sq_left, mut sq_right) = (0u128, total_sq);
            for pos in 0..order.len() - 1 {
                let class = self.y[order[pos]];
                let cl = left[class];
                let cr = counts[class] as u128 - cl;
                sq_left += 2 * cl + 1;
                sq_right -= 2 * cr - 1;
                left[class] += 1;

                let lo = self.x[order[pos]][feature];
                let hi = self.x[order[pos + 1]][feature];
                if lo >= hi {
                    continue;
                }
                let n_left = pos as u128 + 1;
                let n_right = n - n_left;
                let score = SplitScore {
                    num: sq_left * n_right + sq_right * n_left,
                    den: n_left * n_right,
                };
                if best.as_ref().is_none_or(|b| score.better_than(&b.score)) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Candidate {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, all: Vec<usize>) {
        // (node slot, sample indices, depth); explicit stack keeps deep trees off the call stack.
        self.nodes.push(TreeNode::Leaf {
            class_counts: Vec::new(),
        });
        let mut stack = vec![(0usize, all, 0usize)];
        while let Some((slot, idx, depth)) = stack.pop() {
            let counts = self.counts(&idx);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
            let split = if pure || depth_reached || idx.len() < self.params.min_samples_split {
                None
            } else {
                self.best_split(&idx, &counts)
            };
            match split {
                None => {
                    self.nodes[slot] = TreeNode::Leaf {
                        class_counts: counts,
                    }
                }
                Some(c) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = idx
                        .into_iter()
                        .partition(|&i| self.x[i][c.feature] <= c.threshold);
                    let left = self.nodes.len();
                    let right = left + 1;
                    for _ in 0..2 {
                        self.nodes.push(TreeNode::Leaf {
                            class_counts: Vec::new(),
                        });
                    }
                    self.nodes[slot] = TreeNode::Internal {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                    };
                    stack.push((right, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
    }
}

impl DecisionTree {
    /// Fits a CART tree. Ties between equally good splits go to the lowest
    /// feature index, then the lowest threshold.
    pub fn fit(rows: &[LabeledVector], params: TreeParams) -> Result<Self, LearnError> {
        let first = rows.first().ok_or(LearnError::EmptyTrainingSet)?;
        let n_features = first.x.len();
        if let Some(bad) = rows.iter().find(|r| r.x.len() != n_features) {
            return Err(LearnError::DimensionMismatch {
                expected: n_features,
                got: bad.x.len(),
            });
        }

        let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
        for r in rows {
            *tally.entry(&r.label).or_default() += 1;
        }
        let mut ordered: Vec<(&str, usize)> = tally.into_iter().collect();
        ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let classes: Vec<String> = ordered.iter().map(|(c, _)| c.to_string()).collect();
        let index: BTreeMap<&str, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();

        let x: Vec<&[f64]> = rows.iter().map(|r| r.x.as_slice()).collect();
        let y: Vec<usize> = rows.iter().map(|r| index[r.label.as_str()]).collect();
        let mut builder = Builder {
            x: &x,
            y: &y,
            n_classes: classes.len(),
            params,
            nodes: Vec::new(),
        };
        if n_features == 0 {
            builder.nodes.push(TreeNode::Leaf {
                class_counts: builder.counts(&(0..rows.len()).collect::<Vec<_>>()),
            });
        } else {
            builder.build((0..rows.len()).collect());
        }
        let nodes = builder.nodes;
        Ok(Self {
            classes,
            n_features,
            nodes,
        })
    }

    /// Class names ordered by descending training count, then name.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        let mut max_depth = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((node, d)) = stack.pop() {
            max_depth = max_depth.max(d);
            if let TreeNode::Internal { left, right, .. } = self.nodes[node] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        max_depth
    }

    fn leaf_counts(&self, x: &[f64]) -> &[usize] {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                TreeNode::Leaf { class_counts } => return class_counts,
            }
        }
    }

    /// Leaf class frequencies, indexed like [`Self::classes`].
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let counts = self.leaf_counts(x);
        let total: usize = counts.iter().sum();
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    /// Index into [`Self::classes`] of the most frequent leaf class; ties go to the earlier class.
    pub fn predict_index(&self, x: &[f64]) -> usize {
        let counts = self.leaf_counts(x);
        let mut best = 0;
        for (i, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = i;
            }
        }
        best
    }

    pub fn predict(&self, x: &[f64]) -> (&str, Vec<f64>) {
        (&self.classes[self.predict_index(x)], self.predict_proba(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(label: &str, x: &[f64]) -> LabeledVector {
        LabeledVector {
            label: label.into(),
            x: x.to_vec(),
        }
    }

    #[test]
    fn single_threshold_separates() {
        let rows = vec![
            lv("a", &[1.0, 5.0]),
            lv("a", &[2.0, 1.0]),
            lv("b", &[8.0, 5.0]),
            lv("b", &[9.0, 1.0]),
        ];
        let tree = DecisionTree::fit(&rows, TreeParams::default()).unwrap();
        assert_eq!(tree.depth(), 1);
        match &tree.nodes()[0] {
            TreeNode::Internal {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 5.0);
            }
            other => panic!("{other:?}"),
        }
        for r in &rows {
            assert_eq!(tree.predict(&r.x).0, r.label);
        }
    }

    #[test]
    fn identical_inputs_make_a_mixed_leaf() {
        let rows = vec![
            lv("b", &[1.0]),
            lv("a", &[1.0]),
            lv("a", &[1.0]),
            lv("b", &[1.0]),
        ];
        let tree = DecisionTree::fit(&rows, TreeParams::default()).unwrap();
        assert_eq!(tree.nodes().len(), 1);
        let (label, probs) = tree.predict(&[1.0]);
        // Equal counts: lexicographic order breaks the tie.
        assert_eq!(label, "a");
        assert_eq!(probs, vec![0.5, 0.5]);
    }

    #[test]
    fn leaf_probabilities() {
        let rows = vec![
            lv("A", &[0.0]),
            lv("A", &[0.0]),
            lv("A", &[0.0]),
            lv("B", &[0.0]),
            lv("B", &[10.0]),
        ];
        let tree = DecisionTree::fit(
            &rows,
            TreeParams {
                max_depth: Some(0),
                ..TreeParams::default()
            },
        )
        .unwrap();
        assert_eq!(tree.classes(), ["A", "B"]);
        assert_eq!(tree.predict(&[0.0]), ("A", vec![0.6, 0.4]));

        let pure = DecisionTree::fit(&rows[..3], TreeParams::default()).unwrap();
        assert_eq!(pure.predict(&[123.0]), ("A", vec![1.0]));
    }

    #[test]
    fn equal_gain_prefers_lower_feature() {
        // Both columns separate the classes identically.
        let rows = vec![lv("a", &[0.0, 0.0]), lv("b", &[1.0, 1.0])];
        let tree = DecisionTree::fit(&rows, TreeParams::default()).unwrap();
        assert!(matches!(
            tree.nodes()[0],
            TreeNode::Internal { feature: 0, .. }
        ));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            DecisionTree::fit(&[], TreeParams::default()),
            Err(LearnError::EmptyTrainingSet)
        ));
        assert!(matches!(
            DecisionTree::fit(
                &[lv("a", &[1.0]), lv("b", &[1.0, 2.0])],
                TreeParams::default()
            ),
            Err(LearnError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn max_depth_limits_growth() {
        let rows: Vec<_> = (0..64)
            .map(|i| lv(if i % 2 == 0 { "e" } else { "o" }, &[i as f64]))
            .collect();
        let full = DecisionTree::fit(&rows, TreeParams::default()).unwrap();
        assert!(full.depth() > 3);
        let capped = DecisionTree::fit(
            &rows,
            TreeParams {
                max_depth: Some(3),
                ..TreeParams::default()
            },
        )
        .unwrap();
        assert_eq!(capped.depth(), 3);
    }

    #[test]
    fn adjacent_floats_split_cleanly() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let rows = vec![lv("a", &[lo]), lv("b", &[hi])];
        let tree = DecisionTree::fit(&rows, TreeParams::default()).unwrap();
        assert_eq!(tree.predict(&[lo]).0, "a");
        assert_eq!(tree.predict(&[hi]).0, "b");
    }
}
