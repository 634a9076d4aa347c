//! Local Outlier Factor over Euclidean distance.

use rayon::prelude::*;

use super::AnomalyError;

pub const DEFAULT_LOF_K: usize = 20;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

struct Neighborhood {
    k_distance: f64,
    /// Indices of every other point within `k_distance` (ties at the boundary included).
    members: Vec<usize>,
}

fn neighborhood(distances: &[f64], own: usize, k: usize) -> Neighborhood {
    let mut order: Vec<usize> = (0..distances.len()).filter(|&j| j != own).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
    let k_distance = distances[order[k - 1]];
    let end = order.partition_point(|&j| distances[j] <= k_distance);
    order.truncate(end);
    Neighborhood {
        k_distance,
        members: order,
    }
}

/// LOF score per row (higher = more isolated).
///
/// Coincident points give a zero reachability sum; their local density is
/// taken as +inf and the ratio of two infinite densities as 1. A finite-density
/// point whose neighbors all have infinite density therefore scores +inf.
pub fn lof_scores<R: AsRef<[f64]> + Sync>(rows: &[R], k: usize) -> Result<Vec<f64>, AnomalyError> {
    let n = rows.len();
    if k == 0 || n <= k {
        return Err(AnomalyError::TooFewRows { rows: n, k });
    }

    let neighborhoods: Vec<Neighborhood> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = rows[i].as_ref();
            let distances: Vec<f64> = rows.iter().map(|b| euclidean(a, b.as_ref())).collect();
            let mut hood = neighborhood(&distances, i, k);
            // Index order keeps the float summation independent of tie order.
            hood.members.sort_unstable();
            hood
        })
        .collect();

    let lrd: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = rows[i].as_ref();
            let hood = &neighborhoods[i];
            let reach_sum: f64 = hood
                .members
                .iter()
                .map(|&j| {
                    neighborhoods[j]
                        .k_distance
                        .max(euclidean(a, rows[j].as_ref()))
                })
                .sum();
            if reach_sum == 0.0 {
                f64::INFINITY
            } else {
                hood.members.len() as f64 / reach_sum
            }
        })
        .collect();

    Ok((0..n)
        .map(|i| {
            let hood = &neighborhoods[i];
            let total: f64 = hood
                .members
                .iter()
                .map(|&j| density_ratio(lrd[j], lrd[i]))
                .sum();
            total / hood.members.len() as f64
        })
        .collect())
}

fn density_ratio(neighbor: f64, own: f64) -> f64 {
    if neighbor.is_infinite() && own.is_infinite() {
        1.0
    } else {
        neighbor / own
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needs_more_rows_than_k() {
        let rows = vec![[0.0, 0.0]; 5];
        assert!(matches!(
            lof_scores(&rows, 5),
            Err(AnomalyError::TooFewRows { rows: 5, k: 5 })
        ));
        assert!(lof_scores(&rows, 0).is_err());
    }

    #[test]
    fn identical_points_score_one() {
        let rows = vec![[1.5, -2.0, 3.0]; 12];
        let scores = lof_scores(&rows, 4).unwrap();
        assert!(scores.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn small_reference_configuration() {
        // Four points on a line; hand-computed with k = 2.
        // 0: (0), 1: (1), 2: (2), 3: (10)
        let rows = vec![[0.0], [1.0], [2.0], [10.0]];
        let s = lof_scores(&rows, 2).unwrap();
        // k-distances: 0 -> 2, 1 -> 1 (ties: {0,2}), 2 -> 2, 3 -> 9.
        // lrd0 = 2 / (max(1,1) + max(2,2)) = 2/3
        // lrd1 = 2 / (max(2,1) + max(2,1)) = 1/2
        // lrd2 = 2 / (max(1,1) + max(2,2)) = 2/3
        // lrd3 = 2 / (max(2,8) + max(1,9)) = 2/17
        let lrd = [2.0 / 3.0, 0.5, 2.0 / 3.0, 2.0 / 17.0];
        let expected = [
            (lrd[1] + lrd[2]) / 2.0 / lrd[0],
            (lrd[0] + lrd[2]) / 2.0 / lrd[1],
            (lrd[1] + lrd[0]) / 2.0 / lrd[2],
            (lrd[2] + lrd[1]) / 2.0 / lrd[3],
        ];
        for (got, want) in s.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn duplicate_cluster_with_stray_point() {
        let mut rows = vec![[0.0, 0.0]; 6];
        rows.push([3.0, 4.0]);
        let s = lof_scores(&rows, 3).unwrap();
        assert!(s[..6].iter().all(|&v| v == 1.0));
        assert!(s[6].is_infinite());
    }
}
