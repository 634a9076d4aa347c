use super::AnomalyError;

/// Area under the precision-recall curve as step-wise average precision,
/// `AP = Σ (R_n − R_{n−1}) · P_n`, with tied scores forming a single step.
/// Positives are rows flagged `true`; higher scores rank first.
pub fn pr_auc(ground_truth: &[bool], scores: &[f64]) -> Result<f64, AnomalyError> {
    let n_pos = ground_truth.iter().filter(|&&g| g).count();
    if n_pos == 0 {
        return Err(AnomalyError::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (mut tp, mut seen) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        tp += order[start..end]
            .iter()
            .filter(|&&i| ground_truth[i])
            .count();
        seen += end - start;
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / seen as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        start = end;
    }
    Ok(ap)
}
