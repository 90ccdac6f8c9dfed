use crate::error::{Error, Result};
use crate::label::{class_counts, Label};

/// ROC polyline from (0,0) to (1,1), one vertex per distinct score.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(fpr, tpr)` vertices.
    pub points: Vec<(f64, f64)>,
    /// Score threshold reached at each vertex (`+inf` for the origin).
    pub thresholds: Vec<f64>,
    /// Cumulative `(false positives, true positives)` at each vertex.
    counts: Vec<(u64, u64)>,
}

impl RocCurve {
    pub fn n_positive(&self) -> u64 {
        self.counts.last().map_or(0, |c| c.1)
    }

    pub fn n_negative(&self) -> u64 {
        self.counts.last().map_or(0, |c| c.0)
    }
}

pub fn roc_curve(scores: &[f64], labels: &[Label]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::shape(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::domain("ROC needs both classes"));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::domain(format!("non-finite score {s}")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut counts = vec![(0u64, 0u64)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut fp, mut tp) = (0u64, 0u64);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        counts.push((fp, tp));
        thresholds.push(s);
    }
    let points = counts.iter().map(|&(f, t)| (f as f64 / neg as f64, t as f64 / pos as f64)).collect();
    Ok(RocCurve { points, thresholds, counts })
}

/// Trapezoidal area, accumulated in integer pair counts so that it equals the
/// rank statistic exactly.
pub fn auc(curve: &RocCurve) -> f64 {
    let mut twice_pairs: u128 = 0;
    for w in curve.counts.windows(2) {
        let ((f0, t0), (f1, t1)) = (w[0], w[1]);
        twice_pairs += u128::from(f1 - f0) * u128::from(t0 + t1);
    }
    let denom = 2 * u128::from(curve.n_positive()) * u128::from(curve.n_negative());
    twice_pairs as f64 / denom as f64
}

pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    Ok(auc(&roc_curve(scores, labels)?))
}
