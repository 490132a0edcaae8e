//! Threshold-sweep evaluation: ROC, precision-recall, AUC and best F1.

use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

/// Confusion counts at one decision threshold (predict positive when the
/// score strictly exceeds it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl OperatingPoint {
    pub fn tpr(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn fpr(&self) -> f64 {
        if self.fp + self.tn == 0 {
            0.0
        } else {
            self.fp as f64 / (self.fp + self.tn) as f64
        }
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalCurve {
    /// One point per unique score, descending threshold.
    pub points: Vec<OperatingPoint>,
    /// (FPR, TPR) pairs including the (0,0) and (1,1) endpoints.
    pub roc: Vec<(f64, f64)>,
    /// (recall, precision) pairs.
    pub pr: Vec<(f64, f64)>,
    pub auc: f64,
    pub pr_auc: f64,
    pub best_f1: f64,
    /// Threshold attaining the best F1.
    pub best_f1_threshold: f64,
}

/// Sweep every unique score as a threshold and integrate the curves by the
/// trapezoid rule. Needs at least one positive and one negative label.
pub fn eval_curves(scores: &[f64], labels: &[bool]) -> Result<EvalCurve> {
    if scores.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid(
            "evaluation needs at least one positive and one negative label",
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut idx = 0;
    while idx < order.len() {
        let score = scores[order[idx]];
        // consume the whole tie group
        while idx < order.len() && scores[order[idx]] == score {
            if labels[order[idx]] {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        points.push(OperatingPoint {
            threshold: score,
            tp,
            fp,
            tn: neg - fp,
            fn_: pos - tp,
        });
    }

    let mut roc = vec![(0.0, 0.0)];
    roc.extend(points.iter().map(|p| (p.fpr(), p.tpr())));

    let mut auc = 0.0;
    for w in roc.windows(2) {
        let (x1, y1) = w[0];
        let (x2, y2) = w[1];
        auc += (x2 - x1) * (y1 + y2) / 2.0;
    }

    let mut pr: Vec<(f64, f64)> = vec![(0.0, points[0].precision())];
    pr.extend(points.iter().map(|p| (p.tpr(), p.precision())));
    let mut pr_auc = 0.0;
    for w in pr.windows(2) {
        let (x1, y1) = w[0];
        let (x2, y2) = w[1];
        pr_auc += (x2 - x1) * (y1 + y2) / 2.0;
    }

    let (best_f1, best_score) = points
        .iter()
        .map(|p| (p.f1(), p.threshold))
        .fold((0.0, f64::INFINITY), |acc, cur| {
            if cur.0 > acc.0 {
                cur
            } else {
                acc
            }
        });
    // The sweep counts score >= s as positive; a strict ">" detector
    // reproduces that point when thresholded just below s.
    let best_f1_threshold = strictly_below(best_score);

    Ok(EvalCurve {
        points,
        roc,
        pr,
        auc,
        pr_auc,
        best_f1,
        best_f1_threshold,
    })
}

/// Largest representable value strictly below `x`.
fn strictly_below(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if x == 0.0 {
        return -f64::MIN_POSITIVE;
    }
    if x > 0.0 {
        f64::from_bits(x.to_bits() - 1)
    } else {
        f64::from_bits(x.to_bits() + 1)
    }
}

/// Operating points as CSV.
pub fn write_curve_csv(curve: &EvalCurve, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "threshold,tp,fp,tn,fn,tpr,fpr,precision,f1")?;
    for p in &curve.points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            p.threshold,
            p.tp,
            p.fp,
            p.tn,
            p.fn_,
            p.tpr(),
            p.fpr(),
            p.precision(),
            p.f1()
        )?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Fraction of positive-negative pairs ranked correctly, ties counted
    /// half: the probabilistic definition of ROC AUC.
    fn pair_counting_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut correct = 0.0;
        let mut total = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            if !li {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj {
                    continue;
                }
                total += 1.0;
                if scores[i] > scores[j] {
                    correct += 1.0;
                } else if scores[i] == scores[j] {
                    correct += 0.5;
                }
            }
        }
        correct / total
    }

    #[test]
    fn perfect_separation_is_unit_auc() {
        let scores = [0.9, 0.8, 0.7, 0.2, 0.1];
        let labels = [true, true, true, false, false];
        let c = eval_curves(&scores, &labels).unwrap();
        assert!((c.auc - 1.0).abs() < 1e-12);
        assert!((c.best_f1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_scores_give_half_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let n = 4000;
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let c = eval_curves(&scores, &labels).unwrap();
        assert!((c.auc - 0.5).abs() < 0.05, "auc = {}", c.auc);
    }

    #[test]
    fn auc_matches_pair_counting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..10 {
            let n = 40;
            // quantized scores force ties
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.gen_range(0.0..1.0f64) * 8.0).round() / 8.0)
                .collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            if labels.iter().all(|&l| l) || !labels.iter().any(|&l| l) {
                continue;
            }
            let c = eval_curves(&scores, &labels).unwrap();
            let oracle = pair_counting_auc(&scores, &labels);
            assert!(
                (c.auc - oracle).abs() < 1e-9,
                "trial {trial}: {} vs {}",
                c.auc,
                oracle
            );
        }
    }

    #[test]
    fn single_class_input_rejected() {
        assert!(eval_curves(&[0.1, 0.2], &[true, true]).is_err());
        assert!(eval_curves(&[0.1, 0.2], &[false, false]).is_err());
        assert!(eval_curves(&[0.1], &[true, false]).is_err());
    }

    #[test]
    fn roc_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scores: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..1.0)).collect();
        let labels: Vec<bool> = scores
            .iter()
            .map(|&s| rng.gen_bool((0.2 + 0.6 * s).clamp(0.0, 1.0)))
            .collect();
        if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
            return;
        }
        let c = eval_curves(&scores, &labels).unwrap();
        for w in c.roc.windows(2) {
            assert!(w[1].0 >= w[0].0);
            assert!(w[1].1 >= w[0].1);
        }
        assert!(c.auc >= 0.0 && c.auc <= 1.0);
    }

    #[test]
    fn best_f1_and_csv() {
        let scores = [0.9, 0.6, 0.4, 0.3];
        let labels = [true, true, false, true];
        let c = eval_curves(&scores, &labels).unwrap();
        // predict >= 0.3 is all-positive: tp=3, fp=1 -> f1 = 6/7, the best
        assert!((c.best_f1 - 6.0 / 7.0).abs() < 1e-12, "best f1 {}", c.best_f1);
        // the exported threshold reproduces that point with a strict ">"
        let tp = scores
            .iter()
            .zip(labels.iter())
            .filter(|(s, l)| **s > c.best_f1_threshold && **l)
            .count();
        let fp = scores
            .iter()
            .zip(labels.iter())
            .filter(|(s, l)| **s > c.best_f1_threshold && !**l)
            .count();
        assert_eq!((tp, fp), (3, 1));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        write_curve_csv(&c, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), c.points.len() + 1);
    }
}
