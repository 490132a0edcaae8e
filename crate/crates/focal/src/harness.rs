//! Evaluation protocols over spliced-clip collections.
//!
//! Temporal: frame-wise scoring of the distance series, GOP suppression
//! applied as a mask, a detection within one frame of the truth counting as
//! the positive. Spatial: patch-wise scoring of the fused heatmap against
//! the window ground truth, patches labeled by majority overlap.

use crate::dataset::{SpatialClip, TemporalClip};
use crate::descriptors::{
    feature_tensor, temporal_average, video_frame_descriptors, FrameDescriptor, ModelPair,
};
use crate::error::{Error, Result};
use crate::eval::{eval_curves, EvalCurve};
use crate::spatial::{activation_maps, fuse};
use crate::temporal::{distance_series_on, estimate_period, DistanceSeries};

/// Descriptor components used for a distance series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSet {
    CodecOnly,
    QualityOnly,
    Concatenated,
}

impl FeatureSet {
    pub fn range(self) -> std::ops::Range<usize> {
        match self {
            FeatureSet::CodecOnly => 0..4,
            FeatureSet::QualityOnly => 4..8,
            FeatureSet::Concatenated => 0..8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::CodecOnly => "codec",
            FeatureSet::QualityOnly => "quality",
            FeatureSet::Concatenated => "concat",
        }
    }
}

/// Zero out series positions that sit on (or next to) multiples of the
/// period while staying below a quarter of the global maximum: the
/// threshold-free form of the periodic false-positive rule.
pub fn suppress_periodic(series: &DistanceSeries, period: Option<usize>) -> Vec<f64> {
    let p = match period {
        Some(p) if p >= 2 => p,
        _ => return series.values.clone(),
    };
    let max = series.values.iter().cloned().fold(0.0f64, f64::max);
    series
        .values
        .iter()
        .enumerate()
        .map(|(t, &v)| {
            let n = t + 1;
            let below = n / p;
            let near = [below, below + 1]
                .iter()
                .any(|&k| k >= 1 && (n as i64 - (k * p) as i64).abs() <= 1);
            if near && v < 0.25 * max {
                0.0
            } else {
                v
            }
        })
        .collect()
}

/// Frame-wise temporal evaluation samples for one clip: the positive sample
/// takes the best score within one position of the truth, every other
/// position contributes a negative.
pub fn temporal_samples(
    series: &DistanceSeries,
    truth_index: usize,
    suppress: bool,
    period_override: Option<usize>,
) -> Result<(Vec<f64>, Vec<bool>)> {
    let period = if suppress {
        match period_override {
            Some(p) => Some(p),
            None => {
                let max_p = (series.len() / 2).clamp(2, 60);
                if series.len() >= 2 * max_p {
                    estimate_period(series, max_p)?
                } else {
                    None
                }
            }
        }
    } else {
        None
    };
    let scores = suppress_periodic(series, period);
    // truth_index is the Def-2 frame index (N_X + 1); the spike sits at
    // series position N_X, i.e. 0-based index N_X - 1.
    if truth_index < 2 || truth_index > series.len() + 1 {
        return Err(Error::invalid(format!(
            "truth index {truth_index} outside the series"
        )));
    }
    let truth_t = truth_index - 2;
    let mut pos_best = f64::NEG_INFINITY;
    let mut out_scores = Vec::with_capacity(series.len());
    let mut out_labels = Vec::with_capacity(series.len());
    for (t, &v) in scores.iter().enumerate() {
        if (t as i64 - truth_t as i64).abs() <= 1 {
            pos_best = pos_best.max(v);
        } else {
            out_scores.push(v);
            out_labels.push(false);
        }
    }
    out_scores.push(pos_best);
    out_labels.push(true);
    Ok((out_scores, out_labels))
}

/// Per-feature-set results of a temporal evaluation.
pub struct TemporalEval {
    pub curves: Vec<(FeatureSet, EvalCurve)>,
}

impl TemporalEval {
    pub fn auc(&self, set: FeatureSet) -> f64 {
        self.curves
            .iter()
            .find(|(s, _)| *s == set)
            .map(|(_, c)| c.auc)
            .expect("feature set evaluated")
    }

    pub fn curve(&self, set: FeatureSet) -> &EvalCurve {
        &self
            .curves
            .iter()
            .find(|(s, _)| *s == set)
            .expect("feature set evaluated")
            .1
    }
}

/// Frame descriptors for every clip, once; reused across feature sets.
pub fn clip_descriptors(
    clips: &[TemporalClip],
    stride: usize,
    models: &ModelPair,
) -> Result<Vec<Vec<FrameDescriptor>>> {
    clips
        .iter()
        .map(|clip| video_frame_descriptors(&clip.seq.frames, stride, models))
        .collect()
}

/// Pooled frame-wise ROC over every clip, for the three feature sets.
pub fn evaluate_temporal(
    clips: &[TemporalClip],
    descriptors: &[Vec<FrameDescriptor>],
    suppress: bool,
    period_override: Option<usize>,
) -> Result<TemporalEval> {
    if clips.len() != descriptors.len() {
        return Err(Error::shape(
            "one descriptor sequence per clip required".to_string(),
        ));
    }
    let mut curves = Vec::new();
    for set in [
        FeatureSet::CodecOnly,
        FeatureSet::QualityOnly,
        FeatureSet::Concatenated,
    ] {
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for (clip, descs) in clips.iter().zip(descriptors) {
            let series = distance_series_on(descs, set.range())?;
            let (s, l) = temporal_samples(&series, clip.truth_index, suppress, period_override)?;
            scores.extend(s);
            labels.extend(l);
        }
        curves.push((set, eval_curves(&scores, &labels)?));
    }
    Ok(TemporalEval { curves })
}

/// Patch-wise spatial evaluation: heatmap scores over every clip pooled into
/// one curve. `window_frames` is the temporal averaging width W; ground
/// truth labels a cell positive when at least half of its footprint lies in
/// the spliced window.
pub fn evaluate_spatial(
    clips: &[SpatialClip],
    models: &ModelPair,
    stride: usize,
    window_frames: usize,
) -> Result<EvalCurve> {
    if window_frames == 0 {
        return Err(Error::invalid("temporal averaging needs at least one frame"));
    }
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for clip in clips {
        let w = window_frames.min(clip.seq.len());
        let tensors: Vec<_> = clip.seq.frames[..w]
            .iter()
            .map(|f| feature_tensor(f, stride, models))
            .collect::<Result<_>>()?;
        let avg = temporal_average(&tensors)?;
        let maps = activation_maps(&avg)?;
        let fused = fuse(&maps)?;
        for i in 0..fused.p_u {
            for j in 0..fused.p_v {
                scores.push(fused.data[i * fused.p_v + j]);
                labels.push(clip.window.patch_overlap_fraction(i, j, stride) >= 0.5);
            }
        }
    }
    eval_curves(&scores, &labels)
}

/// Mean fused-map score over cells fully inside the window: the robustness
/// probe used to track degradation under recompression.
pub fn mean_in_window_score(clip: &SpatialClip, models: &ModelPair, stride: usize) -> Result<f64> {
    let tensor = feature_tensor(&clip.seq.frames[0], stride, models)?;
    let maps = activation_maps(&tensor)?;
    let fused = fuse(&maps)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..fused.p_u {
        for j in 0..fused.p_v {
            if clip.window.patch_overlap_fraction(i, j, stride) >= 1.0 {
                sum += fused.data[i * fused.p_v + j];
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::invalid(
            "no patch lies fully inside the window at this stride",
        ));
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: Vec<f64>) -> DistanceSeries {
        DistanceSeries { values }
    }

    #[test]
    fn suppression_mask_zeroes_small_periodic_spikes() {
        let mut v = vec![0.01; 64];
        v[15] = 1.0; // n = 16
        v[31] = 1.2; // n = 32
        v[47] = 1.1; // n = 48
        v[29] = 20.0; // dominant splice at n = 30
        let s = series(v);
        let masked = suppress_periodic(&s, Some(16));
        assert_eq!(masked[15], 0.0);
        assert_eq!(masked[31], 0.0);
        assert_eq!(masked[47], 0.0);
        assert_eq!(masked[29], 20.0);
        // no period: untouched
        assert_eq!(suppress_periodic(&s, None), s.values);
    }

    #[test]
    fn temporal_samples_take_best_near_truth() {
        let mut v = vec![0.0; 10];
        v[4] = 0.3;
        v[5] = 0.9; // truth position
        let s = series(v);
        // truth frame index 7 -> series position 6 (1-based) -> t = 5
        let (scores, labels) = temporal_samples(&s, 7, false, None).unwrap();
        assert_eq!(scores.len(), 8); // 10 - 3 negatives near truth + 1 positive
        let pos: Vec<f64> = scores
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l)
            .map(|(&s, _)| s)
            .collect();
        assert_eq!(pos, vec![0.9]);
        assert!(temporal_samples(&s, 1, false, None).is_err());
        assert!(temporal_samples(&s, 30, false, None).is_err());
    }

    #[test]
    fn perfect_clips_give_unit_auc() {
        let clips_series: Vec<DistanceSeries> = (0..4)
            .map(|k| {
                let mut v = vec![0.001; 40];
                v[19 + k % 2] = 5.0;
                series(v)
            })
            .collect();
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for (k, s) in clips_series.iter().enumerate() {
            let truth = 21 + (k % 2);
            let (sc, lb) = temporal_samples(s, truth, false, None).unwrap();
            scores.extend(sc);
            labels.extend(lb);
        }
        let curve = eval_curves(&scores, &labels).unwrap();
        assert!((curve.auc - 1.0).abs() < 1e-12);
    }
}
