//! Temporal splicing detection from the frame-descriptor distance series.
//!
//! Frames are numbered 1..=N. The series value at 1-based position n spans
//! frames (n, n+1): a splice between shots of lengths N_X and N_Y spikes at
//! position N_X and is reported as frame index N_X + 1, the first frame of
//! the second shot.

use crate::descriptors::FrameDescriptor;
use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

/// Squared distances between adjacent frame descriptors. `values[t]` is the
/// distance at 1-based position n = t + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSeries {
    pub values: Vec<f64>,
}

impl DistanceSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `values[n-1] = || f(n) - f(n+1) ||^2` over any descriptor slice.
pub fn distance_series(descriptors: &[FrameDescriptor]) -> Result<DistanceSeries> {
    distance_series_on(descriptors, 0..8)
}

/// Distance series over a sub-range of descriptor components, so codec-only
/// (0..4) and quality-only (4..8) behavior can be compared with the
/// concatenated descriptor.
pub fn distance_series_on(
    descriptors: &[FrameDescriptor],
    range: std::ops::Range<usize>,
) -> Result<DistanceSeries> {
    if descriptors.len() < 2 {
        return Err(Error::invalid("distance series needs at least two frames"));
    }
    let values = descriptors
        .windows(2)
        .map(|w| {
            range
                .clone()
                .map(|k| {
                    let d = w[0].f[k] as f64 - w[1].f[k] as f64;
                    d * d
                })
                .sum()
        })
        .collect();
    Ok(DistanceSeries { values })
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Positions (1-based) that are local maxima clearly above the median.
fn peak_flags(values: &[f64], med: f64) -> Vec<bool> {
    let n = values.len();
    (0..n)
        .map(|t| {
            let v = values[t];
            let left_ok = t == 0 || v >= values[t - 1];
            let right_ok = t + 1 == n || v >= values[t + 1];
            left_ok && right_ok && v > 2.0 * med
        })
        .collect()
}

/// Estimate the period of regularly repeating spikes with a peak-comb score:
/// the fraction of multiples of a candidate period that land on (or next to)
/// a local maximum above the median. Returns the smallest best-scoring
/// period when the score reaches 0.6, otherwise none.
pub fn estimate_period(series: &DistanceSeries, max_period: usize) -> Result<Option<usize>> {
    let len = series.len();
    if max_period < 2 {
        return Err(Error::invalid("maximum candidate period must be >= 2"));
    }
    if len < 2 * max_period {
        return Err(Error::invalid(format!(
            "series length {len} is shorter than twice the maximum candidate period {max_period}"
        )));
    }
    let med = median(&series.values);
    let peaks = peak_flags(&series.values, med);

    let mut best: Option<(usize, f64)> = None;
    for p in 2..=max_period {
        let mut hits = 0usize;
        let mut total = 0usize;
        let mut k = 1;
        // 1-based comb position n = k*p maps to index k*p - 1; a spike pair
        // produced by one recoded frame straddles the multiple, so a hit
        // within one position counts.
        while k * p <= len {
            let idx = k * p - 1;
            total += 1;
            let lo = idx.saturating_sub(1);
            let hi = (idx + 1).min(len - 1);
            if peaks[lo..=hi].iter().any(|&f| f) {
                hits += 1;
            }
            k += 1;
        }
        if total < 2 {
            continue;
        }
        let score = hits as f64 / total as f64;
        let better = match best {
            None => true,
            Some((_, s)) => score > s + 1e-12,
        };
        if better {
            best = Some((p, score));
        }
    }
    Ok(match best {
        Some((p, score)) if score >= 0.6 => Some(p),
        _ => None,
    })
}

/// One above-threshold series position.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Reported frame index: the first frame of the second shot (n + 1 for a
    /// spike at series position n), in 2..=N.
    pub frame_index: usize,
    /// Series value at the spike.
    pub value: f64,
    /// True when the detection was discarded as a periodic false positive.
    pub suppressed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpliceReport {
    /// Surviving splice detections, ascending by frame index.
    pub detections: Vec<Detection>,
    /// Periodic detections that were discarded (suppressed = true).
    pub suppressed: Vec<Detection>,
    pub threshold: f64,
    /// Comb-estimated (or overridden) period, when suppression ran.
    pub period: Option<usize>,
}

impl SpliceReport {
    pub fn detected_indices(&self) -> Vec<usize> {
        self.detections.iter().map(|d| d.frame_index).collect()
    }
}

/// Threshold detector over the distance series with optional suppression of
/// GOP-periodic false positives: detections at (or next to) multiples of the
/// estimated period are discarded when they stay below 25% of the global
/// maximum. A manual period override skips estimation.
pub fn detect_splices(
    series: &DistanceSeries,
    threshold: f64,
    suppress: bool,
    period_override: Option<usize>,
) -> Result<SpliceReport> {
    if threshold < 0.0 {
        return Err(Error::invalid("threshold must be non-negative"));
    }
    let period = if suppress {
        match period_override {
            Some(p) => Some(p),
            None => {
                let max_p = (series.len() / 2).max(2).min(60);
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

    let global_max = series.values.iter().cloned().fold(0.0f64, f64::max);
    // 1-based position n within one of a multiple k*p, k >= 1. A single
    // recoded frame spikes the series on both of its boundaries, so the
    // comb is matched with one position of slack.
    let near_multiple = |n: usize, p: usize| -> bool {
        let below = n / p;
        for k in [below, below + 1] {
            if k >= 1 && (n as i64 - (k * p) as i64).abs() <= 1 {
                return true;
            }
        }
        false
    };

    let mut detections = Vec::new();
    let mut suppressed = Vec::new();
    for (t, &v) in series.values.iter().enumerate() {
        if v <= threshold {
            continue;
        }
        let n = t + 1;
        let is_periodic = match period {
            Some(p) => near_multiple(n, p) && v < 0.25 * global_max,
            None => false,
        };
        let det = Detection {
            frame_index: n + 1,
            value: v,
            suppressed: is_periodic,
        };
        if is_periodic {
            suppressed.push(det);
        } else {
            detections.push(det);
        }
    }
    Ok(SpliceReport {
        detections,
        suppressed,
        threshold,
        period,
    })
}

/// Write the report as CSV: every above-threshold index with its value and
/// suppressed flag.
pub fn write_report_csv(report: &SpliceReport, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "frame_index,delta_f,suppressed")?;
    let mut rows: Vec<&Detection> = report.detections.iter().chain(&report.suppressed).collect();
    rows.sort_by_key(|d| d.frame_index);
    for d in rows {
        writeln!(out, "{},{},{}", d.frame_index, d.value, u8::from(d.suppressed))?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write the whole series as plot data: 1-based position and value per line.
pub fn write_series_csv(series: &DistanceSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "n,delta_f")?;
    for (t, v) in series.values.iter().enumerate() {
        writeln!(out, "{},{}", t + 1, v)?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn desc(f: [f32; 8], frame: usize) -> FrameDescriptor {
        FrameDescriptor { f, frame }
    }

    #[test]
    fn identical_descriptors_give_zero() {
        let d = [0.25f32; 8];
        let s = distance_series(&[desc(d, 0), desc(d, 1), desc(d, 2)]).unwrap();
        assert_eq!(s.values, vec![0.0, 0.0]);
    }

    #[test]
    fn one_hot_flip_in_each_block_is_maximal() {
        let a = desc([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], 0);
        let b = desc([0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0], 1);
        let s = distance_series(&[a, b]).unwrap();
        assert!((s.values[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn reversal_reverses_the_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let descs: Vec<FrameDescriptor> = (0..10)
            .map(|n| {
                let mut f = [0.0f32; 8];
                for v in f.iter_mut() {
                    *v = rng.gen_range(0.0..1.0);
                }
                desc(f, n)
            })
            .collect();
        let fwd = distance_series(&descs).unwrap();
        let mut rev_descs = descs;
        rev_descs.reverse();
        let rev = distance_series(&rev_descs).unwrap();
        let mut flipped = fwd.values.clone();
        flipped.reverse();
        assert_eq!(rev.values, flipped);
    }

    #[test]
    fn scaling_preserves_argmax_and_squares_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let descs: Vec<FrameDescriptor> = (0..12)
            .map(|n| {
                let mut f = [0.0f32; 8];
                for v in f.iter_mut() {
                    *v = rng.gen_range(0.0..1.0);
                }
                desc(f, n)
            })
            .collect();
        let base = distance_series(&descs).unwrap();
        let scaled_descs: Vec<FrameDescriptor> = descs
            .iter()
            .map(|d| {
                let mut f = d.f;
                for v in f.iter_mut() {
                    *v *= 3.0;
                }
                desc(f, d.frame)
            })
            .collect();
        let scaled = distance_series(&scaled_descs).unwrap();
        for (a, b) in base.values.iter().zip(&scaled.values) {
            assert!((b - 9.0 * a).abs() < 1e-4 * b.max(1e-12));
        }
        let argmax = |v: &[f64]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        assert_eq!(argmax(&base.values), argmax(&scaled.values));
    }

    #[test]
    fn codec_and_quality_subranges() {
        let a = desc([1.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0], 0);
        let b = desc([1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0], 1);
        let c_only = distance_series_on(&[a.clone(), b.clone()], 0..4).unwrap();
        let q_only = distance_series_on(&[a, b], 4..8).unwrap();
        assert_eq!(c_only.values[0], 0.0);
        assert!((q_only.values[0] - 0.5).abs() < 1e-12);
    }

    fn impulse_series(len: usize, period: usize, height: f64) -> DistanceSeries {
        let mut values = vec![0.01; len];
        let mut k = 1;
        while k * period <= len {
            values[k * period - 1] = height;
            k += 1;
        }
        DistanceSeries { values }
    }

    #[test]
    fn period_of_injected_impulses() {
        let s = impulse_series(300, 30, 1.0);
        assert_eq!(estimate_period(&s, 60).unwrap(), Some(30));
        let s = impulse_series(100, 10, 1.0);
        assert_eq!(estimate_period(&s, 40).unwrap(), Some(10));
    }

    #[test]
    fn period_of_straddling_spike_pairs() {
        // one recoded frame yields spikes at n = kp and kp + 1
        let mut values = vec![0.01; 240];
        let p = 30;
        let mut k = 1;
        while k * p + 1 <= values.len() {
            values[k * p - 1] = 0.8;
            values[k * p] = 1.0;
            k += 1;
        }
        let s = DistanceSeries { values };
        assert_eq!(estimate_period(&s, 60).unwrap(), Some(p));
    }

    #[test]
    fn noise_has_no_period() {
        for seed in [1, 2, 3, 4, 5] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..240).map(|_| rng.gen_range(0.0..1.0f64)).collect();
            let s = DistanceSeries { values };
            assert_eq!(estimate_period(&s, 60).unwrap(), None, "seed {seed}");
        }
    }

    #[test]
    fn period_preconditions() {
        let s = impulse_series(50, 10, 1.0);
        assert!(estimate_period(&s, 30).is_err()); // 50 < 2*30
        assert!(estimate_period(&s, 1).is_err());
    }

    #[test]
    fn splice_report_uses_def2_indexing() {
        // 200 frames, shots of 100 + 100: spike at series position 100
        let mut values = vec![1e-4; 199];
        values[99] = 2.0;
        let s = DistanceSeries { values };
        let report = detect_splices(&s, 0.5, false, None).unwrap();
        assert_eq!(report.detected_indices(), vec![101]);
    }

    #[test]
    fn threshold_above_max_is_empty() {
        let s = impulse_series(100, 10, 1.0);
        let report = detect_splices(&s, 2.0, false, None).unwrap();
        assert!(report.detections.is_empty());
        assert!(report.suppressed.is_empty());
    }

    #[test]
    fn suppression_keeps_dominant_splice() {
        let mut s = impulse_series(300, 30, 1.0);
        s.values[149] = 20.0; // dominant splice at position 150 -> frame 151
        let report = detect_splices(&s, 0.5, true, None).unwrap();
        assert_eq!(report.period, Some(30));
        assert_eq!(report.detected_indices(), vec![151]);
        assert!(!report.suppressed.is_empty());
        assert!(report.suppressed.iter().all(|d| d.suppressed));
        // without suppression all spikes appear
        let plain = detect_splices(&s, 0.5, false, None).unwrap();
        assert!(plain.detections.len() > 1);
    }

    #[test]
    fn manual_period_override() {
        let mut s = impulse_series(100, 10, 1.0);
        s.values[44] = 30.0;
        let report = detect_splices(&s, 0.5, true, Some(10)).unwrap();
        assert_eq!(report.period, Some(10));
        assert_eq!(report.detected_indices(), vec![46]);
    }

    #[test]
    fn detections_monotone_in_threshold_without_suppression() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let values: Vec<f64> = (0..80).map(|_| rng.gen_range(0.0..1.0f64)).collect();
        let s = DistanceSeries { values };
        let low = detect_splices(&s, 0.3, false, None).unwrap();
        let high = detect_splices(&s, 0.7, false, None).unwrap();
        let low_set: std::collections::HashSet<usize> =
            low.detected_indices().into_iter().collect();
        for idx in high.detected_indices() {
            assert!(low_set.contains(&idx));
        }
        assert!(high.detections.len() <= low.detections.len());
    }

    #[test]
    fn csv_report_contains_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = impulse_series(100, 10, 0.01);
        s.values[49] = 5.0;
        let report = detect_splices(&s, 1.0, false, None).unwrap();
        let path = dir.path().join("report.csv");
        write_report_csv(&report, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("frame_index,delta_f,suppressed"));
        assert!(text.contains("51,5,0"));
        let series_path = dir.path().join("series.csv");
        write_series_csv(&s, &series_path).unwrap();
        let text = std::fs::read_to_string(&series_path).unwrap();
        assert!(text.lines().count() == 100 + 1);
    }
}
