//! Dynamic text streams: resampling a labeled dataset so that its gold arc
//! follows a wave with a fixed number of crests and troughs.
//!
//! The target is built in standardized units as a piecewise-linear path
//! through alternating extrema. Each extremum gets an amplitude drawn from
//! `amplitude` and a half-width (the length of the ramp leading into it)
//! drawn from `width`. When one kind of extremum runs out before the other,
//! the surplus extrema are separated by a short plateau at zero so that no
//! extra strict extremum is created. The target is mapped to label units
//! with the source labels' mean and standard deviation, and every step
//! draws an instance uniformly from the `k` nearest by gold label.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimulateError;
use crate::arcs::{label_arc, mean_std, BinSpec, EmotionArc, LabeledInstance, LabeledStream};

const PLATEAU: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveSpec {
    pub n_crests: usize,
    pub n_troughs: usize,
    /// Extremum heights in standardized units.
    pub amplitude: (f64, f64),
    /// Ramp lengths in instances.
    pub width: (usize, usize),
    /// Size of the nearest-neighbour pool each step samples from.
    pub k: usize,
    /// Rolling bin used for the dynamic gold arc.
    pub arc_bin: usize,
    pub seed: u64,
}

impl Default for WaveSpec {
    fn default() -> Self {
        WaveSpec {
            n_crests: 200,
            n_troughs: 200,
            amplitude: (0.5, 3.0),
            width: (20, 400),
            k: 10,
            arc_bin: 100,
            seed: 0,
        }
    }
}

impl WaveSpec {
    pub fn validate(&self) -> Result<(), SimulateError> {
        let bad = |m: String| Err(SimulateError::InvalidWave(m));
        if self.n_crests == 0 || self.n_troughs == 0 {
            return bad("need at least one crest and one trough".into());
        }
        let (alo, ahi) = self.amplitude;
        if !alo.is_finite() || !ahi.is_finite() || alo < 0.0 || alo > ahi {
            return bad(format!("amplitude range {alo}:{ahi} must satisfy 0 <= lo <= hi"));
        }
        let (wlo, whi) = self.width;
        if wlo < 3 {
            return bad(format!(
                "width range {wlo}:{whi} too small: every segment needs at least 3 steps"
            ));
        }
        if wlo > whi {
            return bad(format!("width range {wlo}:{whi} is empty"));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.arc_bin == 0 {
            return bad("arc bin size must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Extremum {
    Crest,
    Trough,
}

fn ramp(out: &mut Vec<f64>, to: f64, steps: usize) {
    let from = *out.last().expect("trajectory starts non-empty");
    for s in 1..=steps {
        out.push(from + (to - from) * s as f64 / steps as f64);
    }
}

/// Target trajectory in standardized units.
pub fn wave_trajectory(spec: &WaveSpec, rng: &mut impl Rng) -> Result<Vec<f64>, SimulateError> {
    spec.validate()?;
    let (mut crests, mut troughs) = (spec.n_crests, spec.n_troughs);
    let mut want_crest = crests >= troughs;
    let mut out = vec![0.0];
    let mut prev: Option<Extremum> = None;
    while crests + troughs > 0 {
        let kind = match (want_crest, crests > 0, troughs > 0) {
            (true, true, _) | (false, true, false) => Extremum::Crest,
            _ => Extremum::Trough,
        };
        match kind {
            Extremum::Crest => crests -= 1,
            Extremum::Trough => troughs -= 1,
        }
        let amp = draw_amplitude(spec, rng);
        let width = rng.random_range(spec.width.0..=spec.width.1);
        let peak = if kind == Extremum::Crest { amp } else { -amp };
        if prev == Some(kind) {
            ramp(&mut out, 0.0, width);
            ramp(&mut out, 0.0, PLATEAU);
        }
        ramp(&mut out, peak, width);
        prev = Some(kind);
        want_crest = kind == Extremum::Trough;
    }
    let width = rng.random_range(spec.width.0..=spec.width.1);
    ramp(&mut out, 0.0, width);
    Ok(out)
}

fn draw_amplitude(spec: &WaveSpec, rng: &mut impl Rng) -> f64 {
    let (lo, hi) = spec.amplitude;
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Counts strict interior local maxima and minima.
pub fn count_extrema(values: &[f64]) -> (usize, usize) {
    let mut crests = 0;
    let mut troughs = 0;
    for w in values.windows(3) {
        if w[1] > w[0] && w[1] > w[2] {
            crests += 1;
        } else if w[1] < w[0] && w[1] < w[2] {
            troughs += 1;
        }
    }
    (crests, troughs)
}

/// Counts turning points of a noisy series: a crest is confirmed once the
/// series has fallen by at least `min_swing` from its running maximum, and a
/// trough once it has risen by `min_swing` from its running minimum. The
/// first swing only sets the direction.
pub fn count_swings(values: &[f64], min_swing: f64) -> (usize, usize) {
    let Some(&first) = values.first() else {
        return (0, 0);
    };
    let moved = |d: f64| d >= min_swing && d > 0.0;
    let (mut crests, mut troughs) = (0, 0);
    let (mut hi, mut lo) = (first, first);
    let mut rising: Option<bool> = None;
    for &v in &values[1..] {
        match rising {
            None => {
                hi = hi.max(v);
                lo = lo.min(v);
                if moved(v - lo) {
                    rising = Some(true);
                    hi = v;
                } else if moved(hi - v) {
                    rising = Some(false);
                    lo = v;
                }
            }
            Some(true) if v > hi => hi = v,
            Some(true) if moved(hi - v) => {
                crests += 1;
                rising = Some(false);
                lo = v;
            }
            Some(false) if v < lo => lo = v,
            Some(false) if moved(v - lo) => {
                troughs += 1;
                rising = Some(true);
                hi = v;
            }
            _ => {}
        }
    }
    (crests, troughs)
}

/// Indices (into the source stream) of the `k` instances whose gold labels
/// are nearest to a target.
struct NearestIndex {
    /// `(gold, source index)` sorted by gold then index.
    sorted: Vec<(f64, usize)>,
}

impl NearestIndex {
    fn new(golds: &[f64]) -> Self {
        let mut sorted: Vec<(f64, usize)> = golds.iter().copied().zip(0..).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        NearestIndex { sorted }
    }

    fn nearest(&self, target: f64, k: usize, out: &mut Vec<usize>) {
        out.clear();
        let n = self.sorted.len();
        let k = k.min(n);
        let mut right = self.sorted.partition_point(|e| e.0 < target);
        let mut left = right;
        while out.len() < k {
            let take_left = match (left > 0, right < n) {
                (true, true) => {
                    (target - self.sorted[left - 1].0) <= (self.sorted[right].0 - target)
                }
                (true, false) => true,
                (false, _) => false,
            };
            if take_left {
                left -= 1;
                out.push(self.sorted[left].1);
            } else {
                out.push(self.sorted[right].1);
                right += 1;
            }
        }
    }
}

/// A resampled stream together with the target it was built to follow.
#[derive(Debug, Clone)]
pub struct DynamicStream {
    pub stream: LabeledStream,
    /// Source index of each sampled instance.
    pub source_indices: Vec<usize>,
    /// Target trajectory in standardized units, one value per instance.
    pub target: Vec<f64>,
    /// Target mapped to label units.
    pub target_labels: Vec<f64>,
    /// Standardized rolling-mean arc of the sampled gold labels.
    pub gold_arc: EmotionArc,
    pub target_crests: usize,
    pub target_troughs: usize,
    /// Turning points of `gold_arc` with a swing of at least the smallest
    /// amplitude (see [`count_swings`]).
    pub arc_crests: usize,
    pub arc_troughs: usize,
    pub seed: u64,
}

/// Samples instances with replacement so the gold signal follows a wave.
pub fn synthesize_dynamic(stream: &LabeledStream, spec: &WaveSpec) -> Result<DynamicStream, SimulateError> {
    spec.validate()?;
    let golds = stream.golds()?;
    let first = golds.first().ok_or(SimulateError::TooFewDistinctLabels)?;
    if golds.iter().all(|g| g == first) {
        return Err(SimulateError::TooFewDistinctLabels);
    }
    let (mean, std) = mean_std(&golds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let target = wave_trajectory(spec, &mut rng)?;
    let (target_crests, target_troughs) = count_extrema(&target);

    let index = NearestIndex::new(&golds);
    let mut pool = Vec::with_capacity(spec.k);
    let mut source_indices = Vec::with_capacity(target.len());
    let mut target_labels = Vec::with_capacity(target.len());
    for &z in &target {
        let t = mean + std * z;
        index.nearest(t, spec.k, &mut pool);
        source_indices.push(pool[rng.random_range(0..pool.len())]);
        target_labels.push(t);
    }

    let instances: Vec<LabeledInstance> = source_indices
        .iter()
        .enumerate()
        .map(|(i, &src)| LabeledInstance {
            index: i,
            ..stream.instances()[src].clone()
        })
        .collect();
    let sampled: Vec<f64> = source_indices.iter().map(|&s| golds[s]).collect();
    let bin = BinSpec::rolling(spec.arc_bin)?;
    let gold_arc = label_arc(&sampled, bin)?.standardize()?;
    let (arc_crests, arc_troughs) = count_swings(&gold_arc.present_values(), spec.amplitude.0);
    Ok(DynamicStream {
        stream: LabeledStream::new(instances)?,
        source_indices,
        target,
        target_labels,
        gold_arc,
        target_crests,
        target_troughs,
        arc_crests,
        arc_troughs,
        seed: spec.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcs::ArcError;

    fn source(n: usize) -> LabeledStream {
        let golds: Vec<f64> = (0..n).map(|i| ((i * 7919 + 3) % 101) as f64 / 100.0).collect();
        LabeledStream::from_pairs(golds.iter().enumerate().map(|(i, g)| (format!("t{i}"), Some(*g))))
    }

    #[test]
    fn swings_ignore_small_wiggles_and_plateaus() {
        let v = [0.0, 1.0, 1.0, 0.9, 1.0, 0.0, -1.0, -1.0, -0.95, 0.5];
        assert_eq!(count_extrema(&v), (1, 1));
        assert_eq!(count_swings(&v, 0.5), (1, 1));
        assert_eq!(count_swings(&v, 0.05), (2, 2));
        assert_eq!(count_swings(&[1.0, 1.0, 1.0], 0.0), (0, 0));
        assert_eq!(count_swings(&[], 0.5), (0, 0));
    }

    #[test]
    fn default_wave_has_exact_extrema() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = wave_trajectory(&WaveSpec::default(), &mut rng).unwrap();
        assert_eq!(count_extrema(&t), (200, 200));
        assert_eq!(count_swings(&t, 0.5), (200, 200));
        assert!(t.iter().all(|v| v.abs() <= 3.0 + 1e-12));
    }

    #[test]
    fn unbalanced_counts() {
        for (c, tr) in [(5, 1), (1, 4), (3, 3), (1, 1), (7, 6)] {
            let spec = WaveSpec {
                n_crests: c,
                n_troughs: tr,
                width: (3, 9),
                ..WaveSpec::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let t = wave_trajectory(&spec, &mut rng).unwrap();
            assert_eq!(count_extrema(&t), (c, tr), "spec {c}/{tr}");
        }
    }

    #[test]
    fn rejects_narrow_widths() {
        let spec = WaveSpec {
            width: (2, 10),
            ..WaveSpec::default()
        };
        assert!(matches!(
            synthesize_dynamic(&source(100), &spec),
            Err(SimulateError::InvalidWave(_))
        ));
        let spec = WaveSpec {
            amplitude: (2.0, 1.0),
            ..WaveSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn needs_two_distinct_labels() {
        let s = LabeledStream::from_golds(&[1.0; 20]);
        assert!(matches!(
            synthesize_dynamic(&s, &WaveSpec::default()),
            Err(SimulateError::TooFewDistinctLabels)
        ));
    }

    #[test]
    fn flat_wave_hits_zero_variance() {
        // the label mean is exactly 0 and 50 instances sit on it, so every
        // step draws a 0-labeled instance
        let golds: Vec<f64> = (0..200).map(|i| (i % 2) as f64 * 2.0 - 1.0).collect();
        let mut with_center = golds.clone();
        with_center.extend(std::iter::repeat(0.0).take(50));
        let s = LabeledStream::from_golds(&with_center);
        let spec = WaveSpec {
            amplitude: (0.0, 0.0),
            n_crests: 3,
            n_troughs: 3,
            width: (5, 10),
            arc_bin: 5,
            ..WaveSpec::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = wave_trajectory(&spec, &mut rng).unwrap();
        assert!(t.iter().all(|v| *v == 0.0));
        assert!(matches!(
            synthesize_dynamic(&s, &spec),
            Err(SimulateError::Arc(ArcError::ZeroVariance))
        ));
    }

    #[test]
    fn sampled_instances_are_k_nearest() {
        let src = source(500);
        let golds = src.golds().unwrap();
        let spec = WaveSpec {
            n_crests: 20,
            n_troughs: 20,
            seed: 5,
            ..WaveSpec::default()
        };
        let dy = synthesize_dynamic(&src, &spec).unwrap();
        assert_eq!(dy.stream.len(), dy.target.len());
        assert_eq!((dy.target_crests, dy.target_troughs), (20, 20));
        // brute-force k-th order statistic of |gold - target| at every step
        for (step, &src_idx) in dy.source_indices.iter().enumerate() {
            let t = dy.target_labels[step];
            let mut d: Vec<f64> = golds.iter().map(|g| (g - t).abs()).collect();
            d.sort_by(f64::total_cmp);
            let kth = d[spec.k - 1];
            assert!((golds[src_idx] - t).abs() <= kth + 1e-12, "step {step}");
            assert_eq!(dy.stream.instances()[step].gold, Some(golds[src_idx]));
            assert_eq!(dy.stream.instances()[step].text, format!("t{src_idx}"));
        }
        let v = dy.gold_arc.present_values();
        assert_eq!(v.len(), dy.stream.len() - spec.arc_bin + 1);
        assert!(dy.gold_arc.is_standardized());
    }

    #[test]
    fn source_untouched_and_deterministic() {
        let src = source(300);
        let before = src.clone();
        let spec = WaveSpec {
            n_crests: 10,
            n_troughs: 10,
            seed: 77,
            ..WaveSpec::default()
        };
        let a = synthesize_dynamic(&src, &spec).unwrap();
        let b = synthesize_dynamic(&src, &spec).unwrap();
        assert_eq!(src, before);
        assert_eq!(a.source_indices, b.source_indices);
        assert!(a.stream.len() > src.len());
    }
}
