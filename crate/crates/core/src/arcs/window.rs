//! Windowed ratio-of-sums over a stream.
//!
//! Each stream element contributes a numerator (a score sum) and an integer
//! weight (how many items that sum covers). A window's value is the ratio of
//! the summed numerators to the summed weights, or missing when the weights
//! sum to zero.
//!
//! Rolling windows are computed incrementally with compensated running sums.
//! Every [`RESUM_PERIOD`] positions the running sum is rebuilt from scratch,
//! and those block boundaries are fixed by position, so splitting the work
//! across threads by block gives bit-identical results to a sequential pass.

use rayon::prelude::*;

use super::{BinMode, BinSpec};

/// Positions between exact re-summations of the rolling window.
pub const RESUM_PERIOD: usize = 4096;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Number of windows a stream of `n` elements yields.
pub fn window_count(n: usize, bin: BinSpec) -> usize {
    let b = bin.size();
    match bin.mode() {
        BinMode::Rolling if b <= n => n - b + 1,
        BinMode::Rolling => 0,
        BinMode::Tumbling => n / b,
    }
}

/// First element index of window `k`.
pub fn window_start(k: usize, bin: BinSpec) -> usize {
    match bin.mode() {
        BinMode::Rolling => k,
        BinMode::Tumbling => k * bin.size(),
    }
}

fn ratio(num: f64, weight: u64) -> Option<f64> {
    (weight > 0).then(|| num / weight as f64)
}

fn direct(nums: &[f64], weights: &[u64]) -> Option<f64> {
    let mut acc = CompensatedSum::default();
    let mut w = 0u64;
    for (x, c) in nums.iter().zip(weights) {
        acc.add(*x);
        w += c;
    }
    ratio(acc.value(), w)
}

/// Ratio of windowed sums. `nums` and `weights` must have equal length.
pub fn windowed_ratio(nums: &[f64], weights: &[u64], bin: BinSpec) -> Vec<Option<f64>> {
    assert_eq!(nums.len(), weights.len());
    let b = bin.size();
    let count = window_count(nums.len(), bin);
    match bin.mode() {
        BinMode::Tumbling => (0..count)
            .into_par_iter()
            .map(|k| direct(&nums[k * b..(k + 1) * b], &weights[k * b..(k + 1) * b]))
            .collect(),
        BinMode::Rolling => {
            let blocks = count.div_ceil(RESUM_PERIOD);
            let mut out = Vec::with_capacity(count);
            let parts: Vec<Vec<Option<f64>>> = (0..blocks)
                .into_par_iter()
                .map(|blk| {
                    let first = blk * RESUM_PERIOD;
                    let last = ((blk + 1) * RESUM_PERIOD).min(count);
                    rolling_block(nums, weights, b, first, last)
                })
                .collect();
            for p in parts {
                out.extend(p);
            }
            out
        }
    }
}

/// Rolling windows starting at positions `first..last`.
fn rolling_block(nums: &[f64], weights: &[u64], b: usize, first: usize, last: usize) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(last - first);
    let mut acc = CompensatedSum::default();
    let mut w = 0u64;
    for i in first..first + b {
        acc.add(nums[i]);
        w += weights[i];
    }
    out.push(ratio(acc.value(), w));
    for start in first + 1..last {
        let leaving = start - 1;
        let entering = start + b - 1;
        acc.add(-nums[leaving]);
        acc.add(nums[entering]);
        w = w - weights[leaving] + weights[entering];
        out.push(ratio(acc.value(), w));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(nums: &[f64], weights: &[u64], bin: BinSpec) -> Vec<Option<f64>> {
        let b = bin.size();
        let mut out = vec![];
        let mut start = 0;
        while start + b <= nums.len() {
            let s: f64 = nums[start..start + b].iter().sum();
            let w: u64 = weights[start..start + b].iter().sum();
            out.push(if w > 0 { Some(s / w as f64) } else { None });
            start += match bin.mode() {
                BinMode::Rolling => 1,
                BinMode::Tumbling => b,
            };
        }
        out
    }

    #[test]
    fn compensated_sum_cancels() {
        let mut acc = CompensatedSum::default();
        acc.add(1e16);
        acc.add(1.0);
        acc.add(-1e16);
        assert_eq!(acc.value(), 1.0);
    }

    #[test]
    fn crosses_resum_boundary() {
        let n = 3 * RESUM_PERIOD + 17;
        let nums: Vec<f64> = (0..n).map(|i| ((i * 7919) % 1000) as f64 / 7.0).collect();
        let weights = vec![1u64; n];
        let bin = BinSpec::rolling(250).unwrap();
        let fast = windowed_ratio(&nums, &weights, bin);
        let slow = naive(&nums, &weights, bin);
        assert_eq!(fast.len(), slow.len());
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a.unwrap() - b.unwrap()).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn agrees_with_naive(
            data in prop::collection::vec((-5.0f64..5.0, 0u64..3), 1..400),
            b in 1usize..60,
            tumbling in any::<bool>(),
        ) {
            let nums: Vec<f64> = data.iter().map(|d| d.0 * d.1 as f64).collect();
            let weights: Vec<u64> = data.iter().map(|d| d.1).collect();
            let bin = if tumbling { BinSpec::tumbling(b) } else { BinSpec::rolling(b) }.unwrap();
            let fast = windowed_ratio(&nums, &weights, bin);
            let slow = naive(&nums, &weights, bin);
            prop_assert_eq!(fast.len(), window_count(nums.len(), bin));
            prop_assert_eq!(fast.len(), slow.len());
            for (a, b) in fast.iter().zip(&slow) {
                match (a, b) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-9),
                    (x, y) => prop_assert_eq!(x, y),
                }
            }
        }
    }
}
