//! Paired bootstrap over arc positions for comparing two predicted arcs
//! against the same gold arc.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{spearman_values, EvalError};
use crate::arcs::EmotionArc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub rho_a: f64,
    pub rho_b: f64,
    /// `rho_a - rho_b` on the full sample.
    pub delta: f64,
    /// 2.5% and 97.5% percentiles of the resampled differences.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Two-sided p-value for `delta = 0`.
    pub p_value: f64,
    /// Resamples that produced a defined difference.
    pub resamples: usize,
    pub seed: u64,
}

/// Resamples positions (where all three arcs are present) with replacement
/// and recomputes both correlations on each resample.
pub fn bootstrap_difference(
    pred_a: &EmotionArc,
    pred_b: &EmotionArc,
    gold: &EmotionArc,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapResult, EvalError> {
    if resamples == 0 {
        return Err(EvalError::Bootstrap("need at least one resample".into()));
    }
    let by_pos = |arc: &EmotionArc| -> BTreeMap<usize, f64> {
        arc.points()
            .iter()
            .filter_map(|p| p.value.map(|v| (p.position, v)))
            .collect()
    };
    let (mb, mg) = (by_pos(pred_b), by_pos(gold));
    let (mut a, mut b, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for p in pred_a.points() {
        if let (Some(x), Some(y), Some(z)) = (p.value, mb.get(&p.position), mg.get(&p.position)) {
            a.push(x);
            b.push(*y);
            g.push(*z);
        }
    }
    let rho_a = spearman_values(&a, &g)?;
    let rho_b = spearman_values(&b, &g)?;
    let n = a.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deltas = Vec::with_capacity(resamples);
    let (mut ra, mut rb, mut rg) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for _ in 0..resamples {
        for k in 0..n {
            let i = rng.random_range(0..n);
            ra[k] = a[i];
            rb[k] = b[i];
            rg[k] = g[i];
        }
        if let (Ok(x), Ok(y)) = (spearman_values(&ra, &rg), spearman_values(&rb, &rg)) {
            deltas.push(x - y);
        }
    }
    if deltas.is_empty() {
        return Err(EvalError::Bootstrap("every resample was degenerate".into()));
    }
    deltas.sort_by(f64::total_cmp);
    let pct = |q: f64| deltas[((deltas.len() - 1) as f64 * q).round() as usize];
    let m = deltas.len() as f64;
    let le = deltas.iter().filter(|&&d| d <= 0.0).count() as f64 / m;
    let ge = deltas.iter().filter(|&&d| d >= 0.0).count() as f64 / m;
    Ok(BootstrapResult {
        rho_a,
        rho_b,
        delta: rho_a - rho_b,
        ci_low: pct(0.025),
        ci_high: pct(0.975),
        p_value: (2.0 * le.min(ge)).min(1.0),
        resamples: deltas.len(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcs::BinSpec;

    fn arc(v: Vec<f64>) -> EmotionArc {
        EmotionArc::from_values(v.into_iter().map(Some).collect(), BinSpec::rolling(1).unwrap())
    }

    #[test]
    fn clear_difference_is_significant() {
        let gold: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let good: Vec<f64> = gold.iter().map(|g| g + ((g * 7.0) % 5.0)).collect();
        let bad: Vec<f64> = gold.iter().map(|g| ((g * 37.0) % 101.0) + g * 0.1).collect();
        let r = bootstrap_difference(&arc(good), &arc(bad), &arc(gold), 300, 7).unwrap();
        assert!(r.delta > 0.0);
        assert!(r.ci_low > 0.0);
        assert!(r.p_value < 0.01);
    }

    #[test]
    fn identical_predictions_not_significant() {
        let gold: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let pred: Vec<f64> = gold.iter().map(|g| g + ((g * 13.0) % 17.0)).collect();
        let r = bootstrap_difference(&arc(pred.clone()), &arc(pred), &arc(gold), 100, 1).unwrap();
        assert_eq!(r.delta, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn deterministic_for_seed() {
        let gold: Vec<f64> = (0..80).map(|i| (i % 9) as f64).collect();
        let a: Vec<f64> = (0..80).map(|i| ((i * 5) % 11) as f64).collect();
        let b: Vec<f64> = (0..80).map(|i| i as f64).collect();
        let x = bootstrap_difference(&arc(a.clone()), &arc(b.clone()), &arc(gold.clone()), 50, 3).unwrap();
        let y = bootstrap_difference(&arc(a), &arc(b), &arc(gold), 50, 3).unwrap();
        assert_eq!(x, y);
    }
}
