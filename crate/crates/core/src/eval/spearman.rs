//! Spearman rank correlation with average ranks for ties.

use std::collections::BTreeMap;

use super::EvalError;
use crate::arcs::EmotionArc;

/// Fractional ranks (1-based); tied values share the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) hold ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Pearson product-moment correlation; `None` when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho over paired values.
pub fn spearman_values(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(EvalError::TooFewPoints(x.len()));
    }
    pearson(&average_ranks(x), &average_ranks(y)).ok_or(EvalError::ConstantInput)
}

/// Paired values of two arcs at the positions present in both.
#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Positions shared by both arcs where either value is missing.
    pub excluded: usize,
}

/// Pairs points by position; positions found in only one arc are ignored.
pub fn align(a: &EmotionArc, b: &EmotionArc) -> Aligned {
    let lookup: BTreeMap<usize, Option<f64>> =
        b.points().iter().map(|p| (p.position, p.value)).collect();
    let mut out = Aligned {
        a: Vec::new(),
        b: Vec::new(),
        excluded: 0,
    };
    for p in a.points() {
        match (p.value, lookup.get(&p.position)) {
            (Some(x), Some(Some(y))) => {
                out.a.push(x);
                out.b.push(*y);
            }
            (_, Some(_)) => out.excluded += 1,
            (_, None) => {}
        }
    }
    out
}

/// Spearman's rho between two arcs over their mutually present points.
pub fn spearman(a: &EmotionArc, b: &EmotionArc) -> Result<f64, EvalError> {
    let al = align(a, b);
    spearman_values(&al.a, &al.b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcs::BinSpec;
    use proptest::prelude::*;

    fn arc(v: &[f64]) -> EmotionArc {
        EmotionArc::from_values(v.iter().map(|&x| Some(x)).collect(), BinSpec::rolling(1).unwrap())
    }

    // classic formula, valid without ties
    fn no_ties_formula(x: &[f64], y: &[f64]) -> f64 {
        let rx = average_ranks(x);
        let ry = average_ranks(y);
        let n = x.len() as f64;
        let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
        1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    }

    // independent oracle: O(n^2) rank counting and a two-pass Pearson
    fn brute_force(x: &[f64], y: &[f64]) -> f64 {
        let rank = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|&a| {
                    let less = v.iter().filter(|&&b| b < a).count() as f64;
                    let eq = v.iter().filter(|&&b| b == a).count() as f64;
                    less + (eq + 1.0) / 2.0
                })
                .collect()
        };
        let (rx, ry) = (rank(x), rank(y));
        let n = rx.len() as f64;
        let mx = rx.iter().sum::<f64>() / n;
        let my = ry.iter().sum::<f64>() / n;
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
        assert_eq!(average_ranks(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn extremes() {
        let a = arc(&[0.1, 0.5, 0.3, 0.9]);
        assert_eq!(spearman(&a, &a).unwrap(), 1.0);
        let rev = arc(&[0.9, 0.5, 0.7, 0.1]);
        assert_eq!(spearman(&a, &rev).unwrap(), -1.0);
    }

    #[test]
    fn three_point_example() {
        let x = [1.0, 2.0, 3.0];
        let y = [3.0, 1.0, 2.0];
        assert_eq!(no_ties_formula(&x, &y), -0.5);
        assert_eq!(spearman_values(&x, &y).unwrap(), -0.5);
    }

    #[test]
    fn undefined_cases() {
        assert!(matches!(
            spearman_values(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(EvalError::ConstantInput)
        ));
        assert!(matches!(
            spearman_values(&[1.0], &[2.0]),
            Err(EvalError::TooFewPoints(1))
        ));
    }

    #[test]
    fn excludes_missing_positions() {
        let bin = BinSpec::rolling(1).unwrap();
        let a = EmotionArc::from_values(vec![Some(1.0), None, Some(3.0), Some(2.0)], bin);
        let b = EmotionArc::from_values(vec![Some(1.0), Some(9.0), Some(3.0), None], bin);
        let al = align(&a, &b);
        assert_eq!(al.a, vec![1.0, 3.0]);
        assert_eq!(al.excluded, 2);
    }

    proptest! {
        #[test]
        fn matches_brute_force_with_ties(
            pairs in prop::collection::vec((0i32..6, 0i32..6), 2..25)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            match spearman_values(&x, &y) {
                Ok(r) => prop_assert!((r - brute_force(&x, &y)).abs() <= 1e-12),
                Err(EvalError::ConstantInput) => {
                    let c = |v: &[f64]| v.iter().all(|&a| a == v[0]);
                    prop_assert!(c(&x) || c(&y));
                }
                Err(e) => prop_assert!(false, "{}", e),
            }
        }

        #[test]
        fn symmetric_and_monotone_invariant(
            v in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..60)
        ) {
            let x: Vec<f64> = v.iter().map(|p| p.0).collect();
            let y: Vec<f64> = v.iter().map(|p| p.1).collect();
            let r = spearman_values(&x, &y).unwrap();
            prop_assert!((-1.0..=1.0).contains(&r));
            prop_assert_eq!(r, spearman_values(&y, &x).unwrap());
            let tx: Vec<f64> = x.iter().map(|a| (a / 10.0).exp() * 3.0 - 1.0).collect();
            prop_assert!((r - spearman_values(&tx, &y).unwrap()).abs() <= 1e-12);
            let za = arc(&x).standardize().unwrap();
            prop_assert!((r - spearman(&za, &arc(&y)).unwrap()).abs() <= 1e-12);
        }
    }
}
