//! Statistics over run metrics.
//!
//! Proportion tests, correlations, a permutation test for learning trends
//! and BIC-approximated Bayes factors for block effects. Results share the
//! [`StatResult`] shape so they can be written to one CSV.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::factorial::ln_binomial;

use crate::rng::shuffle;
use crate::{Error, Result, Rng};

pub mod reference;

pub use reference::{compare_to_human, ComparisonRow, HumanReference, LearnerValue};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub bayes_factor: Option<f64>,
    pub method: String,
    pub n: Vec<usize>,
}

impl StatResult {
    fn with_p(statistic: f64, p: f64, method: &str, n: Vec<usize>) -> Self {
        Self {
            statistic,
            p_value: Some(p.clamp(0.0, 1.0)),
            bayes_factor: None,
            method: method.to_owned(),
            n,
        }
    }

    fn with_bf(statistic: f64, bf: f64, method: &str, n: Vec<usize>) -> Self {
        Self {
            statistic,
            p_value: None,
            bayes_factor: Some(bf),
            method: method.to_owned(),
            n,
        }
    }
}

pub const EXACT_TEST_BELOW: usize = 30;

/// Two-sided comparison of `k1/n1` against `k2/n2`.
///
/// Fisher's exact test when either sample is below 30, otherwise the pooled
/// normal approximation. `statistic` is `k1/n1 - k2/n2` either way.
pub fn two_proportion_test(k1: usize, n1: usize, k2: usize, n2: usize) -> Result<StatResult> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::Stats("sample sizes must be at least 1".into()));
    }
    if k1 > n1 || k2 > n2 {
        return Err(Error::Stats(format!(
            "successes exceed trials: {k1}/{n1}, {k2}/{n2}"
        )));
    }
    let diff = k1 as f64 / n1 as f64 - k2 as f64 / n2 as f64;
    let n = vec![n1, n2];
    if n1 < EXACT_TEST_BELOW || n2 < EXACT_TEST_BELOW {
        return Ok(StatResult::with_p(
            diff,
            fisher_exact(k1, n1, k2, n2),
            "fisher_exact",
            n,
        ));
    }
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return Ok(StatResult::with_p(diff, 1.0, "z_test_pooled", n));
    }
    let z = diff / se;
    let normal = Normal::standard();
    let p = 2.0 * (1.0 - normal.cdf(z.abs()));
    Ok(StatResult::with_p(diff, p, "z_test_pooled", n))
}

/// Sum of hypergeometric table probabilities no larger than the observed
/// one, with the margins fixed.
fn fisher_exact(k1: usize, n1: usize, k2: usize, n2: usize) -> f64 {
    let total = (k1 + k2) as u64;
    let (n1, n2) = (n1 as u64, n2 as u64);
    let ln_denominator = ln_binomial(n1 + n2, total);
    let ln_p = |x: u64| ln_binomial(n1, x) + ln_binomial(n2, total - x) - ln_denominator;
    let observed = ln_p(k1 as u64);
    let lo = total.saturating_sub(n2);
    let hi = total.min(n1);
    let p: f64 = (lo..=hi)
        .map(ln_p)
        .filter(|lp| *lp <= observed + 1e-7)
        .map(f64::exp)
        .sum();
    p.min(1.0)
}

/// Pearson r with a two-sided p-value from Student's t on `n - 2` degrees
/// of freedom.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<StatResult> {
    if x.len() != y.len() {
        return Err(Error::Stats(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Stats(format!("need at least 3 pairs, got {n}")));
    }
    let r = pearson_r(x, y)
        .ok_or_else(|| Error::Stats("zero variance, correlation undefined".into()))?;
    let df = (n - 2) as f64;
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Stats(e.to_string()))?;
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Ok(StatResult::with_p(r, p, "pearson_t", vec![n]))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pearson_r(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation between block position and `curve`; a flat curve
/// scores 0.
pub fn spearman_with_position(curve: &[f64]) -> f64 {
    let position: Vec<f64> = (1..=curve.len()).map(|i| i as f64).collect();
    pearson_r(&position, &average_ranks(curve)).unwrap_or(0.0)
}

fn check_matrix(curves: &[Vec<f64>]) -> Result<usize> {
    if curves.len() < 2 {
        return Err(Error::Stats(format!(
            "need at least 2 runs, got {}",
            curves.len()
        )));
    }
    let blocks = curves[0].len();
    if blocks < 2 {
        return Err(Error::Stats(format!(
            "need at least 2 blocks, got {blocks}"
        )));
    }
    if curves.iter().any(|c| c.len() != blocks) {
        return Err(Error::Stats("runs have different numbers of blocks".into()));
    }
    if curves.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Stats("non-finite accuracy".into()));
    }
    Ok(blocks)
}

const PERMUTATION_CHUNK: usize = 500;

/// Mean per-run Spearman correlation between block index and accuracy,
/// against a null that shuffles block labels independently within each run.
///
/// `p = (b + 1) / (n_perm + 1)` where `b` counts permutations at least as
/// large as the observed statistic. Permutations run in fixed chunks with
/// their own streams split from `rng`, so the result does not depend on
/// thread scheduling.
pub fn permutation_trend_test(curves: &[Vec<f64>], n_perm: usize, rng: &Rng) -> Result<StatResult> {
    let blocks = check_matrix(curves)?;
    if n_perm == 0 {
        return Err(Error::Stats("n_perm must be positive".into()));
    }
    let stat =
        |m: &[Vec<f64>]| m.iter().map(|c| spearman_with_position(c)).sum::<f64>() / m.len() as f64;
    let observed = stat(curves);
    let chunks = n_perm.div_ceil(PERMUTATION_CHUNK);
    let exceed: usize = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut stream = rng.split_indexed("permutation", chunk as u64);
            let size = PERMUTATION_CHUNK.min(n_perm - chunk * PERMUTATION_CHUNK);
            (0..size)
                .filter(|_| {
                    let permuted: Vec<Vec<f64>> = curves
                        .iter()
                        .map(|c| shuffle(c.clone(), &mut stream))
                        .collect();
                    stat(&permuted) >= observed - 1e-12
                })
                .count()
        })
        .sum();
    let p = (exceed + 1) as f64 / (n_perm + 1) as f64;
    Ok(StatResult::with_p(
        observed,
        p,
        "permutation_mean_spearman",
        vec![curves.len(), blocks],
    ))
}

/// `exp((bic_null - bic_alt) / 2)`: evidence for the alternative.
pub fn bayes_factor_from_bic(bic_null: f64, bic_alt: f64) -> f64 {
    ((bic_null - bic_alt) / 2.0).exp()
}

/// Gaussian least-squares BIC with `params` mean parameters.
fn bic(rss: f64, n: usize, params: usize) -> f64 {
    let n = n as f64;
    n * (rss / n).ln() + params as f64 * n.ln()
}

/// Intercept-only against one mean per block, over every run-by-block
/// accuracy. `statistic` holds `BIC_null - BIC_alt`.
pub fn bf_bic_block_effect(curves: &[Vec<f64>]) -> Result<StatResult> {
    let blocks = check_matrix(curves)?;
    let values: Vec<f64> = curves.iter().flatten().copied().collect();
    let n = values.len();
    if n <= blocks {
        return Err(Error::Stats(
            "singular design: no residual degrees of freedom".into(),
        ));
    }
    let grand = mean(&values);
    let block_means: Vec<f64> = (0..blocks)
        .map(|b| curves.iter().map(|c| c[b]).sum::<f64>() / curves.len() as f64)
        .collect();
    let rss_null: f64 = values.iter().map(|v| (v - grand).powi(2)).sum();
    let rss_alt: f64 = curves
        .iter()
        .flat_map(|c| {
            c.iter()
                .enumerate()
                .map(|(b, v)| (v - block_means[b]).powi(2))
        })
        .sum();
    if rss_alt <= f64::EPSILON * n as f64 {
        if rss_null <= f64::EPSILON * n as f64 {
            return Ok(StatResult::with_bf(
                0.0,
                1.0,
                "bic_categorical_block",
                vec![curves.len(), blocks],
            ));
        }
        return Err(Error::Stats(
            "singular design: block means fit the data exactly".into(),
        ));
    }
    let bic_null = bic(rss_null, n, 1);
    let bic_alt = bic(rss_alt, n, blocks);
    Ok(StatResult::with_bf(
        bic_null - bic_alt,
        bayes_factor_from_bic(bic_null, bic_alt),
        "bic_categorical_block",
        vec![curves.len(), blocks],
    ))
}

/// Directional evidence for accuracy rising with block index: the BIC
/// factor for a linear slope, times `2 * Phi(slope / se)`. Values below 1
/// favour no learning or the opposite direction. `statistic` is the slope.
pub fn bf_bic_linear_trend(curves: &[Vec<f64>]) -> Result<StatResult> {
    let blocks = check_matrix(curves)?;
    let (x, y): (Vec<f64>, Vec<f64>) = curves
        .iter()
        .flat_map(|c| c.iter().enumerate().map(|(b, v)| ((b + 1) as f64, *v)))
        .unzip();
    let n = y.len();
    let (mx, my) = (mean(&x), mean(&y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rss_null: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let rss_alt: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    if rss_alt <= f64::EPSILON * n as f64 {
        return Err(Error::Stats(
            "singular design: trend fits the data exactly".into(),
        ));
    }
    let se = (rss_alt / (n - 2) as f64 / sxx).sqrt();
    let bf_two_sided = bayes_factor_from_bic(bic(rss_null, n, 1), bic(rss_alt, n, 2));
    let direction = 2.0 * Normal::standard().cdf(slope / se);
    Ok(StatResult::with_bf(
        slope,
        bf_two_sided * direction,
        "bic_linear_trend_directional",
        vec![curves.len(), blocks],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;

    #[test]
    fn proportion_examples() {
        let r = two_proportion_test(5, 10, 5, 10).unwrap();
        assert!((r.p_value.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.method, "fisher_exact");
        let r = two_proportion_test(10, 10, 0, 10).unwrap();
        assert!(r.p_value.unwrap() < 0.001);
        assert_eq!(
            two_proportion_test(0, 10, 0, 10).unwrap().p_value,
            Some(1.0)
        );
        let r = two_proportion_test(0, 40, 0, 40).unwrap();
        assert_eq!((r.method.as_str(), r.p_value), ("z_test_pooled", Some(1.0)));
        assert!(two_proportion_test(11, 10, 0, 10).is_err());
        assert!(two_proportion_test(0, 0, 0, 10).is_err());
    }

    #[test]
    fn z_test_matches_hand_value() {
        // p1 = .6, p2 = .4, pooled .5, se = sqrt(.25 * 2/50) = .1, z = 2.
        let r = two_proportion_test(30, 50, 20, 50).unwrap();
        assert!((r.p_value.unwrap() - 0.045_500_263_896_358_4).abs() < 1e-9);
    }

    #[test]
    fn pearson_basics() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_correlation(&x, &x).unwrap().statistic - 1.0).abs() < 1e-12);
        assert!((pearson_correlation(&x, &neg).unwrap().statistic + 1.0).abs() < 1e-12);
        assert!(pearson_correlation(&x, &[1.0; 5]).is_err());
        assert!(pearson_correlation(&x[..2], &x[..2]).is_err());
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(
            average_ranks(&[0.5, 0.2, 0.5, 0.9]),
            vec![2.5, 1.0, 2.5, 4.0]
        );
        assert_eq!(spearman_with_position(&[0.3; 6]), 0.0);
        assert!((spearman_with_position(&[0.1, 0.2, 0.3]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trend_extremes() {
        let rising: Vec<Vec<f64>> = (0..15)
            .map(|_| (0..6).map(|b| 0.5 + 0.05 * b as f64).collect())
            .collect();
        let r = permutation_trend_test(&rising, 2000, &make_rng(1)).unwrap();
        // Only a permutation that restores every run's order ties the
        // observed maximum.
        assert!(r.p_value.unwrap() <= 2.0 / 2001.0);
        let flat = vec![vec![0.5; 6]; 15];
        let r = permutation_trend_test(&flat, 2000, &make_rng(1)).unwrap();
        assert_eq!(r.p_value, Some(1.0));
        assert!(permutation_trend_test(&flat[..1], 10, &make_rng(1)).is_err());
    }

    #[test]
    fn trend_is_schedule_independent() {
        let mut rng = make_rng(3);
        use rand::Rng as _;
        let curves: Vec<Vec<f64>> = (0..15)
            .map(|_| (0..6).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let a = permutation_trend_test(&curves, 3000, &make_rng(9)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| permutation_trend_test(&curves, 3000, &make_rng(9)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn equal_bics_give_unit_factor() {
        assert_eq!(bayes_factor_from_bic(12.5, 12.5), 1.0);
        assert!(bayes_factor_from_bic(20.0, 10.0) > 100.0);
        let flat = vec![vec![0.5; 6]; 4];
        assert_eq!(bf_bic_block_effect(&flat).unwrap().bayes_factor, Some(1.0));
    }
}
