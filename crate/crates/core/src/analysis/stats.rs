use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::AnalysisError;
use crate::team::MatchStatistics;

/// Probability that a draw from `a` exceeds a draw from `b`, ties counted
/// half, by exhaustive pair counting.
pub fn a_w(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    check_groups(a, b)?;
    let mut twice = 0u64;
    for &x in a {
        for &y in b {
            twice += match x.partial_cmp(&y).expect("finite") {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
        }
    }
    Ok(twice as f64 / (2 * a.len() * b.len()) as f64)
}

/// Same statistic through pooled midranks in O(n log n).
pub fn a_w_ranked(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    check_groups(a, b)?;
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&y| (y, false)))
        .collect();
    pooled.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("finite"));
    // ranks are doubled so midranks stay integral
    let mut rank_sum_twice = 0u64;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let mid_twice = (i + 1 + j) as u64;
        let in_a = pooled[i..j].iter().filter(|p| p.1).count() as u64;
        rank_sum_twice += mid_twice * in_a;
        i = j;
    }
    let (na, nb) = (a.len() as u64, b.len() as u64);
    let u_twice = rank_sum_twice - na * (na + 1);
    Ok(u_twice as f64 / (2 * na * nb) as f64)
}

/// Pair counting with each pair weighted by `wa[i] * wb[j]`.
pub fn a_w_weighted(a: &[f64], wa: &[f64], b: &[f64], wb: &[f64]) -> Result<f64, AnalysisError> {
    check_groups(a, b)?;
    if wa.len() != a.len() || wb.len() != b.len() {
        return Err(AnalysisError::Input("one weight per observation".into()));
    }
    if wa.iter().chain(wb).any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(AnalysisError::Input("weights must be positive".into()));
    }
    let mut num = 0.0;
    for (&x, &u) in a.iter().zip(wa) {
        for (&y, &v) in b.iter().zip(wb) {
            if x > y {
                num += u * v;
            } else if x == y {
                num += 0.5 * u * v;
            }
        }
    }
    Ok(num / (wa.iter().sum::<f64>() * wb.iter().sum::<f64>()))
}

fn check_groups(a: &[f64], b: &[f64]) -> Result<(), AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::Input("both groups must be non-empty".into()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(AnalysisError::Input("non-finite observation".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZFlag {
    Finite,
    /// Both matches have zero variance but different means.
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    pub z: f64,
    pub p_two_sided: f64,
    pub flag: ZFlag,
}

/// z = (wdl1 - wdl2) / sqrt(sem1^2 + sem2^2) over per-game scores.
pub fn wdl_z_test(m1: &MatchStatistics, m2: &MatchStatistics) -> Result<ZTest, AnalysisError> {
    if m1.per_game_scores.is_empty() || m2.per_game_scores.is_empty() {
        return Err(AnalysisError::Input("both matches need games".into()));
    }
    let (mean1, sem1) = mean_sem(&m1.per_game_scores);
    let (mean2, sem2) = mean_sem(&m2.per_game_scores);
    let diff = mean1 - mean2;
    let se = (sem1 * sem1 + sem2 * sem2).sqrt();
    if se == 0.0 {
        return Ok(if diff == 0.0 {
            ZTest {
                z: 0.0,
                p_two_sided: 1.0,
                flag: ZFlag::Finite,
            }
        } else {
            ZTest {
                z: f64::INFINITY.copysign(diff),
                p_two_sided: 0.0,
                flag: ZFlag::Infinite,
            }
        });
    }
    let z = diff / se;
    Ok(ZTest {
        z,
        p_two_sided: two_sided_normal(z),
        flag: ZFlag::Finite,
    })
}

fn mean_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn two_sided_normal(z: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * n.cdf(-z.abs())).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub t: f64,
    pub df: usize,
    pub p_two_sided: f64,
    pub ci95: [f64; 2],
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x` with Student-t inference on the
/// slope.
pub fn trend_regression(x: &[f64], y: &[f64]) -> Result<RegressionResult, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::Input("x and y differ in length".into()));
    }
    if x.len() < 3 {
        return Err(AnalysisError::Input("regression needs at least 3 points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::Input("non-finite observation".into()));
    }
    let n = x.len();
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::UndefinedSlope);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let df = n - 2;
    let slope_se = (sse / df as f64 / sxx).sqrt();
    let tdist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    let crit = tdist.inverse_cdf(0.975);
    let (t, p) = if slope_se > 0.0 {
        let t = slope / slope_se;
        (t, (2.0 * tdist.cdf(-t.abs())).min(1.0))
    } else if slope == 0.0 {
        (0.0, 1.0)
    } else {
        (f64::INFINITY.copysign(slope), 0.0)
    };
    Ok(RegressionResult {
        n,
        slope,
        intercept,
        slope_se,
        t,
        df,
        p_two_sided: p,
        ci95: [slope - crit * slope_se, slope + crit * slope_se],
        r_squared: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
    })
}

/// Sample quantile, linear interpolation between order statistics
/// (`h = (n - 1) p`). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Box-plot summary; whiskers reach the farthest data point within 1.5
/// interquartile ranges of the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: usize,
}

pub fn box_stats(xs: &[f64]) -> Result<BoxStats, AnalysisError> {
    if xs.is_empty() {
        return Err(AnalysisError::Input("no observations".into()));
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::Input("non-finite observation".into()));
    }
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let q1 = quantile_sorted(&s, 0.25);
    let q3 = quantile_sorted(&s, 0.75);
    let reach = 1.5 * (q3 - q1);
    let inside = |v: &&f64| **v >= q1 - reach && **v <= q3 + reach;
    let whisker_low = *s.iter().find(inside).expect("median is inside");
    let whisker_high = *s.iter().rev().find(inside).expect("median is inside");
    Ok(BoxStats {
        n: s.len(),
        mean: s.iter().sum::<f64>() / s.len() as f64,
        min: s[0],
        q1,
        median: quantile_sorted(&s, 0.5),
        q3,
        max: s[s.len() - 1],
        whisker_low,
        whisker_high,
        outliers: s.iter().filter(|v| !inside(v)).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(quantile_sorted(&s, 0.25), 1.75);
        assert_eq!(quantile_sorted(&[5.0], 0.9), 5.0);
    }

    #[test]
    fn whiskers_stop_at_data_points() {
        let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 5.0, 100.0]).unwrap();
        assert_eq!(b.whisker_high, 5.0);
        assert_eq!(b.whisker_low, 1.0);
        assert_eq!(b.outliers, 1);
        assert_eq!(b.max, 100.0);
    }

    #[test]
    fn exact_fit() {
        let x = [0.1, 0.3, 0.4, 0.7, 0.9];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let r = trend_regression(&x, &y).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12);
        assert!((r.intercept - 1.0).abs() < 1e-12);
        assert!(r.p_two_sided < 1e-9);
        assert!(r.ci95[1] - r.ci95[0] < 1e-6);
    }

    #[test]
    fn constant_x_has_no_slope() {
        assert!(matches!(
            trend_regression(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]),
            Err(AnalysisError::UndefinedSlope)
        ));
    }
}
