//! Aggregation and significance analysis of per-image scores: medians with
//! best/second-best marks, paired two-tailed t-tests, and grouping of
//! conditions that are not significantly different.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Student-t distribution through the regularized incomplete beta function.

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

// Continued fraction for the incomplete beta function, modified Lentz.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 10_000;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Cumulative distribution function of Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let x = df / (df + t * t);
    let tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Two-tailed p-value of a t statistic.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t)).min(1.0)
}

/// Result of a paired t-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
    pub mean_difference: f64,
}

/// Two-tailed paired t-test on `a - b`.
///
/// Differences with zero spread give `p = 1` when they are all zero and
/// `p = 0` (with an infinite `t`) otherwise.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::contract("paired t-test needs at least 2 pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let df = nf - 1.0;
    // Differences that are constant up to rounding count as zero variance.
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if var.sqrt() <= 1e-12 * scale || var == 0.0 {
        return Ok(if mean == 0.0 || scale == 0.0 {
            PairedTTest {
                t: 0.0,
                p: 1.0,
                df,
                mean_difference: 0.0,
            }
        } else {
            PairedTTest {
                t: f64::INFINITY.copysign(mean),
                p: 0.0,
                df,
                mean_difference: mean,
            }
        });
    }
    let t = mean / (var / nf).sqrt();
    Ok(PairedTTest {
        t,
        p: student_t_two_tailed(t, df),
        df,
        mean_difference: mean,
    })
}

/// Per-condition score vectors, paired across conditions by image order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    conditions: Vec<String>,
    samples: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(conditions: Vec<String>, samples: Vec<Vec<f64>>) -> Result<Self> {
        if conditions.is_empty() || conditions.len() != samples.len() {
            return Err(Error::contract(format!(
                "score matrix needs one sample vector per condition ({} labels, {} vectors)",
                conditions.len(),
                samples.len()
            )));
        }
        let n = samples[0].len();
        if n == 0 || samples.iter().any(|s| s.len() != n) {
            return Err(Error::contract("all conditions need the same non-zero number of paired scores"));
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::contract("scores must be finite"));
        }
        Ok(Self { conditions, samples })
    }

    pub fn conditions(&self) -> &[String] {
        &self.conditions
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn sample_count(&self) -> usize {
        self.samples[0].len()
    }

    pub fn medians(&self) -> Vec<f64> {
        self.samples.iter().map(|s| median(s)).collect()
    }

    /// Condition indices sorted by median, best (largest) first; ties keep
    /// their original order.
    pub fn order_by_median(&self) -> Vec<usize> {
        let med = self.medians();
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&i, &j| med[j].total_cmp(&med[i]));
        idx
    }
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianEntry {
    pub condition: String,
    pub median: f64,
    /// 1 for the best median (ties share it), 2 for the next best, else none.
    pub rank: Option<u8>,
}

/// Medians per condition with best and second-best marks (higher is better).
pub fn median_table(m: &ScoreMatrix) -> Vec<MedianEntry> {
    let med = m.medians();
    let best = med.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let second = med
        .iter()
        .copied()
        .filter(|&v| v < best)
        .fold(f64::NEG_INFINITY, f64::max);
    m.conditions()
        .iter()
        .zip(&med)
        .map(|(c, &v)| MedianEntry {
            condition: c.clone(),
            median: v,
            rank: if v == best {
                Some(1)
            } else if v == second {
                Some(2)
            } else {
                None
            },
        })
        .collect()
}

/// Multiple-comparison correction for the pairwise p-values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    #[default]
    None,
    Bonferroni,
}

/// Pairwise test results in the matrix's condition order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTests {
    pub t: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub correction: Correction,
}

pub fn pairwise_ttests(m: &ScoreMatrix, correction: Correction) -> Result<PairwiseTests> {
    let k = m.len();
    let pairs = (k * k.saturating_sub(1) / 2).max(1) as f64;
    let mut t = vec![vec![0.0; k]; k];
    let mut p = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let r = paired_ttest(&m.samples()[i], &m.samples()[j])?;
            let pv = match correction {
                Correction::None => r.p,
                Correction::Bonferroni => (r.p * pairs).min(1.0),
            };
            t[i][j] = r.t;
            t[j][i] = -r.t;
            p[i][j] = pv;
            p[j][i] = pv;
        }
    }
    Ok(PairwiseTests { t, p, correction })
}

/// Conditions sorted by median and the runs of that order that show no
/// significant internal difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceGroups {
    pub sorted_conditions: Vec<String>,
    /// Inclusive `(first, last)` index ranges into `sorted_conditions`.
    pub groups: Vec<(usize, usize)>,
}

/// All maximal runs `[i, j]` of `0..n` whose every internal pair satisfies
/// `same(a, b)`. Single elements always qualify, so every index is covered.
pub fn maximal_runs(n: usize, same: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for start in 0..n {
        let mut end = start;
        while end + 1 < n && (start..=end).all(|i| same(i, end + 1)) {
            end += 1;
        }
        // A run starting later can only be maximal if it reaches further right.
        if runs.last().is_none_or(|&(_, prev_end)| end > prev_end) {
            runs.push((start, end));
        }
    }
    runs
}

/// Groups conditions whose pairwise p-values are all `>= alpha`.
pub fn significance_groups(m: &ScoreMatrix, alpha: f64, correction: Correction) -> Result<SignificanceGroups> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "(0, 1)",
        });
    }
    let order = m.order_by_median();
    let sorted_conditions = order.iter().map(|&i| m.conditions()[i].clone()).collect();
    let groups = if m.len() == 1 {
        vec![(0, 0)]
    } else {
        let tests = pairwise_ttests(m, correction)?;
        maximal_runs(order.len(), |a, b| tests.p[order[a]][order[b]] >= alpha)
    };
    Ok(SignificanceGroups {
        sorted_conditions,
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ttest_reference_example() {
        let d = [0.1, -0.1, 0.2, 0.0];
        let zero = [0.0; 4];
        let r = paired_ttest(&d, &zero).unwrap();
        // scipy.stats.ttest_1samp reference.
        assert!((r.t - 0.774_596_669_241_483_3).abs() < 1e-12);
        assert!((r.p - 0.495_025_346_059_711_16).abs() < 1e-9);
        assert_eq!(r.df, 3.0);
    }

    #[test]
    fn ttest_degenerate_cases() {
        let a = [0.3, 0.5, 0.9];
        let r = paired_ttest(&a, &a).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
        let b: Vec<f64> = a.iter().map(|v| v - 0.1).collect();
        let r = paired_ttest(&a, &b).unwrap();
        assert_eq!(r.p, 0.0);
        assert!(r.t.is_infinite() && r.t > 0.0);
        assert!(paired_ttest(&[1.0], &[2.0]).is_err());
        assert!(paired_ttest(&[1.0, 2.0], &[2.0]).is_err());
    }

    #[test]
    fn t_cdf_known_values() {
        // df = 1 is the Cauchy distribution.
        for t in [-3.0, -0.5, 0.0, 1.0, 7.0] {
            let cauchy = 0.5 + f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_cdf(t, 1.0) - cauchy).abs() < 1e-12);
        }
        // df = 2 has a closed form.
        for t in [-4.0f64, -1.0, 0.3, 2.5] {
            let exact = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
            assert!((student_t_cdf(t, 2.0) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn ln_gamma_factorials() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-10, "{n}");
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn median_table_marks_ties() {
        let m = ScoreMatrix::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![vec![1.0, 2.0], vec![3.0, 3.0], vec![3.0, 3.0], vec![2.0, 2.0]],
        )
        .unwrap();
        let t = median_table(&m);
        let ranks: Vec<_> = t.iter().map(|e| e.rank).collect();
        assert_eq!(ranks, vec![None, Some(1), Some(1), Some(2)]);
    }

    #[test]
    fn score_matrix_validation() {
        assert!(ScoreMatrix::new(vec!["a".into()], vec![]).is_err());
        assert!(ScoreMatrix::new(vec!["a".into(), "b".into()], vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(ScoreMatrix::new(vec!["a".into()], vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn maximal_runs_examples() {
        assert_eq!(maximal_runs(3, |_, _| true), vec![(0, 2)]);
        assert_eq!(maximal_runs(3, |_, _| false), vec![(0, 0), (1, 1), (2, 2)]);
        // Adjacent pairs similar, ends different.
        let same = |a: usize, b: usize| a.abs_diff(b) == 1;
        assert_eq!(maximal_runs(3, same), vec![(0, 1), (1, 2)]);
        assert_eq!(maximal_runs(0, |_, _| true), vec![]);
    }

    #[test]
    fn groups_sorted_by_median() {
        let m = ScoreMatrix::new(
            vec!["low".into(), "high".into()],
            vec![vec![1.0, 1.1, 0.9, 1.0], vec![5.0, 5.2, 4.9, 5.1]],
        )
        .unwrap();
        let g = significance_groups(&m, 0.05, Correction::None).unwrap();
        assert_eq!(g.sorted_conditions, vec!["high", "low"]);
        assert_eq!(g.groups, vec![(0, 0), (1, 1)]);
        assert!(significance_groups(&m, 1.5, Correction::None).is_err());
    }

    #[test]
    fn bonferroni_inflates_p() {
        let m = ScoreMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1.0, 2.0, 3.0, 4.0], vec![1.1, 2.3, 2.9, 4.4], vec![0.0, 1.0, 2.0, 3.5]],
        )
        .unwrap();
        let plain = pairwise_ttests(&m, Correction::None).unwrap();
        let bonf = pairwise_ttests(&m, Correction::Bonferroni).unwrap();
        assert!((bonf.p[0][1] - (plain.p[0][1] * 3.0).min(1.0)).abs() < 1e-15);
        assert_eq!(plain.t[0][1], -plain.t[1][0]);
    }
}
