//! Accuracy, paired one-tailed t-tests, Holm-Bonferroni correction, and
//! confidence intervals.
//!
//! The Student-t tail probability is computed through the regularized
//! incomplete beta function with a Lentz continued fraction, so no
//! statistics library is required.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of positions where `predicted` equals `actual`.
pub fn accuracy(predicted: &[usize], actual: &[usize]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::contract("prediction and label lengths differ"));
    }
    if predicted.is_empty() {
        return Err(Error::contract("accuracy of an empty sample"));
    }
    let hits = predicted
        .iter()
        .zip(actual)
        .filter(|(p, a)| p == a)
        .count();
    Ok(hits as f64 / predicted.len() as f64)
}

/// Per-dataset score differences between two algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub differences: Vec<f64>,
}

impl PairedSample {
    pub fn new(differences: Vec<f64>) -> Self {
        PairedSample { differences }
    }

    /// Differences `a[i] - b[i]` for two paired score vectors.
    pub fn from_scores(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::contract("paired score lengths differ"));
        }
        Ok(PairedSample {
            differences: a.iter().zip(b).map(|(x, y)| x - y).collect(),
        })
    }
}

/// Alternative hypothesis direction for a one-tailed test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailDirection {
    /// Alternative: mean difference > 0.
    Greater,
    /// Alternative: mean difference < 0.
    Less,
}

/// One-tailed paired t-test. Returns `(t, p)` with `t = mean/(sd/sqrt m)`
/// (sample sd, divisor m-1) and p the tail probability under Student-t
/// with m-1 degrees of freedom.
///
/// When the differences have zero spread the t statistic degenerates:
/// p is 0 if the mean strictly favors the alternative, else 1.
pub fn paired_t_one_tailed(sample: &PairedSample, direction: TailDirection) -> Result<(f64, f64)> {
    let d = &sample.differences;
    let m = d.len();
    if m < 2 {
        return Err(Error::contract("paired t-test needs at least 2 samples"));
    }
    let mf = m as f64;
    let mean = d.iter().sum::<f64>() / mf;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (mf - 1.0);
    let sd = var.sqrt();

    if sd == 0.0 {
        let favors = match direction {
            TailDirection::Greater => mean > 0.0,
            TailDirection::Less => mean < 0.0,
        };
        let t = if mean == 0.0 {
            0.0
        } else if mean > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        return Ok((t, if favors { 0.0 } else { 1.0 }));
    }

    let t = mean / (sd / mf.sqrt());
    let p = match direction {
        TailDirection::Greater => 1.0 - student_t_cdf(t, m - 1),
        TailDirection::Less => student_t_cdf(t, m - 1),
    };
    Ok((t, p))
}

/// Holm-Bonferroni step-down correction at level `alpha`. Walks the
/// sorted p-values, rejecting while `p_(i) <= alpha / (k - i + 1)`;
/// the first failure stops the procedure. Returns rejection flags in
/// the original order.
pub fn holm_bonferroni(p_values: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::contract("alpha must lie in (0, 1)"));
    }
    if p_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::contract("p-values must lie in [0, 1]"));
    }
    let k = p_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));

    let mut reject = vec![false; k];
    for (i, &idx) in order.iter().enumerate() {
        if p_values[idx] <= alpha / (k - i) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    Ok(reject)
}

/// Mean with its 95% confidence interval `mean +/- t_{0.975,m-1} sd/sqrt m`.
pub fn mean_ci95(values: &[f64]) -> Result<(f64, f64, f64)> {
    let m = values.len();
    if m < 2 {
        return Err(Error::contract("confidence interval needs >= 2 values"));
    }
    let mf = m as f64;
    let mean = values.iter().sum::<f64>() / mf;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (mf - 1.0);
    let half = student_t_quantile(0.975, m - 1) * (var.sqrt() / mf.sqrt());
    Ok((mean, mean - half, mean + half))
}

/// CDF of Student's t distribution with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: usize) -> f64 {
    assert!(df >= 1, "degrees of freedom must be positive");
    if t == 0.0 {
        return 0.5;
    }
    let v = df as f64;
    let x = v / (v + t * t);
    let tail = 0.5 * regularized_incomplete_beta(0.5 * v, 0.5, x);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Quantile (inverse CDF) of Student's t, by bisection on the CDF.
pub fn student_t_quantile(p: f64, df: usize) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile probability must lie in (0,1)");
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -student_t_quantile(1.0 - p, df);
    }
    let mut hi = 1.0f64;
    while student_t_cdf(hi, df) < p {
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Regularized incomplete beta function I_x(a, b).
fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

// Lentz's algorithm for the incomplete beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;

    let mut c = 1.0f64;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=300 {
        let mf = m as f64;
        let m2 = 2.0 * mf;

        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

// Lanczos approximation, g = 7, n = 9.
fn ln_gamma(z: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if z < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = 0.99999999999980993f64;
    for (i, &c) in COEFFS.iter().enumerate() {
        x += c / (z + (i + 1) as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_counts_matches() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 2, 3], &[0, 0, 0]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 0, 0]).unwrap(), 0.75);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn paired_t_zero_mean() {
        let s = PairedSample::new(vec![1.0, -1.0, 1.0, -1.0]);
        let (t, p) = paired_t_one_tailed(&s, TailDirection::Greater).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(p, 0.5);
    }

    #[test]
    fn paired_t_hand_example() {
        // mean 2, sample sd sqrt(0.5): t = 2 sqrt(10)
        let s = PairedSample::new(vec![2.0, 1.0, 3.0, 2.0, 2.0]);
        let (t, p) = paired_t_one_tailed(&s, TailDirection::Greater).unwrap();
        assert!((t - 6.324555320336758).abs() < 1e-12);
        assert!((p - 0.0015991010761676541).abs() < 1e-9);
    }

    #[test]
    fn paired_t_degenerate_spread() {
        let s = PairedSample::new(vec![1.0, 1.0, 1.0]);
        let (t, p) = paired_t_one_tailed(&s, TailDirection::Greater).unwrap();
        assert!(t.is_infinite() && t > 0.0);
        assert_eq!(p, 0.0);
        let (_, p) = paired_t_one_tailed(&s, TailDirection::Less).unwrap();
        assert_eq!(p, 1.0);
        let s = PairedSample::new(vec![0.0, 0.0]);
        let (t, p) = paired_t_one_tailed(&s, TailDirection::Greater).unwrap();
        assert_eq!((t, p), (0.0, 1.0));
    }

    #[test]
    fn paired_t_needs_two() {
        let s = PairedSample::new(vec![1.0]);
        assert!(paired_t_one_tailed(&s, TailDirection::Greater).is_err());
    }

    #[test]
    fn holm_step_down_example() {
        let flags = holm_bonferroni(&[0.01, 0.04, 0.03], 0.05).unwrap();
        assert_eq!(flags, vec![true, false, false]);
    }

    #[test]
    fn holm_all_weak_none_reject() {
        let flags = holm_bonferroni(&[0.5; 5], 0.05).unwrap();
        assert!(flags.iter().all(|&f| !f));
    }

    #[test]
    fn holm_seven_strong_all_reject() {
        let flags = holm_bonferroni(&[0.001; 7], 0.05).unwrap();
        assert!(flags.iter().all(|&f| f));
    }

    #[test]
    fn holm_single_hypothesis_is_plain_threshold() {
        assert_eq!(holm_bonferroni(&[0.04], 0.05).unwrap(), vec![true]);
        assert_eq!(holm_bonferroni(&[0.06], 0.05).unwrap(), vec![false]);
    }

    #[test]
    fn holm_rejects_bad_inputs() {
        assert!(holm_bonferroni(&[1.5], 0.05).is_err());
        assert!(holm_bonferroni(&[0.5], 0.0).is_err());
    }

    #[test]
    fn ci95_constant_vector_has_zero_width() {
        let (mean, lo, hi) = mean_ci95(&[2.5, 2.5, 2.5]).unwrap();
        assert_eq!((mean, lo, hi), (2.5, 2.5, 2.5));
    }

    #[test]
    fn ci95_two_values_uses_t1_quantile() {
        let (mean, lo, hi) = mean_ci95(&[0.0, 2.0]).unwrap();
        assert_eq!(mean, 1.0);
        // half width = t_{0.975,1} * (sqrt(2)/sqrt(2)) = 12.70620...
        assert!((hi - mean - 12.706204736432095).abs() < 1e-6);
        assert!((mean - lo - 12.706204736432095).abs() < 1e-6);
    }

    #[test]
    fn cdf_midpoint_is_exact_half() {
        for df in 1..=30 {
            assert_eq!(student_t_cdf(0.0, df), 0.5);
        }
    }

    #[test]
    fn cdf_spot_values() {
        let cases = [
            (1usize, 0.5, 0.6475836176504333),
            (2, 1.0, 0.7886751345948129),
            (4, 6.324555320336759, 0.9984008989238323),
            (7, -2.365, 0.024986186137395772),
            (30, 2.042, 0.9749856646719011),
        ];
        for (df, t, want) in cases {
            assert!(
                (student_t_cdf(t, df) - want).abs() < 1e-9,
                "df={df} t={t}"
            );
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for df in [1usize, 4, 9, 30] {
            for p in [0.6, 0.9, 0.975, 0.999] {
                let q = student_t_quantile(p, df);
                assert!((student_t_cdf(q, df) - p).abs() < 1e-9, "df={df} p={p}");
            }
        }
        assert!((student_t_quantile(0.975, 4) - 2.7764451051977987).abs() < 1e-6);
        assert!((student_t_quantile(0.975, 99) - 1.9842169515086827).abs() < 1e-6);
    }
}
