//! Summary statistics and the two hypothesis tests used by the experiments.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1 denominator); zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Coefficient of variation, sample standard deviation over mean. Zero when
/// the values do not vary, infinite when they vary around a zero mean.
pub fn coefficient_of_variation(xs: &[f64]) -> f64 {
    let sd = variance(xs).sqrt();
    if sd == 0.0 {
        0.0
    } else {
        sd / mean(xs).abs()
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sided paired t-test of `a - b` against zero mean.
///
/// Identical pairs give p = 1; a constant nonzero difference gives p = 0.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "paired test needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Input("paired test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&d);
    let sd = variance(&d).sqrt();
    if sd == 0.0 {
        return Ok(if m == 0.0 {
            TestResult {
                statistic: 0.0,
                p_value: 1.0,
            }
        } else {
            TestResult {
                statistic: m.signum() * f64::INFINITY,
                p_value: 0.0,
            }
        });
    }
    let n = d.len() as f64;
    let t = m / (sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("df >= 1");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(TestResult {
        statistic: t,
        p_value: p.clamp(0.0, 1.0),
    })
}

/// One-sample Kolmogorov–Smirnov test against Exponential(`rate`).
///
/// The p-value uses the asymptotic Kolmogorov distribution with Stephens'
/// small-sample correction.
pub fn ks_exponential(samples: &[f64], rate: f64) -> Result<TestResult> {
    if samples.is_empty() {
        return Err(Error::Input("KS test needs at least one sample".into()));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::Input(format!(
            "exponential rate {rate} must be positive"
        )));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = 1.0 - (-rate * x.max(0.0)).exp();
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    })
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_eq!(mean(&xs), 5.0);
        assert!((variance(&xs) - 32.0 / 7.0).abs() < 1e-12);
        assert_eq!(median(&xs), 4.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(coefficient_of_variation(&[7.0, 7.0]), 0.0);
    }

    #[test]
    fn t_test_reference_value() {
        // differences 1, 2, 3, 4: mean 2.5, sd sqrt(5/3), t = 3.873, df 3,
        // two-sided p = 0.0305 (tabulated)
        let r = paired_t_test(&[2.0, 4.0, 6.0, 8.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((r.statistic - 3.872983).abs() < 1e-5);
        assert!((r.p_value - 0.03046).abs() < 1e-4, "{}", r.p_value);
        let same = paired_t_test(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(same.p_value, 1.0);
        assert!(paired_t_test(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn kolmogorov_tail() {
        // Classical critical values: Q(1.358) = 0.05, Q(1.628) = 0.01.
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn ks_accepts_exact_quantiles_and_rejects_wrong_rate() {
        let n = 1000;
        let xs: Vec<f64> = (0..n)
            .map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln() / 2.0)
            .collect();
        assert!(ks_exponential(&xs, 2.0).unwrap().p_value > 0.99);
        assert!(ks_exponential(&xs, 1.0).unwrap().p_value < 1e-6);
    }
}
