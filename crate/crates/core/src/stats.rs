//! Shared statistical machinery: seeded percentile bootstrap, exact binomial
//! test and Student-t tail probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::factorial::ln_binomial;

/// Bootstrap settings. Every resampling run owns a generator seeded from
/// `seed`, so identical settings reproduce identical intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub n_boot: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self {
            n_boot: 10_000,
            level: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapSpec {
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn is_valid(&self) -> bool {
        self.n_boot >= 1 && self.level > 0.0 && self.level < 1.0
    }
}

/// Percentile interval from bootstrap replicates.
///
/// The endpoints are order statistics of the sorted replicates: the lower
/// bound is the `floor(B * a/2)`-th smallest (0-based) and the upper bound
/// the `ceil(B * (1 - a/2)) - 1`-th, where `a = 1 - level`.
pub fn percentile_interval(mut replicates: Vec<f64>, level: f64) -> (f64, f64) {
    assert!(!replicates.is_empty(), "no bootstrap replicates");
    replicates.sort_by(f64::total_cmp);
    let b = replicates.len();
    let tail = (1.0 - level) / 2.0;
    let lo = ((b as f64) * tail).floor() as usize;
    let hi = (((b as f64) * (1.0 - tail)).ceil() as usize).saturating_sub(1);
    (replicates[lo.min(b - 1)], replicates[hi.min(b - 1)])
}

/// Mean of `values` resampled with replacement (same size as the input).
pub fn resampled_mean<R: Rng>(values: &[f64], rng: &mut R) -> f64 {
    let n = values.len();
    let mut total = 0.0;
    for _ in 0..n {
        total += values[rng.gen_range(0..n)];
    }
    total / n as f64
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Two-sided exact binomial test of `successes` out of `trials` against
/// success probability `p0`.
///
/// Sums the probability of every outcome at most as likely as the observed
/// one (with a relative slack of 1e-7 for rounding), matching the usual
/// "minimum likelihood" definition. Returns 1.0 for zero trials.
pub fn binomial_two_sided(successes: u64, trials: u64, p0: f64) -> f64 {
    assert!(successes <= trials);
    assert!(p0 > 0.0 && p0 < 1.0);
    if trials == 0 {
        return 1.0;
    }
    let log_pmf = |k: u64| {
        ln_binomial(trials, k) + (k as f64) * p0.ln() + ((trials - k) as f64) * (1.0 - p0).ln()
    };
    let observed = log_pmf(successes);
    let cutoff = observed + (1.0 + 1e-7f64).ln();
    let (mut as_likely, mut more_likely) = (0.0, 0.0);
    for k in 0..=trials {
        let lp = log_pmf(k);
        if lp <= cutoff {
            as_likely += lp.exp();
        } else {
            more_likely += lp.exp();
        }
    }
    // Summing the smaller side keeps both tiny and near-one values accurate.
    let p = if as_likely < 0.5 {
        as_likely
    } else {
        1.0 - more_likely
    };
    p.clamp(0.0, 1.0)
}

/// Two-sided p-value of a Student-t statistic.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Formats a percentage with two decimals, e.g. `91.53`.
pub fn fmt_pct(v: f64) -> String {
    format!("{v:.2}")
}

/// Formats `rate [lo, hi]` with two decimals.
pub fn fmt_rate_ci(rate: f64, lo: f64, hi: f64) -> String {
    format!("{rate:.2} [{lo:.2}, {hi:.2}]")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_endpoints_are_order_statistics() {
        let reps: Vec<f64> = (0..10_000).rev().map(|i| i as f64).collect();
        let (lo, hi) = percentile_interval(reps, 0.95);
        assert_eq!(lo, 250.0);
        assert_eq!(hi, 9749.0);
    }

    #[test]
    fn binomial_all_successes() {
        // 2 * 0.5^100
        let p = binomial_two_sided(100, 100, 0.5);
        let expected = 2.0 * 0.5f64.powi(100);
        assert!((p - expected).abs() / expected < 1e-9, "{p} vs {expected}");
        assert!(p < 1e-25);
    }

    #[test]
    fn binomial_symmetric_midpoint() {
        assert_eq!(binomial_two_sided(50, 100, 0.5), 1.0);
    }

    #[test]
    fn binomial_small_case_by_enumeration() {
        // n = 5, k = 1: outcomes with pmf <= C(5,1)/32 are k in {0,1,4,5}.
        let p = binomial_two_sided(1, 5, 0.5);
        assert!((p - 12.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn t_tail_matches_reference() {
        // t = 2.0, df = 10: two-sided p = 0.07338803477074...
        let p = t_two_sided(2.0, 10.0);
        assert!((p - 0.073_388_034_770_7).abs() < 1e-9, "{p}");
    }

    #[test]
    fn formatting() {
        assert_eq!(fmt_rate_ci(91.53, 91.08, 91.97), "91.53 [91.08, 91.97]");
        assert_eq!(fmt_pct(14.7349), "14.73");
    }
}
