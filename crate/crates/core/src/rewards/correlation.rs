use super::{RewardComparison, RewardError};
use crate::stats::t_two_sided;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r_pb: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Point-biserial correlation between a continuous variable and a binary one.
///
/// Computed from group means: `(m1 - m0) / s * sqrt(n1 * n0 / n^2)` with `s`
/// the population standard deviation of `x`. The p-value is the two-sided
/// t-test on `n - 2` degrees of freedom.
pub fn point_biserial(x: &[f64], y: &[bool]) -> Result<CorrelationResult, RewardError> {
    if x.len() != y.len() {
        return Err(RewardError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(RewardError::TooFewObservations { needed: 3, got: n });
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(RewardError::NonFiniteInput(v.to_string()));
    }
    let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
    for (&v, &b) in x.iter().zip(y) {
        if b {
            s1 += v;
            n1 += 1;
        } else {
            s0 += v;
            n0 += 1;
        }
    }
    if n1 == 0 || n0 == 0 {
        return Err(RewardError::DegenerateVariance(
            "binary variable takes a single value".into(),
        ));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let sd = var.sqrt();
    if sd == 0.0 || sd <= mean.abs() * 1e-14 {
        return Err(RewardError::DegenerateVariance(
            "continuous variable is constant".into(),
        ));
    }
    let (m1, m0) = (s1 / n1 as f64, s0 / n0 as f64);
    let r = ((m1 - m0) / sd * ((n1 as f64) * (n0 as f64) / (nf * nf)).sqrt()).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(CorrelationResult { r_pb: r, p_value, n })
}

/// Correlates the reference model's log-ratio (oriented towards
/// `target_group`) with whether the policy selected that group. Ties are
/// dropped.
pub fn bias_transfer(
    comparisons: &[RewardComparison],
    target_group: &str,
) -> Result<CorrelationResult, RewardError> {
    let (x, y): (Vec<f64>, Vec<bool>) = comparisons
        .iter()
        .filter_map(|c| {
            c.selected_group()
                .map(|g| (c.ref_log_ratio_towards(target_group), g == target_group))
        })
        .unzip();
    point_biserial(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation_small_case() {
        // x = [1,2,3,4], y = [0,0,1,1]: r = 2/sqrt(5)
        let r = point_biserial(&[1.0, 2.0, 3.0, 4.0], &[false, false, true, true]).unwrap();
        assert!((r.r_pb - 2.0 / 5f64.sqrt()).abs() < 1e-12);
        // t = r sqrt(2/(1-r^2)) = sqrt(8 / 0.2 * 0.8) ... checked against a reference: p = 0.10557280900008412
        assert!((r.p_value - 0.105_572_809_000_084_12).abs() < 1e-9, "{}", r.p_value);
    }

    #[test]
    fn errors() {
        assert_eq!(
            point_biserial(&[1.0, 2.0], &[true]),
            Err(RewardError::LengthMismatch(2, 1))
        );
        assert!(matches!(
            point_biserial(&[1.0, 2.0], &[true, false]),
            Err(RewardError::TooFewObservations { .. })
        ));
        assert!(matches!(
            point_biserial(&[1.0, 2.0, 3.0], &[true, true, true]),
            Err(RewardError::DegenerateVariance(_))
        ));
        assert!(matches!(
            point_biserial(&[2.0, 2.0, 2.0], &[true, false, true]),
            Err(RewardError::DegenerateVariance(_))
        ));
        assert!(matches!(
            point_biserial(&[f64::NAN, 2.0, 2.0], &[true, false, true]),
            Err(RewardError::NonFiniteInput(_))
        ));
    }
}
