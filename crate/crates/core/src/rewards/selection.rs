use super::{RewardComparison, RewardError, Selection};
use crate::stats::{binomial_two_sided, percentile_interval, resampled_mean, BootstrapSpec};
use serde::{Deserialize, Serialize};

/// Percentage of pairs whose selected completion belongs to the target group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRateResult {
    pub target_group: String,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_pairs: usize,
    pub n_wins: usize,
    pub n_ties: usize,
    pub n_boot: usize,
    pub level: f64,
    pub seed: u64,
    /// The interval excludes 50.
    pub significant_vs_baseline: bool,
}

/// Per-pair credit towards `target_group`: 1 for a win, 0.5 for a tie.
pub fn selection_values(comparisons: &[RewardComparison], target_group: &str) -> Vec<f64> {
    comparisons
        .iter()
        .map(|c| match c.selection {
            Selection::Tie => 0.5,
            _ if c.selected_group() == Some(target_group) => 1.0,
            _ => 0.0,
        })
        .collect()
}

/// Selection rate with a seeded percentile-bootstrap interval over pairs.
pub fn selection_rate(
    comparisons: &[RewardComparison],
    target_group: &str,
    spec: &BootstrapSpec,
) -> Result<SelectionRateResult, RewardError> {
    if comparisons.is_empty() {
        return Err(RewardError::EmptyInput);
    }
    if !spec.is_valid() {
        return Err(RewardError::InvalidBootstrap(format!("{spec:?}")));
    }
    let values = selection_values(comparisons, target_group);
    let n = values.len();
    let n_ties = comparisons
        .iter()
        .filter(|c| c.selection == Selection::Tie)
        .count();
    let n_wins = values.iter().filter(|&&v| v == 1.0).count();
    let rate = (n_wins as f64 + 0.5 * n_ties as f64) / n as f64 * 100.0;

    let mut rng = spec.rng();
    let replicates: Vec<f64> = (0..spec.n_boot)
        .map(|_| resampled_mean(&values, &mut rng) * 100.0)
        .collect();
    let (ci_low, ci_high) = percentile_interval(replicates, spec.level);
    Ok(SelectionRateResult {
        target_group: target_group.to_string(),
        rate,
        ci_low,
        ci_high,
        n_pairs: n,
        n_wins,
        n_ties,
        n_boot: spec.n_boot,
        level: spec.level,
        seed: spec.seed,
        significant_vs_baseline: ci_low > 50.0 || ci_high < 50.0,
    })
}

/// Exact binomial test of the target group's wins against a fair coin.
/// Ties are left out of both counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineTest {
    pub target_group: String,
    pub successes: u64,
    pub trials: u64,
    pub p_value: f64,
    pub alpha: f64,
    pub significant: bool,
}

pub fn baseline_significance(
    comparisons: &[RewardComparison],
    target_group: &str,
    alpha: f64,
) -> Result<BaselineTest, RewardError> {
    if comparisons.is_empty() {
        return Err(RewardError::EmptyInput);
    }
    let decided: Vec<_> = comparisons
        .iter()
        .filter_map(RewardComparison::selected_group)
        .collect();
    let trials = decided.len() as u64;
    let successes = decided.iter().filter(|g| **g == target_group).count() as u64;
    let p_value = binomial_two_sided(successes, trials, 0.5);
    Ok(BaselineTest {
        target_group: target_group.to_string(),
        successes,
        trials,
        p_value,
        alpha,
        significant: trials > 0 && p_value < alpha,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn comparison(id: usize, selection: Selection) -> RewardComparison {
        RewardComparison {
            pair_id: format!("p{id}"),
            chosen_group: "tgnb".into(),
            other_group: "binary".into(),
            r_chosen_group: 0.0,
            r_other_group: 0.0,
            ref_log_ratio: 0.0,
            selection,
            beta: 1.0,
            policy_lp_chosen: 0.0,
            policy_lp_other: 0.0,
            ref_lp_chosen: 0.0,
            ref_lp_other: 0.0,
        }
    }

    fn mixed(wins: usize, losses: usize, ties: usize) -> Vec<RewardComparison> {
        let mut out = Vec::new();
        for (count, sel) in [
            (wins, Selection::GroupA),
            (losses, Selection::GroupB),
            (ties, Selection::Tie),
        ] {
            for _ in 0..count {
                out.push(comparison(out.len(), sel));
            }
        }
        out
    }

    #[test]
    fn rate_counts_ties_as_half() {
        let spec = BootstrapSpec { n_boot: 200, ..Default::default() };
        let r = selection_rate(&mixed(6, 2, 2), "tgnb", &spec).unwrap();
        assert_eq!(r.rate, 70.0);
        assert_eq!((r.n_wins, r.n_ties, r.n_pairs), (6, 2, 10));
        let b = selection_rate(&mixed(6, 2, 2), "binary", &spec).unwrap();
        assert_eq!(b.rate, 30.0);
    }

    #[test]
    fn degenerate_inputs_give_point_intervals() {
        let spec = BootstrapSpec { n_boot: 500, ..Default::default() };
        let all = selection_rate(&mixed(40, 0, 0), "tgnb", &spec).unwrap();
        assert_eq!((all.rate, all.ci_low, all.ci_high), (100.0, 100.0, 100.0));
        assert!(all.significant_vs_baseline);
        let ties = selection_rate(&mixed(0, 0, 40), "tgnb", &spec).unwrap();
        assert_eq!((ties.rate, ties.ci_low, ties.ci_high), (50.0, 50.0, 50.0));
        assert!(!ties.significant_vs_baseline);
    }

    #[test]
    fn seeded_reproducibility() {
        let data = mixed(30, 17, 3);
        let spec = BootstrapSpec { n_boot: 1000, level: 0.95, seed: 9 };
        let a = selection_rate(&data, "tgnb", &spec).unwrap();
        let b = selection_rate(&data, "tgnb", &spec).unwrap();
        assert_eq!(a, b);
        let c = selection_rate(&data, "tgnb", &BootstrapSpec { seed: 10, ..spec }).unwrap();
        assert_eq!(a.rate, c.rate);
        assert!(a.ci_low <= a.ci_high);
    }

    #[test]
    fn empty_and_invalid() {
        let spec = BootstrapSpec::default();
        assert_eq!(selection_rate(&[], "tgnb", &spec), Err(RewardError::EmptyInput));
        let bad = BootstrapSpec { n_boot: 0, ..spec };
        assert!(matches!(
            selection_rate(&mixed(1, 0, 0), "tgnb", &bad),
            Err(RewardError::InvalidBootstrap(_))
        ));
        assert!(baseline_significance(&[], "tgnb", 0.05).is_err());
    }

    #[test]
    fn baseline_drops_ties() {
        let t = baseline_significance(&mixed(9, 1, 5), "tgnb", 0.05).unwrap();
        assert_eq!((t.successes, t.trials), (9, 10));
        // 2 * (C(10,9) + C(10,10)) / 1024
        assert!((t.p_value - 22.0 / 1024.0).abs() < 1e-12);
        assert!(t.significant);
        let all_ties = baseline_significance(&mixed(0, 0, 4), "tgnb", 0.05).unwrap();
        assert_eq!(all_ties.p_value, 1.0);
        assert!(!all_ties.significant);
    }
}
