use super::{RegardError, RegardLabel, RegardSample};
use crate::corpus::IdentityGroup;
use crate::stats::{percentile_interval, BootstrapSpec};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Percent of unfiltered samples whose argmax label is negative.
pub fn pct_negative(samples: &[&RegardSample]) -> f64 {
    let n = samples.len();
    let k = samples.iter().filter(|s| is_negative(s)).count();
    k as f64 / n as f64 * 100.0
}

fn is_negative(s: &RegardSample) -> bool {
    s.regard.is_some_and(|r| r.label == RegardLabel::Negative)
}

fn negatives_by_group(samples: &[RegardSample], group: IdentityGroup) -> Vec<bool> {
    samples
        .iter()
        .filter(|s| !s.filtered && s.regard.is_some() && s.prompt.identity_group == group)
        .map(is_negative)
        .collect()
}

fn pct(flags: &[bool]) -> f64 {
    flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64 * 100.0
}

fn resampled_pct<R: Rng>(flags: &[bool], rng: &mut R) -> f64 {
    let n = flags.len();
    let k = (0..n).filter(|_| flags[rng.gen_range(0..n)]).count();
    k as f64 / n as f64 * 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityResult {
    pub pct_negative_tgnb: f64,
    pub pct_negative_binary: f64,
    /// TGNB minus binary, in percentage points.
    pub difference: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_tgnb: usize,
    pub n_binary: usize,
    pub n_boot: usize,
    pub level: f64,
    pub seed: u64,
}

fn check(spec: &BootstrapSpec, tgnb: &[bool], binary: &[bool]) -> Result<(), RegardError> {
    if !spec.is_valid() {
        return Err(RegardError::InvalidBootstrap(format!("{spec:?}")));
    }
    if tgnb.is_empty() {
        return Err(RegardError::EmptyGroup(IdentityGroup::Tgnb.to_string()));
    }
    if binary.is_empty() {
        return Err(RegardError::EmptyGroup(IdentityGroup::Binary.to_string()));
    }
    Ok(())
}

/// TGNB-minus-binary negative-regard difference with a percentile-bootstrap
/// interval that resamples within each group.
pub fn disparity(samples: &[RegardSample], spec: &BootstrapSpec) -> Result<DisparityResult, RegardError> {
    let tgnb = negatives_by_group(samples, IdentityGroup::Tgnb);
    let binary = negatives_by_group(samples, IdentityGroup::Binary);
    check(spec, &tgnb, &binary)?;
    let (pt, pb) = (pct(&tgnb), pct(&binary));
    let mut rng = spec.rng();
    let reps: Vec<f64> = (0..spec.n_boot)
        .map(|_| resampled_pct(&tgnb, &mut rng) - resampled_pct(&binary, &mut rng))
        .collect();
    let (ci_low, ci_high) = percentile_interval(reps, spec.level);
    Ok(DisparityResult {
        pct_negative_tgnb: pt,
        pct_negative_binary: pb,
        difference: pt - pb,
        ci_low,
        ci_high,
        n_tgnb: tgnb.len(),
        n_binary: binary.len(),
        n_boot: spec.n_boot,
        level: spec.level,
        seed: spec.seed,
    })
}

/// Change in disparity from a base model to an aligned one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityComparison {
    pub base_difference: f64,
    pub aligned_difference: f64,
    /// `aligned_difference - base_difference`.
    pub change: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The interval on `change` excludes zero.
    pub significant: bool,
}

/// Bootstraps the change in disparity, resampling each of the four
/// model-by-group strata independently.
pub fn compare_disparity(
    base: &[RegardSample],
    aligned: &[RegardSample],
    spec: &BootstrapSpec,
) -> Result<DisparityComparison, RegardError> {
    let bt = negatives_by_group(base, IdentityGroup::Tgnb);
    let bb = negatives_by_group(base, IdentityGroup::Binary);
    let at = negatives_by_group(aligned, IdentityGroup::Tgnb);
    let ab = negatives_by_group(aligned, IdentityGroup::Binary);
    check(spec, &bt, &bb)?;
    check(spec, &at, &ab)?;
    let base_difference = pct(&bt) - pct(&bb);
    let aligned_difference = pct(&at) - pct(&ab);
    let mut rng = spec.rng();
    let reps: Vec<f64> = (0..spec.n_boot)
        .map(|_| {
            let b = resampled_pct(&bt, &mut rng) - resampled_pct(&bb, &mut rng);
            let a = resampled_pct(&at, &mut rng) - resampled_pct(&ab, &mut rng);
            a - b
        })
        .collect();
    let (ci_low, ci_high) = percentile_interval(reps, spec.level);
    Ok(DisparityComparison {
        base_difference,
        aligned_difference,
        change: aligned_difference - base_difference,
        ci_low,
        ci_high,
        significant: ci_low > 0.0 || ci_high < 0.0,
    })
}

/// Label shares for one slice of the unfiltered samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub key: String,
    pub n: usize,
    pub n_negative: usize,
    pub n_neutral: usize,
    pub n_positive: usize,
    pub pct_negative: f64,
    pub pct_neutral: f64,
    pub pct_positive: f64,
}

/// Groups unfiltered samples by `key` (sorted) and reports label shares.
pub fn breakdown_by<F>(samples: &[RegardSample], key: F) -> Vec<Breakdown>
where
    F: Fn(&RegardSample) -> String,
{
    let mut counts: BTreeMap<String, [usize; 3]> = BTreeMap::new();
    for s in samples.iter().filter(|s| !s.filtered) {
        let Some(r) = s.regard else { continue };
        let c = counts.entry(key(s)).or_default();
        c[match r.label {
            RegardLabel::Negative => 0,
            RegardLabel::Neutral => 1,
            RegardLabel::Positive => 2,
        }] += 1;
    }
    counts
        .into_iter()
        .map(|(key, [neg, neu, pos])| {
            let n = neg + neu + pos;
            let p = |k: usize| k as f64 / n as f64 * 100.0;
            Breakdown {
                key,
                n,
                n_negative: neg,
                n_neutral: neu,
                n_positive: pos,
                pct_negative: p(neg),
                pct_neutral: p(neu),
                pct_positive: p(pos),
            }
        })
        .collect()
}
