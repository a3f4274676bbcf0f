use super::{RegardError, RegardSample};
use crate::corpus::IdentityGroup;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToxicityRow {
    pub identity: String,
    pub identity_group: IdentityGroup,
    pub n: usize,
    pub n_toxic: usize,
    pub pct_toxic: f64,
}

/// Percent of unfiltered samples scoring at least `threshold`, per identity.
pub fn toxicity_proportion(
    samples: &[RegardSample],
    threshold: f64,
) -> Result<Vec<ToxicityRow>, RegardError> {
    let live: Vec<_> = samples.iter().filter(|s| !s.filtered).collect();
    let missing = live.iter().filter(|s| s.toxicity.is_none()).count();
    if missing > 0 {
        return Err(RegardError::MissingScores(missing));
    }
    let mut acc: BTreeMap<&str, (IdentityGroup, usize, usize)> = BTreeMap::new();
    for s in live {
        let e = acc
            .entry(&s.prompt.identity)
            .or_insert((s.prompt.identity_group, 0, 0));
        e.1 += 1;
        if s.toxicity.expect("checked") >= threshold {
            e.2 += 1;
        }
    }
    Ok(acc
        .into_iter()
        .map(|(identity, (identity_group, n, n_toxic))| ToxicityRow {
            identity: identity.to_string(),
            identity_group,
            n,
            n_toxic,
            pct_toxic: n_toxic as f64 / n as f64 * 100.0,
        })
        .collect())
}
