use super::{RewardComparison, RewardError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Cohen's kappa between two binary label sequences.
///
/// When chance agreement is 1 (both raters constant and identical) kappa is
/// defined as 1.
pub fn cohen_kappa(a: &[bool], b: &[bool]) -> Result<f64, RewardError> {
    if a.len() != b.len() {
        return Err(RewardError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(RewardError::EmptyInput);
    }
    let n = a.len() as f64;
    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let pa = a.iter().filter(|&&x| x).count() as f64 / n;
    let pb = b.iter().filter(|&&x| x).count() as f64 / n;
    let expected = pa * pb + (1.0 - pa) * (1.0 - pb);
    if expected >= 1.0 {
        return Ok(if observed >= 1.0 { 1.0 } else { 0.0 });
    }
    Ok((observed - expected) / (1.0 - expected))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub model_a: String,
    pub model_b: String,
    pub kappa: f64,
    /// Pairs decided (no tie) by both models.
    pub n: usize,
}

/// Agreement between two models on whether `target_group` was selected,
/// over pairs both models scored and neither tied.
pub fn agreement(
    model_a: &str,
    a: &[RewardComparison],
    model_b: &str,
    b: &[RewardComparison],
    target_group: &str,
) -> Result<AgreementResult, RewardError> {
    let picks = |cs: &[RewardComparison]| -> BTreeMap<String, bool> {
        cs.iter()
            .filter_map(|c| {
                c.selected_group()
                    .map(|g| (c.pair_id.clone(), g == target_group))
            })
            .collect()
    };
    let (pa, pb) = (picks(a), picks(b));
    let (xs, ys): (Vec<bool>, Vec<bool>) = pa
        .iter()
        .filter_map(|(id, &x)| pb.get(id).map(|&y| (x, y)))
        .unzip();
    let kappa = cohen_kappa(&xs, &ys)?;
    Ok(AgreementResult {
        model_a: model_a.to_string(),
        model_b: model_b.to_string(),
        kappa,
        n: xs.len(),
    })
}

/// Upper-triangle agreement for every pair of models, in input order.
pub fn agreement_matrix(
    models: &[(String, Vec<RewardComparison>)],
    target_group: &str,
) -> Vec<Result<AgreementResult, RewardError>> {
    let mut out = Vec::new();
    for i in 0..models.len() {
        for j in i + 1..models.len() {
            out.push(agreement(
                &models[i].0,
                &models[i].1,
                &models[j].0,
                &models[j].1,
                target_group,
            ));
        }
    }
    out
}
