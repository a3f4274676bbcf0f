use super::config::AuditConfig;
use super::layout::{ensure_parent, Layout};
use super::model::*;
use super::pipeline::{FailureRow, ScanArtifact};
use super::ReportError;
use crate::corpus::MockPreferencePair;
use crate::jsonl;
use crate::regard::{
    annotation_items, breakdown_by, compare_disparity, detect_shift, disparity, export_annotation_sample,
    ingest_annotations, toxicity_proportion, RegardSample, ShiftConfig, Taxonomy,
};
use crate::rewards::{agreement, baseline_significance, bias_transfer, selection_rate, RewardComparison};
use serde::de::DeserializeOwned;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

fn load<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ReportError> {
    if !path.exists() {
        return Err(ReportError::MissingArtifact(path.display().to_string()));
    }
    let read = jsonl::read(path).map_err(|e| ReportError::Io(format!("{}: {e}", path.display())))?;
    if !read.corrupt_lines.is_empty() {
        return Err(ReportError::CorruptArtifact {
            path: path.display().to_string(),
            lines: read.corrupt_lines,
        });
    }
    Ok(read.records)
}

fn artifact(layout: &Layout, path: &Path) -> Result<ArtifactRef, ReportError> {
    ArtifactRef::of(&layout.root, path).map_err(|e| ReportError::Io(format!("{}: {e}", path.display())))
}

fn build_rewards(cfg: &AuditConfig, layout: &Layout) -> Result<Option<RewardSection>, ReportError> {
    let Some(r) = &cfg.rewards else { return Ok(None) };
    let pairs: Vec<MockPreferencePair> = load(&layout.pairs())?;
    let target = r.target_group.clone();
    let other = r.pairing.iter().find(|g| **g != target).cloned().unwrap_or_default();
    let spec = cfg.bootstrap_spec();
    let mut models = Vec::new();
    let mut per_model: Vec<(String, Vec<RewardComparison>)> = Vec::new();
    for m in &r.models {
        let path = layout.comparisons(&m.name);
        let comps: Vec<RewardComparison> = load(&path)?;
        if comps.len() != pairs.len() {
            return Err(ReportError::IncompleteArtifact {
                path: path.display().to_string(),
                expected: pairs.len(),
                found: comps.len(),
            });
        }
        let selection = selection_rate(&comps, &target, &spec)?;
        let baseline = baseline_significance(&comps, &target, cfg.thresholds.alpha)?;
        let (correlation, correlation_note) = match bias_transfer(&comps, &target) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        };
        models.push(RewardModelRow {
            name: m.name.clone(),
            policy_model: m.policy.model_id().to_string(),
            reference_model: m.reference.model_id().to_string(),
            comparisons: artifact(layout, &path)?,
            beta: r.scoring.beta,
            selection,
            baseline,
            correlation,
            correlation_note,
        });
        per_model.push((m.name.clone(), comps));
    }
    let mut agreements = Vec::new();
    let mut notes = Vec::new();
    for i in 0..per_model.len() {
        for j in i + 1..per_model.len() {
            let (a, b) = (&per_model[i], &per_model[j]);
            match agreement(&a.0, &a.1, &b.0, &b.1, &target) {
                Ok(x) => agreements.push(x),
                Err(e) => notes.push(format!("{} vs {}: {e}", a.0, b.0)),
            }
        }
    }
    let n_templates = pairs.iter().map(|p| &p.template_id).collect::<BTreeSet<_>>().len();
    Ok(Some(RewardSection {
        pairs: artifact(layout, &layout.pairs())?,
        n_pairs: pairs.len(),
        n_templates,
        target_group: target,
        other_group: other,
        models,
        agreement: agreements,
        agreement_notes: notes,
    }))
}

fn split<T, E: std::fmt::Display>(r: Result<T, E>) -> (Option<T>, Option<String>) {
    match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn build_generations(cfg: &AuditConfig, layout: &Layout) -> Result<Option<GenerationSection>, ReportError> {
    let Some(g) = &cfg.generations else { return Ok(None) };
    let prompts: Vec<crate::corpus::DisclosurePrompt> = load(&layout.prompts())?;
    let spec = cfg.bootstrap_spec();
    let mut rows = Vec::new();
    let mut by_name: BTreeMap<&str, Vec<RegardSample>> = BTreeMap::new();
    for m in &g.models {
        let path = layout.samples(&m.name);
        let samples: Vec<RegardSample> = load(&path)?;
        let failures: Vec<FailureRow> = load(&layout.failures(&m.name))?;
        let failed_prompts = failures
            .iter()
            .filter(|f| f.stage == "generate")
            .map(|f| f.prompt_index)
            .collect::<BTreeSet<_>>()
            .len();
        let failed_classifications = failures.iter().filter(|f| f.stage == "classify").count();
        let n_filtered = samples.iter().filter(|s| s.filtered).count();
        let (disparity_result, disparity_note) = split(disparity(&samples, &spec));
        let toxicity = match &g.toxicity {
            Some(_) => Some(toxicity_proportion(&samples, cfg.thresholds.toxicity)?),
            None => None,
        };
        rows.push(GenerationModelRow {
            name: m.name.clone(),
            stage: m.stage.clone(),
            model_id: m.model.model_id().to_string(),
            samples: artifact(layout, &path)?,
            n_samples: samples.len(),
            n_filtered,
            pct_filtered: if samples.is_empty() {
                0.0
            } else {
                n_filtered as f64 / samples.len() as f64 * 100.0
            },
            failed_prompts,
            failed_classifications,
            disparity: disparity_result,
            disparity_note,
            by_identity: breakdown_by(&samples, |s| s.prompt.identity.clone()),
            by_form_kind: breakdown_by(&samples, |s| s.prompt.form_kind.to_string()),
            by_group_and_form: breakdown_by(&samples, |s| {
                format!("{}/{}", s.prompt.identity_group, s.prompt.form_kind)
            }),
            toxicity,
        });
        by_name.insert(&m.name, samples);
    }

    let mut stages: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for m in &g.models {
        stages.entry(&m.stage).or_default().push(&m.name);
    }
    let pooled = stages
        .into_iter()
        .map(|(stage, names)| {
            let all: Vec<RegardSample> = names.iter().flat_map(|n| by_name[n].iter().cloned()).collect();
            let (d, note) = split(disparity(&all, &spec));
            PooledDisparity {
                stage: stage.to_string(),
                models: names.iter().map(|n| n.to_string()).collect(),
                disparity: d,
                note,
            }
        })
        .collect();

    let taxonomy = match &g.taxonomy {
        Some(p) => Taxonomy::from_file(&cfg.resolve(p))?,
        None => Taxonomy::shift_categories(),
    };
    let shift_cfg = ShiftConfig {
        threshold: cfg.thresholds.shift,
        sample_n: g.shift_sample_n,
        seed: cfg.seeds.shift_sample_seed,
        measure: g.shift_measure,
    };
    let mut comparisons = Vec::new();
    for c in &g.comparisons {
        let (base, aligned) = (&by_name[c.base.as_str()], &by_name[c.aligned.as_str()]);
        let (change, mut note) = split(compare_disparity(base, aligned, &spec));
        let mut row = ShiftRow {
            base: c.base.clone(),
            aligned: c.aligned.clone(),
            disparity_change: change,
            note: None,
            prompts_compared: 0,
            base_neutral: 0,
            n_candidates: 0,
            n_sampled: 0,
            candidates: Vec::new(),
            annotation_export: None,
            themes: None,
        };
        match detect_shift(base, aligned, &shift_cfg) {
            Ok(out) => {
                row.prompts_compared = out.prompts_compared;
                row.base_neutral = out.base_neutral;
                row.n_candidates = out.candidates.len();
                row.n_sampled = out.sampled().count();
                let items = annotation_items(&out, aligned);
                row.candidates = out.candidates;
                if !items.is_empty() {
                    let path = layout.annotation_export(&c.base, &c.aligned);
                    ensure_parent(&path).map_err(|e| ReportError::Io(e.to_string()))?;
                    export_annotation_sample(&items, &path)?;
                    row.annotation_export = Some(artifact(layout, &path)?);
                    if let Some(a) = &c.annotations {
                        let a = cfg.resolve(a);
                        if a.exists() {
                            let ids = items.iter().map(|i| i.sample_id.clone()).collect();
                            row.themes = Some(ingest_annotations(&a, &ids, &taxonomy)?);
                        }
                    }
                }
            }
            Err(e) => {
                note = Some(match note {
                    Some(n) => format!("{n}; {e}"),
                    None => e.to_string(),
                })
            }
        }
        row.note = note;
        comparisons.push(row);
    }

    Ok(Some(GenerationSection {
        n_prompts: prompts.len(),
        samples_per_prompt: g.generation.samples_per_prompt,
        jaccard_threshold: cfg.thresholds.jaccard,
        models: rows,
        pooled,
        comparisons,
    }))
}

fn build_scan(cfg: &AuditConfig, layout: &Layout) -> Result<Option<ScanSection>, ReportError> {
    let Some(s) = &cfg.scan else { return Ok(None) };
    let mut terms = Vec::new();
    let mut datasets = Vec::new();
    for d in &s.datasets {
        let path = layout.scan(&d.name);
        let text = std::fs::read_to_string(&path)
            .map_err(|_| ReportError::MissingArtifact(path.display().to_string()))?;
        let a: ScanArtifact = serde_json::from_str(&text).map_err(|e| ReportError::CorruptArtifact {
            path: format!("{}: {e}", path.display()),
            lines: Vec::new(),
        })?;
        terms = a.terms;
        datasets.push(ScanRow::from_scan(&a.scan, artifact(layout, &path)?));
    }
    Ok(Some(ScanSection { terms, datasets }))
}

/// Computes the report from the artifacts under the output directory. No
/// model backend is contacted. A section is present when its stages have
/// run (its pairs, prompt grid or scan files exist).
pub fn build_report(cfg: &AuditConfig) -> Result<AuditReport, ReportError> {
    let layout = Layout::new(cfg.output_path());
    let mut model_ids = BTreeSet::new();
    if let Some(r) = &cfg.rewards {
        for m in &r.models {
            model_ids.insert(m.policy.model_id().to_string());
            model_ids.insert(m.reference.model_id().to_string());
        }
    }
    if let Some(g) = &cfg.generations {
        model_ids.extend(g.models.iter().map(|m| m.model.model_id().to_string()));
    }
    let spec = cfg.bootstrap_spec();
    Ok(AuditReport {
        schema_version: SCHEMA_VERSION,
        config_digest: cfg.digest(),
        model_ids: model_ids.into_iter().collect(),
        n_boot: spec.n_boot,
        level: spec.level,
        bootstrap_seed: spec.seed,
        rewards: if layout.pairs().exists() {
            build_rewards(cfg, &layout)?
        } else {
            None
        },
        generations: if layout.prompts().exists() {
            build_generations(cfg, &layout)?
        } else {
            None
        },
        corpus_scan: if cfg
            .scan
            .as_ref()
            .is_some_and(|s| s.datasets.iter().any(|d| layout.scan(&d.name).exists()))
        {
            build_scan(cfg, &layout)?
        } else {
            None
        },
    })
}
