use super::backends::{build_backend, build_classifier, build_toxicity};
use super::config::{AuditConfig, GenerationAuditConfig, LexiconSource, RewardAuditConfig, RewardModelConfig};
use super::layout::{ensure_parent, Layout};
use super::ReportError;
use crate::corpus::io::{read_corpus_jsonl, read_forms, read_identities, read_lexicon, read_list, read_paired_table};
use crate::corpus::{
    build_disclosure_prompts, build_mock_preferences, filter_paired_dataset, scan_preference_corpus,
    validate_lexicons, DatasetScan, DisclosurePrompt, GroupLexicon, MockPreferencePair, DEFAULT_SCAN_TERMS,
};
use crate::jsonl;
use crate::regard::{filter_echoes, GeneratedSample, RegardDistribution, RegardError, RegardSample};
use crate::rewards::{compare_pair, PairScores, RewardComparison};
use crate::scoring::{generate_samples, score_many, GenerationRecord, ModelRole, ScoreCache, Scorer};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

/// How far a run goes: `corpus` prepares inputs, `score` adds model calls,
/// `stats` (and `all`) also compute the report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Stage {
    Corpus,
    Score,
    Stats,
    #[default]
    All,
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "corpus" => Ok(Stage::Corpus),
            "score" => Ok(Stage::Score),
            "stats" => Ok(Stage::Stats),
            "all" => Ok(Stage::All),
            _ => Err(format!("unknown stage {s:?} (corpus, score, stats, all)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub stage: Stage,
    /// Keep finished work from an earlier run instead of redoing it.
    pub resume: bool,
}

fn io_err(path: &std::path::Path) -> impl Fn(std::io::Error) -> ReportError + '_ {
    move |e| ReportError::Io(format!("{}: {e}", path.display()))
}

pub(crate) fn lexicons(cfg: &AuditConfig, r: &RewardAuditConfig) -> Result<Vec<GroupLexicon>, ReportError> {
    if r.lexicons.is_empty() {
        return Ok(vec![GroupLexicon::default_binary(), GroupLexicon::default_tgnb()]);
    }
    let mut out = Vec::new();
    for LexiconSource { label, path, terms } in &r.lexicons {
        let lex = match (path, terms) {
            (Some(p), None) => read_lexicon(label, &cfg.resolve(p))?,
            (None, Some(t)) => GroupLexicon::new(label, t.clone())?,
            _ => return Err(ReportError::InvalidConfig(vec![format!("lexicon {label}: give path or terms")])),
        };
        out.push(lex);
    }
    validate_lexicons(&out)?;
    Ok(out)
}

/// Reads the paired dataset and writes `pairs.jsonl` (and rejected rows).
pub fn prepare_pairs(cfg: &AuditConfig) -> Result<Vec<MockPreferencePair>, ReportError> {
    let r = cfg.rewards.as_ref().ok_or(ReportError::MissingSection("rewards"))?;
    let layout = Layout::new(cfg.output_path());
    let lex = lexicons(cfg, r)?;
    let rows = read_paired_table(&cfg.resolve(&r.dataset), &r.table)?;
    let outcome = filter_paired_dataset(&rows, &lex);
    let find = |label: &str| {
        lex.iter()
            .find(|l| l.label() == label)
            .ok_or_else(|| ReportError::InvalidConfig(vec![format!("no lexicon labelled {label}")]))
    };
    let pairing = (find(&r.pairing[0])?, find(&r.pairing[1])?);
    let pairs = build_mock_preferences(&outcome.instances, pairing, &r.prompt_format, r.prompt_order)?;
    tracing::info!(
        rows = rows.len(),
        instances = outcome.instances.len(),
        rejected = outcome.rejects.len(),
        out_of_lexicon = outcome.out_of_lexicon,
        pairs = pairs.len(),
        "built mock preference pairs"
    );
    for p in [layout.pairs(), layout.rejects()] {
        ensure_parent(&p).map_err(io_err(&p))?;
    }
    jsonl::write_all(&layout.pairs(), &pairs).map_err(io_err(&layout.pairs()))?;
    jsonl::write_all(&layout.rejects(), &outcome.rejects).map_err(io_err(&layout.rejects()))?;
    Ok(pairs)
}

/// Scores every pair under one model's policy and reference and computes
/// the comparisons. Stops at the first failing pair; comparisons for the
/// pairs before it are still written.
pub fn score_model(
    r: &RewardAuditConfig,
    model: &RewardModelConfig,
    pairs: &[MockPreferencePair],
    cache: Option<&ScoreCache>,
) -> Result<Vec<RewardComparison>, (Vec<RewardComparison>, ReportError)> {
    let setup = || -> Result<(Scorer, Scorer), ReportError> {
        Ok((
            Scorer::new(ModelRole::Policy, build_backend(&model.policy)?),
            Scorer::new(ModelRole::Reference, build_backend(&model.reference)?),
        ))
    };
    let (policy, reference) = setup().map_err(|e| (Vec::new(), e))?;
    let items: Vec<(String, String)> = pairs
        .iter()
        .flat_map(|p| [(p.prompt.clone(), p.chosen.clone()), (p.prompt.clone(), p.rejected.clone())])
        .collect();
    let pol = score_many(&policy, &items, &r.scoring, cache);
    let refs = score_many(&reference, &items, &r.scoring, cache);
    let mut pol = pol.into_iter();
    let mut refs = refs.into_iter();
    let mut out = Vec::with_capacity(pairs.len());
    for p in pairs {
        let tag = |role: &str, e: crate::scoring::ScoringError| ReportError::Pair {
            model: model.name.clone(),
            pair_id: p.pair_id.clone(),
            reason: format!("{role}: {e}"),
        };
        let mut step = || -> Result<RewardComparison, ReportError> {
            let pc = pol.next().expect("aligned").map_err(|e| tag("policy", e))?;
            let pr = pol.next().expect("aligned").map_err(|e| tag("policy", e))?;
            let rc = refs.next().expect("aligned").map_err(|e| tag("reference", e))?;
            let rr = refs.next().expect("aligned").map_err(|e| tag("reference", e))?;
            let scores = PairScores {
                policy_chosen: Some(pc),
                policy_rejected: Some(pr),
                ref_chosen: Some(rc),
                ref_rejected: Some(rr),
            };
            compare_pair(p, &scores, r.scoring.beta).map_err(|e| ReportError::Pair {
                model: model.name.clone(),
                pair_id: p.pair_id.clone(),
                reason: e.to_string(),
            })
        };
        match step() {
            Ok(c) => out.push(c),
            Err(e) => return Err((out, e)),
        }
    }
    Ok(out)
}

fn comparisons_complete(path: &std::path::Path, pairs: &[MockPreferencePair], beta: f64) -> bool {
    match jsonl::read_if_exists::<RewardComparison>(path) {
        Ok(read) => {
            read.corrupt_lines.is_empty()
                && read.records.len() == pairs.len()
                && read
                    .records
                    .iter()
                    .zip(pairs)
                    .all(|(c, p)| c.pair_id == p.pair_id && c.beta == beta)
        }
        Err(_) => false,
    }
}

/// Corpus and scoring stages of the reward audit.
pub fn run_reward_stages(cfg: &AuditConfig, opts: RunOptions) -> Result<(), ReportError> {
    let r = cfg.rewards.as_ref().ok_or(ReportError::MissingSection("rewards"))?;
    let layout = Layout::new(cfg.output_path());
    let pairs = if opts.stage == Stage::Stats {
        return Ok(());
    } else {
        prepare_pairs(cfg)?
    };
    if opts.stage == Stage::Corpus {
        return Ok(());
    }
    let cache = if r.cache {
        let p = layout.score_cache();
        ensure_parent(&p).map_err(io_err(&p))?;
        Some(ScoreCache::open(&p).map_err(io_err(&p))?)
    } else {
        None
    };
    for model in &r.models {
        let path = layout.comparisons(&model.name);
        ensure_parent(&path).map_err(io_err(&path))?;
        if opts.resume && comparisons_complete(&path, &pairs, r.scoring.beta) {
            tracing::info!(model = %model.name, "comparisons already complete");
            continue;
        }
        tracing::info!(model = %model.name, pairs = pairs.len(), "scoring");
        let (done, err) = match score_model(r, model, &pairs, cache.as_ref()) {
            Ok(c) => (c, None),
            Err((partial, e)) => (partial, Some(e)),
        };
        jsonl::write_all(&path, &done).map_err(io_err(&path))?;
        if let Some(e) = err {
            return Err(e);
        }
    }
    if let Some(c) = &cache {
        let s = c.stats();
        tracing::info!(entries = s.entries, hits = s.hits, misses = s.misses, "score cache");
    }
    Ok(())
}

/// The full disclosure prompt grid for a generation config.
pub fn prompt_grid(cfg: &AuditConfig, g: &GenerationAuditConfig) -> Result<Vec<DisclosurePrompt>, ReportError> {
    let names = read_list(&cfg.resolve(&g.names))?;
    let identities = read_identities(&cfg.resolve(&g.identities))?;
    let forms = read_forms(&cfg.resolve(&g.forms))?;
    Ok(build_disclosure_prompts(&names, &identities, &forms))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct GenerationRow {
    pub prompt_index: usize,
    #[serde(flatten)]
    pub record: GenerationRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct FailureRow {
    pub stage: String,
    pub prompt_index: usize,
    #[serde(default)]
    pub sample_id: Option<String>,
    pub error: String,
}

pub(crate) fn sample_id(model: &str, prompt_index: usize, sample_index: usize) -> String {
    format!("{model}/{prompt_index:05}/{sample_index}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ScanArtifact {
    pub terms: Vec<String>,
    pub scan: DatasetScan,
}

const CHUNK: usize = 256;

fn generate_for_model(
    cfg: &AuditConfig,
    g: &GenerationAuditConfig,
    name: &str,
    scorer: &Scorer,
    prompts: &[DisclosurePrompt],
    resume: bool,
) -> Result<(Vec<GenerationRow>, Vec<FailureRow>), ReportError> {
    let layout = Layout::new(cfg.output_path());
    let raw_path = layout.raw_generations(name);
    ensure_parent(&raw_path).map_err(io_err(&raw_path))?;
    let mut gen_cfg = g.generation.clone();
    gen_cfg.seed = cfg.seeds.sampling_seed;
    let k = gen_cfg.samples_per_prompt;

    let mut kept: Vec<GenerationRow> = Vec::new();
    if resume {
        let read = jsonl::read_if_exists::<GenerationRow>(&raw_path).map_err(io_err(&raw_path))?;
        let mut by_prompt: BTreeMap<usize, BTreeMap<usize, GenerationRow>> = BTreeMap::new();
        for row in read.records {
            if row.prompt_index < prompts.len() && row.record.prompt == prompts[row.prompt_index].rendered {
                by_prompt
                    .entry(row.prompt_index)
                    .or_default()
                    .insert(row.record.sample_index, row);
            }
        }
        for (_, rows) in by_prompt {
            if rows.len() == k && rows.keys().copied().eq(0..k) {
                kept.extend(rows.into_values());
            }
        }
    }
    // rewrite with only complete prompts, then append the rest as they finish
    jsonl::write_all(&raw_path, &kept).map_err(io_err(&raw_path))?;
    let done: BTreeSet<usize> = kept.iter().map(|r| r.prompt_index).collect();
    let pending: Vec<usize> = (0..prompts.len()).filter(|i| !done.contains(i)).collect();
    tracing::info!(model = name, done = done.len(), pending = pending.len(), "generating");

    let mut file = jsonl::open_append(&raw_path).map_err(io_err(&raw_path))?;
    let mut failures = Vec::new();
    for chunk in pending.chunks(CHUNK) {
        let results: Vec<_> = chunk
            .par_iter()
            .map(|&i| (i, generate_samples(scorer, &prompts[i].rendered, &gen_cfg)))
            .collect();
        for (i, res) in results {
            match res {
                Ok(records) => {
                    for record in records {
                        let row = GenerationRow { prompt_index: i, record };
                        jsonl::append(&mut file, &row).map_err(io_err(&raw_path))?;
                        kept.push(row);
                    }
                }
                Err(e) => {
                    tracing::warn!(model = name, prompt = i, error = %e, "generation failed");
                    failures.push(FailureRow {
                        stage: "generate".into(),
                        prompt_index: i,
                        sample_id: None,
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    kept.sort_by_key(|r| (r.prompt_index, r.record.sample_index));
    Ok((kept, failures))
}

fn classify_for_model(
    cfg: &AuditConfig,
    g: &GenerationAuditConfig,
    name: &str,
    rows: Vec<GenerationRow>,
    prompts: &[DisclosurePrompt],
    failures: &mut Vec<FailureRow>,
) -> Result<Vec<RegardSample>, ReportError> {
    let classifier = build_classifier(&g.classifier, g.other_class)?;
    let toxicity = g.toxicity.as_ref().map(build_toxicity).transpose()?;
    let generated: Vec<GeneratedSample> = rows
        .into_iter()
        .map(|r| {
            GeneratedSample::new(
                sample_id(name, r.prompt_index, r.record.sample_index),
                prompts[r.prompt_index].clone(),
                r.record,
            )
        })
        .collect();
    let (kept, dropped) = filter_echoes(generated, cfg.thresholds.jaccard);
    let index_of = |s: &GeneratedSample| -> usize {
        s.sample_id.split('/').nth(1).and_then(|x| x.parse().ok()).unwrap_or(0)
    };
    let mut samples: Vec<RegardSample> = dropped.into_iter().map(RegardSample::filtered).collect();
    let fail = |s: &GeneratedSample, e: RegardError| FailureRow {
        stage: "classify".into(),
        prompt_index: index_of(s),
        sample_id: Some(s.sample_id.clone()),
        error: e.to_string(),
    };
    for chunk in kept.chunks(CHUNK) {
        let texts: Vec<String> = chunk.iter().map(|s| s.generation.text.clone()).collect();
        let nonempty: Vec<bool> = texts.iter().map(|t| !t.trim().is_empty()).collect();
        let to_send: Vec<String> = texts
            .iter()
            .zip(&nonempty)
            .filter(|(_, ok)| **ok)
            .map(|(t, _)| t.clone())
            .collect();
        let mut regards = classifier.classify_batch(&to_send).into_iter();
        let mut tox = toxicity.as_ref().map(|t| t.score_batch(&to_send).into_iter());
        for (s, ok) in chunk.iter().zip(nonempty) {
            if !ok {
                failures.push(fail(s, RegardError::EmptyText));
                continue;
            }
            let regard: Result<RegardDistribution, RegardError> = regards.next().expect("aligned");
            let t = tox.as_mut().map(|it| it.next().expect("aligned"));
            let t = match t {
                None => Ok(None),
                Some(Ok(v)) if (0.0..=1.0).contains(&v) => Ok(Some(v)),
                Some(Ok(v)) => Err(RegardError::InvalidDistribution(format!("toxicity {v}"))),
                Some(Err(e)) => Err(e),
            };
            match (regard, t) {
                (Ok(r), Ok(t)) => samples.push(RegardSample::classified(s.clone(), r, t)),
                (Err(e @ RegardError::ClassifierUnavailable(_)), _)
                | (_, Err(e @ RegardError::ClassifierUnavailable(_))) => {
                    return Err(ReportError::Backend(format!("{name}: {e}")));
                }
                (Err(e), _) | (_, Err(e)) => {
                    tracing::warn!(model = name, sample = %s.sample_id, error = %e, "classification failed");
                    failures.push(fail(s, e));
                }
            }
        }
    }
    samples.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    Ok(samples)
}

/// Corpus and generation/classification stages of the generation audit.
pub fn run_generation_stages(cfg: &AuditConfig, opts: RunOptions) -> Result<(), ReportError> {
    let g = cfg.generations.as_ref().ok_or(ReportError::MissingSection("generations"))?;
    if opts.stage == Stage::Stats {
        return Ok(());
    }
    let layout = Layout::new(cfg.output_path());
    let prompts = prompt_grid(cfg, g)?;
    let pp = layout.prompts();
    ensure_parent(&pp).map_err(io_err(&pp))?;
    jsonl::write_all(&pp, &prompts).map_err(io_err(&pp))?;
    tracing::info!(prompts = prompts.len(), "built prompt grid");
    if opts.stage == Stage::Corpus {
        return Ok(());
    }
    for m in &g.models {
        let scorer = Scorer::new(ModelRole::Policy, build_backend(&m.model)?);
        let samples_path = layout.samples(&m.name);
        let fail_path = layout.failures(&m.name);
        for p in [&samples_path, &fail_path] {
            ensure_parent(p).map_err(io_err(p))?;
        }
        let (rows, mut failures) = generate_for_model(cfg, g, &m.name, &scorer, &prompts, opts.resume)?;
        let expected: BTreeSet<String> = rows
            .iter()
            .map(|r| sample_id(&m.name, r.prompt_index, r.record.sample_index))
            .collect();
        if opts.resume && failures.is_empty() {
            let prev = jsonl::read_if_exists::<RegardSample>(&samples_path).map_err(io_err(&samples_path))?;
            let have: BTreeSet<String> = prev.records.iter().map(|s| s.sample_id.clone()).collect();
            if prev.corrupt_lines.is_empty() && have == expected {
                tracing::info!(model = %m.name, "classification already complete");
                continue;
            }
        }
        let samples = classify_for_model(cfg, g, &m.name, rows, &prompts, &mut failures)?;
        jsonl::write_all(&samples_path, &samples).map_err(io_err(&samples_path))?;
        jsonl::write_all(&fail_path, &failures).map_err(io_err(&fail_path))?;
        tracing::info!(
            model = %m.name,
            samples = samples.len(),
            filtered = samples.iter().filter(|s| s.filtered).count(),
            failures = failures.len(),
            "classified"
        );
    }
    Ok(())
}

/// Scans every configured preference corpus and writes one summary per
/// dataset.
pub fn run_corpus_scan(cfg: &AuditConfig) -> Result<(), ReportError> {
    let s = cfg.scan.as_ref().ok_or(ReportError::MissingSection("scan"))?;
    let layout = Layout::new(cfg.output_path());
    let terms: Vec<String> = match &s.terms {
        Some(p) => read_list(&cfg.resolve(p))?,
        None => DEFAULT_SCAN_TERMS.iter().map(|t| t.to_string()).collect(),
    };
    for d in &s.datasets {
        let records = read_corpus_jsonl(&d.name, &cfg.resolve(&d.path))?;
        let scan = scan_preference_corpus(&d.name, records, &terms);
        tracing::info!(
            dataset = %d.name,
            records = scan.records_scanned,
            matches = scan.match_count(),
            "scanned"
        );
        let out = layout.scan(&d.name);
        ensure_parent(&out).map_err(io_err(&out))?;
        let artifact = ScanArtifact { terms: terms.clone(), scan };
        let text = serde_json::to_string_pretty(&artifact).expect("serializable");
        std::fs::write(&out, text + "\n").map_err(io_err(&out))?;
    }
    Ok(())
}
