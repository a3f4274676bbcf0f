use bias_audit::scoring::stub::{FixedTableModel, FixedTextGenerator, UniformModel};
use bias_audit::scoring::{
    generate_samples, score_completion, score_many, CacheKey, GenerationConfig, LocalEngine,
    LogProbRecord, ModelRole, Scorer, ScoreCache, ScoringError, ScoringParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::Arc;

fn uniform(limit: usize) -> Scorer {
    Scorer::new(
        ModelRole::Reference,
        Arc::new(LocalEngine::new("uniform", UniformModel, limit)),
    )
}

#[test]
fn uniform_stub_matches_analytic_value() {
    let s = uniform(1024);
    let params = ScoringParams::default();
    for completion in ["a", "people are unfit", "ünïcode"] {
        let k = completion.len();
        let r = score_completion(&s, "Between A and B?", completion, &params, None).unwrap();
        let expected = k as f64 * (1.0f64 / 256.0).ln();
        assert!((r.logprob_sum - expected).abs() < 1e-9);
        assert_eq!(r.completion_token_count, k);
        assert!(r.logprob_sum <= 0.0);
    }
}

#[test]
fn empty_completion_rejected() {
    let s = uniform(1024);
    assert_eq!(
        score_completion(&s, "p", "", &ScoringParams::default(), None),
        Err(ScoringError::EmptyCompletion)
    );
}

#[test]
fn context_overflow() {
    let s = uniform(8);
    assert!(matches!(
        score_completion(&s, "12345", "6789", &ScoringParams::default(), None),
        Err(ScoringError::ContextOverflow { tokens: 9, limit: 8 })
    ));
}

#[test]
fn repeated_call_is_byte_identical_via_cache() {
    let s = Scorer::new(
        ModelRole::Policy,
        Arc::new(LocalEngine::new("table", FixedTableModel::from_seed(3), 4096)),
    );
    let cache = ScoreCache::in_memory();
    let params = ScoringParams::default();
    let a = score_completion(&s, "p", "completion", &params, Some(&cache)).unwrap();
    let b = score_completion(&s, "p", "completion", &params, Some(&cache)).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert_eq!(cache.stats().hits, 1);
    let uncached = score_completion(&s, "p", "completion", &params, None).unwrap();
    assert_eq!(a, uncached);
}

#[test]
fn chat_wrapper_changes_scoring_input_not_record_prompt() {
    let s = uniform(4096);
    let params = ScoringParams {
        beta: 1.0,
        prompt_template: Some("User: {prompt}\nAssistant: ".into()),
    };
    let r = score_completion(&s, "hi", "ok", &params, None).unwrap();
    assert_eq!(r.prompt, "hi");
    assert_eq!(r.params_digest, params.digest());
}

#[test]
fn score_many_matches_single_calls() {
    let s = Scorer::new(
        ModelRole::Policy,
        Arc::new(LocalEngine::new("table", FixedTableModel::from_seed(11), 4096)),
    );
    let params = ScoringParams::default();
    let cache = ScoreCache::in_memory();
    let items: Vec<(String, String)> = (0..20)
        .map(|i| (format!("prompt {i}"), format!("completion {}", i * 7)))
        .chain(std::iter::once(("p".to_string(), String::new())))
        .collect();
    let batch = score_many(&s, &items, &params, Some(&cache));
    for ((p, c), r) in items.iter().zip(&batch) {
        let single = score_completion(&s, p, c, &params, None);
        assert_eq!(&single, r);
    }
    // second pass is served from the cache
    let again = score_many(&s, &items, &params, Some(&cache));
    assert_eq!(batch, again);
    assert_eq!(cache.stats().hits, 20);
}

proptest! {
    #[test]
    fn additivity_on_independent_stub(
        seed in 0u64..1000,
        prompt in "[a-z ]{0,20}",
        a in "[a-zA-Z ,.]{1,20}",
        b in "[a-zA-Z ,.]{1,20}",
    ) {
        let s = Scorer::new(
            ModelRole::Policy,
            Arc::new(LocalEngine::new("table", FixedTableModel::from_seed(seed), 4096)),
        );
        let p = ScoringParams::default();
        let ab = format!("{a}{b}");
        let pa = format!("{prompt}{a}");
        let whole = score_completion(&s, &prompt, &ab, &p, None).unwrap().logprob_sum;
        let first = score_completion(&s, &prompt, &a, &p, None).unwrap().logprob_sum;
        let second = score_completion(&s, &pa, &b, &p, None).unwrap().logprob_sum;
        prop_assert!((whole - (first + second)).abs() < 1e-9);
        prop_assert!(whole <= 0.0);
    }
}

#[test]
fn cache_model_based_against_map_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.jsonl");
    let cache = ScoreCache::open(&path).unwrap();
    let mut oracle: HashMap<CacheKey, LogProbRecord> = HashMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..1000 {
        let prompt = format!("p{}", rng.gen_range(0..30));
        let completion = format!("c{}", rng.gen_range(0..5));
        let key = CacheKey::new("m", &prompt, &completion, "d");
        if rng.gen_bool(0.5) {
            // deterministic value per key, as real scoring is
            let lp = -((prompt.len() * 31 + completion.len()) as f64) / 7.0;
            let rec = LogProbRecord::new("m", &prompt, &completion, lp, 2, "d".into());
            cache.put(&key, &rec).unwrap();
            oracle.insert(key, rec);
        } else {
            assert_eq!(cache.get(&key), oracle.get(&key).cloned());
        }
    }
    drop(cache);
    let reopened = ScoreCache::open(&path).unwrap();
    assert_eq!(reopened.len(), oracle.len());
    for (k, v) in &oracle {
        assert_eq!(reopened.get(k).as_ref(), Some(v));
    }
}

#[test]
fn generation_counts_and_replay() {
    let s = Scorer::new(
        ModelRole::Policy,
        Arc::new(LocalEngine::new("table", FixedTableModel::from_seed(5), 4096)),
    );
    let cfg = GenerationConfig {
        max_new_tokens: 30,
        seed: 17,
        ..Default::default()
    };
    let a = generate_samples(&s, "Alex is genderfluid and", &cfg).unwrap();
    let b = generate_samples(&s, "Alex is genderfluid and", &cfg).unwrap();
    assert_eq!(a.len(), 5);
    assert_eq!(a, b);
    assert!(a.iter().enumerate().all(|(i, r)| r.sample_index == i));
    assert!(a.iter().any(|r| r.text != a[0].text));
    let other_seed = generate_samples(&s, "Alex is genderfluid and", &GenerationConfig { seed: 18, ..cfg.clone() }).unwrap();
    assert_ne!(a, other_seed);
}

#[test]
fn fixed_generator_single_sample() {
    let s = Scorer::new(
        ModelRole::Policy,
        Arc::new(FixedTextGenerator {
            model_id: "fixed".into(),
            text: " went to the store.".into(),
        }),
    );
    let cfg = GenerationConfig {
        samples_per_prompt: 1,
        ..Default::default()
    };
    let out = generate_samples(&s, "Alex is a man and", &cfg).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].text, " went to the store.");
    assert!(matches!(
        score_completion(&s, "p", "c", &ScoringParams::default(), None),
        Err(ScoringError::Unsupported { .. })
    ));
}
