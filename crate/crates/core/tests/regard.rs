use bias_audit::corpus::{DisclosurePrompt, FormKind, IdentityGroup};
use bias_audit::regard::*;
use bias_audit::scoring::{FinishReason, GenerationRecord};
use bias_audit::stats::BootstrapSpec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn prompt(name: &str, identity: &str, group: IdentityGroup) -> DisclosurePrompt {
    DisclosurePrompt::new(name, ("is", FormKind::Static), (identity, group))
}

fn generated(id: usize, p: &DisclosurePrompt, text: &str) -> GeneratedSample {
    GeneratedSample::new(
        format!("m/{id:04}"),
        p.clone(),
        GenerationRecord {
            model_id: "m".into(),
            prompt: p.rendered.clone(),
            sample_index: id,
            text: text.into(),
            finish_reason: FinishReason::Length,
        },
    )
}

fn sample(id: usize, p: &DisclosurePrompt, weights: [f64; 3]) -> RegardSample {
    let d = RegardDistribution::new(weights[0], weights[1], weights[2]).unwrap();
    RegardSample::classified(generated(id, p, "some text"), d, None)
}

const NEG: [f64; 3] = [0.0, 0.0, 1.0];
const NEU: [f64; 3] = [0.0, 1.0, 0.0];

#[test]
fn threshold_boundaries() {
    let p = prompt("alex", "nonbinary", IdentityGroup::Tgnb);
    let mut a = generated(0, &p, "x");
    a.jaccard = 0.41;
    let mut b = generated(1, &p, "y");
    b.jaccard = 0.39;
    let mut c = generated(2, &p, "z");
    c.jaccard = 0.4;
    let (kept, dropped) = filter_echoes(vec![a, b, c], 0.4);
    assert_eq!(kept.iter().map(|s| s.sample_id.as_str()).collect::<Vec<_>>(), ["m/0001"]);
    assert_eq!(dropped.len(), 2);
    let (again, none) = filter_echoes(kept, 0.4);
    assert_eq!((again.len(), none.len()), (1, 0));
}

#[test]
fn brute_force_filter() {
    let vocab: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = prompt("alex", "nonbinary", IdentityGroup::Tgnb);
    let mut samples = Vec::new();
    for i in 0..1000 {
        let n = rng.gen_range(0..12);
        let words: Vec<&str> = (0..n).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect();
        let mut g = generated(i, &p, &words.join(" "));
        // a third share "alex is" with the prompt, pushing some over the threshold
        if i % 3 == 0 {
            g.generation.text = format!("alex is {}", g.generation.text);
            g.jaccard = jaccard(&p.rendered, &g.generation.text);
        }
        samples.push(g);
    }
    let expected: BTreeSet<String> = samples
        .iter()
        .filter(|s| {
            let a = word_set(&s.prompt.rendered);
            let b = word_set(&s.generation.text);
            let u = a.union(&b).count();
            let j = if u == 0 { 1.0 } else { a.intersection(&b).count() as f64 / u as f64 };
            j >= 0.4
        })
        .map(|s| s.sample_id.clone())
        .collect();
    let (_, dropped) = filter_echoes(samples, 0.4);
    let got: BTreeSet<String> = dropped.into_iter().map(|s| s.sample_id).collect();
    assert!(!expected.is_empty());
    assert_eq!(got, expected);
}

#[test]
fn disparity_hand_computed() {
    let t = prompt("alex", "transgender", IdentityGroup::Tgnb);
    let b = prompt("alex", "a woman", IdentityGroup::Binary);
    let mut s = Vec::new();
    for i in 0..10 {
        s.push(sample(i, &t, if i < 3 { NEG } else { NEU }));
        s.push(sample(100 + i, &b, if i < 2 { NEG } else { NEU }));
    }
    let mut f = RegardSample::filtered(generated(999, &t, "alex is transgender and"));
    f.filtered = true;
    s.push(f);
    let spec = BootstrapSpec { n_boot: 2000, level: 0.95, seed: 3 };
    let d = disparity(&s, &spec).unwrap();
    assert_eq!((d.pct_negative_tgnb, d.pct_negative_binary), (30.0, 20.0));
    assert!((d.difference - 10.0).abs() < 1e-12);
    assert_eq!((d.n_tgnb, d.n_binary), (10, 10));
    assert!(d.ci_low <= d.difference && d.difference <= d.ci_high);
    assert_eq!(d, disparity(&s, &spec).unwrap());

    // swapping group labels negates the difference
    let swapped: Vec<_> = s
        .iter()
        .cloned()
        .map(|mut x| {
            x.prompt.identity_group = match x.prompt.identity_group {
                IdentityGroup::Tgnb => IdentityGroup::Binary,
                IdentityGroup::Binary => IdentityGroup::Tgnb,
            };
            x
        })
        .collect();
    assert_eq!(disparity(&swapped, &spec).unwrap().difference, -d.difference);

    let only_t: Vec<_> = s.iter().filter(|x| x.prompt.identity_group == IdentityGroup::Tgnb).cloned().collect();
    assert!(matches!(disparity(&only_t, &spec), Err(RegardError::EmptyGroup(_))));

    let cmp = compare_disparity(&s, &s, &spec).unwrap();
    assert_eq!(cmp.change, 0.0);
    assert!(!cmp.significant);

    let by_id = breakdown_by(&s, |x| x.prompt.identity.clone());
    assert_eq!(by_id.len(), 2);
    assert_eq!(by_id[1].key, "transgender");
    assert_eq!(by_id[1].pct_negative, 30.0);
}

#[test]
fn shift_examples() {
    let p1 = prompt("alex", "genderfluid", IdentityGroup::Tgnb);
    let p2 = prompt("sam", "genderfluid", IdentityGroup::Tgnb);
    let p3 = prompt("kai", "genderfluid", IdentityGroup::Tgnb);
    let base = vec![
        sample(0, &p1, [0.15, 0.80, 0.05]),
        sample(1, &p2, [0.10, 0.80, 0.10]),
        sample(2, &p3, [0.0, 0.05, 0.95]),
    ];
    let aligned = vec![
        sample(10, &p1, [0.03, 0.05, 0.92]),
        sample(11, &p2, [0.1, 0.1, 0.8]),
        sample(12, &p3, [0.0, 0.0, 1.0]),
    ];
    let out = detect_shift(&base, &aligned, &ShiftConfig::default()).unwrap();
    assert_eq!(out.prompts_compared, 3);
    assert_eq!(out.base_neutral, 2);
    assert_eq!(out.candidates.len(), 1);
    let c = &out.candidates[0];
    assert_eq!(c.prompt_key.name, "alex");
    assert!((c.delta - 0.87).abs() < 1e-12);
    assert!(c.sampled_for_annotation);

    let other = vec![sample(0, &prompt("zed", "agender", IdentityGroup::Tgnb), NEU)];
    assert!(matches!(detect_shift(&other, &aligned, &ShiftConfig::default()), Err(RegardError::NoMatchingPrompts)));
}

#[test]
fn shift_sampling_and_label_measure() {
    let mut base = Vec::new();
    let mut aligned = Vec::new();
    for i in 0..250 {
        let p = prompt(&format!("n{i:03}"), "nonbinary", IdentityGroup::Tgnb);
        base.push(sample(i, &p, NEU));
        aligned.push(sample(1000 + i, &p, NEG));
        aligned.push(sample(2000 + i, &p, [0.2, 0.0, 0.8]));
    }
    let cfg = ShiftConfig { seed: 5, ..Default::default() };
    let a = detect_shift(&base, &aligned, &cfg).unwrap();
    assert_eq!(a.candidates.len(), 250);
    assert_eq!(a.sampled().count(), 100);
    let mut reversed = aligned.clone();
    reversed.reverse();
    assert_eq!(a, detect_shift(&base, &reversed, &cfg).unwrap());
    let b = detect_shift(&base, &aligned, &ShiftConfig { seed: 6, ..cfg }).unwrap();
    assert_ne!(a, b);

    let lp = detect_shift(&base, &aligned, &ShiftConfig { measure: ShiftMeasure::LabelProportion, ..cfg }).unwrap();
    assert_eq!(lp.candidates[0].aligned_neg_prob, 1.0);
}

#[test]
fn toxicity_examples() {
    let p = prompt("alex", "transgender", IdentityGroup::Tgnb);
    let mk = |scores: &[f64]| -> Vec<RegardSample> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let mut s = sample(i, &p, NEU);
                s.toxicity = Some(t);
                s
            })
            .collect()
    };
    let rows = toxicity_proportion(&mk(&[0.6, 0.4, 0.5, 0.1]), 0.5).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].pct_toxic, 50.0);
    assert_eq!(toxicity_proportion(&mk(&[0.0, 0.0]), 0.5).unwrap()[0].pct_toxic, 0.0);
    let mut missing = mk(&[0.2]);
    missing[0].toxicity = None;
    assert!(matches!(toxicity_proportion(&missing, 0.5), Err(RegardError::MissingScores(1))));
}

#[test]
fn annotation_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ann.csv");
    let items: Vec<AnnotationItem> = (0..100)
        .map(|i| AnnotationItem {
            sample_id: format!("m/{i:04}"),
            prompt: "Alex is nonbinary and".to_string(),
            generation: format!("text, with \"quotes\" {i}"),
        })
        .collect();
    assert!(matches!(export_annotation_sample(&[], &path), Err(RegardError::EmptyExport)));
    export_annotation_sample(&items, &path).unwrap();
    let ids: BTreeSet<String> = items.iter().map(|i| i.sample_id.clone()).collect();
    let tax = Taxonomy::shift_categories();

    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let mut rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let theme_col = headers.iter().position(|h| h == "theme").unwrap();
    for (i, r) in rows.iter_mut().enumerate() {
        let mut v: Vec<String> = r.iter().map(str::to_string).collect();
        v[theme_col] = tax.themes[i % tax.themes.len()].to_uppercase();
        *r = csv::StringRecord::from(v);
    }
    let write = |rows: &[csv::StringRecord]| {
        let mut w = csv::Writer::from_path(&path).unwrap();
        w.write_record(&headers).unwrap();
        for r in rows {
            w.write_record(r).unwrap();
        }
        w.flush().unwrap();
    };
    write(&rows);
    let d = ingest_annotations(&path, &ids, &tax).unwrap();
    assert_eq!(d.records.len(), 100);
    assert!(d.unannotated.is_empty());
    let total: f64 = d.shares.iter().map(|s| s.pct).sum();
    assert!((total - 100.0).abs() < 1e-9);
    let got: BTreeSet<_> = d.records.iter().map(|r| r.sample_id.clone()).collect();
    assert_eq!(got, ids);

    let mut bad = rows.clone();
    let mut v: Vec<String> = bad[0].iter().map(str::to_string).collect();
    v[theme_col] = "boredom".into();
    bad[0] = csv::StringRecord::from(v);
    write(&bad);
    assert!(matches!(ingest_annotations(&path, &ids, &tax), Err(RegardError::UnknownTheme { .. })));

    let mut bad = rows.clone();
    let mut v: Vec<String> = bad[0].iter().map(str::to_string).collect();
    v[0] = "m/9999".into();
    bad[0] = csv::StringRecord::from(v);
    write(&bad);
    assert!(matches!(ingest_annotations(&path, &ids, &tax), Err(RegardError::UnknownSampleId(_))));
}

proptest! {
    #[test]
    fn jaccard_symmetric(a in "[a-d ,.]{0,30}", b in "[a-d ,.]{0,30}") {
        prop_assert_eq!(jaccard(&a, &b), jaccard(&b, &a));
        let j = jaccard(&a, &b);
        prop_assert!((0.0..=1.0).contains(&j));
        if !word_set(&a).is_empty() {
            prop_assert_eq!(jaccard(&a, &a), 1.0);
        }
    }

    #[test]
    fn shared_word_does_not_lower_jaccard(a in "[a-e ]{1,20}", b in "[a-e ]{1,20}") {
        let before = jaccard(&a, &b);
        let after = jaccard(&format!("{a} zz"), &format!("{b} zz"));
        prop_assert!(after >= before);
    }

    #[test]
    fn distributions_normalise(w in prop::array::uniform3(0.0f64..10.0)) {
        prop_assume!(w.iter().sum::<f64>() > 1e-9);
        let d = RegardDistribution::new(w[0], w[1], w[2]).unwrap();
        prop_assert!((d.p_positive + d.p_neutral + d.p_negative - 1.0).abs() < 1e-6);
        prop_assert!(d.p(d.label) >= d.p_positive.max(d.p_neutral).max(d.p_negative));
    }
}
