mod common;

use bias_audit::jsonl;
use bias_audit::report::{
    build_report, emit_report, run_audit, AuditReport, Format, Layout, ModelSpec, RunOptions, Stage,
};
use bias_audit::rewards::{RewardComparison, Selection};
use std::path::Path;

fn run_full(dir: &Path) -> AuditReport {
    let cfg = common::fixture_config(dir);
    run_audit(&cfg, RunOptions::default()).unwrap().unwrap()
}

fn comparisons(dir: &Path, model: &str) -> Vec<RewardComparison> {
    jsonl::read(&Layout::new(dir).comparisons(model)).unwrap().records
}

fn kappa_oracle(a: &[bool], b: &[bool]) -> f64 {
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let pa = a.iter().filter(|x| **x).count() as f64 / n;
    let pb = b.iter().filter(|x| **x).count() as f64 / n;
    let pe = pa * pb + (1.0 - pa) * (1.0 - pb);
    (agree - pe) / (1.0 - pe)
}

#[test]
fn fixture_matches_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_full(dir.path());
    let r = report.rewards.as_ref().unwrap();
    assert_eq!((r.n_pairs, r.n_templates), (50, 5));
    let row = |name: &str| r.models.iter().find(|m| m.name == name).unwrap();

    // scripted-a per template: transgender, nonbinary, genderfluid beat both
    // binary terms; lgbtq loses both; queer ties cis and loses to cisgender.
    let a = &row("scripted-a").selection;
    assert_eq!((a.n_pairs, a.n_wins, a.n_ties), (50, 30, 5));
    assert_eq!(a.rate, 65.0);
    // scripted-b: queer wins twice, the three neutral terms tie cis and beat
    // cisgender, transgender loses to cis and beats cisgender.
    let b = &row("scripted-b").selection;
    assert_eq!((b.n_wins, b.n_ties), (30, 15));
    assert_eq!(b.rate, 75.0);

    let id = &row("identity").selection;
    assert_eq!((id.rate, id.n_ties), (50.0, 50));
    for c in comparisons(dir.path(), "identity") {
        assert_eq!(c.r_chosen_group, 0.0);
        assert_eq!(c.r_other_group, 0.0);
    }

    // agreement over pairs decided by both models
    let ca = comparisons(dir.path(), "scripted-a");
    let cb = comparisons(dir.path(), "scripted-b");
    let (mut xa, mut xb) = (Vec::new(), Vec::new());
    for (p, q) in ca.iter().zip(&cb) {
        assert_eq!(p.pair_id, q.pair_id);
        if p.selection != Selection::Tie && q.selection != Selection::Tie {
            xa.push(p.selection == Selection::GroupA);
            xb.push(q.selection == Selection::GroupA);
        }
    }
    let k = r.agreement.iter().find(|k| k.model_a == "scripted-a" && k.model_b == "scripted-b").unwrap();
    assert_eq!(k.n, 30);
    assert!((k.kappa - kappa_oracle(&xa, &xb)).abs() < 1e-12);
    assert!((k.kappa + 2.0 / 7.0).abs() < 1e-12);

    let g = report.generations.as_ref().unwrap();
    assert_eq!((g.n_prompts, g.samples_per_prompt), (40, 5));
    let gm = |name: &str| g.models.iter().find(|m| m.name == name).unwrap();
    let base = gm("gen-base").disparity.as_ref().unwrap();
    assert_eq!((base.pct_negative_tgnb, base.pct_negative_binary), (20.0, 0.0));
    assert_eq!(base.difference, 20.0);
    let dpo = gm("gen-dpo").disparity.as_ref().unwrap();
    assert_eq!((dpo.pct_negative_tgnb, dpo.pct_negative_binary, dpo.difference), (60.0, 20.0, 40.0));
    assert_eq!(gm("gen-dpo").n_filtered, 0);
    let fluid = gm("gen-dpo").by_group_and_form.iter().find(|b| b.key == "tgnb/fluid").unwrap();
    assert_eq!(fluid.pct_negative, 100.0);

    let shift = &g.comparisons[0];
    assert_eq!(shift.disparity_change.as_ref().unwrap().change, 20.0);
    // every prompt is neutral at base; only the 10 fluid nonbinary prompts
    // move by 0.8
    assert_eq!((shift.prompts_compared, shift.base_neutral, shift.n_candidates, shift.n_sampled), (40, 40, 10, 5));
    for c in &shift.candidates {
        assert!((c.delta - 0.8).abs() < 1e-12);
        assert!(c.prompt.contains("came out as nonbinary"));
    }

    let tox = gm("gen-dpo").toxicity.as_ref().unwrap();
    let nb = tox.iter().find(|t| t.identity == "nonbinary").unwrap();
    assert_eq!(nb.pct_toxic, 60.0);

    let scan = report.corpus_scan.as_ref().unwrap();
    assert_eq!((scan.datasets[0].matches, scan.datasets[0].unreadable), (3, 1));
}

#[test]
fn report_rebuilds_identically_from_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_full(dir.path());
    let cfg = common::fixture_config(dir.path());
    assert_eq!(build_report(&cfg).unwrap(), report);
}

fn truncate_lines(path: &Path, keep: usize) {
    let text = std::fs::read_to_string(path).unwrap();
    let kept: String = text.lines().take(keep).map(|l| format!("{l}\n")).collect();
    std::fs::write(path, kept).unwrap();
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let full = tempfile::tempdir().unwrap();
    run_full(full.path());
    emit_report(&build_report(&common::fixture_config(full.path())).unwrap(), full.path(), &[Format::Json]).unwrap();

    let part = tempfile::tempdir().unwrap();
    let cfg = common::fixture_config(part.path());
    run_audit(&cfg, RunOptions { stage: Stage::Score, resume: false }).unwrap();
    let layout = Layout::new(part.path());
    // simulate a crash partway through scoring and generation
    truncate_lines(&layout.comparisons("scripted-b"), 17);
    std::fs::remove_file(layout.comparisons("jittered")).unwrap();
    truncate_lines(&layout.raw_generations("gen-dpo"), 63);
    std::fs::remove_file(layout.samples("gen-dpo")).unwrap();

    let cache_before = std::fs::read_to_string(layout.score_cache()).unwrap().lines().count();
    let report = run_audit(&cfg, RunOptions { stage: Stage::All, resume: true }).unwrap().unwrap();
    let cache_after = std::fs::read_to_string(layout.score_cache()).unwrap().lines().count();
    // every score was already cached
    assert_eq!(cache_before, cache_after);
    emit_report(&report, part.path(), &[Format::Json]).unwrap();
    assert_eq!(
        std::fs::read(Layout::new(full.path()).report_json()).unwrap(),
        std::fs::read(layout.report_json()).unwrap()
    );
}

#[test]
fn cache_does_not_change_comparisons() {
    let on = tempfile::tempdir().unwrap();
    let off = tempfile::tempdir().unwrap();
    run_full(on.path());
    let mut cfg = common::fixture_config(off.path());
    cfg.rewards.as_mut().unwrap().cache = false;
    run_audit(&cfg, RunOptions::default()).unwrap();
    for m in ["scripted-a", "scripted-b", "jittered", "identity"] {
        assert_eq!(comparisons(on.path(), m), comparisons(off.path(), m), "{m}");
    }
    assert!(!Layout::new(off.path()).score_cache().exists());
}

#[test]
fn all_echo_generations_surface_empty_group() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::fixture_config(dir.path());
    cfg.rewards = None;
    cfg.scan = None;
    let names = dir.path().join("names.txt");
    std::fs::write(&names, "Alex\n").unwrap();
    let g = cfg.generations.as_mut().unwrap();
    g.names = names;
    g.comparisons.clear();
    g.models.truncate(1);
    g.models[0].model = toml::from_str::<ModelSpec>(
        r#"backend = "fixed_text"
model_id = "echo"
text = "Alex is nonbinary and a woman came out as""#,
    )
    .unwrap();
    let report = run_audit(&cfg, RunOptions::default()).unwrap().unwrap();
    let row = &report.generations.unwrap().models[0];
    assert_eq!((row.n_samples, row.n_filtered), (20, 20));
    assert!(row.disparity.is_none());
    assert!(row.disparity_note.as_deref().unwrap().contains("no unfiltered samples"), "{:?}", row.disparity_note);
}

#[test]
fn ingested_annotations_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    run_full(dir.path());
    let layout = Layout::new(dir.path());
    let export = layout.annotation_export("gen-base", "gen-dpo");
    let mut reader = csv::Reader::from_path(&export).unwrap();
    let headers = reader.headers().unwrap().clone();
    let mut out = csv::Writer::from_path(dir.path().join("filled.csv")).unwrap();
    out.write_record(&headers).unwrap();
    let themes = ["social rejection", "Violence", "social rejection", "", "hardship"];
    for (rec, theme) in reader.records().zip(themes) {
        let rec = rec.unwrap();
        out.write_record([&rec[0], &rec[1], &rec[2], theme, "", "ann1"]).unwrap();
    }
    out.flush().unwrap();
    let mut cfg = common::fixture_config(dir.path());
    cfg.generations.as_mut().unwrap().comparisons[0].annotations = Some(dir.path().join("filled.csv"));
    let report = build_report(&cfg).unwrap();
    let t = report.generations.unwrap().comparisons[0].themes.clone().unwrap();
    assert_eq!((t.records.len(), t.unannotated.len()), (4, 1));
    let share = |name: &str| t.shares.iter().find(|s| s.theme == name).unwrap().pct;
    assert_eq!(share("social rejection"), 50.0);
    assert_eq!(share("violence"), 25.0);
    assert_eq!(share("fear"), 0.0);
}

fn non_plot_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x != "svg") {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn emitting_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_full(dir.path());
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = emit_report(&report, a.path(), &Format::ALL).unwrap();
    let fb = emit_report(&report, b.path(), &Format::ALL).unwrap();
    assert_eq!(fa.len(), fb.len());
    assert_eq!(non_plot_files(a.path()), non_plot_files(b.path()));
    assert!(std::fs::read_to_string(a.path().join("report.md")).unwrap().contains("| scripted-a | 65.00 ["));
}

#[test]
fn empty_report_still_writes_every_file() {
    let full = tempfile::tempdir().unwrap();
    let files_full = emit_report(&run_full(full.path()), &full.path().join("out"), &Format::ALL).unwrap();
    let empty = tempfile::tempdir().unwrap();
    let files = emit_report(&AuditReport::empty("digest"), empty.path(), &Format::ALL).unwrap();
    let names = |fs: &[std::path::PathBuf], root: &Path| -> Vec<String> {
        fs.iter().map(|p| p.strip_prefix(root).unwrap().display().to_string()).collect()
    };
    assert_eq!(names(&files, empty.path()), names(&files_full, &full.path().join("out")));
    let csv = std::fs::read_to_string(empty.path().join("tables/selection_rates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(empty.path().join("report.json")).unwrap()).unwrap();
    assert!(json["rewards"].is_null());
    let svg = std::fs::read_to_string(empty.path().join("plots/selection_rates.svg")).unwrap();
    assert!(svg.contains("no data"));
}

#[test]
fn unwritable_output_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let err = emit_report(&AuditReport::empty("d"), &blocker.join("sub"), &[Format::Json]).unwrap_err();
    assert!(matches!(err, bias_audit::report::ReportError::UnwritableOutput(_)), "{err}");
}

#[test]
fn config_digest_tracks_meaningful_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::fixture_config(dir.path());
    let mut moved = cfg.clone();
    moved.output_dir = dir.path().join("elsewhere");
    assert_eq!(cfg.digest(), moved.digest());
    let mut changed = cfg.clone();
    changed.seeds.bootstrap_seed += 1;
    assert_ne!(cfg.digest(), changed.digest());
    let mut changed = cfg.clone();
    changed.thresholds.jaccard = 0.5;
    assert_ne!(cfg.digest(), changed.digest());
}

#[test]
fn stats_stage_needs_persisted_scores() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::fixture_config(dir.path());
    run_audit(&cfg, RunOptions { stage: Stage::Corpus, resume: false }).unwrap();
    let err = run_audit(&cfg, RunOptions { stage: Stage::Stats, resume: false }).unwrap_err();
    assert!(err.to_string().contains("missing artifact"), "{err}");
}
