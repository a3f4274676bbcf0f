use super::layout::Layout;
use super::model::AuditReport;
use super::plots;
use super::ReportError;
use crate::stats::{fmt_pct, fmt_rate_ci};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Json,
    Csv,
    Markdown,
    Plots,
}

impl Format {
    pub const ALL: [Format; 4] = [Format::Json, Format::Csv, Format::Markdown, Format::Plots];

    /// Comma-separated list, e.g. `json,csv`; `all` selects everything.
    pub fn parse_list(s: &str) -> Result<Vec<Format>, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                return Ok(Self::ALL.to_vec());
            }
            out.push(part.parse()?);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            "plots" | "svg" => Ok(Format::Plots),
            _ => Err(format!("unknown format {s:?} (json, csv, markdown, plots)")),
        }
    }
}

fn unwritable(path: &Path) -> impl Fn(std::io::Error) -> ReportError + '_ {
    move |e| ReportError::UnwritableOutput(format!("{}: {e}", path.display()))
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<(), ReportError> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p).map_err(unwritable(p))?;
    }
    std::fs::write(path, contents).map_err(unwritable(path))
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

struct Table {
    name: &'static str,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }
}

fn tables(report: &AuditReport) -> Vec<Table> {
    let mut selection = Table::new(
        "selection_rates",
        &[
            "model", "policy_model", "reference_model", "target_group", "n_pairs", "n_wins", "n_ties",
            "rate", "ci_low", "ci_high", "n_boot", "level", "seed", "significant_vs_baseline", "display",
        ],
    );
    let mut baseline = Table::new(
        "baseline_tests",
        &["model", "target_group", "successes", "trials", "p_value", "alpha", "significant"],
    );
    let mut corr = Table::new("correlations", &["model", "n", "r_pb", "p_value", "note"]);
    let mut agree = Table::new("agreement", &["model_a", "model_b", "n", "kappa"]);
    if let Some(r) = &report.rewards {
        for m in &r.models {
            let s = &m.selection;
            selection.push(vec![
                m.name.clone(),
                m.policy_model.clone(),
                m.reference_model.clone(),
                s.target_group.clone(),
                s.n_pairs.to_string(),
                s.n_wins.to_string(),
                s.n_ties.to_string(),
                num(s.rate),
                num(s.ci_low),
                num(s.ci_high),
                s.n_boot.to_string(),
                num(s.level),
                s.seed.to_string(),
                s.significant_vs_baseline.to_string(),
                fmt_rate_ci(s.rate, s.ci_low, s.ci_high),
            ]);
            let b = &m.baseline;
            baseline.push(vec![
                m.name.clone(),
                b.target_group.clone(),
                b.successes.to_string(),
                b.trials.to_string(),
                num(b.p_value),
                num(b.alpha),
                b.significant.to_string(),
            ]);
            corr.push(vec![
                m.name.clone(),
                m.correlation.as_ref().map(|c| c.n.to_string()).unwrap_or_default(),
                opt(m.correlation.as_ref().map(|c| c.r_pb)),
                opt(m.correlation.as_ref().map(|c| c.p_value)),
                m.correlation_note.clone().unwrap_or_default(),
            ]);
        }
        for a in &r.agreement {
            agree.push(vec![a.model_a.clone(), a.model_b.clone(), a.n.to_string(), num(a.kappa)]);
        }
    }

    let mut filtering = Table::new(
        "generation_filtering",
        &["model", "stage", "n_samples", "n_filtered", "pct_filtered", "failed_prompts", "failed_classifications"],
    );
    let disparity_header = [
        "model", "stage", "n_tgnb", "n_binary", "pct_negative_tgnb", "pct_negative_binary", "difference",
        "ci_low", "ci_high", "note",
    ];
    let mut disp = Table::new("disparity", &disparity_header);
    let mut pooled = Table::new("disparity_pooled", &disparity_header);
    let mut breakdown = Table::new(
        "regard_breakdown",
        &[
            "model", "dimension", "key", "n", "n_negative", "n_neutral", "n_positive", "pct_negative",
            "pct_neutral", "pct_positive",
        ],
    );
    let mut change = Table::new(
        "disparity_change",
        &["base", "aligned", "base_difference", "aligned_difference", "change", "ci_low", "ci_high", "significant", "note"],
    );
    let mut shift_summary = Table::new(
        "shift_summary",
        &["base", "aligned", "prompts_compared", "base_neutral", "n_candidates", "n_sampled"],
    );
    let mut shifts = Table::new(
        "shift_candidates",
        &[
            "base", "aligned", "name", "disclosure_form", "identity", "prompt", "base_neg_prob",
            "aligned_neg_prob", "delta", "sampled_for_annotation",
        ],
    );
    let mut tox = Table::new("toxicity", &["model", "identity", "identity_group", "n", "n_toxic", "pct_toxic"]);
    let mut themes = Table::new("themes", &["base", "aligned", "taxonomy", "theme", "count", "pct"]);
    let disp_row = |model: String, stage: String, d: &Option<crate::regard::DisparityResult>, note: &Option<String>| {
        match d {
            Some(d) => vec![
                model,
                stage,
                d.n_tgnb.to_string(),
                d.n_binary.to_string(),
                num(d.pct_negative_tgnb),
                num(d.pct_negative_binary),
                num(d.difference),
                num(d.ci_low),
                num(d.ci_high),
                note.clone().unwrap_or_default(),
            ],
            None => {
                let mut v = vec![model, stage];
                v.extend(std::iter::repeat_n(String::new(), 7));
                v.push(note.clone().unwrap_or_default());
                v
            }
        }
    };
    if let Some(g) = &report.generations {
        for m in &g.models {
            filtering.push(vec![
                m.name.clone(),
                m.stage.clone(),
                m.n_samples.to_string(),
                m.n_filtered.to_string(),
                num(m.pct_filtered),
                m.failed_prompts.to_string(),
                m.failed_classifications.to_string(),
            ]);
            disp.push(disp_row(m.name.clone(), m.stage.clone(), &m.disparity, &m.disparity_note));
            for (dim, rows) in [
                ("identity", &m.by_identity),
                ("form_kind", &m.by_form_kind),
                ("group_and_form", &m.by_group_and_form),
            ] {
                for b in rows {
                    breakdown.push(vec![
                        m.name.clone(),
                        dim.to_string(),
                        b.key.clone(),
                        b.n.to_string(),
                        b.n_negative.to_string(),
                        b.n_neutral.to_string(),
                        b.n_positive.to_string(),
                        num(b.pct_negative),
                        num(b.pct_neutral),
                        num(b.pct_positive),
                    ]);
                }
            }
            for t in m.toxicity.iter().flatten() {
                tox.push(vec![
                    m.name.clone(),
                    t.identity.clone(),
                    t.identity_group.to_string(),
                    t.n.to_string(),
                    t.n_toxic.to_string(),
                    num(t.pct_toxic),
                ]);
            }
        }
        for p in &g.pooled {
            pooled.push(disp_row(p.models.join(";"), p.stage.clone(), &p.disparity, &p.note));
        }
        for c in &g.comparisons {
            let d = c.disparity_change.as_ref();
            change.push(vec![
                c.base.clone(),
                c.aligned.clone(),
                opt(d.map(|d| d.base_difference)),
                opt(d.map(|d| d.aligned_difference)),
                opt(d.map(|d| d.change)),
                opt(d.map(|d| d.ci_low)),
                opt(d.map(|d| d.ci_high)),
                d.map(|d| d.significant.to_string()).unwrap_or_default(),
                c.note.clone().unwrap_or_default(),
            ]);
            shift_summary.push(vec![
                c.base.clone(),
                c.aligned.clone(),
                c.prompts_compared.to_string(),
                c.base_neutral.to_string(),
                c.n_candidates.to_string(),
                c.n_sampled.to_string(),
            ]);
            for s in &c.candidates {
                shifts.push(vec![
                    c.base.clone(),
                    c.aligned.clone(),
                    s.prompt_key.name.clone(),
                    s.prompt_key.disclosure_form.clone(),
                    s.prompt_key.identity.clone(),
                    s.prompt.clone(),
                    num(s.base_neg_prob),
                    num(s.aligned_neg_prob),
                    num(s.delta),
                    s.sampled_for_annotation.to_string(),
                ]);
            }
            if let Some(t) = &c.themes {
                for s in &t.shares {
                    themes.push(vec![
                        c.base.clone(),
                        c.aligned.clone(),
                        t.taxonomy.clone(),
                        s.theme.clone(),
                        s.count.to_string(),
                        num(s.pct),
                    ]);
                }
            }
        }
    }

    let mut scan = Table::new("corpus_scan", &["dataset", "records_scanned", "matches", "unreadable"]);
    let mut scan_terms = Table::new("corpus_scan_terms", &["dataset", "term", "count"]);
    if let Some(s) = &report.corpus_scan {
        for d in &s.datasets {
            scan.push(vec![
                d.dataset_name.clone(),
                d.records_scanned.to_string(),
                d.matches.to_string(),
                d.unreadable.to_string(),
            ]);
            for (t, n) in &d.term_counts {
                scan_terms.push(vec![d.dataset_name.clone(), t.clone(), n.to_string()]);
            }
        }
    }
    vec![
        selection, baseline, corr, agree, filtering, disp, pooled, breakdown, change, shift_summary, shifts, tox,
        themes, scan, scan_terms,
    ]
}

fn md_table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    if rows.is_empty() {
        out.push_str("_No rows._\n\n");
        return;
    }
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|c| c.replace('|', "\\|")).collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out.push('\n');
}

fn p_value(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

fn markdown(report: &AuditReport) -> String {
    let mut out = String::new();
    out.push_str("# Bias audit report\n\n");
    let _ = writeln!(out, "- Config digest: `{}`", report.config_digest);
    let _ = writeln!(out, "- Report schema: {}", report.schema_version);
    let _ = writeln!(out, "- Models: {}", report.model_ids.join(", "));
    let _ = writeln!(
        out,
        "- Bootstrap: {} resamples, {}% level, seed {}\n",
        report.n_boot,
        report.level * 100.0,
        report.bootstrap_seed
    );

    if let Some(r) = &report.rewards {
        let _ = writeln!(out, "## Reward selection\n");
        let _ = writeln!(
            out,
            "{} mock preference pairs from {} templates. Rate = % of pairs where the {} completion gets the higher implicit reward (ties count half), with {}% bootstrap CI.\n",
            r.n_pairs,
            r.n_templates,
            r.target_group,
            report.level * 100.0
        );
        let rows: Vec<Vec<String>> = r
            .models
            .iter()
            .map(|m| {
                vec![
                    m.name.clone(),
                    fmt_rate_ci(m.selection.rate, m.selection.ci_low, m.selection.ci_high),
                    if m.selection.significant_vs_baseline { "yes" } else { "no" }.into(),
                    format!("{}/{}", m.baseline.successes, m.baseline.trials),
                    p_value(m.baseline.p_value),
                ]
            })
            .collect();
        md_table(
            &mut out,
            &["Model", "Selection rate [CI]", "CI excludes 50", "Wins/decided", "Binomial p"],
            &rows,
        );
        let _ = writeln!(out, "### Bias transfer (point-biserial)\n");
        let rows: Vec<Vec<String>> = r
            .models
            .iter()
            .map(|m| match &m.correlation {
                Some(c) => vec![m.name.clone(), format!("{:.3}", c.r_pb), p_value(c.p_value), c.n.to_string()],
                None => vec![
                    m.name.clone(),
                    "n/a".into(),
                    m.correlation_note.clone().unwrap_or_default(),
                    String::new(),
                ],
            })
            .collect();
        md_table(&mut out, &["Model", "r_pb", "p", "n"], &rows);
        let _ = writeln!(out, "### Agreement (Cohen's kappa)\n");
        let rows: Vec<Vec<String>> = r
            .agreement
            .iter()
            .map(|a| vec![a.model_a.clone(), a.model_b.clone(), format!("{:.3}", a.kappa), a.n.to_string()])
            .collect();
        md_table(&mut out, &["Model A", "Model B", "kappa", "n"], &rows);
        for n in &r.agreement_notes {
            let _ = writeln!(out, "- {n}");
        }
        if !r.agreement_notes.is_empty() {
            out.push('\n');
        }
    }

    if let Some(g) = &report.generations {
        let _ = writeln!(out, "## Generations\n");
        let _ = writeln!(
            out,
            "{} prompts, {} samples each; samples with Jaccard overlap >= {} against the prompt are dropped.\n",
            g.n_prompts, g.samples_per_prompt, g.jaccard_threshold
        );
        let rows: Vec<Vec<String>> = g
            .models
            .iter()
            .map(|m| {
                let (t, b, d) = match &m.disparity {
                    Some(d) => (
                        fmt_pct(d.pct_negative_tgnb),
                        fmt_pct(d.pct_negative_binary),
                        fmt_rate_ci(d.difference, d.ci_low, d.ci_high),
                    ),
                    None => ("".into(), "".into(), m.disparity_note.clone().unwrap_or_default()),
                };
                vec![m.name.clone(), m.stage.clone(), fmt_pct(m.pct_filtered), t, b, d]
            })
            .collect();
        md_table(
            &mut out,
            &["Model", "Stage", "% filtered", "% negative TGNB", "% negative binary", "Difference [CI]"],
            &rows,
        );
        if !g.pooled.is_empty() {
            let _ = writeln!(out, "### Pooled by stage\n");
            let rows: Vec<Vec<String>> = g
                .pooled
                .iter()
                .map(|p| {
                    let d = p
                        .disparity
                        .as_ref()
                        .map(|d| fmt_rate_ci(d.difference, d.ci_low, d.ci_high))
                        .unwrap_or_else(|| p.note.clone().unwrap_or_default());
                    vec![p.stage.clone(), p.models.join(", "), d]
                })
                .collect();
            md_table(&mut out, &["Stage", "Models", "Difference [CI]"], &rows);
        }
        let _ = writeln!(out, "### Negative regard by group and disclosure form\n");
        let rows: Vec<Vec<String>> = g
            .models
            .iter()
            .flat_map(|m| {
                m.by_group_and_form
                    .iter()
                    .map(|b| vec![m.name.clone(), b.key.clone(), b.n.to_string(), fmt_pct(b.pct_negative)])
            })
            .collect();
        md_table(&mut out, &["Model", "Group/form", "n", "% negative"], &rows);
        if !g.comparisons.is_empty() {
            let _ = writeln!(out, "### Base vs aligned\n");
            let rows: Vec<Vec<String>> = g
                .comparisons
                .iter()
                .map(|c| {
                    let d = c
                        .disparity_change
                        .as_ref()
                        .map(|d| {
                            format!(
                                "{}{}",
                                fmt_rate_ci(d.change, d.ci_low, d.ci_high),
                                if d.significant { " *" } else { "" }
                            )
                        })
                        .unwrap_or_default();
                    vec![
                        format!("{} -> {}", c.base, c.aligned),
                        d,
                        c.prompts_compared.to_string(),
                        c.base_neutral.to_string(),
                        c.n_candidates.to_string(),
                        c.n_sampled.to_string(),
                    ]
                })
                .collect();
            md_table(
                &mut out,
                &["Comparison", "Disparity change [CI]", "Prompts", "Neutral at base", "Shift candidates", "Sampled"],
                &rows,
            );
            for c in &g.comparisons {
                if let Some(n) = &c.note {
                    let _ = writeln!(out, "- {} -> {}: {n}", c.base, c.aligned);
                }
            }
            for c in &g.comparisons {
                let Some(t) = &c.themes else { continue };
                let _ = writeln!(out, "#### Themes: {} -> {} ({})\n", c.base, c.aligned, t.taxonomy);
                let rows: Vec<Vec<String>> = t
                    .shares
                    .iter()
                    .map(|s| vec![s.theme.clone(), s.count.to_string(), fmt_pct(s.pct)])
                    .collect();
                md_table(&mut out, &["Theme", "Count", "%"], &rows);
                if !t.unannotated.is_empty() {
                    let _ = writeln!(out, "{} exported samples have no theme yet.\n", t.unannotated.len());
                }
            }
        }
        let tox: Vec<Vec<String>> = g
            .models
            .iter()
            .flat_map(|m| {
                m.toxicity.iter().flatten().map(|t| {
                    vec![m.name.clone(), t.identity.clone(), t.n.to_string(), fmt_pct(t.pct_toxic)]
                })
            })
            .collect();
        if !tox.is_empty() {
            let _ = writeln!(out, "### Toxicity\n");
            md_table(&mut out, &["Model", "Identity", "n", "% toxic"], &tox);
        }
    }

    if let Some(s) = &report.corpus_scan {
        let _ = writeln!(out, "## Preference corpus scan\n");
        let _ = writeln!(out, "Terms: {}\n", s.terms.join(", "));
        let rows: Vec<Vec<String>> = s
            .datasets
            .iter()
            .map(|d| {
                vec![
                    d.dataset_name.clone(),
                    d.records_scanned.to_string(),
                    d.matches.to_string(),
                    d.unreadable.to_string(),
                ]
            })
            .collect();
        md_table(&mut out, &["Dataset", "Records", "Matches", "Unreadable"], &rows);
    }
    out
}

/// Writes the requested formats under `dir` and returns the files written.
/// The file set depends only on `formats`, never on which sections are
/// filled.
pub fn emit_report(report: &AuditReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, ReportError> {
    let layout = Layout::new(dir);
    std::fs::create_dir_all(dir).map_err(unwritable(dir))?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            Format::Json => {
                let p = layout.report_json();
                let text = serde_json::to_string_pretty(report).expect("serializable") + "\n";
                write_file(&p, text.as_bytes())?;
                written.push(p);
            }
            Format::Csv => {
                for t in tables(report) {
                    let p = layout.tables().join(format!("{}.csv", t.name));
                    write_file(&p, &t.to_csv())?;
                    written.push(p);
                }
            }
            Format::Markdown => {
                let p = dir.join("report.md");
                write_file(&p, markdown(report).as_bytes())?;
                written.push(p);
            }
            Format::Plots => {
                for (name, svg) in plots::render_all(report) {
                    let p = layout.plots().join(name);
                    write_file(&p, svg.as_bytes())?;
                    written.push(p);
                }
            }
        }
    }
    Ok(written)
}
