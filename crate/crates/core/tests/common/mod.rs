#![allow(dead_code)]

use bias_audit::corpus::GroupLexicon;
use bias_audit::report::AuditConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// The shipped stub fixture, writing into `out`.
pub fn fixture_config(out: &Path) -> AuditConfig {
    let mut cfg = AuditConfig::load(&repo_root().join("configs/fixture.toml")).expect("fixture config");
    cfg.output_dir = out.to_path_buf();
    cfg.validate().expect("fixture config is valid");
    cfg
}

pub fn lexicons() -> Vec<GroupLexicon> {
    vec![GroupLexicon::default_binary(), GroupLexicon::default_tgnb()]
}

/// Frames with one `{}` subject slot. None of the filler words collide with
/// lexicon terms. A slot at the start or after ". " is sentence-initial.
const FRAMES: &[&str] = &[
    "{} people are bad at math.",
    "Most {} people are unhappy.",
    "I think {} folks are confused.",
    "Nobody trusts {} teachers. They lie.",
    "They said it plainly. {} people cannot be parents.",
    "Why are {} people always so loud?",
    "{}",
    "Everyone knows that {} individuals are dangerous!",
    "My neighbor, who is {}, is nice.",
    "  {} people  sleep   late.",
    "The {}-friendly cafe closed.",
    "Are {} people real? {} is not a word here.",
];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

/// One synthetic paired sentence: (sentence, subject as written, group).
pub struct Synthetic {
    pub sentence: String,
    pub subject: String,
    pub counterpart: String,
    pub counterpart_subject: String,
}

/// `n` sentences drawn from [`FRAMES`] with random subjects, each paired
/// with a counterfactual from the other group.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<Synthetic> {
    let lex = lexicons();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames: Vec<&str> = FRAMES.iter().copied().filter(|f| f.matches("{}").count() == 1).collect();
    (0..n)
        .map(|_| {
            let frame = frames.choose(&mut rng).unwrap();
            let g = rng.gen_range(0..2);
            let a = lex[g].terms().choose(&mut rng).unwrap().clone();
            let b = lex[1 - g].terms().choose(&mut rng).unwrap().clone();
            let pos = frame.find("{}").unwrap();
            let before = frame[..pos].trim_end();
            let initial = before.is_empty() || (before.ends_with(['.', '!', '?']) && frame[..pos].ends_with(' '));
            let mut style = |t: &str| {
                if initial {
                    capitalize(t)
                } else if rng.gen_bool(0.1) {
                    t.to_uppercase()
                } else {
                    t.to_string()
                }
            };
            let (sa, sb) = (style(&a), style(&b));
            Synthetic {
                sentence: frame.replacen("{}", &sa, 1),
                subject: sa,
                counterpart: frame.replacen("{}", &sb, 1),
                counterpart_subject: sb,
            }
        })
        .collect()
}
