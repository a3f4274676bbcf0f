//! Bias auditing for preference-aligned causal language models.
//!
//! The crate has two halves that share a statistics core:
//!
//! - **Reward auditing** ([`corpus`], [`scoring`], [`rewards`]): paired bias
//!   sentences are turned into fill-in templates, recast as mock preference
//!   pairs, scored under a policy and a reference model, and compared through
//!   the DPO implicit reward `beta * (log pi_policy(y|x) - log pi_ref(y|x))`.
//! - **Generation auditing** ([`regard`]): disclosure prompts are completed by
//!   a generator, echo-filtered by Jaccard overlap, classified for regard and
//!   toxicity, and summarised as group disparities and narrative shifts.
//!
//! [`report`] wires both halves into a config-driven, resumable pipeline that
//! persists every intermediate artifact and renders JSON, CSV, Markdown and
//! SVG output.

pub mod corpus;
pub mod digest;
pub mod jsonl;
pub mod regard;
pub mod report;
pub mod rewards;
pub mod scoring;
pub mod stats;
