//! Structured clinical reports for home-based cognitive remediation sessions.
//!
//! The crate turns raw session material (event logs, dialogue transcripts,
//! emotion-intensity traces and exercise metadata) into a four-section report
//! (context, results, affect, language), and ships the statistics used along
//! the way: quartile norms, right-tailed Z-tests with Bonferroni correction
//! and Mann-Whitney U tests for the evaluation toolkit.
//!
//! The modules map onto the pipeline stages:
//!
//! - [`ingest`]: parsers for logs, transcripts, catalogs and traces, and
//!   assembly of a validated [`ingest::Session`].
//! - [`linguistics`]: cleaning, tokenizing, tagging and the seven indicators.
//! - [`stats`]: the shared statistical kernel.
//! - [`affect`]: salient-emotion detection against population norms.
//! - [`norms`]: indicator and affect norm tables and their CSV forms.
//! - [`reportgen`]: report variables, tables and Markdown/HTML rendering.
//! - [`llm`]: JSON variable payload, prompt construction and client contract.
//! - [`evalkit`]: Likert questionnaire analysis.
//! - [`synth`]: seeded fixture generation.
//! - [`pipeline`]: end-to-end wiring used by the command-line tool.

pub mod affect;
pub mod error;
pub mod evalkit;
pub mod ingest;
pub mod linguistics;
pub mod llm;
pub mod norms;
pub mod pipeline;
pub mod reportgen;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
