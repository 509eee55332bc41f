//! `ccreport`: session reports, norms, prompts, questionnaire analysis,
//! fixture synthesis and input validation.

mod config;
mod http;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use ccreport::affect::{PairwiseCorrection, SalienceMode};
use ccreport::evalkit::{self, UnitOfAnalysis};
use ccreport::ingest::{load_exercise_catalog, EmotionLabel, ExerciseCatalog, Group, ParseMode};
use ccreport::linguistics::{LexiconTagger, RulePhonemizer};
use ccreport::llm::{self, ChatClient, LlmResponse, ReplayClient, RetryPolicy};
use ccreport::norms::{load_affect_norms, load_indicator_norms, write_affect_norms, write_indicator_norms};
use ccreport::pipeline::{self, AnalysisOptions, Norms, SessionPaths, SessionSources};
use ccreport::reportgen::{ComparisonRule, Locale, SectionToggles, TemplateSet};
use ccreport::synth::{self, DifficultyCurve, SynthConfig};
use ccreport::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{FileConfig, LlmConfig};
use crate::output::{hash_file, Manifest, Outputs};

#[derive(Debug, Parser)]
#[command(name = "ccreport", version, about = "Clinical reports for cognitive remediation sessions")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Repeat for more log output on stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render the Markdown and HTML report of one session.
    Generate(GenerateArgs),
    /// Build indicator and affect norms from a cohort of sessions.
    Norms(NormsArgs),
    /// Write the variable payload and the language-model prompt.
    Prompt(GenerateArgs),
    /// Analyze a Likert questionnaire export.
    Eval(EvalArgs),
    /// Write a seeded synthetic session.
    Synth(SynthArgs),
    /// Run every parser and structural check on a session.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
struct InputArgs {
    /// Directory holding session.log, transcript.csv and emotions.csv.
    #[arg(long, short = 's')]
    session_dir: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Exercise catalog CSV; the built-in catalog otherwise.
    #[arg(long)]
    catalog: Option<PathBuf>,
}

impl InputArgs {
    fn paths(&self) -> Result<SessionPaths> {
        let paths = self.paths_unchecked()?;
        for p in paths.all() {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(paths)
    }

    fn paths_unchecked(&self) -> Result<SessionPaths> {
        let base = self.session_dir.as_deref().map(SessionPaths::in_dir);
        let pick = |flag: &Option<PathBuf>, from_dir: Option<PathBuf>, name: &str| {
            flag.clone()
                .or(from_dir)
                .ok_or_else(|| Error::Config(format!("no {name} given: pass --session-dir or --{name}")))
        };
        let paths = SessionPaths {
            log: pick(&self.log, base.as_ref().map(|b| b.log.clone()), "log")?,
            transcript: pick(&self.transcript, base.as_ref().map(|b| b.transcript.clone()), "transcript")?,
            trace: self.trace.clone().or(base.and_then(|b| b.trace)),
        };
        Ok(paths)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Pooled,
    Pairwise,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CorrectionArg {
    LabelsTimesSubjects,
    LabelsOnly,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    Interquartile,
    Median,
}

#[derive(Debug, Clone, Args)]
struct GenerateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Indicator norms CSV.
    #[arg(long)]
    norms: Option<PathBuf>,
    /// Affect norms CSV.
    #[arg(long)]
    affect_norms: Option<PathBuf>,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    /// Report language: fr or en.
    #[arg(long)]
    locale: Option<String>,
    /// Template override file (`key = value` lines).
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long)]
    no_context: bool,
    #[arg(long)]
    no_results: bool,
    #[arg(long)]
    no_affect: bool,
    #[arg(long)]
    no_language: bool,
    #[arg(long, value_enum)]
    affect_mode: Option<ModeArg>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum)]
    pairwise_correction: Option<CorrectionArg>,
    /// Indicator comparison rule.
    #[arg(long, value_enum)]
    rule: Option<RuleArg>,
    /// Send the prompt to the chat-completion service.
    #[arg(long)]
    llm: bool,
    #[arg(long)]
    llm_endpoint: Option<String>,
    #[arg(long)]
    llm_model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    llm_key_env: Option<String>,
    #[arg(long)]
    llm_timeout: Option<u64>,
    #[arg(long)]
    llm_retries: Option<u32>,
    /// Use a recorded response instead of the service.
    #[arg(long)]
    llm_replay: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NormsArgs {
    /// Session directories of the cohort.
    #[arg(required = true)]
    sessions: Vec<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UnitArg {
    Ratings,
    EvaluatorMeans,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Questionnaire CSV.
    responses: PathBuf,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ratings")]
    unit: UnitArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Young,
    Senior,
    Mci,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CurveArg {
    Easy,
    Mixed,
    Hard,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value = "mci")]
    profile: ProfileArg,
    #[arg(long, value_enum, default_value = "mixed")]
    curve: CurveArg,
    #[arg(long, short = 'o')]
    out: PathBuf,
    #[arg(long)]
    session_id: Option<String>,
    #[arg(long)]
    participant_id: Option<String>,
    /// Number of emotion sequences.
    #[arg(long)]
    sequences: Option<usize>,
    /// Raise a label's mean intensity, e.g. `happy=0.2`. Repeatable.
    #[arg(long, value_parser = parse_boost)]
    boost: Vec<(EmotionLabel, f64)>,
    /// Write a synthetic questionnaire instead of a session.
    #[arg(long)]
    questionnaire: bool,
}

fn parse_boost(s: &str) -> std::result::Result<(EmotionLabel, f64), String> {
    let (label, value) = s.split_once('=').ok_or("expected LABEL=VALUE")?;
    let label = EmotionLabel::from_name(label.trim()).ok_or_else(|| format!("unknown emotion label `{label}`"))?;
    let value = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((label, value))
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: InputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class_name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let file = match &cli.config {
        Some(p) => config::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Generate(args) => generate(&args, &file, true),
        Command::Prompt(args) => generate(&args, &file, false),
        Command::Norms(args) => norms(&args, &file),
        Command::Eval(args) => eval(&args, &file),
        Command::Synth(args) => synthesize(&args),
        Command::Validate(args) => validate(&args, &file),
    }
}

fn load_catalog(path: Option<&Path>) -> Result<ExerciseCatalog> {
    match path {
        Some(p) => Ok(load_exercise_catalog(&pipeline::read_text(p)?)?),
        None => Ok(ExerciseCatalog::builtin()),
    }
}

/// Settings of a generate or prompt run after merging file and flags.
#[derive(Debug, Clone, Serialize)]
struct Resolved {
    locale: Locale,
    out_dir: PathBuf,
    catalog: Option<PathBuf>,
    norms: Option<PathBuf>,
    affect_norms: Option<PathBuf>,
    templates: Option<PathBuf>,
    sections: SectionToggles,
    salience: ccreport::affect::SalienceConfig,
    rule: ComparisonRule,
    llm: LlmConfig,
}

fn resolve(args: &GenerateArgs, file: &FileConfig) -> Result<Resolved> {
    let locale = match args.locale.as_deref().or(file.locale.as_deref()) {
        Some(code) => config::parse_locale(code)?,
        None => Locale::default(),
    };
    let mut sections = file.sections.unwrap_or_default();
    sections.context &= !args.no_context;
    sections.results &= !args.no_results;
    sections.affect &= !args.no_affect;
    sections.language &= !args.no_language;
    if !sections.any() {
        return Err(Error::Config("every report section is disabled".into()));
    }
    let mut salience = file.affect.salience();
    if let Some(m) = args.affect_mode {
        salience.mode = match m {
            ModeArg::Pooled => SalienceMode::Pooled,
            ModeArg::Pairwise => SalienceMode::Pairwise,
        };
    }
    salience.alpha = args.alpha.unwrap_or(salience.alpha);
    salience.tau = args.tau.unwrap_or(salience.tau);
    if let Some(c) = args.pairwise_correction {
        salience.pairwise_correction = match c {
            CorrectionArg::LabelsTimesSubjects => PairwiseCorrection::LabelsTimesSubjects,
            CorrectionArg::LabelsOnly => PairwiseCorrection::LabelsOnly,
        };
    }
    let rule = match args.rule {
        Some(RuleArg::Interquartile) => ComparisonRule::Interquartile,
        Some(RuleArg::Median) => ComparisonRule::Median,
        None => file.rule.unwrap_or_default(),
    };
    let mut llm = file.llm.clone();
    llm.enabled |= args.llm || args.llm_replay.is_some();
    llm.endpoint = args.llm_endpoint.clone().unwrap_or(llm.endpoint);
    llm.model = args.llm_model.clone().unwrap_or(llm.model);
    llm.api_key_env = args.llm_key_env.clone().unwrap_or(llm.api_key_env);
    llm.timeout_s = args.llm_timeout.unwrap_or(llm.timeout_s);
    llm.max_retries = args.llm_retries.unwrap_or(llm.max_retries);
    llm.replay = args.llm_replay.clone().or(llm.replay);
    let resolved = Resolved {
        locale,
        out_dir: args.out.clone().or(file.out_dir.clone()).unwrap_or_else(|| PathBuf::from(".")),
        catalog: args.input.catalog.clone().or(file.catalog.clone()),
        norms: args.norms.clone().or(file.norms.clone()),
        affect_norms: args.affect_norms.clone().or(file.affect_norms.clone()),
        templates: args.templates.clone().or(file.templates.clone()),
        sections,
        salience,
        rule,
        llm,
    };
    let optional = [&resolved.catalog, &resolved.norms, &resolved.affect_norms, &resolved.templates];
    for p in optional.into_iter().flatten().chain(&resolved.llm.replay) {
        if !p.is_file() {
            return Err(Error::Config(format!("input file {} does not exist", p.display())));
        }
    }
    Ok(resolved)
}

fn chat_client(cfg: &LlmConfig) -> Result<Box<dyn ChatClient>> {
    if let Some(path) = &cfg.replay {
        return Ok(Box::new(ReplayClient::new(&pipeline::read_text(path)?)));
    }
    let key = std::env::var(&cfg.api_key_env)
        .map_err(|_| Error::Config(format!("environment variable {} is not set", cfg.api_key_env)))?;
    let client = http::HttpClient::new(&cfg.endpoint, &cfg.model, key, Duration::from_secs(cfg.timeout_s))
        .map_err(llm::LlmError::from)?;
    Ok(Box::new(client))
}

fn generate(args: &GenerateArgs, file: &FileConfig, write_report: bool) -> Result<ExitCode> {
    let cfg = resolve(args, file)?;
    let paths = args.input.paths()?;
    let catalog = load_catalog(cfg.catalog.as_deref())?;
    let mut templates = TemplateSet::builtin(cfg.locale);
    if let Some(p) = &cfg.templates {
        templates = templates.with_overrides(&pipeline::read_text(p)?)?;
    }
    let norms = Norms {
        indicators: match &cfg.norms {
            Some(p) => Some(load_indicator_norms(&pipeline::read_text(p)?)?),
            None => None,
        },
        affect: match &cfg.affect_norms {
            Some(p) => Some(load_affect_norms(&pipeline::read_text(p)?)?),
            None => None,
        },
    };

    let session = pipeline::load_session(&SessionSources::read(&paths)?, &catalog, ParseMode::Permissive)?;
    let options = AnalysisOptions {
        toggles: cfg.sections,
        salience: cfg.salience,
        rule: cfg.rule,
    };
    let (tagger, phonemizer) = (LexiconTagger::builtin(), RulePhonemizer::builtin());
    let analysis = pipeline::analyze(&session, &catalog, &norms, &tagger, &phonemizer, &options, &templates)?;
    let rendered = pipeline::render(&analysis, &templates, cfg.sections, norms.cohort_note())?;
    let response: Option<LlmResponse> = if cfg.llm.enabled {
        let client = chat_client(&cfg.llm)?;
        let policy = RetryPolicy {
            max_retries: cfg.llm.max_retries,
            ..RetryPolicy::default()
        };
        Some(llm::request_report(&rendered.prompt, client.as_ref(), &policy)?)
    } else {
        None
    };

    let mut inputs: Vec<&Path> = paths.all();
    let optional = [&cfg.catalog, &cfg.norms, &cfg.affect_norms, &cfg.templates];
    inputs.extend(optional.into_iter().flatten().chain(&cfg.llm.replay).map(PathBuf::as_path));
    let hashes = inputs.into_iter().map(hash_file).collect::<Result<Vec<_>>>()?;

    let names = pipeline::artifact_names(&session);
    let mut out = Outputs::new(&cfg.out_dir)?;
    if write_report {
        out.write(&names.markdown, &rendered.markdown)?;
        out.write(&names.html, &rendered.html)?;
    }
    out.write(&names.payload, &(rendered.payload_json.clone() + "\n"))?;
    out.write(&names.prompt, &rendered.prompt.text)?;
    let mut manifest = Manifest::new(if write_report { "generate" } else { "prompt" }, hashes, &cfg);
    manifest.warnings = session.warnings.clone();
    if let Some(r) = &response {
        out.write(&names.llm_response, &r.raw_text)?;
        if r.no_fence {
            log::warn!("language-model response has no fenced block; the raw text was kept");
            manifest.warnings.push("llm response without fenced block".into());
        }
    }
    let kind = if write_report { "manifest" } else { "prompt_manifest" };
    for p in out.commit(&format!("{}_{kind}.json", session.session_id), manifest)? {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn norms(args: &NormsArgs, file: &FileConfig) -> Result<ExitCode> {
    let catalog_path = args.catalog.clone().or(file.catalog.clone());
    let catalog = load_catalog(catalog_path.as_deref())?;
    let mut sessions = Vec::new();
    let mut inputs = Vec::new();
    for dir in &args.sessions {
        let paths = InputArgs {
            session_dir: Some(dir.clone()),
            log: None,
            transcript: None,
            trace: None,
            catalog: None,
        }
        .paths()?;
        sessions.push(pipeline::load_session(&SessionSources::read(&paths)?, &catalog, ParseMode::Permissive)?);
        for p in paths.all() {
            inputs.push(hash_file(p)?);
        }
    }
    let built = pipeline::build_cohort_norms(&sessions, &LexiconTagger::builtin(), &RulePhonemizer::builtin())?;
    let out_dir = args.out.clone().or(file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let mut out = Outputs::new(&out_dir)?;
    out.write("indicator_norms.csv", &write_indicator_norms(&built.indicators))?;
    if let Some(a) = &built.affect {
        out.write("affect_norms.csv", &write_affect_norms(a))?;
    }
    #[derive(Serialize)]
    struct Cohort {
        sessions: usize,
        participants: usize,
    }
    let mut manifest = Manifest::new(
        "norms",
        inputs,
        Cohort {
            sessions: built.indicators.n_sessions(),
            participants: built.indicators.n_participants,
        },
    );
    manifest.warnings = built.warnings;
    for p in out.commit("norms_manifest.json", manifest)? {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn eval(args: &EvalArgs, file: &FileConfig) -> Result<ExitCode> {
    let records = evalkit::load_records(&pipeline::read_text(&args.responses)?)?;
    let unit = match args.unit {
        UnitArg::Ratings => UnitOfAnalysis::Ratings,
        UnitArg::EvaluatorMeans => UnitOfAnalysis::EvaluatorMeans,
    };
    let report = evalkit::analyze(&records, unit)?;
    for notice in &report.notices {
        eprintln!("notice: {notice}");
    }
    let out_dir = args.out.clone().or(file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let mut out = Outputs::new(&out_dir)?;
    out.write("eval_summary.md", &evalkit::render_summary_table(&report))?;
    out.write("eval_comparisons.csv", &evalkit::write_comparisons(&report))?;
    let mut manifest = Manifest::new("eval", vec![hash_file(&args.responses)?], unit);
    manifest.warnings = report.notices.clone();
    for p in out.commit("eval_manifest.json", manifest)? {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn synthesize(args: &SynthArgs) -> Result<ExitCode> {
    let mut out = Outputs::new(&args.out)?;
    if args.questionnaire {
        out.write("questionnaire.csv", &evalkit::write_records(&evalkit::synthetic_fixture(args.seed)))?;
    } else {
        let profile = match args.profile {
            ProfileArg::Young => Group::Young,
            ProfileArg::Senior => Group::Senior,
            ProfileArg::Mci => Group::Mci,
        };
        let mut config = SynthConfig::new(args.seed, profile);
        config.curve = match args.curve {
            CurveArg::Easy => DifficultyCurve::Easy,
            CurveArg::Mixed => DifficultyCurve::Mixed,
            CurveArg::Hard => DifficultyCurve::Hard,
        };
        if let Some(id) = &args.session_id {
            config.session_id = id.clone();
        }
        if let Some(id) = &args.participant_id {
            config.participant_id = id.clone();
        }
        if let Some(n) = args.sequences {
            config.n_sequences = n;
        }
        config.affect_boost = args.boost.iter().copied().collect::<BTreeMap<_, _>>();
        for (name, contents) in synth::synthesize(&config).files() {
            out.write(name, contents)?;
        }
    }
    #[derive(Serialize)]
    struct Seed {
        seed: u64,
    }
    for p in out.commit("synth_manifest.json", Manifest::new("synth", Vec::new(), Seed { seed: args.seed }))? {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(args: &ValidateArgs, file: &FileConfig) -> Result<ExitCode> {
    let paths = args.input.paths_unchecked()?;
    let catalog = load_catalog(args.input.catalog.as_deref().or(file.catalog.as_deref()))?;
    let checks = pipeline::validate(&paths, &catalog);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
