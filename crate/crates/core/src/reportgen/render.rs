use std::fmt::Write as _;

use pulldown_cmark::{html, CowStr, Event, Options, Parser, Tag, TagEnd};
use serde::{Deserialize, Serialize};

use super::templates::{has_placeholder, Locale, TemplateSet};
use super::{
    affect_slots, ContextVars, Direction, ExerciseTable, IndicatorTable, OutcomeClass, ReportError, ResultsVars,
};
use crate::affect::EmotionSelection;
use crate::linguistics::Indicator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SectionKind {
    ContextualInformation,
    Results,
    Affect,
    Language,
    Appendix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SectionToggles {
    pub context: bool,
    pub results: bool,
    pub affect: bool,
    pub language: bool,
}

impl Default for SectionToggles {
    fn default() -> Self {
        SectionToggles {
            context: true,
            results: true,
            affect: true,
            language: true,
        }
    }
}

impl SectionToggles {
    pub fn any(&self) -> bool {
        self.context || self.results || self.affect || self.language
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableBlock {
    pub caption: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    Paragraph(String),
    Table(TableBlock),
    /// Term and definition pairs.
    Definitions(Vec<(String, String)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub heading: String,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub locale: Locale,
    pub title: String,
    pub sections: Vec<Section>,
    pub appendix: Section,
}

impl ReportDocument {
    pub fn section(&self, kind: SectionKind) -> Option<&Section> {
        self.sections.iter().find(|s| s.kind == kind)
    }

    pub fn tables(&self) -> impl Iterator<Item = &TableBlock> {
        self.sections.iter().flat_map(|s| &s.blocks).filter_map(|b| match b {
            Block::Table(t) => Some(t),
            _ => None,
        })
    }
}

/// Everything a report is built from.
#[derive(Debug, Clone, Copy)]
pub struct ReportInputs<'a> {
    pub context: &'a ContextVars,
    pub results: &'a ResultsVars,
    /// `None` when the session has no emotion trace.
    pub emotions: Option<&'a EmotionSelection>,
    pub exercises: &'a ExerciseTable,
    /// `None` when the indicators could not be computed.
    pub indicators: Option<&'a IndicatorTable>,
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn format_accuracy(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v:.1}")
    }
}

fn percent(locale: Locale, v: &str) -> String {
    match locale {
        Locale::Fr => format!("{v} %"),
        Locale::En => format!("{v}%"),
    }
}

/// Outcome marker shown in attempt cells, e.g. `✓ réussi (85 %)`.
pub fn outcome_marker(templates: &TemplateSet, outcome: OutcomeClass, accuracy_pct: f64) -> String {
    format!(
        "✓ {} ({})",
        templates.get(outcome.template_key()),
        percent(templates.locale, &format_accuracy(accuracy_pct))
    )
}

fn indicator_label(locale: Locale, indicator: Indicator) -> String {
    let name = capitalize(locale.indicator_name(indicator));
    match locale.indicator_unit(indicator) {
        Some(unit) => format!("{name} ({unit})"),
        None => name,
    }
}

fn exercise_table(t: &TemplateSet, table: &ExerciseTable) -> TableBlock {
    let rows = table
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![row.display_name.clone(), row.cognitive_functions.join(", ")];
            cells.extend(row.attempts.iter().map(|a| match a {
                Some(a) => outcome_marker(t, a.outcome, a.accuracy_pct),
                None => "—".to_string(),
            }));
            cells
        })
        .collect();
    TableBlock {
        caption: t.get("table1_caption").to_string(),
        header: ["col_exercise", "col_functions", "col_attempt1", "col_attempt2"]
            .iter()
            .map(|k| t.get(k).to_string())
            .collect(),
        rows,
    }
}

fn indicator_table(t: &TemplateSet, table: &IndicatorTable) -> TableBlock {
    let rows = table
        .rows
        .iter()
        .map(|c| {
            vec![
                indicator_label(t.locale, c.indicator),
                format!("{:.2}", c.value),
                c.direction.arrow().to_string(),
                format!("{:.2} [{:.2}; {:.2}]", c.norm.median, c.norm.q1, c.norm.q3),
            ]
        })
        .collect();
    TableBlock {
        caption: t.get("table2_caption").to_string(),
        header: ["col_indicator", "col_value", "col_comparison", "col_norm"]
            .iter()
            .map(|k| t.get(k).to_string())
            .collect(),
        rows,
    }
}

fn context_paragraph(t: &TemplateSet, c: &ContextVars) -> Result<String, ReportError> {
    let key = if c.all_repeated { "context" } else { "context_single" };
    t.fill(
        key,
        &[
            ("date_session_string", &c.date_session_string),
            ("textual_start_time", &c.textual_start_time),
            ("nb_activities", &c.nb_activities.to_string()),
            ("nb_exercises", &c.nb_exercises.to_string()),
            ("duration_session_str", &c.duration_session_str),
        ],
    )
}

fn results_paragraph(t: &TemplateSet, r: &ResultsVars) -> Result<String, ReportError> {
    let mut sentences = vec![
        t.fill("results_failed", &[("num_failed", &r.num_failed.to_string())])?,
        t.fill("results_partial", &[("num_partial", &r.num_partial.to_string())])?,
        t.fill("results_remaining", &[])?,
        t.fill("results_rate", &[("success_rate", &r.success_rate_str())])?,
    ];
    if !r.exo_failed.is_empty() {
        let items: Vec<String> = r.exo_failed.iter().map(|f| f.label(t.locale)).collect();
        sentences.push(t.fill("results_exo_failed", &[("exo_failed", &t.join_list(&items))])?);
    }
    Ok(sentences.join(" "))
}

fn affect_paragraph(t: &TemplateSet, selection: Option<&EmotionSelection>) -> Result<String, ReportError> {
    let Some(selection) = selection else {
        return t.fill("affect_unavailable", &[]);
    };
    let Some((primary, same, other)) = affect_slots(selection) else {
        return t.fill("affect_none", &[]);
    };
    let names = |labels: &[_]| -> String {
        let items: Vec<String> = labels.iter().map(|&l| t.locale.emotion(l).to_string()).collect();
        t.join_list(&items)
    };
    let state = t.locale.emotion(primary).to_string();
    let (same, other) = (names(&same), names(&other));
    match (same.is_empty(), other.is_empty()) {
        (false, false) => t.fill("affect_full", &[("emo_state", &state), ("emo_same", &same), ("emo_other", &other)]),
        (false, true) => t.fill("affect_same_only", &[("emo_state", &state), ("emo_same", &same)]),
        (true, false) => t.fill("affect_other_only", &[("emo_state", &state), ("emo_other", &other)]),
        (true, true) => t.fill("affect_primary_only", &[("emo_state", &state)]),
    }
}

fn language_paragraph(t: &TemplateSet, table: &IndicatorTable) -> Result<String, ReportError> {
    let mut sentences = vec![t.fill("language_intro", &[])?];
    let quoted = |i: Indicator| t.locale.indicator_name(i).to_string();
    let higher: Vec<_> = table.rows.iter().filter(|c| c.direction == Direction::Higher).collect();
    for c in &higher {
        sentences.push(t.fill("language_higher", &[("indicator_higher", &quoted(c.indicator))])?);
    }
    let lower = table.rows.iter().filter(|c| c.direction == Direction::Lower);
    for (i, c) in lower.enumerate() {
        let key = if i == 0 && !higher.is_empty() {
            "language_lower_after_higher"
        } else {
            "language_lower"
        };
        sentences.push(t.fill(key, &[("indicator_lower", &quoted(c.indicator))])?);
    }
    Ok(sentences.join(" "))
}

fn appendix(t: &TemplateSet) -> Section {
    let defs = Indicator::ALL
        .iter()
        .map(|&i| (capitalize(t.locale.indicator_name(i)), capitalize(t.locale.indicator_definition(i))))
        .collect();
    Section {
        kind: SectionKind::Appendix,
        heading: t.get("heading_appendix").to_string(),
        blocks: vec![Block::Paragraph(t.get("appendix_intro").to_string()), Block::Definitions(defs)],
    }
}

/// Assembles the report. Table 1 sits in the context section, or in the
/// results section when context is switched off.
pub fn build_document(
    inputs: &ReportInputs<'_>,
    templates: &TemplateSet,
    toggles: SectionToggles,
) -> Result<ReportDocument, ReportError> {
    if !toggles.any() {
        return Err(ReportError::Render("every report section is disabled".into()));
    }
    let r = inputs.results;
    if !r.is_consistent() || r.nb_activities != inputs.context.nb_activities {
        return Err(ReportError::Render(format!(
            "outcome counts {}+{}+{} do not add up to {} activities",
            r.num_failed, r.num_partial, r.num_success, inputs.context.nb_activities
        )));
    }
    let t = templates;
    let mut sections = Vec::new();
    let table1 = Block::Table(exercise_table(t, inputs.exercises));
    if toggles.context {
        sections.push(Section {
            kind: SectionKind::ContextualInformation,
            heading: t.get("heading_context").to_string(),
            blocks: vec![Block::Paragraph(context_paragraph(t, inputs.context)?), table1.clone()],
        });
    }
    if toggles.results {
        let mut blocks = vec![Block::Paragraph(results_paragraph(t, r)?)];
        if !toggles.context {
            blocks.push(table1);
        }
        sections.push(Section {
            kind: SectionKind::Results,
            heading: t.get("heading_results").to_string(),
            blocks,
        });
    }
    if toggles.affect {
        sections.push(Section {
            kind: SectionKind::Affect,
            heading: t.get("heading_affect").to_string(),
            blocks: vec![Block::Paragraph(affect_paragraph(t, inputs.emotions)?)],
        });
    }
    if toggles.language {
        let blocks = match inputs.indicators {
            Some(table) => vec![
                Block::Paragraph(language_paragraph(t, table)?),
                Block::Table(indicator_table(t, table)),
            ],
            None => vec![Block::Paragraph(t.fill("language_unavailable", &[])?)],
        };
        sections.push(Section {
            kind: SectionKind::Language,
            heading: t.get("heading_language").to_string(),
            blocks,
        });
    }
    Ok(ReportDocument {
        locale: t.locale,
        title: t.get("title").to_string(),
        sections,
        appendix: appendix(t),
    })
}

fn escape_cell(s: &str) -> String {
    s.replace('|', "\\|")
}

fn write_blocks(out: &mut String, section: &Section, locale: Locale) {
    let _ = write!(out, "\n## {}\n", section.heading);
    for block in &section.blocks {
        out.push('\n');
        match block {
            Block::Paragraph(text) => {
                let _ = writeln!(out, "{text}");
            }
            Block::Table(table) => {
                let _ = writeln!(out, "**{}**\n", table.caption);
                let row = |cells: &[String]| {
                    let cells: Vec<String> = cells.iter().map(|c| escape_cell(c)).collect();
                    format!("| {} |\n", cells.join(" | "))
                };
                out.push_str(&row(&table.header));
                out.push_str(&format!("|{}\n", " --- |".repeat(table.header.len())));
                for r in &table.rows {
                    out.push_str(&row(r));
                }
            }
            Block::Definitions(defs) => {
                let sep = match locale {
                    Locale::Fr => " : ",
                    Locale::En => ": ",
                };
                for (term, def) in defs {
                    let _ = writeln!(out, "- **{term}**{sep}{def}");
                }
            }
        }
    }
}

/// Renders the document; fails if any template slot survived.
pub fn render_markdown(doc: &ReportDocument) -> Result<String, ReportError> {
    let mut out = format!("# {}\n", doc.title);
    for section in doc.sections.iter().chain(std::iter::once(&doc.appendix)) {
        write_blocks(&mut out, section, doc.locale);
    }
    if has_placeholder(&out) {
        return Err(ReportError::Render("unfilled placeholder in rendered report".into()));
    }
    Ok(out)
}

const STYLE: &str = "body{font-family:sans-serif;max-width:60em;margin:2em auto;line-height:1.4}\
table{border-collapse:collapse;margin:1em 0}th,td{border:1px solid #999;padding:.3em .6em}\
.outcome-success{color:#1a7f37}.outcome-partial{color:#c76e00}.outcome-failed{color:#c62828}\
.cmp-higher,.cmp-lower{font-weight:bold}";

fn cell_class(templates: &TemplateSet, text: &str) -> Option<&'static str> {
    match text {
        "↑" => return Some("cmp-higher"),
        "↓" => return Some("cmp-lower"),
        _ => {}
    }
    let rest = text.strip_prefix("✓ ")?;
    [OutcomeClass::Successful, OutcomeClass::Partial, OutcomeClass::Failed]
        .into_iter()
        .find(|o| rest.starts_with(templates.get(o.template_key())))
        .map(|o| o.css_class())
        .or(Some("outcome"))
}

/// Standalone HTML page for a Markdown report. Outcome markers and
/// comparison arrows in table cells get CSS classes; raw HTML in the source
/// is escaped.
pub fn render_html(markdown: &str, templates: &TemplateSet) -> String {
    let mut events: Vec<Event> = Vec::new();
    let mut cell: Option<String> = None;
    for event in Parser::new_ext(markdown, Options::ENABLE_TABLES) {
        match event {
            Event::Start(Tag::TableCell) => {
                events.push(event);
                cell = Some(String::new());
            }
            Event::End(TagEnd::TableCell) => {
                if let Some(text) = cell.take() {
                    match cell_class(templates, &text) {
                        Some(class) => {
                            events.push(Event::Html(CowStr::from(format!("<span class=\"{class}\">"))));
                            events.push(Event::Text(CowStr::from(text)));
                            events.push(Event::Html(CowStr::from("</span>")));
                        }
                        None if !text.is_empty() => events.push(Event::Text(CowStr::from(text))),
                        None => {}
                    }
                }
                events.push(event);
            }
            Event::Text(s) | Event::Html(s) | Event::InlineHtml(s) if cell.is_some() => {
                cell.as_mut().unwrap().push_str(&s);
            }
            Event::Code(s) if cell.is_some() => cell.as_mut().unwrap().push_str(&s),
            other if cell.is_some() => {
                // formatting inside a cell: flush collected text and keep the event
                let text = cell.replace(String::new()).unwrap_or_default();
                if !text.is_empty() {
                    events.push(Event::Text(CowStr::from(text)));
                }
                events.push(other);
            }
            Event::Html(s) | Event::InlineHtml(s) => events.push(Event::Text(s)),
            other => events.push(other),
        }
    }
    let mut body = String::new();
    html::push_html(&mut body, events.into_iter());
    format!(
        "<!DOCTYPE html>\n<html lang=\"{}\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>{}</style>\n</head>\n<body>\n{}</body>\n</html>\n",
        templates.locale.code(),
        escape_html(templates.get("title")),
        STYLE,
        body
    )
}

fn escape_html(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
