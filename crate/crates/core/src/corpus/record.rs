//! Condition-first record layouts.
//!
//! ```text
//! KEYWORD: <keyword>\nTITLE: <title>\n<sep>
//! CATEGORY: <category>\nDESCRIPTION: <description>\n<sep>
//! Applying <source> to <target>.\n<description>\n<sep>
//! ```
//!
//! A corpus file is the concatenation of records, each followed by `\n`.

use serde::{Deserialize, Serialize};

use super::CorpusError;

pub const DEFAULT_SEPARATOR: &str = "<|endoftext|>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    DomainSynthesis,
    ProblemDriven,
    AnalogyDriven,
}

impl TaskKind {
    /// Condition labels carried by records of this kind, in layout order.
    pub fn condition_labels(self) -> &'static [&'static str] {
        match self {
            TaskKind::DomainSynthesis => &["KEYWORD"],
            TaskKind::ProblemDriven => &["CATEGORY"],
            TaskKind::AnalogyDriven => &["SOURCE", "TARGET"],
        }
    }

    /// Whether completions are single-line titles rather than descriptions.
    pub fn is_title(self) -> bool {
        matches!(self, TaskKind::DomainSynthesis)
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "domain_synthesis" | "domain" => Ok(TaskKind::DomainSynthesis),
            "problem_driven" | "problem" => Ok(TaskKind::ProblemDriven),
            "analogy_driven" | "analogy" => Ok(TaskKind::AnalogyDriven),
            other => Err(format!("unknown task kind {other:?}")),
        }
    }
}

/// Label text and record separator. The defaults are the reference layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecordLayout {
    pub keyword_label: String,
    pub title_label: String,
    pub category_label: String,
    pub description_label: String,
    pub separator: String,
}

impl Default for RecordLayout {
    fn default() -> Self {
        RecordLayout {
            keyword_label: "KEYWORD:".into(),
            title_label: "TITLE:".into(),
            category_label: "CATEGORY:".into(),
            description_label: "DESCRIPTION:".into(),
            separator: DEFAULT_SEPARATOR.into(),
        }
    }
}

impl RecordLayout {
    pub fn is_default(&self) -> bool {
        *self == RecordLayout::default()
    }

    /// Everything up to where a title completion begins.
    pub fn domain_stub(&self, keyword: &str) -> String {
        format!("{} {keyword}\n{}", self.keyword_label, self.title_label)
    }

    /// Everything up to where the description (or its open stem) continues.
    pub fn reddot_stub(&self, category: &str, problem_stem: &str) -> String {
        let mut stub = format!("{} {category}\n{}", self.category_label, self.description_label);
        if !problem_stem.is_empty() {
            stub.push(' ');
            stub.push_str(problem_stem);
        }
        stub
    }

    pub fn analogy_stub(&self, source: &str, target: &str) -> String {
        format!("Applying {source} to {target}.\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub task_kind: TaskKind,
    pub condition_fields: Vec<(String, String)>,
    pub completion: String,
}

impl TrainingRecord {
    pub fn condition(&self, label: &str) -> Option<&str> {
        self.condition_fields
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, v)| v.as_str())
    }

    /// The condition stub this record's completion follows.
    pub fn stub(&self, layout: &RecordLayout) -> String {
        let c = |l| self.condition(l).unwrap_or_default();
        match self.task_kind {
            TaskKind::DomainSynthesis => layout.domain_stub(c("KEYWORD")),
            TaskKind::ProblemDriven => layout.reddot_stub(c("CATEGORY"), ""),
            TaskKind::AnalogyDriven => layout.analogy_stub(c("SOURCE"), c("TARGET")),
        }
    }

    pub fn serialize(&self, layout: &RecordLayout) -> String {
        let c = |l| self.condition(l).unwrap_or_default();
        match self.task_kind {
            TaskKind::DomainSynthesis => format!(
                "{} {}\n{} {}\n{}",
                layout.keyword_label,
                c("KEYWORD"),
                layout.title_label,
                self.completion,
                layout.separator
            ),
            TaskKind::ProblemDriven => format!(
                "{} {}\n{} {}\n{}",
                layout.category_label,
                c("CATEGORY"),
                layout.description_label,
                self.completion,
                layout.separator
            ),
            TaskKind::AnalogyDriven => format!(
                "{}{}\n{}",
                layout.analogy_stub(c("SOURCE"), c("TARGET")),
                self.completion,
                layout.separator
            ),
        }
    }

    pub fn parse(kind: TaskKind, text: &str, layout: &RecordLayout) -> Result<Self, CorpusError> {
        let fail = |reason: &str| CorpusError::Parse {
            kind,
            reason: reason.to_owned(),
        };
        let body = text
            .strip_suffix(layout.separator.as_str())
            .and_then(|b| b.strip_suffix('\n'))
            .ok_or_else(|| fail("missing trailing separator line"))?;
        let (first, rest) = body.split_once('\n').ok_or_else(|| fail("missing condition line"))?;
        match kind {
            TaskKind::DomainSynthesis => {
                let keyword = strip_label(first, &layout.keyword_label).ok_or_else(|| fail("missing keyword label"))?;
                let title = strip_label(rest, &layout.title_label).ok_or_else(|| fail("missing title label"))?;
                format_domain_record(keyword, title)
            }
            TaskKind::ProblemDriven => {
                let category = strip_label(first, &layout.category_label).ok_or_else(|| fail("missing category label"))?;
                let description =
                    strip_label(rest, &layout.description_label).ok_or_else(|| fail("missing description label"))?;
                format_reddot_record(category, description)
            }
            TaskKind::AnalogyDriven => {
                let pair = first
                    .strip_prefix("Applying ")
                    .and_then(|s| s.strip_suffix('.'))
                    .ok_or_else(|| fail("missing analogy sentence"))?;
                let (source, target) = pair.split_once(" to ").ok_or_else(|| fail("missing ' to '"))?;
                format_analogy_record(source, target, rest)
            }
        }
        .map_err(|e| fail(&e.to_string()))
    }
}

fn strip_label<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    line.strip_prefix(label)?.strip_prefix(' ')
}

fn require(field: &'static str, value: &str) -> Result<(), CorpusError> {
    if value.trim().is_empty() {
        return Err(CorpusError::EmptyField(field));
    }
    if value.contains(DEFAULT_SEPARATOR) {
        return Err(CorpusError::InvalidField {
            field,
            reason: "contains the record separator".into(),
        });
    }
    Ok(())
}

fn single_line(field: &'static str, value: &str) -> Result<(), CorpusError> {
    require(field, value)?;
    if value.contains(['\n', '\r']) {
        return Err(CorpusError::InvalidField {
            field,
            reason: "must be a single line".into(),
        });
    }
    Ok(())
}

pub fn format_domain_record(keyword: &str, title: &str) -> Result<TrainingRecord, CorpusError> {
    single_line("keyword", keyword)?;
    single_line("title", title)?;
    Ok(TrainingRecord {
        task_kind: TaskKind::DomainSynthesis,
        condition_fields: vec![("KEYWORD".into(), keyword.into())],
        completion: title.into(),
    })
}

pub fn format_reddot_record(category: &str, description: &str) -> Result<TrainingRecord, CorpusError> {
    single_line("category", category)?;
    require("description", description)?;
    Ok(TrainingRecord {
        task_kind: TaskKind::ProblemDriven,
        condition_fields: vec![("CATEGORY".into(), category.into())],
        completion: description.into(),
    })
}

pub fn format_analogy_record(source: &str, target: &str, description: &str) -> Result<TrainingRecord, CorpusError> {
    single_line("source", source)?;
    single_line("target", target)?;
    require("description", description)?;
    // The sentence is split at its first " to ".
    if format!("{source} to ").find(" to ") != Some(source.len()) {
        return Err(CorpusError::InvalidField {
            field: "source",
            reason: "must not contain \" to \"".into(),
        });
    }
    Ok(TrainingRecord {
        task_kind: TaskKind::AnalogyDriven,
        condition_fields: vec![("SOURCE".into(), source.into()), ("TARGET".into(), target.into())],
        completion: description.into(),
    })
}

pub fn write_corpus<W: std::io::Write>(
    mut w: W,
    records: &[TrainingRecord],
    layout: &RecordLayout,
) -> std::io::Result<()> {
    for r in records {
        w.write_all(r.serialize(layout).as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Split a corpus file back into records.
pub fn parse_corpus(kind: TaskKind, text: &str, layout: &RecordLayout) -> Result<Vec<TrainingRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut rest = text;
    while !rest.trim().is_empty() {
        let end = rest.find(layout.separator.as_str()).ok_or_else(|| CorpusError::Parse {
            kind,
            reason: format!("record {} has no separator", records.len()),
        })? + layout.separator.len();
        records.push(TrainingRecord::parse(kind, &rest[..end], layout)?);
        rest = rest[end..].strip_prefix('\n').unwrap_or(&rest[end..]);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn domain_layout() {
        let r = format_domain_record("toy", "Rolling toy air gun").unwrap();
        let layout = RecordLayout::default();
        assert_eq!(
            r.serialize(&layout),
            "KEYWORD: toy\nTITLE: Rolling toy air gun\n<|endoftext|>"
        );
        assert_eq!(r.stub(&layout), "KEYWORD: toy\nTITLE:");
    }

    #[test]
    fn reddot_layout() {
        let r = format_reddot_record("Third Age", "In the narrow and limited space of public toilet cubicles.").unwrap();
        assert_eq!(
            r.serialize(&RecordLayout::default()),
            "CATEGORY: Third Age\nDESCRIPTION: In the narrow and limited space of public toilet cubicles.\n<|endoftext|>"
        );
    }

    #[test]
    fn analogy_layout() {
        let r = format_analogy_record("accordion", "computer mouse", "An ergonomic mouse.").unwrap();
        let s = r.serialize(&RecordLayout::default());
        assert!(s.starts_with("Applying accordion to computer mouse.\n"));
        assert_eq!(s, "Applying accordion to computer mouse.\nAn ergonomic mouse.\n<|endoftext|>");
    }

    #[test]
    fn custom_layout() {
        let layout = RecordLayout {
            keyword_label: "Domain:".into(),
            separator: "###".into(),
            ..RecordLayout::default()
        };
        let r = format_domain_record("lighting", "Lamp with solar cell").unwrap();
        let s = r.serialize(&layout);
        assert_eq!(s, "Domain: lighting\nTITLE: Lamp with solar cell\n###");
        assert_eq!(TrainingRecord::parse(TaskKind::DomainSynthesis, &s, &layout).unwrap(), r);
    }

    #[test]
    fn empty_fields_rejected() {
        assert!(matches!(format_domain_record("", "x"), Err(CorpusError::EmptyField("keyword"))));
        assert!(matches!(format_domain_record("k", "  "), Err(CorpusError::EmptyField("title"))));
        assert!(matches!(format_reddot_record("c", ""), Err(CorpusError::EmptyField("description"))));
        assert!(matches!(
            format_analogy_record("a", "", "d"),
            Err(CorpusError::EmptyField("target"))
        ));
        assert!(format_analogy_record("back to back", "seat", "d").is_err());
        assert!(format_domain_record("k", "two\nlines").is_err());
    }

    #[test]
    fn corpus_file_round_trip() {
        let layout = RecordLayout::default();
        let records = vec![
            format_reddot_record("Third Age", "Line one.\nLine two.").unwrap(),
            format_reddot_record("Life Science", "Current electrocardiograph testing.").unwrap(),
        ];
        let mut buf = Vec::new();
        write_corpus(&mut buf, &records, &layout).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(parse_corpus(TaskKind::ProblemDriven, &text, &layout).unwrap(), records);
    }

    fn field() -> impl Strategy<Value = String> {
        "[A-Za-z0-9][A-Za-z0-9 ,'-]{0,20}"
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(
            kind in 0..3u8,
            a in field(),
            b in field().prop_filter("splits at its own ' to '", |s| format!("{s} to ").find(" to ") == Some(s.len())),
            body in "[A-Za-z0-9 .,\n]{0,60}[A-Za-z]",
        ) {
            let layout = RecordLayout::default();
            let r = match kind {
                0 => format_domain_record(&a, &body.replace('\n', " ")).unwrap(),
                1 => format_reddot_record(&a, &body).unwrap(),
                _ => format_analogy_record(&b, &a, &body).unwrap(),
            };
            let s = r.serialize(&layout);
            prop_assert!(s.starts_with(&r.stub(&layout)));
            prop_assert!(s.len() > r.stub(&layout).len());
            prop_assert_eq!(TrainingRecord::parse(r.task_kind, &s, &layout).unwrap(), r);
        }
    }
}
