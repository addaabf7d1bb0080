use std::io::Read;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::CorpusError;

/// One raw design document: a patent title, a product description, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
    /// Analogy source, for analogy-driven corpora.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_domain: Option<String>,
    /// Analogy target, for analogy-driven corpora.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_domain: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IngestFormat {
    /// One document text per line.
    Lines,
    /// One JSON object per line: `{id, text, category?, date?, source_domain?, target_domain?}`.
    Jsonl,
}

impl FromStr for IngestFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lines" | "txt" => Ok(IngestFormat::Lines),
            "jsonl" | "json" => Ok(IngestFormat::Jsonl),
            other => Err(format!("unknown ingest format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub documents: Vec<SourceDocument>,
    pub skipped: usize,
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<serde_json::Value>,
    text: String,
    category: Option<String>,
    date: Option<String>,
    source_domain: Option<String>,
    target_domain: Option<String>,
}

fn parse_date(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc())
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|s| s.trim().to_owned()).filter(|s| !s.is_empty())
}

fn parse_structured(line: &str, line_no: usize) -> Result<SourceDocument, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let text = raw.text.trim().to_owned();
    if text.is_empty() {
        return Err("empty text".into());
    }
    let id = match raw.id {
        Some(serde_json::Value::String(s)) if !s.is_empty() => s,
        Some(serde_json::Value::Number(n)) => n.to_string(),
        None => format!("line-{line_no}"),
        Some(other) => return Err(format!("unsupported id {other}")),
    };
    let timestamp = match raw.date {
        Some(d) => Some(parse_date(&d).ok_or_else(|| format!("bad date {d:?}"))?),
        None => None,
    };
    Ok(SourceDocument {
        id,
        text,
        category: non_empty(raw.category),
        timestamp,
        source_domain: non_empty(raw.source_domain),
        target_domain: non_empty(raw.target_domain),
    })
}

/// Read a whole stream of documents. Malformed structured lines are skipped
/// with a warning; blank lines are ignored.
pub fn ingest<R: Read>(mut reader: R, format: IngestFormat) -> Result<Ingested, CorpusError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|_| CorpusError::Undecodable)?;

    let mut documents = Vec::new();
    let mut skipped = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match format {
            IngestFormat::Lines => documents.push(SourceDocument {
                id: format!("line-{line_no}"),
                text: line.trim().to_owned(),
                category: None,
                timestamp: None,
                source_domain: None,
                target_domain: None,
            }),
            IngestFormat::Jsonl => match parse_structured(line, line_no) {
                Ok(doc) => documents.push(doc),
                Err(reason) => {
                    warn!(line = line_no, %reason, "skipping malformed record");
                    skipped += 1;
                }
            },
        }
    }
    if documents.is_empty() {
        return Err(CorpusError::NoRecords { skipped });
    }
    Ok(Ingested { documents, skipped })
}
