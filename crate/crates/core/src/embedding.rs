//! Word-embedding store and the word2vec interchange formats.
//!
//! Both formats start with a `"<vocab_size> <dimension>\n"` header. The text
//! layout follows with one line per token (`token v1 v2 ...`); the binary
//! layout follows with `token`, a single `0x20` byte, and `dimension`
//! little-endian `f32` values per record, optionally terminated by `\n`.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("record {record}: expected {expected} components, found {found}")]
    WrongArity {
        record: usize,
        expected: usize,
        found: usize,
    },
    #[error("record {record}: non-finite component for token {token:?}")]
    NonFinite { record: usize, token: String },
    #[error("record {record}: invalid token ({reason})")]
    InvalidToken { record: usize, reason: String },
    #[error("embedding file contains no vectors")]
    EmptyVocabulary,
    #[error("token {0:?} is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("token {0:?} has a zero-norm vector")]
    ZeroNorm(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

impl EmbeddingError {
    fn invalid_token(record: usize, reason: impl Into<String>) -> Self {
        EmbeddingError::InvalidToken {
            record,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingFormat {
    Text,
    Binary,
}

impl EmbeddingFormat {
    /// `.bin` files are binary, everything else is text.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("bin") => EmbeddingFormat::Binary,
            _ => EmbeddingFormat::Text,
        }
    }
}

impl FromStr for EmbeddingFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(EmbeddingFormat::Text),
            "binary" | "bin" => Ok(EmbeddingFormat::Binary),
            other => Err(format!("unknown embedding format {other:?}")),
        }
    }
}

/// Bookkeeping from a load: what the header promised and what was kept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub declared_vocab: usize,
    pub records_read: usize,
    pub duplicates: usize,
}

/// Immutable token to vector map.
///
/// Vectors are kept exactly as read; norms are cached in `f64` for cosine.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dimension: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    norms: Vec<f64>,
    source_label: String,
}

impl EmbeddingStore {
    /// Build a store from in-memory entries. Duplicate tokens keep their first
    /// vector; the number of dropped duplicates is returned alongside.
    pub fn from_entries<I, S>(
        dimension: usize,
        entries: I,
        source_label: impl Into<String>,
    ) -> Result<(Self, usize), EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut builder = StoreBuilder::new(dimension)?;
        for (record, (token, vector)) in entries.into_iter().enumerate() {
            builder.push(record, token.into(), vector)?;
        }
        builder.finish(source_label.into())
    }

    pub fn load<R: BufRead>(
        mut reader: R,
        format: EmbeddingFormat,
        source_label: impl Into<String>,
    ) -> Result<(Self, LoadReport), EmbeddingError> {
        let (vocab, dimension) = read_header(&mut reader)?;
        let mut builder = StoreBuilder::new(dimension)?;
        let records_read = match format {
            EmbeddingFormat::Text => read_text_records(&mut reader, vocab, &mut builder)?,
            EmbeddingFormat::Binary => read_binary_records(&mut reader, vocab, &mut builder)?,
        };
        if records_read < vocab {
            warn!(declared = vocab, records_read, "embedding file shorter than its header");
        }
        let (store, duplicates) = builder.finish(source_label.into())?;
        if duplicates > 0 {
            warn!(duplicates, "duplicate tokens in embedding file; first occurrence kept");
        }
        Ok((
            store,
            LoadReport {
                declared_vocab: vocab,
                records_read,
                duplicates,
            },
        ))
    }

    pub fn load_path(
        path: &std::path::Path,
        format: Option<EmbeddingFormat>,
    ) -> Result<(Self, LoadReport), EmbeddingError> {
        let format = format.unwrap_or_else(|| EmbeddingFormat::from_path(path));
        let file = std::fs::File::open(path)?;
        Self::load(
            io::BufReader::new(file),
            format,
            path.display().to_string(),
        )
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dimension)?;
        for (token, vector) in self.iter() {
            w.write_all(token.as_bytes())?;
            for v in vector {
                write!(w, " {v}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dimension)?;
        for (token, vector) in self.iter() {
            w.write_all(token.as_bytes())?;
            w.write_all(b" ")?;
            for &v in vector {
                w.write_f32::<LittleEndian>(v)?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index.get(token).map(|&i| self.row(i))
    }

    pub fn vector(&self, token: &str) -> Result<&[f32], EmbeddingError> {
        self.get(token)
            .ok_or_else(|| EmbeddingError::OutOfVocabulary(token.to_owned()))
    }

    pub fn norm(&self, token: &str) -> Option<f64> {
        self.index.get(token).map(|&i| self.norms[i])
    }

    /// Tokens in file order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.tokens
            .iter()
            .enumerate()
            .map(move |(i, t)| (t.as_str(), self.row(i)))
    }

    /// Cosine between two in-vocabulary tokens, clamped to `[-1, 1]`.
    pub fn cosine(&self, a: &str, b: &str) -> Result<f64, EmbeddingError> {
        let ia = *self
            .index
            .get(a)
            .ok_or_else(|| EmbeddingError::OutOfVocabulary(a.to_owned()))?;
        let ib = *self
            .index
            .get(b)
            .ok_or_else(|| EmbeddingError::OutOfVocabulary(b.to_owned()))?;
        if self.norms[ia] == 0.0 {
            return Err(EmbeddingError::ZeroNorm(a.to_owned()));
        }
        if self.norms[ib] == 0.0 {
            return Err(EmbeddingError::ZeroNorm(b.to_owned()));
        }
        let dot = dot(self.row(ia), self.row(ib));
        Ok((dot / (self.norms[ia] * self.norms[ib])).clamp(-1.0, 1.0))
    }

    /// Copy with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> Self {
        let data: Vec<f32> = self.data.iter().map(|v| v * factor).collect();
        let norms = data
            .chunks_exact(self.dimension)
            .map(|row| dot(row, row).sqrt())
            .collect();
        EmbeddingStore {
            dimension: self.dimension,
            tokens: self.tokens.clone(),
            index: self.index.clone(),
            data,
            norms,
            source_label: self.source_label.clone(),
        }
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }
}

/// `f64` dot product of two `f32` vectors.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

/// cosine of two raw vectors; `None` when either has zero norm.
pub fn cosine_vectors(a: &[f64], b: &[f64]) -> Option<f64> {
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Some((d / (na * nb)).clamp(-1.0, 1.0))
}

struct StoreBuilder {
    dimension: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    duplicates: usize,
}

impl StoreBuilder {
    fn new(dimension: usize) -> Result<Self, EmbeddingError> {
        if dimension == 0 {
            return Err(EmbeddingError::MalformedHeader(
                "dimension must be positive".into(),
            ));
        }
        Ok(StoreBuilder {
            dimension,
            tokens: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            duplicates: 0,
        })
    }

    fn push(&mut self, record: usize, token: String, vector: Vec<f32>) -> Result<(), EmbeddingError> {
        if token.is_empty() {
            return Err(EmbeddingError::invalid_token(record, "empty token"));
        }
        if token.chars().any(char::is_whitespace) {
            return Err(EmbeddingError::invalid_token(record, "token contains whitespace"));
        }
        if vector.len() != self.dimension {
            return Err(EmbeddingError::WrongArity {
                record,
                expected: self.dimension,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite { record, token });
        }
        if self.index.contains_key(&token) {
            self.duplicates += 1;
            return Ok(());
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.data.extend_from_slice(&vector);
        Ok(())
    }

    fn finish(self, source_label: String) -> Result<(EmbeddingStore, usize), EmbeddingError> {
        if self.tokens.is_empty() {
            return Err(EmbeddingError::EmptyVocabulary);
        }
        let norms = self
            .data
            .chunks_exact(self.dimension)
            .map(|row| dot(row, row).sqrt())
            .collect();
        Ok((
            EmbeddingStore {
                dimension: self.dimension,
                tokens: self.tokens,
                index: self.index,
                data: self.data,
                norms,
                source_label,
            },
            self.duplicates,
        ))
    }
}

fn read_header<R: BufRead>(reader: &mut R) -> Result<(usize, usize), EmbeddingError> {
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    let line = std::str::from_utf8(&line)
        .map_err(|_| EmbeddingError::MalformedHeader("header is not UTF-8".into()))?;
    let mut fields = line.split_ascii_whitespace();
    let parse = |field: Option<&str>, what: &str| -> Result<usize, EmbeddingError> {
        field
            .ok_or_else(|| EmbeddingError::MalformedHeader(format!("missing {what}")))?
            .parse::<usize>()
            .map_err(|_| EmbeddingError::MalformedHeader(format!("{what} is not an integer")))
    };
    let vocab = parse(fields.next(), "vocab size")?;
    let dimension = parse(fields.next(), "dimension")?;
    if fields.next().is_some() {
        return Err(EmbeddingError::MalformedHeader(
            "expected exactly two fields".into(),
        ));
    }
    if vocab == 0 {
        return Err(EmbeddingError::EmptyVocabulary);
    }
    if dimension == 0 {
        return Err(EmbeddingError::MalformedHeader(
            "dimension must be positive".into(),
        ));
    }
    Ok((vocab, dimension))
}

fn read_text_records<R: BufRead>(
    reader: &mut R,
    vocab: usize,
    builder: &mut StoreBuilder,
) -> Result<usize, EmbeddingError> {
    let mut read = 0;
    let mut line = String::new();
    while read < vocab {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if trimmed.trim().is_empty() {
            continue;
        }
        let mut fields = trimmed.split(' ').filter(|f| !f.is_empty());
        let token = fields.next().unwrap_or_default().to_owned();
        let vector = fields
            .map(|f| {
                f.parse::<f32>().map_err(|_| EmbeddingError::NonFinite {
                    record: read,
                    token: token.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        builder.push(read, token, vector)?;
        read += 1;
    }
    Ok(read)
}

fn read_binary_records<R: BufRead>(
    reader: &mut R,
    vocab: usize,
    builder: &mut StoreBuilder,
) -> Result<usize, EmbeddingError> {
    let mut read = 0;
    let mut token = Vec::new();
    while read < vocab {
        // The optional '\n' ending the previous record shows up as a prefix here.
        loop {
            let buf = reader.fill_buf()?;
            match buf.first() {
                Some(b'\n') => reader.consume(1),
                _ => break,
            }
        }
        token.clear();
        reader.read_until(b' ', &mut token)?;
        if token.is_empty() {
            break;
        }
        if token.pop() != Some(b' ') {
            return Err(EmbeddingError::WrongArity {
                record: read,
                expected: builder.dimension,
                found: 0,
            });
        }
        let text = String::from_utf8(token.clone())
            .map_err(|_| EmbeddingError::invalid_token(read, "token is not UTF-8"))?;
        let mut vector = Vec::with_capacity(builder.dimension);
        for _ in 0..builder.dimension {
            match reader.read_f32::<LittleEndian>() {
                Ok(v) => vector.push(v),
                Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => {
                    return Err(EmbeddingError::WrongArity {
                        record: read,
                        expected: builder.dimension,
                        found: vector.len(),
                    })
                }
                Err(e) => return Err(e.into()),
            }
        }
        builder.push(read, text, vector)?;
        read += 1;
    }
    Ok(read)
}

/// Read a whole stream into memory first; convenient for small fixture files.
pub fn load_bytes(
    bytes: &[u8],
    format: EmbeddingFormat,
    source_label: &str,
) -> Result<(EmbeddingStore, LoadReport), EmbeddingError> {
    EmbeddingStore::load(io::Cursor::new(bytes), format, source_label)
}
