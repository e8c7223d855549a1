//! Flat annotation records and the newline-delimited record file format.
//!
//! Each line of a record file is one JSON object whose keys are annotation
//! names and whose values are strings, integers, reals or booleans. The
//! reserved key `_id` carries the record identity; an explicit `null` is
//! read as an absent annotation.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};
use thiserror::Error;

/// Reserved key holding the record identifier.
pub const ID_KEY: &str = "_id";

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("malformed record on line {line}: {cause}")]
    Malformed { line: usize, cause: String },
    #[error("I/O error reading line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

impl RecordError {
    pub fn line(&self) -> usize {
        match self {
            RecordError::Malformed { line, .. } | RecordError::Io { line, .. } => *line,
        }
    }
}

/// A single annotation value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Text(String),
    Integer(i64),
    Real(f64),
    Boolean(bool),
    /// The annotation is absent from the record.
    Missing,
}

/// Coarse value kind used in type-mismatch reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueKind {
    Text,
    Number,
    Boolean,
    Missing,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Text => "text",
            ValueKind::Number => "number",
            ValueKind::Boolean => "boolean",
            ValueKind::Missing => "missing",
        })
    }
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Text(_) => ValueKind::Text,
            Value::Integer(_) | Value::Real(_) => ValueKind::Number,
            Value::Boolean(_) => ValueKind::Boolean,
            Value::Missing => ValueKind::Missing,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    /// Orders two values of the same kind. Integers and reals form one
    /// numeric class and are compared exactly, without rounding the integer.
    /// Returns `None` when the kinds differ or either side is missing.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Integer(a), Value::Integer(b)) => Some(a.cmp(b)),
            (Value::Real(a), Value::Real(b)) => a.partial_cmp(b),
            (Value::Integer(a), Value::Real(b)) => cmp_int_real(*a, *b),
            (Value::Real(a), Value::Integer(b)) => cmp_int_real(*b, *a).map(Ordering::reverse),
            (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
            (Value::Boolean(a), Value::Boolean(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    /// Converts to the JSON representation used in record and trace files.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Text(s) => serde_json::Value::String(s.clone()),
            Value::Integer(i) => serde_json::Value::from(*i),
            Value::Real(r) => serde_json::Number::from_f64(*r)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Value::Boolean(b) => serde_json::Value::Bool(*b),
            Value::Missing => serde_json::Value::Null,
        }
    }

    pub(crate) fn from_json(value: serde_json::Value) -> Result<Value, String> {
        match value {
            serde_json::Value::Null => Ok(Value::Missing),
            serde_json::Value::Bool(b) => Ok(Value::Boolean(b)),
            serde_json::Value::String(s) => Ok(Value::Text(s)),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Value::Integer(i))
                } else if n.is_u64() {
                    Err(format!("integer {n} is out of range"))
                } else {
                    match n.as_f64() {
                        Some(r) if r.is_finite() => Ok(Value::Real(r)),
                        _ => Err(format!("number {n} is not a finite real")),
                    }
                }
            }
            serde_json::Value::Array(_) => Err("array values are not allowed".into()),
            serde_json::Value::Object(_) => Err("nested objects are not allowed".into()),
        }
    }
}

/// Exact comparison of an integer against a finite real.
fn cmp_int_real(i: i64, r: f64) -> Option<Ordering> {
    if r.is_nan() {
        return None;
    }
    // 2^63 is exactly representable; every i64 lies in [-2^63, 2^63).
    const TWO_63: f64 = 9_223_372_036_854_775_808.0;
    if r >= TWO_63 {
        return Some(Ordering::Less);
    }
    if r < -TWO_63 {
        return Some(Ordering::Greater);
    }
    let whole = r.trunc();
    let whole_int = whole as i64;
    match i.cmp(&whole_int) {
        Ordering::Equal => {
            let frac = r - whole;
            Some(if frac > 0.0 {
                Ordering::Less
            } else if frac < 0.0 {
                Ordering::Greater
            } else {
                Ordering::Equal
            })
        }
        other => Some(other),
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Text(s) => write!(f, "{s:?}"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r:?}"),
            Value::Boolean(true) => f.write_str("True"),
            Value::Boolean(false) => f.write_str("False"),
            Value::Missing => f.write_str("<missing>"),
        }
    }
}

/// One classified entity: a record identifier and a flat annotation map.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    id: String,
    entries: BTreeMap<String, Value>,
}

impl Record {
    /// Builds a record. Missing values are dropped from the entry map since
    /// absence and explicit null are indistinguishable.
    pub fn new(id: impl Into<String>, entries: impl IntoIterator<Item = (String, Value)>) -> Self {
        Record {
            id: id.into(),
            entries: entries.into_iter().filter(|(_, v)| !v.is_missing()).collect(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn entries(&self) -> &BTreeMap<String, Value> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Returns the value of `annotation`, or [`Value::Missing`] when absent.
    pub fn get(&self, annotation: &str) -> &Value {
        self.entries.get(annotation).unwrap_or(&Value::Missing)
    }

    pub fn set(&mut self, annotation: impl Into<String>, value: Value) {
        let annotation = annotation.into();
        if value.is_missing() {
            self.entries.remove(&annotation);
        } else {
            self.entries.insert(annotation, value);
        }
    }

    /// Serializes the record as one line of the record file format (no
    /// trailing newline). `_id` comes first, then annotations in name order.
    pub fn to_json_line(&self) -> String {
        let mut map = serde_json::Map::new();
        map.insert(ID_KEY.to_string(), serde_json::Value::String(self.id.clone()));
        for (k, v) in &self.entries {
            map.insert(k.clone(), v.to_json());
        }
        serde_json::Value::Object(map).to_string()
    }
}

/// Free-function form of [`Record::get`].
pub fn get_value<'a>(record: &'a Record, annotation: &str) -> &'a Value {
    record.get(annotation)
}

/// Key/value pairs in source order, duplicates preserved so they can be
/// rejected explicitly.
struct RawPairs(Vec<(String, serde_json::Value)>);

impl<'de> Deserialize<'de> for RawPairs {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PairsVisitor;

        impl<'de> Visitor<'de> for PairsVisitor {
            type Value = RawPairs;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawPairs, A::Error> {
                let mut pairs = Vec::with_capacity(map.size_hint().unwrap_or(16));
                while let Some((k, v)) = map.next_entry::<String, serde_json::Value>()? {
                    pairs.push((k, v));
                }
                Ok(RawPairs(pairs))
            }
        }

        deserializer.deserialize_map(PairsVisitor)
    }
}

/// Parses one line of a record file. `line_number` is 1-based and names the
/// record when it carries no `_id`.
pub fn parse_record_line(line: &str, line_number: usize) -> Result<Record, RecordError> {
    let malformed = |cause: String| RecordError::Malformed { line: line_number, cause };
    let RawPairs(pairs) = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;

    let mut id = None;
    let mut entries = BTreeMap::new();
    for (key, raw) in pairs {
        if key == ID_KEY {
            if id.is_some() {
                return Err(malformed(format!("duplicate key {ID_KEY:?}")));
            }
            match raw {
                serde_json::Value::String(s) if !s.is_empty() => id = Some(s),
                serde_json::Value::String(_) => return Err(malformed("empty record id".into())),
                other => {
                    return Err(malformed(format!("{ID_KEY:?} must be a string, found {other}")))
                }
            }
            continue;
        }
        if entries.contains_key(&key) {
            return Err(malformed(format!("duplicate annotation {key:?}")));
        }
        let value =
            Value::from_json(raw).map_err(|cause| malformed(format!("{key:?}: {cause}")))?;
        entries.insert(key, value);
    }
    let id = id.unwrap_or_else(|| format!("line:{line_number}"));
    Ok(Record::new(id, entries))
}

/// Lazy reader over a newline-delimited record stream.
///
/// Blank lines are skipped but still count toward line numbers. In strict
/// mode the first malformed line is yielded as an error; in lenient mode it
/// is skipped and counted.
pub struct RecordReader<R> {
    source: R,
    line_number: usize,
    lenient: bool,
    skipped: usize,
    buf: String,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(source: R) -> Self {
        RecordReader { source, line_number: 0, lenient: false, skipped: 0, buf: String::new() }
    }

    pub fn lenient(mut self, lenient: bool) -> Self {
        self.lenient = lenient;
        self
    }

    /// Number of malformed lines skipped so far (lenient mode only).
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Reads the next non-blank raw line, returning its 1-based number.
    pub fn next_line(&mut self) -> Option<Result<(usize, String), RecordError>> {
        loop {
            self.buf.clear();
            self.line_number += 1;
            match self.source.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {
                    let line = self.buf.trim_end_matches(['\n', '\r']);
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(Ok((self.line_number, line.to_string())));
                }
                Err(source) => {
                    return Some(Err(RecordError::Io { line: self.line_number, source }))
                }
            }
        }
    }

    /// Records `n` externally parsed lines as skipped.
    pub fn note_skipped(&mut self, n: usize) {
        self.skipped += n;
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<Record, RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (n, line) = match self.next_line()? {
                Ok(v) => v,
                Err(e) => return Some(Err(e)),
            };
            match parse_record_line(&line, n) {
                Ok(r) => return Some(Ok(r)),
                Err(e) if self.lenient && matches!(e, RecordError::Malformed { .. }) => {
                    self.skipped += 1;
                }
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

/// Strict reader over `source`.
pub fn load_records<R: BufRead>(source: R) -> RecordReader<R> {
    RecordReader::new(source)
}
