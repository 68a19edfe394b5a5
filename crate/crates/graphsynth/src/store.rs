//! Columnar id-keyed tables: the property table (id, value) and the edge
//! table (id, tail, head), with CSV persistence.
//!
//! Ids are dense: a table of n rows holds ids 0..n-1 exactly once, so the
//! row vector index is the id. Tables may be assembled from independent
//! id-range partitions; the result is independent of how the range was
//! split.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: row {row}: {reason}")]
    MalformedRow { path: PathBuf, row: u64, reason: String },
    #[error("{path}: duplicate id {id}")]
    DuplicateId { path: PathBuf, id: u64 },
    #[error("{path}: id gap, missing id {id}")]
    IdGap { path: PathBuf, id: u64 },
    #[error("{path}: bad header {found:?}, expected {expected:?}")]
    BadHeader { path: PathBuf, found: String, expected: String },
    #[error("value type mismatch: expected {expected}, got {actual}")]
    TypeMismatch { expected: ValueType, actual: ValueType },
    #[error("cannot parse {text:?} as {ty}")]
    BadValue { text: String, ty: ValueType },
    #[error("edge {id}: endpoint ({tail}, {head}) outside ({n_tail}, {n_head})")]
    EndpointOutOfRange { id: u64, tail: u64, head: u64, n_tail: u64, n_head: u64 },
}

/// Scalar type of a property column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    Str,
    Int,
    Date,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::Str => "string",
            ValueType::Int => "integer",
            ValueType::Date => "date",
        })
    }
}

/// One property value. Dates render as ISO `YYYY-MM-DD`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Str(String),
    Int(i64),
    Date(NaiveDate),
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Str(_) => ValueType::Str,
            Value::Int(_) => ValueType::Int,
            Value::Date(_) => ValueType::Date,
        }
    }

    pub fn parse(text: &str, ty: ValueType) -> Result<Value, StoreError> {
        let bad = || StoreError::BadValue { text: text.to_string(), ty };
        match ty {
            ValueType::Str => Ok(Value::Str(text.to_string())),
            ValueType::Int => text.parse().map(Value::Int).map_err(|_| bad()),
            ValueType::Date => {
                NaiveDate::parse_from_str(text, "%Y-%m-%d").map(Value::Date).map_err(|_| bad())
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => f.write_str(s),
            Value::Int(v) => write!(f, "{v}"),
            Value::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path, source: csv::Error) -> StoreError {
    StoreError::Csv { path: path.to_path_buf(), source }
}

/// Two-column table `[id, value]` holding one property of one type.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyTable {
    table_tag: String,
    value_type: ValueType,
    values: Vec<Value>,
}

impl PropertyTable {
    pub fn new(table_tag: impl Into<String>, value_type: ValueType) -> Self {
        Self { table_tag: table_tag.into(), value_type, values: Vec::new() }
    }

    pub fn from_values(
        table_tag: impl Into<String>,
        value_type: ValueType,
        values: Vec<Value>,
    ) -> Result<Self, StoreError> {
        for v in &values {
            if v.value_type() != value_type {
                return Err(StoreError::TypeMismatch { expected: value_type, actual: v.value_type() });
            }
        }
        Ok(Self { table_tag: table_tag.into(), value_type, values })
    }

    /// Assembles a table from id-range partitions given in range order.
    pub fn from_partitions(
        table_tag: impl Into<String>,
        value_type: ValueType,
        partitions: Vec<Vec<Value>>,
    ) -> Result<Self, StoreError> {
        let mut values = Vec::with_capacity(partitions.iter().map(Vec::len).sum());
        for p in partitions {
            values.extend(p);
        }
        Self::from_values(table_tag, value_type, values)
    }

    pub fn table_tag(&self) -> &str {
        &self.table_tag
    }

    pub fn value_type(&self) -> ValueType {
        self.value_type
    }

    pub fn len(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, id: u64) -> &Value {
        &self.values[id as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Value)> {
        self.values.iter().enumerate().map(|(i, v)| (i as u64, v))
    }

    /// Writes `id,value` rows in ascending id order, LF-terminated.
    pub fn write_csv(&self, path: &Path) -> Result<(), StoreError> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(["id", "value"]).map_err(|e| csv_err(path, e))?;
        for (id, v) in self.iter() {
            w.write_record([id.to_string(), v.to_string()]).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| io_err(path, e))
    }

    pub fn read_csv(
        path: &Path,
        table_tag: impl Into<String>,
        value_type: ValueType,
    ) -> Result<Self, StoreError> {
        let rows = read_rows(path, &["id", "value"])?;
        let mut pairs = Vec::with_capacity(rows.len());
        for (row_no, record) in rows {
            let id: u64 = record[0].parse().map_err(|_| StoreError::MalformedRow {
                path: path.to_path_buf(),
                row: row_no,
                reason: format!("non-integer id {:?}", &record[0]),
            })?;
            let value = Value::parse(&record[1], value_type)?;
            pairs.push((id, value));
        }
        let values = dense_by_id(path, pairs)?;
        Self::from_values(table_tag, value_type, values)
    }
}

/// Three-column table `[id, tail, head]` holding one edge type's structure.
/// The edge id is the row index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeTable {
    edge_type: String,
    edges: Vec<(u64, u64)>,
}

impl EdgeTable {
    pub fn new(edge_type: impl Into<String>) -> Self {
        Self { edge_type: edge_type.into(), edges: Vec::new() }
    }

    pub fn from_edges(edge_type: impl Into<String>, edges: Vec<(u64, u64)>) -> Self {
        Self { edge_type: edge_type.into(), edges }
    }

    pub fn edge_type(&self) -> &str {
        &self.edge_type
    }

    pub fn with_edge_type(mut self, edge_type: impl Into<String>) -> Self {
        self.edge_type = edge_type.into();
        self
    }

    pub fn len(&self) -> u64 {
        self.edges.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn push(&mut self, tail: u64, head: u64) {
        self.edges.push((tail, head));
    }

    pub fn edge(&self, id: u64) -> (u64, u64) {
        self.edges[id as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64, u64)> + '_ {
        self.edges.iter().enumerate().map(|(i, &(t, h))| (i as u64, t, h))
    }

    /// Checks every endpoint against the generating structure's node counts.
    pub fn validate_endpoints(&self, n_tail: u64, n_head: u64) -> Result<(), StoreError> {
        for (id, tail, head) in self.iter() {
            if tail >= n_tail || head >= n_head {
                return Err(StoreError::EndpointOutOfRange { id, tail, head, n_tail, n_head });
            }
        }
        Ok(())
    }

    /// Applies mappings to both endpoint columns in place.
    pub fn remap_endpoints(&mut self, tail_map: impl Fn(u64) -> u64, head_map: impl Fn(u64) -> u64) {
        for (t, h) in &mut self.edges {
            *t = tail_map(*t);
            *h = head_map(*h);
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), StoreError> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(["id", "tail", "head"]).map_err(|e| csv_err(path, e))?;
        for (id, tail, head) in self.iter() {
            w.write_record([id.to_string(), tail.to_string(), head.to_string()])
                .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| io_err(path, e))
    }

    pub fn read_csv(path: &Path, edge_type: impl Into<String>) -> Result<Self, StoreError> {
        let rows = read_rows(path, &["id", "tail", "head"])?;
        let mut pairs = Vec::with_capacity(rows.len());
        for (row_no, record) in rows {
            let parse = |field: &str, what: &str| -> Result<u64, StoreError> {
                field.parse().map_err(|_| StoreError::MalformedRow {
                    path: path.to_path_buf(),
                    row: row_no,
                    reason: format!("non-integer {what} {field:?}"),
                })
            };
            let id = parse(&record[0], "id")?;
            let tail = parse(&record[1], "tail")?;
            let head = parse(&record[2], "head")?;
            pairs.push((id, (tail, head)));
        }
        let edges = dense_by_id(path, pairs)?;
        Ok(Self { edge_type: edge_type.into(), edges })
    }
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>, StoreError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(BufReader::new(file));
    let found = reader.headers().map_err(|e| csv_err(path, e))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(StoreError::BadHeader {
            path: path.to_path_buf(),
            found: found.iter().collect::<Vec<_>>().join(","),
            expected: header.join(","),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i as u64 + 2; // 1-based, after the header line
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != header.len() {
            return Err(StoreError::MalformedRow {
                path: path.to_path_buf(),
                row: row_no,
                reason: format!("expected {} columns, got {}", header.len(), record.len()),
            });
        }
        rows.push((row_no, record));
    }
    Ok(rows)
}

/// Orders rows by id and checks the ids are exactly 0..n-1.
fn dense_by_id<T>(path: &Path, mut pairs: Vec<(u64, T)>) -> Result<Vec<T>, StoreError> {
    pairs.sort_by_key(|(id, _)| *id);
    for (i, (id, _)) in pairs.iter().enumerate() {
        let expected = i as u64;
        if *id == expected {
            continue;
        }
        if i > 0 && *id == pairs[i - 1].0 {
            return Err(StoreError::DuplicateId { path: path.to_path_buf(), id: *id });
        }
        return Err(StoreError::IdGap { path: path.to_path_buf(), id: expected });
    }
    Ok(pairs.into_iter().map(|(_, v)| v).collect())
}
