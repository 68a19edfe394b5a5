//! Weighted dictionaries and inverse transform sampling.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use super::GenError;

/// A list of values with positive weights and the normalized CDF over them.
#[derive(Debug, Clone)]
pub struct WeightedDictionary {
    entries: Vec<(String, f64)>,
    cumulative: Vec<f64>,
}

impl WeightedDictionary {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self, GenError> {
        if entries.is_empty() {
            return Err(GenError::EmptyDictionary);
        }
        for (value, weight) in &entries {
            if !(*weight > 0.0) || !weight.is_finite() {
                return Err(GenError::BadFile {
                    path: Default::default(),
                    reason: format!("weight for {value:?} must be a positive number, got {weight}"),
                });
            }
        }
        let total: f64 = entries.iter().map(|(_, w)| w).sum();
        let mut running = 0.0;
        let cumulative = entries
            .iter()
            .map(|(_, w)| {
                running += w;
                running / total
            })
            .collect();
        Ok(Self { entries, cumulative })
    }

    /// Loads `value,weight` rows (no header).
    pub fn read_csv(path: &Path) -> Result<Self, GenError> {
        let rows = read_csv_rows(path, 2)?;
        let entries = rows
            .into_iter()
            .map(|(row, fields)| {
                let weight: f64 = fields[1].parse().map_err(|_| GenError::BadFile {
                    path: path.to_path_buf(),
                    reason: format!("row {row}: bad weight {:?}", fields[1]),
                })?;
                Ok((fields[0].clone(), weight))
            })
            .collect::<Result<Vec<_>, GenError>>()?;
        Self::new(entries).map_err(|e| match e {
            GenError::BadFile { reason, .. } => {
                GenError::BadFile { path: path.to_path_buf(), reason }
            }
            other => other,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    /// First entry whose cumulative weight strictly exceeds `u`.
    pub fn sample(&self, u: f64) -> &str {
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.entries.len() - 1);
        &self.entries[idx].0
    }
}

/// Inverse transform sampling over a weighted dictionary: `u` in `[0, 1)`
/// selects the first entry whose cumulative weight strictly exceeds it.
pub fn sample_inverse_transform(dict: &WeightedDictionary, u: f64) -> &str {
    dict.sample(u)
}

/// One weighted dictionary per dependency-value tuple, plus a required
/// fallback dictionary for tuples not listed in the file.
#[derive(Debug, Clone)]
pub struct ConditionalDictionary {
    arity: usize,
    cases: HashMap<Vec<String>, WeightedDictionary>,
    fallback: WeightedDictionary,
}

impl ConditionalDictionary {
    /// Loads `dep1,...,depk,value,weight` rows (no header). Rows whose
    /// dependency columns are all `*` form the fallback dictionary, which
    /// must be present.
    pub fn read_csv(path: &Path) -> Result<Self, GenError> {
        let bad = |reason: String| GenError::BadFile { path: path.to_path_buf(), reason };
        let rows = read_csv_rows(path, 0)?;
        let Some((_, first)) = rows.first() else {
            return Err(bad("conditional dictionary is empty".into()));
        };
        if first.len() < 3 {
            return Err(bad(format!(
                "rows need at least 3 columns (dep..., value, weight), got {}",
                first.len()
            )));
        }
        let arity = first.len() - 2;
        let mut grouped: HashMap<Vec<String>, Vec<(String, f64)>> = HashMap::new();
        let mut fallback_entries = Vec::new();
        for (row, fields) in &rows {
            if fields.len() != arity + 2 {
                return Err(bad(format!(
                    "row {row}: expected {} columns, got {}",
                    arity + 2,
                    fields.len()
                )));
            }
            let key: Vec<String> = fields[..arity].to_vec();
            let value = fields[arity].clone();
            let weight: f64 = fields[arity + 1]
                .parse()
                .map_err(|_| bad(format!("row {row}: bad weight {:?}", fields[arity + 1])))?;
            if key.iter().all(|k| k == "*") {
                fallback_entries.push((value, weight));
            } else {
                grouped.entry(key).or_default().push((value, weight));
            }
        }
        if fallback_entries.is_empty() {
            return Err(bad(
                "no fallback rows: add rows with `*` in every dependency column".into(),
            ));
        }
        let fallback = WeightedDictionary::new(fallback_entries)?;
        let cases = grouped
            .into_iter()
            .map(|(k, entries)| Ok((k, WeightedDictionary::new(entries)?)))
            .collect::<Result<HashMap<_, _>, GenError>>()?;
        Ok(Self { arity, cases, fallback })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Samples the dictionary for the tuple, or the fallback when the tuple
    /// is unseen. The flag reports fallback use.
    pub fn sample(&self, key: &[String], u: f64) -> (&str, bool) {
        match self.cases.get(key) {
            Some(dict) => (dict.sample(u), false),
            None => (self.fallback.sample(u), true),
        }
    }
}

/// Headerless CSV rows; `expect_cols` of 0 skips the column-count check.
fn read_csv_rows(path: &Path, expect_cols: usize) -> Result<Vec<(u64, Vec<String>)>, GenError> {
    let file = File::open(path)
        .map_err(|e| GenError::Io { path: path.to_path_buf(), source: e })?;
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i as u64 + 1;
        let record = record.map_err(|e| GenError::BadFile {
            path: path.to_path_buf(),
            reason: format!("row {row}: {e}"),
        })?;
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if expect_cols != 0 && fields.len() != expect_cols {
            return Err(GenError::BadFile {
                path: path.to_path_buf(),
                reason: format!("row {row}: expected {expect_cols} columns, got {}", fields.len()),
            });
        }
        rows.push((row, fields));
    }
    Ok(rows)
}
