//! Keyword/positional argument resolution for generator bindings.

use std::path::{Path, PathBuf};

use crate::schema::{Param, ParamValue};

#[derive(Debug, thiserror::Error)]
pub enum ParamError {
    #[error("missing required parameter `{0}`")]
    Missing(&'static str),
    #[error("parameter `{key}` expects {expected}, got {got}")]
    WrongType { key: String, expected: &'static str, got: String },
    #[error("unknown parameter `{0}`")]
    Unknown(String),
    #[error("parameter `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

/// Resolves a binding's arguments by key or by position. Positional
/// arguments fill the declared names in order; keyed arguments may appear
/// anywhere. `finish()` rejects leftovers so typos surface immediately.
pub struct ParamReader<'a> {
    params: &'a [Param],
    taken: Vec<bool>,
    next_positional: usize,
}

impl<'a> ParamReader<'a> {
    pub fn new(params: &'a [Param]) -> Self {
        Self { params, taken: vec![false; params.len()], next_positional: 0 }
    }

    fn take(&mut self, key: &'static str) -> Option<&'a ParamValue> {
        for (i, p) in self.params.iter().enumerate() {
            if !self.taken[i] && p.key.as_deref() == Some(key) {
                self.taken[i] = true;
                return Some(&p.value);
            }
        }
        // Fall back to the next unclaimed positional argument.
        for (i, p) in self.params.iter().enumerate().skip(self.next_positional) {
            if !self.taken[i] && p.key.is_none() {
                self.taken[i] = true;
                self.next_positional = i + 1;
                return Some(&p.value);
            }
        }
        None
    }

    pub fn text(&mut self, key: &'static str) -> Result<Option<String>, ParamError> {
        match self.take(key) {
            None => Ok(None),
            Some(ParamValue::Text(s)) => Ok(Some(s.clone())),
            Some(other) => Err(ParamError::WrongType {
                key: key.into(),
                expected: "text",
                got: other.to_string(),
            }),
        }
    }

    pub fn require_text(&mut self, key: &'static str) -> Result<String, ParamError> {
        self.text(key)?.ok_or(ParamError::Missing(key))
    }

    /// File parameter, resolved relative to `base` when not absolute.
    pub fn require_path(&mut self, key: &'static str, base: &Path) -> Result<PathBuf, ParamError> {
        let text = self.require_text(key)?;
        let p = PathBuf::from(text);
        Ok(if p.is_absolute() { p } else { base.join(p) })
    }

    pub fn i64(&mut self, key: &'static str) -> Result<Option<i64>, ParamError> {
        match self.take(key) {
            None => Ok(None),
            Some(ParamValue::Int(v)) => Ok(Some(*v)),
            Some(other) => Err(ParamError::WrongType {
                key: key.into(),
                expected: "integer",
                got: other.to_string(),
            }),
        }
    }

    pub fn u64(&mut self, key: &'static str) -> Result<Option<u64>, ParamError> {
        match self.i64(key)? {
            None => Ok(None),
            Some(v) if v >= 0 => Ok(Some(v as u64)),
            Some(v) => Err(ParamError::Invalid {
                key: key.into(),
                reason: format!("must be non-negative, got {v}"),
            }),
        }
    }

    pub fn f64(&mut self, key: &'static str) -> Result<Option<f64>, ParamError> {
        match self.take(key) {
            None => Ok(None),
            Some(ParamValue::Float(v)) => Ok(Some(*v)),
            Some(ParamValue::Int(v)) => Ok(Some(*v as f64)),
            Some(other) => Err(ParamError::WrongType {
                key: key.into(),
                expected: "number",
                got: other.to_string(),
            }),
        }
    }

    pub fn bool(&mut self, key: &'static str) -> Result<Option<bool>, ParamError> {
        match self.take(key) {
            None => Ok(None),
            Some(ParamValue::Text(s)) if s == "true" => Ok(Some(true)),
            Some(ParamValue::Text(s)) if s == "false" => Ok(Some(false)),
            Some(other) => Err(ParamError::WrongType {
                key: key.into(),
                expected: "`true` or `false`",
                got: other.to_string(),
            }),
        }
    }

    /// Fails on any argument no reader call claimed.
    pub fn finish(self) -> Result<(), ParamError> {
        for (i, p) in self.params.iter().enumerate() {
            if !self.taken[i] {
                let name = p.key.clone().unwrap_or_else(|| format!("positional #{}", i + 1));
                return Err(ParamError::Unknown(name));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Span;

    fn params(list: &[(Option<&str>, ParamValue)]) -> Vec<Param> {
        list.iter()
            .map(|(k, v)| Param {
                key: k.map(String::from),
                value: v.clone(),
                span: Span::default(),
            })
            .collect()
    }

    #[test]
    fn keyed_and_positional_resolution() {
        let p = params(&[
            (None, ParamValue::Int(1)),
            (Some("hi"), ParamValue::Int(9)),
        ]);
        let mut r = ParamReader::new(&p);
        assert_eq!(r.i64("lo").unwrap(), Some(1));
        assert_eq!(r.i64("hi").unwrap(), Some(9));
        r.finish().unwrap();
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let p = params(&[(Some("oops"), ParamValue::Int(1))]);
        let mut r = ParamReader::new(&p);
        assert_eq!(r.i64("lo").unwrap(), None);
        assert!(matches!(r.finish(), Err(ParamError::Unknown(k)) if k == "oops"));
    }

    #[test]
    fn paths_resolve_against_base() {
        let p = params(&[(None, ParamValue::Text("names.csv".into()))]);
        let mut r = ParamReader::new(&p);
        let path = r.require_path("file", Path::new("/data")).unwrap();
        assert_eq!(path, PathBuf::from("/data/names.csv"));
    }
}
