//! Property generators: pluggable objects producing one property value per
//! id from a skip-ahead random draw and optional dependency values.
//!
//! A generator is initialized once from its schema binding and is immutable
//! afterwards; `run` is a pure function of `(id, draw, deps)`. This is what
//! makes in-place regeneration possible: any single value can be recomputed
//! from its id alone, on any worker, by replaying the dependency chain's
//! `run` calls at the same id.

mod builtins;
mod dictionary;
mod evaluate;

use std::path::{Path, PathBuf};

pub use builtins::register_builtins;
pub use dictionary::{sample_inverse_transform, ConditionalDictionary, WeightedDictionary};
pub use evaluate::{EdgePropertyEvaluators, NodePropertyEvaluators};

use crate::params::ParamError;
use crate::schema::Param;
use crate::store::{Value, ValueType};

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("generator `{generator}`: {source}")]
    Param { generator: String, source: ParamError },
    #[error("{path}: {reason}")]
    BadFile { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("generator `{generator}` expects {expected} dependency values, got {got}")]
    DepArity { generator: String, expected: usize, got: usize },
    #[error("generator `{generator}` expected a {expected} dependency, got {actual}")]
    DepType { generator: String, expected: ValueType, actual: ValueType },
    #[error("generator `{generator}` cannot produce `{declared}` values")]
    OutputType { generator: String, declared: ValueType },
    #[error("conditional dictionary has no entry for {key:?} and no fallback")]
    NoFallback { key: Vec<String> },
    #[error("unknown property generator `{0}`")]
    UnknownGenerator(String),
    #[error("{0}")]
    Invalid(String),
}

/// A property generator instance: immutable after initialization, pure in
/// `run`.
pub trait PropertyGenerator: Send + Sync {
    /// Number of dependency values `run` expects.
    fn dependency_arity(&self) -> usize;

    /// The value type `run` produces.
    fn output_type(&self) -> ValueType;

    fn run(&self, id: u64, draw: u64, deps: &[Value]) -> Result<Value, GenError>;

    /// How many draws fell back to the catch-all dictionary (conditional
    /// generators only); surfaced in the generation report.
    fn fallback_uses(&self) -> u64 {
        0
    }
}

/// Checked entry point: verifies the dependency arity before delegating.
pub fn run_generator(
    name: &str,
    generator: &dyn PropertyGenerator,
    id: u64,
    draw: u64,
    deps: &[Value],
) -> Result<Value, GenError> {
    if deps.len() != generator.dependency_arity() {
        return Err(GenError::DepArity {
            generator: name.to_string(),
            expected: generator.dependency_arity(),
            got: deps.len(),
        });
    }
    generator.run(id, draw, deps)
}

/// Everything a factory needs to build a generator instance from its
/// schema binding.
pub struct PropFactoryContext<'a> {
    pub params: &'a [Param],
    /// Directory file parameters resolve against (the schema's directory).
    pub base_dir: &'a Path,
    /// The declared value type of the property being bound.
    pub declared: ValueType,
    /// Value types of the dependency properties, in `correlated(...)` order.
    pub dep_types: &'a [ValueType],
}

/// Builds [`PropertyGenerator`] instances for one registered name.
pub trait PropertyGeneratorFactory: Send + Sync {
    fn name(&self) -> &'static str;
    fn create(&self, ctx: &PropFactoryContext<'_>) -> Result<Box<dyn PropertyGenerator>, GenError>;
}

pub(crate) fn param_err(generator: &str, source: ParamError) -> GenError {
    GenError::Param { generator: generator.to_string(), source }
}
