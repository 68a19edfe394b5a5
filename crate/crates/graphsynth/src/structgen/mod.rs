//! Structure generators: pluggable objects that produce the edge table of
//! one edge type for a given node count, and can invert that relation to
//! size a graph from a desired edge count.

mod degree_driven;
mod planted;
mod rmat;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

pub use degree_driven::DegreeDrivenGenerator;
pub use planted::PlantedPartitionGenerator;
pub use rmat::RmatGenerator;

use crate::params::ParamError;
use crate::rng::RandomStream;
use crate::schema::Param;
use crate::store::EdgeTable;

#[derive(Debug, thiserror::Error)]
pub enum StructGenError {
    #[error("generator `{generator}`: {source}")]
    Param { generator: String, source: ParamError },
    #[error("{path}: {reason}")]
    BadFile { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("quadrant probabilities must sum to 1 (got {0})")]
    ProbabilitySum(f64),
    #[error("rmat needs a power-of-two node count, got {0}")]
    NotPowerOfTwo(u64),
    #[error("degree probabilities must sum to 1 (got {0})")]
    DegreeSum(f64),
    #[error("cannot size the graph: mean degree is zero")]
    ZeroMeanDegree,
    #[error(
        "infeasible parameters: node demands {demand} intra-community neighbors but the largest \
         community (index {community}) has {size} members"
    )]
    InfeasibleCommunity { community: usize, demand: u64, size: u64 },
    #[error("unknown structure generator `{0}`")]
    UnknownGenerator(String),
    #[error("{0}")]
    Invalid(String),
}

/// A structure generator instance. `run` is deterministic given the
/// parameters and the seed it was created with; worker count never changes
/// the result.
pub trait StructureGenerator: Send + Sync {
    /// Generates the edge table for a graph of `n` nodes; tail and head
    /// ids range over `0..n` (one-to-many generators allocate fresh dense
    /// head ids instead, see [`DegreeDrivenGenerator`]). Whether the edge
    /// count is exact or stochastic depends on the generator.
    fn run(&self, n: u64) -> Result<EdgeTable, StructGenError>;

    /// Smallest `n` whose expected `|run(n)|` reaches `m` edges.
    fn num_nodes_for_edges(&self, m: u64) -> Result<u64, StructGenError>;

    /// Head ids of a one-to-many generator are fresh ids `0..m`; the head
    /// node type's instance count equals the edge count.
    fn heads_are_fresh(&self) -> bool {
        false
    }
}

/// A degree distribution over a finite support, loaded from
/// `degree,probability` CSV rows.
#[derive(Debug, Clone)]
pub struct DegreeDistribution {
    support: Vec<(u64, f64)>,
    cumulative: Vec<f64>,
    mean: f64,
}

impl DegreeDistribution {
    pub fn new(support: Vec<(u64, f64)>) -> Result<Self, StructGenError> {
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(StructGenError::DegreeSum(total));
        }
        if support.iter().any(|(_, p)| *p < 0.0) {
            return Err(StructGenError::Invalid("negative degree probability".into()));
        }
        let mut running = 0.0;
        let cumulative = support
            .iter()
            .map(|(_, p)| {
                running += p;
                running / total
            })
            .collect();
        let mean = support.iter().map(|(d, p)| *d as f64 * p).sum();
        Ok(Self { support, cumulative, mean })
    }

    pub fn read_csv(path: &Path) -> Result<Self, StructGenError> {
        let bad = |reason: String| StructGenError::BadFile { path: path.to_path_buf(), reason };
        let file =
            File::open(path).map_err(|e| StructGenError::Io { path: path.to_path_buf(), source: e })?;
        let mut reader =
            csv::ReaderBuilder::new().has_headers(false).from_reader(BufReader::new(file));
        let mut support = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| bad(format!("row {row}: {e}")))?;
            if record.len() != 2 {
                return Err(bad(format!("row {row}: expected `degree,probability`")));
            }
            let degree: u64 =
                record[0].parse().map_err(|_| bad(format!("row {row}: bad degree")))?;
            let prob: f64 =
                record[1].parse().map_err(|_| bad(format!("row {row}: bad probability")))?;
            support.push((degree, prob));
        }
        Self::new(support)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn support(&self) -> &[(u64, f64)] {
        &self.support
    }

    /// Inverse transform: first degree whose cumulative probability
    /// strictly exceeds `u`.
    pub fn sample(&self, u: f64) -> u64 {
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.support.len() - 1);
        self.support[idx].0
    }
}

/// Seed material handed to a structure generator factory.
pub struct StructFactoryContext<'a> {
    pub params: &'a [Param],
    pub base_dir: &'a Path,
    pub stream: RandomStream,
}

pub trait StructureGeneratorFactory: Send + Sync {
    fn name(&self) -> &'static str;
    fn create(
        &self,
        ctx: &StructFactoryContext<'_>,
    ) -> Result<Box<dyn StructureGenerator>, StructGenError>;
}

pub(crate) fn param_err(generator: &str, source: ParamError) -> StructGenError {
    StructGenError::Param { generator: generator.to_string(), source }
}

/// All built-in structure generator factories.
pub fn register_builtins() -> Vec<Box<dyn StructureGeneratorFactory>> {
    vec![
        Box::new(rmat::RmatFactory),
        Box::new(planted::PlantedFactory),
        Box::new(degree_driven::DegreeFactory),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_distribution_samples_by_inverse_transform() {
        let d = DegreeDistribution::new(vec![(1, 0.5), (4, 0.5)]).unwrap();
        assert_eq!(d.sample(0.25), 1);
        assert_eq!(d.sample(0.5), 4); // strictly-exceed boundary
        assert!((d.mean() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn degree_probabilities_must_sum_to_one() {
        assert!(matches!(
            DegreeDistribution::new(vec![(1, 0.4)]),
            Err(StructGenError::DegreeSum(_))
        ));
    }
}
