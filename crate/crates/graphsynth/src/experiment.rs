//! Matching-quality experiment harness.
//!
//! A graph is generated, partitioned into k geometrically-sized groups with
//! the LDG baseline, and each group is treated as one property value. The
//! joint distribution measured on that labeling becomes the matching
//! target: a fresh property table with those value frequencies is matched
//! back onto the same graph with SBM-Part (random node arrival order), and
//! the report compares the requested and achieved distributions.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::matcher::{
    build_mapping, build_target_matrix, cdf_report, distribution_distance, empirical_joint,
    sbm_part_with_rule, CapacityRule, CdfReport, GroupSizes, MatchError, TargetMode,
};
use crate::rng::{seeded_permutation, RandomStream};
use crate::store::{PropertyTable, StoreError, Value, ValueType};
use crate::structgen::{
    PlantedPartitionGenerator, RmatGenerator, StructGenError, StructureGenerator,
};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Struct(#[from] StructGenError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Which graph the experiment partitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExperimentGraph {
    /// Planted-partition graph of `nodes` nodes (average degree 20, max 50,
    /// communities of 10..50) with the given mixing factor.
    Planted { nodes: u64, mixing: f64 },
    /// R-MAT graph of `2^scale` nodes with the default parameters.
    Rmat { scale: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: ExperimentGraph,
    /// Number of distinct property values (groups).
    pub values: usize,
    /// Parameter of the geometric group-size profile.
    pub geo_p: f64,
    pub seed: u64,
    /// Capacity-balancing variant of the partitioner.
    pub capacity_rule: CapacityRule,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.values == 0 {
            return Err(ExperimentError::Config("need at least one value".into()));
        }
        if !(0.0..1.0).contains(&self.geo_p) || self.geo_p <= 0.0 {
            return Err(ExperimentError::Config(format!(
                "geometric parameter must be in (0, 1), got {}",
                self.geo_p
            )));
        }
        let n = match self.graph {
            ExperimentGraph::Planted { nodes, .. } => nodes,
            ExperimentGraph::Rmat { scale } => {
                if scale == 0 || scale > 40 {
                    return Err(ExperimentError::Config(format!("bad rmat scale {scale}")));
                }
                1u64 << scale
            }
        };
        if n < self.values as u64 {
            return Err(ExperimentError::Config(format!(
                "graph size {n} is smaller than the value count {}",
                self.values
            )));
        }
        Ok(())
    }
}

/// Group sizes proportional to `max(geo(p, i), 1/k)` with `geo(p, i) =
/// p (1-p)^(i-1)` for i = 1..k, rounded by largest remainder so they sum
/// to `n` exactly.
pub fn geometric_group_sizes(n: u64, k: usize, p: f64) -> Vec<u64> {
    let raw: Vec<f64> =
        (1..=k).map(|i| (p * (1.0 - p).powi(i as i32 - 1)).max(1.0 / k as f64)).collect();
    let total: f64 = raw.iter().sum();
    let target: Vec<f64> = raw.iter().map(|r| n as f64 * r / total).collect();
    let mut sizes: Vec<u64> = target.iter().map(|t| t.floor() as u64).collect();
    let assigned: u64 = sizes.iter().sum();
    let mut remainders: Vec<(usize, f64)> =
        target.iter().enumerate().map(|(i, t)| (i, t - t.floor())).collect();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for &(i, _) in remainders.iter().take((n - assigned) as usize) {
        sizes[i] += 1;
    }
    sizes
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub n: u64,
    pub m: u64,
    pub k: usize,
    pub l1_distance: f64,
    pub seconds: f64,
    #[serde(skip)]
    pub cdf: CdfReport,
    #[serde(skip)]
    pub group_sizes: Vec<u64>,
}

impl ExperimentReport {
    pub fn write_json(&self, path: &Path) -> Result<(), ExperimentError> {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| StoreError::Io { path: path.to_path_buf(), source: e })?;
        Ok(())
    }

    pub fn write_cdf_csv(&self, path: &Path) -> Result<(), ExperimentError> {
        Ok(self.cdf.write_csv(path)?)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let started = Instant::now();

    let graph_stream = RandomStream::derive(cfg.seed, "experiment.graph");
    let (et, n) = match cfg.graph {
        ExperimentGraph::Planted { nodes, mixing } => {
            let generator =
                PlantedPartitionGenerator::new(20.0, 50, 10, 50, mixing, graph_stream)?;
            (generator.run(nodes)?, nodes)
        }
        ExperimentGraph::Rmat { scale } => {
            let n = 1u64 << scale;
            (RmatGenerator::with_defaults(graph_stream).run(n)?, n)
        }
    };
    let m = et.len();
    let k = cfg.values;
    let vocab: Vec<String> = (0..k).map(|i| i.to_string()).collect();

    // Plant the ground truth: LDG with geometric capacities labels the
    // nodes, and the labeling defines the joint distribution to reproduce.
    let sizes = geometric_group_sizes(n, k, cfg.geo_p);
    let natural: Vec<u64> = (0..n).collect();
    let planted = crate::matcher::ldg_partition(&et, n, &sizes, &natural)?;
    let expected = empirical_joint(&et, planted.labels(), &vocab)?;

    // A property table with value i on exactly size_i rows.
    let mut values = Vec::with_capacity(n as usize);
    for (i, &size) in sizes.iter().enumerate() {
        values.extend(std::iter::repeat(Value::Str(i.to_string())).take(size as usize));
    }
    let pt = PropertyTable::from_values("experiment.value", ValueType::Str, values)
        .expect("uniform string table");

    let q = GroupSizes(sizes.clone());
    let w = build_target_matrix(&expected, m, &q, TargetMode::Counts)?;
    let order_stream = RandomStream::derive(cfg.seed, "experiment.order");
    let order = seeded_permutation(&order_stream, n);
    let state = sbm_part_with_rule(&et, &q, &w, &order, cfg.capacity_rule)?;

    let observed = empirical_joint(&et, state.labels(), &vocab)?;
    let l1_distance = distribution_distance(&expected, &observed)?;
    let cdf = cdf_report(&expected, &observed)?;

    // The mapping is what a real pipeline would apply; building it also
    // re-checks that the group fills match the table frequencies.
    let _ = build_mapping(&state, &pt, &vocab)?;

    Ok(ExperimentReport {
        n,
        m,
        k,
        l1_distance,
        seconds: started.elapsed().as_secs_f64(),
        cdf,
        group_sizes: sizes,
    })
}
