//! Degree-driven edges for one-to-many cardinality.
//!
//! Each tail node draws its out-degree from the configured distribution via
//! inverse transform on its own skip-ahead draw. Heads are fresh dense ids
//! `0..m`, so every head has exactly one incoming edge and the head node
//! type's instance count is the edge count.

use rayon::prelude::*;

use super::{
    param_err, DegreeDistribution, StructFactoryContext, StructGenError, StructureGenerator,
    StructureGeneratorFactory,
};
use crate::params::ParamReader;
use crate::rng::RandomStream;
use crate::store::EdgeTable;

pub struct DegreeDrivenGenerator {
    dist: DegreeDistribution,
    stream: RandomStream,
}

impl DegreeDrivenGenerator {
    pub fn new(dist: DegreeDistribution, stream: RandomStream) -> Self {
        Self { dist, stream }
    }

    pub fn distribution(&self) -> &DegreeDistribution {
        &self.dist
    }
}

impl StructureGenerator for DegreeDrivenGenerator {
    fn run(&self, n_tail: u64) -> Result<EdgeTable, StructGenError> {
        let degrees: Vec<u64> =
            (0..n_tail).into_par_iter().map(|t| self.dist.sample(self.stream.unit_at(t))).collect();
        let m: u64 = degrees.iter().sum();
        let mut edges = Vec::with_capacity(m as usize);
        let mut next_head = 0u64;
        for (tail, &deg) in degrees.iter().enumerate() {
            for _ in 0..deg {
                edges.push((tail as u64, next_head));
                next_head += 1;
            }
        }
        Ok(EdgeTable::from_edges("degree", edges))
    }

    fn num_nodes_for_edges(&self, m: u64) -> Result<u64, StructGenError> {
        let mean = self.dist.mean();
        if mean <= 0.0 {
            return Err(StructGenError::ZeroMeanDegree);
        }
        Ok((m as f64 / mean).ceil() as u64)
    }

    fn heads_are_fresh(&self) -> bool {
        true
    }
}

pub struct DegreeFactory;

impl StructureGeneratorFactory for DegreeFactory {
    fn name(&self) -> &'static str {
        "degree"
    }

    fn create(
        &self,
        ctx: &StructFactoryContext<'_>,
    ) -> Result<Box<dyn StructureGenerator>, StructGenError> {
        let mut r = ParamReader::new(ctx.params);
        let path = r.require_path("file", ctx.base_dir).map_err(|e| param_err(self.name(), e))?;
        r.finish().map_err(|e| param_err(self.name(), e))?;
        Ok(Box::new(DegreeDrivenGenerator::new(DegreeDistribution::read_csv(&path)?, ctx.stream)))
    }
}
