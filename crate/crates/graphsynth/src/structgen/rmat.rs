//! Recursive-matrix (R-MAT) edge generation.
//!
//! Each edge picks one of the four adjacency-matrix quadrants per recursion
//! level with probabilities (a, b, c, d), accumulating one tail bit and one
//! head bit per level. Draw indices are keyed by edge id, so any edge can
//! be regenerated independently and generation parallelizes over edge-id
//! ranges.

use rayon::prelude::*;

use super::{param_err, StructFactoryContext, StructGenError, StructureGenerator, StructureGeneratorFactory};
use crate::params::ParamReader;
use crate::rng::RandomStream;
use crate::store::EdgeTable;

pub const DEFAULT_A: f64 = 0.57;
pub const DEFAULT_B: f64 = 0.19;
pub const DEFAULT_C: f64 = 0.19;
pub const DEFAULT_D: f64 = 0.05;
pub const DEFAULT_EDGE_FACTOR: u64 = 16;

pub struct RmatGenerator {
    a: f64,
    ab: f64,
    abc: f64,
    edge_factor: u64,
    dedup: bool,
    stream: RandomStream,
}

impl RmatGenerator {
    pub fn new(
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        edge_factor: u64,
        dedup: bool,
        stream: RandomStream,
    ) -> Result<Self, StructGenError> {
        let sum = a + b + c + d;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(StructGenError::ProbabilitySum(sum));
        }
        if [a, b, c, d].iter().any(|p| *p < 0.0) || edge_factor == 0 {
            return Err(StructGenError::Invalid("rmat parameters must be non-negative".into()));
        }
        Ok(Self { a, ab: a + b, abc: a + b + c, edge_factor, dedup, stream })
    }

    pub fn with_defaults(stream: RandomStream) -> Self {
        Self::new(DEFAULT_A, DEFAULT_B, DEFAULT_C, DEFAULT_D, DEFAULT_EDGE_FACTOR, false, stream)
            .expect("defaults sum to 1")
    }

    fn place_edge(&self, scale: u32, edge_id: u64) -> (u64, u64) {
        let mut tail = 0u64;
        let mut head = 0u64;
        for level in 0..scale {
            let u = self.stream.unit_at(edge_id * u64::from(scale) + u64::from(level));
            let (tail_bit, head_bit) = if u < self.a {
                (0, 0)
            } else if u < self.ab {
                (0, 1)
            } else if u < self.abc {
                (1, 0)
            } else {
                (1, 1)
            };
            tail = (tail << 1) | tail_bit;
            head = (head << 1) | head_bit;
        }
        (tail, head)
    }
}

impl StructureGenerator for RmatGenerator {
    fn run(&self, n: u64) -> Result<EdgeTable, StructGenError> {
        if n < 2 || !n.is_power_of_two() {
            return Err(StructGenError::NotPowerOfTwo(n));
        }
        let scale = n.trailing_zeros();
        let m = n * self.edge_factor;
        let mut edges: Vec<(u64, u64)> =
            (0..m).into_par_iter().map(|e| self.place_edge(scale, e)).collect();
        if self.dedup {
            edges.sort_unstable();
            edges.dedup();
        }
        Ok(EdgeTable::from_edges("rmat", edges))
    }

    fn num_nodes_for_edges(&self, m: u64) -> Result<u64, StructGenError> {
        let blocks = m.div_ceil(self.edge_factor).max(2);
        Ok(blocks.next_power_of_two())
    }
}

pub struct RmatFactory;

impl StructureGeneratorFactory for RmatFactory {
    fn name(&self) -> &'static str {
        "rmat"
    }

    fn create(
        &self,
        ctx: &StructFactoryContext<'_>,
    ) -> Result<Box<dyn StructureGenerator>, StructGenError> {
        let mut r = ParamReader::new(ctx.params);
        let a = r.f64("a").map_err(|e| param_err(self.name(), e))?.unwrap_or(DEFAULT_A);
        let b = r.f64("b").map_err(|e| param_err(self.name(), e))?.unwrap_or(DEFAULT_B);
        let c = r.f64("c").map_err(|e| param_err(self.name(), e))?.unwrap_or(DEFAULT_C);
        let d = r.f64("d").map_err(|e| param_err(self.name(), e))?.unwrap_or(DEFAULT_D);
        let edge_factor = r
            .u64("edge_factor")
            .map_err(|e| param_err(self.name(), e))?
            .unwrap_or(DEFAULT_EDGE_FACTOR);
        let dedup = r.bool("dedup").map_err(|e| param_err(self.name(), e))?.unwrap_or(false);
        r.finish().map_err(|e| param_err(self.name(), e))?;
        Ok(Box::new(RmatGenerator::new(a, b, c, d, edge_factor, dedup, ctx.stream)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream() -> RandomStream {
        RandomStream::derive(42, "rmat.test")
    }

    #[test]
    fn edge_count_is_n_times_edge_factor() {
        let g = RmatGenerator::new(0.57, 0.19, 0.19, 0.05, 2, false, stream()).unwrap();
        let et = g.run(8).unwrap();
        assert_eq!(et.len(), 16);
        et.validate_endpoints(8, 8).unwrap();
    }

    #[test]
    fn degenerate_quadrant_pins_every_edge_to_origin() {
        let g = RmatGenerator::new(1.0, 0.0, 0.0, 0.0, 2, false, stream()).unwrap();
        let et = g.run(8).unwrap();
        assert!(et.iter().all(|(_, t, h)| t == 0 && h == 0));
    }

    #[test]
    fn probability_sum_is_checked() {
        assert!(matches!(
            RmatGenerator::new(0.5, 0.5, 0.5, 0.5, 16, false, stream()),
            Err(StructGenError::ProbabilitySum(_))
        ));
    }

    #[test]
    fn non_power_of_two_is_rejected() {
        let g = RmatGenerator::with_defaults(stream());
        assert!(matches!(g.run(100), Err(StructGenError::NotPowerOfTwo(100))));
    }

    #[test]
    fn runs_are_deterministic() {
        let g = RmatGenerator::with_defaults(stream());
        assert_eq!(g.run(64).unwrap(), g.run(64).unwrap());
    }

    #[test]
    fn default_parameters_give_heavy_tailed_in_degrees() {
        let g = RmatGenerator::with_defaults(stream());
        let n = 1u64 << 18;
        let et = g.run(n).unwrap();
        assert_eq!(et.len(), n * DEFAULT_EDGE_FACTOR);
        let mut in_deg = vec![0u64; n as usize];
        for (_, _, h) in et.iter() {
            in_deg[h as usize] += 1;
        }
        let mean = et.len() as f64 / n as f64;
        let max = *in_deg.iter().max().unwrap() as f64;
        assert!(max >= 50.0 * mean, "max in-degree {max} vs mean {mean}");
    }

    #[test]
    fn sizing_inverts_the_edge_factor() {
        let g = RmatGenerator::with_defaults(stream());
        assert_eq!(g.num_nodes_for_edges(1 << 22).unwrap(), 1 << 18);
        assert_eq!(g.num_nodes_for_edges(100).unwrap(), 8);
        assert_eq!(g.num_nodes_for_edges((1 << 22) + 1).unwrap(), 1 << 19);
        // run(num_nodes_for_edges(m)) rounds m up to the next power-of-two
        // multiple of the edge factor.
        let n = g.num_nodes_for_edges(100).unwrap();
        assert_eq!(g.run(n).unwrap().len(), 128);
    }

    #[test]
    fn dedup_removes_duplicates_and_keeps_ids_dense() {
        let g = RmatGenerator::new(1.0, 0.0, 0.0, 0.0, 4, true, stream()).unwrap();
        let et = g.run(4).unwrap();
        assert_eq!(et.len(), 1); // every raw edge was (0, 0)
        assert_eq!(et.edge(0), (0, 0));
    }
}
