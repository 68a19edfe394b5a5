//! Planted-partition graphs: community structure with a controlled mixing
//! factor, exposing the headline LFR knobs (average/maximum degree,
//! community size range, mixing).
//!
//! Nodes draw a Poisson degree clamped to `[1, max_degree]`; a fraction
//! `1 - mixing` of it is intra-community demand, the rest pairs globally
//! through edge stubs. Nodes are placed into communities large enough for
//! their intra demand (largest demand first), mirroring how LFR assigns
//! nodes to communities that can host them. Intra-community edges are
//! sampled pairwise with probability proportional to the endpoint demands
//! (Chung-Lu within the block); communities are dense enough here that
//! stub pairing would lose a large fraction of edges to duplicates.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use super::{param_err, StructFactoryContext, StructGenError, StructureGenerator, StructureGeneratorFactory};
use crate::params::ParamReader;
use crate::rng::RandomStream;
use crate::store::EdgeTable;

pub struct PlantedPartitionGenerator {
    avg_degree: f64,
    max_degree: u64,
    min_comm: u64,
    max_comm: u64,
    mixing: f64,
    stream: RandomStream,
}

impl PlantedPartitionGenerator {
    pub fn new(
        avg_degree: f64,
        max_degree: u64,
        min_comm: u64,
        max_comm: u64,
        mixing: f64,
        stream: RandomStream,
    ) -> Result<Self, StructGenError> {
        if !(0.0..=1.0).contains(&mixing) {
            return Err(StructGenError::Invalid(format!("mixing must be in [0, 1], got {mixing}")));
        }
        if avg_degree <= 0.0 || max_degree == 0 {
            return Err(StructGenError::Invalid("degrees must be positive".into()));
        }
        if min_comm > max_comm || min_comm == 0 {
            return Err(StructGenError::Invalid(format!(
                "need 1 <= min_comm <= max_comm, got {min_comm}..{max_comm}"
            )));
        }
        Ok(Self { avg_degree, max_degree, min_comm, max_comm, mixing, stream })
    }

    fn substream(&self, phase: &str) -> RandomStream {
        RandomStream::derive(self.stream.derived_seed(), phase)
    }

    /// Community sizes drawn uniformly in `[min_comm, max_comm]`; the last
    /// community is truncated to land exactly on `n`.
    fn community_sizes(&self, n: u64) -> Vec<u64> {
        let stream = self.substream("sizes");
        let span = self.max_comm - self.min_comm + 1;
        let mut sizes = Vec::new();
        let mut total = 0u64;
        let mut ctr = 0u64;
        while total < n {
            let s = (self.min_comm + stream.bounded_at(ctr, span)).min(n - total);
            ctr += 1;
            sizes.push(s);
            total += s;
        }
        sizes
    }

    fn degrees(&self, n: u64) -> Vec<u64> {
        let stream = self.substream("degrees");
        (0..n)
            .map(|v| sample_poisson(self.avg_degree, stream.unit_at(v), self.max_degree).max(1))
            .collect()
    }

    /// Assigns nodes to communities, largest intra demand first, always
    /// into the roomiest community that can host the demand.
    fn assign_communities(
        &self,
        sizes: &[u64],
        int_deg: &mut [u64],
    ) -> Result<Vec<u32>, StructGenError> {
        let n = int_deg.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| (Reverse(int_deg[v]), v));

        // Communities sorted by size, admitted to the heap when the current
        // node's demand fits; stale heap entries are discarded lazily.
        let mut by_size: Vec<(u64, usize)> =
            sizes.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        by_size.sort_by_key(|&(s, i)| (Reverse(s), i));
        let mut free: Vec<u64> = sizes.to_vec();
        let mut heap: BinaryHeap<(u64, Reverse<usize>)> = BinaryHeap::new();
        let mut admitted = 0usize;
        let mut assignment = vec![0u32; n];

        for &v in &order {
            while admitted < by_size.len() && by_size[admitted].0 >= int_deg[v] + 1 {
                let (size, idx) = by_size[admitted];
                heap.push((size, Reverse(idx)));
                admitted += 1;
            }
            while let Some(&(f, Reverse(idx))) = heap.peek() {
                if f != free[idx] || f == 0 {
                    heap.pop();
                } else {
                    break;
                }
            }
            let idx = match heap.pop() {
                Some((_, Reverse(idx))) => idx,
                None => {
                    if admitted == 0 {
                        let (size, idx) = by_size[0];
                        return Err(StructGenError::InfeasibleCommunity {
                            community: idx,
                            demand: int_deg[v],
                            size,
                        });
                    }
                    // Every community large enough is full: spill into the
                    // largest one with room and clamp the excess demand.
                    let &(size, idx) = by_size
                        .iter()
                        .find(|&&(_, i)| free[i] > 0)
                        .expect("community capacities sum to n");
                    int_deg[v] = int_deg[v].min(size.saturating_sub(1));
                    idx
                }
            };
            free[idx] -= 1;
            if free[idx] > 0 {
                heap.push((free[idx], Reverse(idx)));
            }
            assignment[v] = idx as u32;
        }
        Ok(assignment)
    }

    /// Generates the edge table along with the community label of every
    /// node, which tests and experiments use as planted ground truth.
    pub fn run_with_communities(&self, n: u64) -> Result<(EdgeTable, Vec<u32>), StructGenError> {
        if n == 0 {
            return Ok((EdgeTable::new("planted"), Vec::new()));
        }
        let sizes = self.community_sizes(n);
        let degrees = self.degrees(n);
        let mut int_deg: Vec<u64> =
            degrees.iter().map(|&d| ((1.0 - self.mixing) * d as f64).round() as u64).collect();
        let ext_deg: Vec<u64> = degrees.iter().zip(&int_deg).map(|(&d, &i)| d - i).collect();
        let comm_of = self.assign_communities(&sizes, &mut int_deg)?;

        let mut members: Vec<Vec<u64>> = vec![Vec::new(); sizes.len()];
        for v in 0..n {
            members[comm_of[v as usize] as usize].push(v);
        }

        // Intra edges: each pair (u, v) of a community appears with
        // probability ~ int_u * int_v / total, matching the demands in
        // expectation with no duplicates.
        let mut edges: Vec<(u64, u64)> = Vec::new();
        let intra_stream = self.substream("intra");
        let mut ctr = 0u64;
        for comm in &members {
            let total: u64 = comm.iter().map(|&v| int_deg[v as usize]).sum();
            if total == 0 {
                continue;
            }
            for (i, &u) in comm.iter().enumerate() {
                let du = int_deg[u as usize] as f64;
                for &v in &comm[i + 1..] {
                    let p = du * int_deg[v as usize] as f64 / total as f64;
                    let draw = intra_stream.unit_at(ctr);
                    ctr += 1;
                    if draw < p {
                        edges.push((u, v));
                    }
                }
            }
        }

        // Inter edges: the external stubs pair off globally.
        let ext_stream = self.substream("ext");
        let mut stubs: Vec<u64> = Vec::new();
        for v in 0..n {
            stubs.extend(std::iter::repeat(v).take(ext_deg[v as usize] as usize));
        }
        let mut ctr = 0u64;
        shuffle(&mut stubs, &ext_stream, &mut ctr);
        for pair in stubs.chunks_exact(2) {
            if pair[0] != pair[1] {
                edges.push((pair[0], pair[1]));
            }
        }

        // Undirected dedup, keeping first occurrences in emission order.
        let mut seen: HashSet<(u64, u64)> = HashSet::with_capacity(edges.len());
        edges.retain(|&(a, b)| seen.insert((a.min(b), a.max(b))));

        Ok((EdgeTable::from_edges("planted", edges), comm_of))
    }
}

impl StructureGenerator for PlantedPartitionGenerator {
    fn run(&self, n: u64) -> Result<EdgeTable, StructGenError> {
        self.run_with_communities(n).map(|(et, _)| et)
    }

    fn num_nodes_for_edges(&self, m: u64) -> Result<u64, StructGenError> {
        // Every node contributes ~avg_degree stubs, two stubs per edge.
        Ok((2.0 * m as f64 / self.avg_degree).ceil() as u64)
    }
}

fn shuffle(items: &mut [u64], stream: &RandomStream, ctr: &mut u64) {
    for i in (1..items.len()).rev() {
        let j = stream.bounded_at(*ctr, i as u64 + 1) as usize;
        *ctr += 1;
        items.swap(i, j);
    }
}

/// Inverse-transform Poisson sample, capped (the caller clamps anyway).
fn sample_poisson(lambda: f64, u: f64, cap: u64) -> u64 {
    let mut p = (-lambda).exp();
    let mut cum = p;
    let mut k = 0u64;
    while u >= cum && k < cap {
        k += 1;
        p *= lambda / k as f64;
        cum += p;
    }
    k
}

pub struct PlantedFactory;

impl StructureGeneratorFactory for PlantedFactory {
    fn name(&self) -> &'static str {
        "planted"
    }

    fn create(
        &self,
        ctx: &StructFactoryContext<'_>,
    ) -> Result<Box<dyn StructureGenerator>, StructGenError> {
        let mut r = ParamReader::new(ctx.params);
        let avg_degree = r.f64("avg_degree").map_err(|e| param_err(self.name(), e))?.unwrap_or(20.0);
        let max_degree = r.u64("max_degree").map_err(|e| param_err(self.name(), e))?.unwrap_or(50);
        let min_comm = r.u64("min_comm").map_err(|e| param_err(self.name(), e))?.unwrap_or(10);
        let max_comm = r.u64("max_comm").map_err(|e| param_err(self.name(), e))?.unwrap_or(50);
        let mixing = r.f64("mixing").map_err(|e| param_err(self.name(), e))?.unwrap_or(0.1);
        r.finish().map_err(|e| param_err(self.name(), e))?;
        Ok(Box::new(PlantedPartitionGenerator::new(
            avg_degree, max_degree, min_comm, max_comm, mixing, ctx.stream,
        )?))
    }
}
