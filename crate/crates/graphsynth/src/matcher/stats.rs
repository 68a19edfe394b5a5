//! Measuring how well a matching reproduces the desired joint
//! distribution: the empirical joint over edge endpoints, the L1 distance,
//! and the expected-vs-observed CDF report.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use super::{pair_index, unordered_pair_count, BipartiteJoint, JointDistribution, MatchError};
use crate::store::EdgeTable;

/// The joint distribution actually observed on a labeled graph:
/// `P'({i,j})` is the fraction of edges whose endpoint values are `{i,j}`.
pub fn empirical_joint(
    et: &EdgeTable,
    labels: &[u32],
    values: &[String],
) -> Result<JointDistribution, MatchError> {
    let m = et.len();
    if m == 0 {
        return Err(MatchError::EmptyEdgeTable);
    }
    let k = values.len();
    let n = labels.len() as u64;
    let pairs = unordered_pair_count(k);
    let edges: Vec<(u64, u64)> = et.iter().map(|(_, t, h)| (t, h)).collect();
    let counts = edges
        .par_chunks(64 * 1024)
        .map(|chunk| {
            let mut counts = vec![0u64; pairs];
            for &(a, b) in chunk {
                assert!(a < n && b < n, "edge endpoint outside the labeled node range");
                counts[pair_index(k, labels[a as usize] as usize, labels[b as usize] as usize)] +=
                    1;
            }
            counts
        })
        .reduce(
            || vec![0u64; pairs],
            |mut acc, part| {
                for (a, p) in acc.iter_mut().zip(part) {
                    *a += p;
                }
                acc
            },
        );
    let triples: Vec<(usize, usize, f64)> = (0..k)
        .flat_map(|i| (i..k).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, counts[pair_index(k, i, j)] as f64 / m as f64))
        .collect();
    JointDistribution::from_pairs(values.to_vec(), &triples, 1e-9)
}

/// The ordered joint distribution observed on a labeled bipartite graph.
pub fn empirical_bipartite(
    et: &EdgeTable,
    tail_labels: &[u32],
    head_labels: &[u32],
    tail_values: &[String],
    head_values: &[String],
) -> Result<BipartiteJoint, MatchError> {
    let m = et.len();
    if m == 0 {
        return Err(MatchError::EmptyEdgeTable);
    }
    let (kt, kh) = (tail_values.len(), head_values.len());
    let mut counts = vec![0u64; kt * kh];
    for (_, t, h) in et.iter() {
        let x = tail_labels[t as usize] as usize;
        let y = head_labels[h as usize] as usize;
        counts[x * kh + y] += 1;
    }
    BipartiteJoint::from_matrix(
        tail_values.to_vec(),
        head_values.to_vec(),
        counts.into_iter().map(|c| c as f64 / m as f64).collect(),
        1e-9,
    )
}

/// L1 distance between two joint distributions over the same vocabulary
/// (sum of absolute differences over unordered pairs; 2 at most).
pub fn distribution_distance(p: &JointDistribution, q: &JointDistribution) -> Result<f64, MatchError> {
    if p.k() != q.k() || p.values() != q.values() {
        return Err(MatchError::DimensionMismatch("joints differ in vocabulary".into()));
    }
    Ok(p.iter_pairs().map(|(i, j, prob)| (prob - q.prob(i, j)).abs()).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfRow {
    pub rank: u32,
    pub value_x: String,
    pub value_y: String,
    pub expected_cdf: f64,
    pub observed_cdf: f64,
}

/// Expected-vs-observed CDFs over all unordered pairs, sorted by
/// decreasing expected probability (ties by pair index).
#[derive(Debug, Clone, PartialEq)]
pub struct CdfReport {
    pub rows: Vec<CdfRow>,
}

pub fn cdf_report(
    expected: &JointDistribution,
    observed: &JointDistribution,
) -> Result<CdfReport, MatchError> {
    if expected.k() != observed.k() || expected.values() != observed.values() {
        return Err(MatchError::DimensionMismatch("joints differ in vocabulary".into()));
    }
    let mut pairs: Vec<(usize, usize, f64)> = expected.iter_pairs().collect();
    pairs.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut exp_cum = 0.0;
    let mut obs_cum = 0.0;
    let rows = pairs
        .into_iter()
        .enumerate()
        .map(|(idx, (i, j, p))| {
            exp_cum += p;
            obs_cum += observed.prob(i, j);
            CdfRow {
                rank: idx as u32 + 1,
                value_x: expected.values()[i].clone(),
                value_y: expected.values()[j].clone(),
                expected_cdf: exp_cum,
                observed_cdf: obs_cum,
            }
        })
        .collect();
    Ok(CdfReport { rows })
}

impl CdfReport {
    pub fn write_csv(&self, path: &Path) -> Result<(), MatchError> {
        let file =
            File::create(path).map_err(|e| MatchError::Io { path: path.into(), source: e })?;
        let mut w = BufWriter::new(file);
        let io = |e: std::io::Error| MatchError::Io { path: path.into(), source: e };
        writeln!(w, "rank,value_x,value_y,expected_cdf,observed_cdf").map_err(io)?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                row.rank, row.value_x, row.value_y, row.expected_cdf, row.observed_cdf
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use crate::structgen::PlantedPartitionGenerator;

    fn vocab(k: usize) -> Vec<String> {
        (0..k).map(|i| i.to_string()).collect()
    }

    #[test]
    fn single_edge_concentrates_the_mass() {
        let et = EdgeTable::from_edges("t", vec![(0, 1)]);
        let p = empirical_joint(&et, &[0, 1], &vocab(2)).unwrap();
        assert_eq!(p.prob(0, 1), 1.0);
        assert_eq!(p.prob(0, 0), 0.0);
    }

    #[test]
    fn uniform_labels_concentrate_on_the_diagonal() {
        let et = EdgeTable::from_edges("t", vec![(0, 1), (1, 2), (2, 0)]);
        let p = empirical_joint(&et, &[0, 0, 0], &vocab(1)).unwrap();
        assert_eq!(p.prob(0, 0), 1.0);
    }

    #[test]
    fn empty_table_has_no_distribution() {
        assert!(matches!(
            empirical_joint(&EdgeTable::new("t"), &[], &vocab(1)),
            Err(MatchError::EmptyEdgeTable)
        ));
    }

    #[test]
    fn community_labels_recover_the_mixing_factor() {
        let g = PlantedPartitionGenerator::new(
            20.0,
            50,
            10,
            50,
            0.1,
            RandomStream::derive(42, "stats.mixing"),
        )
        .unwrap();
        let (et, comm) = g.run_with_communities(10_000).unwrap();
        let k = *comm.iter().max().unwrap() as usize + 1;
        let p = empirical_joint(&et, &comm, &vocab(k)).unwrap();
        let diagonal: f64 = (0..k).map(|i| p.prob(i, i)).sum();
        assert!((diagonal - 0.9).abs() <= 0.02, "diagonal mass {diagonal}");
    }

    #[test]
    fn identical_joints_have_zero_distance_and_equal_cdfs() {
        let p = JointDistribution::from_pairs(
            vocab(2),
            &[(0, 0, 0.5), (0, 1, 0.3), (1, 1, 0.2)],
            1e-9,
        )
        .unwrap();
        assert_eq!(distribution_distance(&p, &p).unwrap(), 0.0);
        let report = cdf_report(&p, &p).unwrap();
        for row in &report.rows {
            assert_eq!(row.expected_cdf, row.observed_cdf);
        }
        assert_eq!(report.rows.len(), 3);
    }

    #[test]
    fn disjoint_supports_reach_the_l1_maximum() {
        let p = JointDistribution::from_pairs(vocab(2), &[(0, 0, 1.0)], 1e-9).unwrap();
        let q = JointDistribution::from_pairs(vocab(2), &[(1, 1, 1.0)], 1e-9).unwrap();
        assert_eq!(distribution_distance(&p, &q).unwrap(), 2.0);
    }

    #[test]
    fn cdfs_are_sorted_nondecreasing_and_end_at_one() {
        let p = JointDistribution::from_pairs(
            vocab(3),
            &[(0, 0, 0.05), (0, 1, 0.3), (0, 2, 0.1), (1, 1, 0.25), (1, 2, 0.2), (2, 2, 0.1)],
            1e-9,
        )
        .unwrap();
        let q = JointDistribution::from_pairs(
            vocab(3),
            &[(0, 0, 0.4), (0, 1, 0.1), (0, 2, 0.1), (1, 1, 0.15), (1, 2, 0.05), (2, 2, 0.2)],
            1e-9,
        )
        .unwrap();
        let report = cdf_report(&p, &q).unwrap();
        assert_eq!(report.rows.len(), 6);
        // Sorted by decreasing expected probability.
        assert_eq!((report.rows[0].value_x.as_str(), report.rows[0].value_y.as_str()), ("0", "1"));
        let mut last = (0.0, 0.0);
        for row in &report.rows {
            assert!(row.expected_cdf >= last.0 && row.observed_cdf >= last.1);
            last = (row.expected_cdf, row.observed_cdf);
        }
        assert!((last.0 - 1.0).abs() <= 1e-9);
        assert!((last.1 - 1.0).abs() <= 1e-9);
    }
}
