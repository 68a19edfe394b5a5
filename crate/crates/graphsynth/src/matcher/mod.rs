//! Property-to-node matching: build the target group-pair edge matrix from
//! a joint distribution and the group sizes, stream the graph through the
//! greedy partitioner, and turn the resulting groups into a mapping from
//! structure node ids to property-table ids.

mod partition;
mod stats;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub use partition::{
    ldg_partition, sbm_part, sbm_part_bipartite, sbm_part_with_rule, BiNode, CapacityRule,
    PartitionState, SbmPart, SbmPartBipartite,
};
pub use stats::{
    cdf_report, distribution_distance, empirical_bipartite, empirical_joint, CdfReport, CdfRow,
};

use crate::store::PropertyTable;

#[derive(Debug, thiserror::Error)]
pub enum MatchError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: row {row}: {reason}")]
    BadRow { path: PathBuf, row: u64, reason: String },
    #[error("duplicate unordered pair ({x}, {y})")]
    DuplicatePair { x: String, y: String },
    #[error("pair probabilities sum to {0}, expected 1")]
    SumNotOne(f64),
    #[error("negative probability for pair ({x}, {y})")]
    NegativeProbability { x: String, y: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("edge references unknown node {id} (node count {n})")]
    UnknownNode { id: u64, n: u64 },
    #[error("node order is not a permutation of 0..{0}")]
    OrderNotPermutation(u64),
    #[error("group sizes sum to {got}, expected the node count {expected}")]
    CapacitySum { expected: u64, got: u64 },
    #[error("capacities sum to {got}, need at least the node count {expected}")]
    InsufficientCapacity { expected: u64, got: u64 },
    #[error("group {group} has {got} nodes but the table has {expected} rows of value {value:?}")]
    FrequencyMismatch { group: usize, value: String, expected: u64, got: u64 },
    #[error("table value {0:?} does not appear in the joint distribution")]
    ValueNotInVocabulary(String),
    #[error("cannot build density-mode targets: group {group} has size {size} with nonzero pair mass")]
    DensityUndefined { group: usize, size: u64 },
    #[error("the joint distribution of an empty edge table is undefined")]
    EmptyEdgeTable,
}

/// Number of unordered pairs over `k` values, diagonal included.
pub fn unordered_pair_count(k: usize) -> usize {
    k * (k + 1) / 2
}

/// Index of the unordered pair `{i, j}` in the packed upper triangle.
#[inline]
pub(crate) fn pair_index(k: usize, i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    lo * k - lo * (lo + 1) / 2 + hi
}

/// A joint probability distribution over unordered pairs of property
/// values: the probability of drawing a random edge and observing values
/// `{x, y}` at its endpoints. Diagonal entries count intra-value edges
/// once.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    values: Vec<String>,
    probs: Vec<f64>, // packed upper triangle
}

impl JointDistribution {
    /// Builds a distribution from `(i, j, p)` triples over value indices.
    /// Probabilities must be non-negative, each unordered pair listed at
    /// most once, and the total within `tol` of 1 (then normalized).
    pub fn from_pairs(
        values: Vec<String>,
        pairs: &[(usize, usize, f64)],
        tol: f64,
    ) -> Result<Self, MatchError> {
        let k = values.len();
        let mut probs = vec![0.0; unordered_pair_count(k)];
        let mut seen = vec![false; probs.len()];
        for &(i, j, p) in pairs {
            if i >= k || j >= k {
                return Err(MatchError::DimensionMismatch(format!(
                    "pair index ({i}, {j}) out of range for {k} values"
                )));
            }
            let idx = pair_index(k, i, j);
            if seen[idx] {
                return Err(MatchError::DuplicatePair {
                    x: values[i].clone(),
                    y: values[j].clone(),
                });
            }
            if p < 0.0 || !p.is_finite() {
                return Err(MatchError::NegativeProbability {
                    x: values[i].clone(),
                    y: values[j].clone(),
                });
            }
            seen[idx] = true;
            probs[idx] = p;
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(MatchError::SumNotOne(sum));
        }
        for p in &mut probs {
            *p /= sum;
        }
        Ok(Self { values, probs })
    }

    /// Loads `valueX,valueY,probability` rows; a `valueX,valueY,probability`
    /// header line is skipped if present. The vocabulary is the order of
    /// first appearance.
    pub fn read_csv(path: &Path) -> Result<Self, MatchError> {
        let file = File::open(path).map_err(|e| MatchError::Io { path: path.into(), source: e })?;
        let mut reader =
            csv::ReaderBuilder::new().has_headers(false).from_reader(BufReader::new(file));
        let mut values: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut triples: Vec<(usize, usize, f64)> = Vec::new();
        let intern = |values: &mut Vec<String>, index: &mut HashMap<String, usize>, v: &str| {
            *index.entry(v.to_string()).or_insert_with(|| {
                values.push(v.to_string());
                values.len() - 1
            })
        };
        for (i, record) in reader.records().enumerate() {
            let row = i as u64 + 1;
            let record = record.map_err(|e| MatchError::BadRow {
                path: path.into(),
                row,
                reason: e.to_string(),
            })?;
            if record.len() != 3 {
                return Err(MatchError::BadRow {
                    path: path.into(),
                    row,
                    reason: format!("expected 3 columns, got {}", record.len()),
                });
            }
            if row == 1 && record[2].parse::<f64>().is_err() {
                continue; // header line
            }
            let p: f64 = record[2].parse().map_err(|_| MatchError::BadRow {
                path: path.into(),
                row,
                reason: format!("bad probability {:?}", &record[2]),
            })?;
            let x = intern(&mut values, &mut index, &record[0]);
            let y = intern(&mut values, &mut index, &record[1]);
            triples.push((x, y, p));
        }
        Self::from_pairs(values, &triples, 1e-6)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MatchError> {
        let file = File::create(path).map_err(|e| MatchError::Io { path: path.into(), source: e })?;
        let mut w = BufWriter::new(file);
        let io = |e: std::io::Error| MatchError::Io { path: path.into(), source: e };
        writeln!(w, "valueX,valueY,probability").map_err(io)?;
        for (i, j, p) in self.iter_pairs() {
            writeln!(w, "{},{},{}", self.values[i], self.values[j], p).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[pair_index(self.k(), i, j)]
    }

    /// Unordered pairs `(i, j, p)` with `i <= j`.
    pub fn iter_pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let k = self.k();
        (0..k).flat_map(move |i| (i..k).map(move |j| (i, j, self.prob(i, j))))
    }
}

/// Per-group node quotas; group `t` corresponds to value index `t` of the
/// joint distribution the matcher targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSizes(pub Vec<u64>);

impl GroupSizes {
    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Frequencies of each vocabulary value in the property table. Every
    /// table value must appear in the vocabulary; vocabulary values missing
    /// from the table get a zero quota.
    pub fn from_table(pt: &PropertyTable, values: &[String]) -> Result<Self, MatchError> {
        let index: HashMap<&str, usize> =
            values.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let mut q = vec![0u64; values.len()];
        for (_, value) in pt.iter() {
            let rendered = value.to_string();
            match index.get(rendered.as_str()) {
                Some(&i) => q[i] += 1,
                None => return Err(MatchError::ValueNotInVocabulary(rendered)),
            }
        }
        Ok(Self(q))
    }
}

/// How [`build_target_matrix`] scales the joint distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetMode {
    /// `W[i][j] = m * p({i,j})`: expected edge counts per unordered group
    /// pair. This is the default; the streaming partitioner compares
    /// like-for-like against its own edge counts.
    #[default]
    Counts,
    /// Block densities: `W[i][i] = 2m p / (q_i (q_i - 1))` on the diagonal
    /// and `W[i][j] = 2m p / (q_i q_j)` off it.
    Density,
}

/// Symmetric k-by-k target matrix over unordered group pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMatrix {
    k: usize,
    w: Vec<f64>, // packed upper triangle
}

impl TargetMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.w[pair_index(self.k, i, j)]
    }

    /// Sum over unordered pairs; in counts mode this is the edge count.
    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// Builds the matching target from the joint distribution, the edge count
/// and the group sizes.
pub fn build_target_matrix(
    p: &JointDistribution,
    m: u64,
    q: &GroupSizes,
    mode: TargetMode,
) -> Result<TargetMatrix, MatchError> {
    let k = p.k();
    if q.k() != k {
        return Err(MatchError::DimensionMismatch(format!(
            "{k} values vs {} group sizes",
            q.k()
        )));
    }
    let m = m as f64;
    let mut w = vec![0.0; unordered_pair_count(k)];
    for (i, j, prob) in p.iter_pairs() {
        let idx = pair_index(k, i, j);
        w[idx] = match mode {
            TargetMode::Counts => m * prob,
            TargetMode::Density => {
                if prob == 0.0 {
                    0.0
                } else if i == j {
                    let qi = q.0[i];
                    if qi < 2 {
                        return Err(MatchError::DensityUndefined { group: i, size: qi });
                    }
                    2.0 * m * prob / (qi as f64 * (qi - 1) as f64)
                } else {
                    let (qi, qj) = (q.0[i], q.0[j]);
                    if qi == 0 || qj == 0 {
                        return Err(MatchError::DensityUndefined {
                            group: if qi == 0 { i } else { j },
                            size: 0,
                        });
                    }
                    2.0 * m * prob / (qi as f64 * qj as f64)
                }
            }
        };
    }
    Ok(TargetMatrix { k, w })
}

/// An ordered-pair joint distribution for bipartite matching: `p(x, y)` is
/// the probability of observing tail value `x` and head value `y` on a
/// random edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteJoint {
    tail_values: Vec<String>,
    head_values: Vec<String>,
    probs: Vec<f64>, // k_tail x k_head, row major
}

impl BipartiteJoint {
    pub fn from_matrix(
        tail_values: Vec<String>,
        head_values: Vec<String>,
        probs: Vec<f64>,
        tol: f64,
    ) -> Result<Self, MatchError> {
        if probs.len() != tail_values.len() * head_values.len() {
            return Err(MatchError::DimensionMismatch("probability matrix shape".into()));
        }
        if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(MatchError::NegativeProbability { x: "?".into(), y: "?".into() });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(MatchError::SumNotOne(sum));
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok(Self { tail_values, head_values, probs })
    }

    /// Loads ordered `valueX,valueY,probability` rows (tail value first),
    /// each pair listed at most once.
    pub fn read_csv(path: &Path) -> Result<Self, MatchError> {
        let file = File::open(path).map_err(|e| MatchError::Io { path: path.into(), source: e })?;
        let mut reader =
            csv::ReaderBuilder::new().has_headers(false).from_reader(BufReader::new(file));
        let mut tails: Vec<String> = Vec::new();
        let mut heads: Vec<String> = Vec::new();
        let mut triples: Vec<(usize, usize, f64)> = Vec::new();
        let intern = |list: &mut Vec<String>, v: &str| match list.iter().position(|x| x == v) {
            Some(i) => i,
            None => {
                list.push(v.to_string());
                list.len() - 1
            }
        };
        for (i, record) in reader.records().enumerate() {
            let row = i as u64 + 1;
            let record = record.map_err(|e| MatchError::BadRow {
                path: path.into(),
                row,
                reason: e.to_string(),
            })?;
            if record.len() != 3 {
                return Err(MatchError::BadRow {
                    path: path.into(),
                    row,
                    reason: format!("expected 3 columns, got {}", record.len()),
                });
            }
            if row == 1 && record[2].parse::<f64>().is_err() {
                continue;
            }
            let p: f64 = record[2].parse().map_err(|_| MatchError::BadRow {
                path: path.into(),
                row,
                reason: format!("bad probability {:?}", &record[2]),
            })?;
            let x = intern(&mut tails, &record[0]);
            let y = intern(&mut heads, &record[1]);
            triples.push((x, y, p));
        }
        let (kt, kh) = (tails.len(), heads.len());
        let mut probs = vec![0.0; kt * kh];
        let mut seen = vec![false; kt * kh];
        for (x, y, p) in triples {
            if seen[x * kh + y] {
                return Err(MatchError::DuplicatePair {
                    x: tails[x].clone(),
                    y: heads[y].clone(),
                });
            }
            seen[x * kh + y] = true;
            probs[x * kh + y] = p;
        }
        Self::from_matrix(tails, heads, probs, 1e-6)
    }

    pub fn k_tail(&self) -> usize {
        self.tail_values.len()
    }

    pub fn k_head(&self) -> usize {
        self.head_values.len()
    }

    pub fn tail_values(&self) -> &[String] {
        &self.tail_values
    }

    pub fn head_values(&self) -> &[String] {
        &self.head_values
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.k_head() + y]
    }

    pub fn l1_distance(&self, other: &BipartiteJoint) -> Result<f64, MatchError> {
        if self.k_tail() != other.k_tail() || self.k_head() != other.k_head() {
            return Err(MatchError::DimensionMismatch("bipartite joints differ in shape".into()));
        }
        Ok(self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum())
    }
}

/// Rectangular k_tail-by-k_head target for bipartite matching.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteTarget {
    k_tail: usize,
    k_head: usize,
    w: Vec<f64>,
}

impl BipartiteTarget {
    pub fn k_tail(&self) -> usize {
        self.k_tail
    }

    pub fn k_head(&self) -> usize {
        self.k_head
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.w[x * self.k_head + y]
    }
}

pub fn build_bipartite_target(
    p: &BipartiteJoint,
    m: u64,
    q_tail: &GroupSizes,
    q_head: &GroupSizes,
    mode: TargetMode,
) -> Result<BipartiteTarget, MatchError> {
    if q_tail.k() != p.k_tail() || q_head.k() != p.k_head() {
        return Err(MatchError::DimensionMismatch("group sizes vs joint shape".into()));
    }
    let (kt, kh) = (p.k_tail(), p.k_head());
    let mut w = vec![0.0; kt * kh];
    for x in 0..kt {
        for y in 0..kh {
            let prob = p.prob(x, y);
            w[x * kh + y] = match mode {
                TargetMode::Counts => m as f64 * prob,
                TargetMode::Density => {
                    if prob == 0.0 {
                        0.0
                    } else {
                        let (qx, qy) = (q_tail.0[x], q_head.0[y]);
                        if qx == 0 || qy == 0 {
                            return Err(MatchError::DensityUndefined {
                                group: if qx == 0 { x } else { y },
                                size: 0,
                            });
                        }
                        m as f64 * prob / (qx as f64 * qy as f64)
                    }
                }
            };
        }
    }
    Ok(BipartiteTarget { k_tail: kt, k_head: kh, w })
}

/// The bijection from structure node ids to property-table ids that
/// realizes the matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapping(Vec<u64>);

impl Mapping {
    /// Wraps a permutation of `0..n` (used for uncorrelated random
    /// matching).
    pub fn from_permutation(perm: Vec<u64>) -> Self {
        Self(perm)
    }

    pub fn apply(&self, node: u64) -> u64 {
        self.0[node as usize]
    }

    pub fn len(&self) -> u64 {
        self.0.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

/// Pairs structure nodes with property-table ids: within each group,
/// structure nodes in ascending id order receive the pt ids carrying that
/// group's value, also in ascending id order.
pub fn build_mapping(
    state: &PartitionState,
    pt: &PropertyTable,
    values: &[String],
) -> Result<Mapping, MatchError> {
    let k = values.len();
    if state.k() != k {
        return Err(MatchError::DimensionMismatch(format!(
            "{k} values vs {} groups",
            state.k()
        )));
    }
    let index: HashMap<&str, usize> =
        values.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut ids_by_value: Vec<Vec<u64>> = vec![Vec::new(); k];
    for (id, value) in pt.iter() {
        let rendered = value.to_string();
        match index.get(rendered.as_str()) {
            Some(&i) => ids_by_value[i].push(id),
            None => return Err(MatchError::ValueNotInVocabulary(rendered)),
        }
    }
    for (g, ids) in ids_by_value.iter().enumerate() {
        if ids.len() as u64 != state.fill()[g] {
            return Err(MatchError::FrequencyMismatch {
                group: g,
                value: values[g].clone(),
                expected: ids.len() as u64,
                got: state.fill()[g],
            });
        }
    }
    let labels = state.labels();
    let mut cursor = vec![0usize; k];
    let mut f = vec![0u64; labels.len()];
    for (node, &g) in labels.iter().enumerate() {
        let g = g as usize;
        f[node] = ids_by_value[g][cursor[g]];
        cursor[g] += 1;
    }
    Ok(Mapping(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{Value, ValueType};

    fn two_value_joint(p00: f64, p01: f64, p11: f64) -> JointDistribution {
        JointDistribution::from_pairs(
            vec!["a".into(), "b".into()],
            &[(0, 0, p00), (0, 1, p01), (1, 1, p11)],
            1e-9,
        )
        .unwrap()
    }

    #[test]
    fn counts_mode_multiplies_by_m() {
        let p = two_value_joint(0.5, 0.5, 0.0);
        let w =
            build_target_matrix(&p, 10, &GroupSizes(vec![5, 5]), TargetMode::Counts).unwrap();
        assert_eq!(w.entry(0, 0), 5.0);
        assert_eq!(w.entry(0, 1), 5.0);
        assert_eq!(w.entry(1, 0), 5.0);
        assert_eq!(w.entry(1, 1), 0.0);
        assert_eq!(w.total(), 10.0);
    }

    #[test]
    fn density_mode_matches_the_block_formulas() {
        let p = two_value_joint(0.5, 0.5, 0.0);
        let w =
            build_target_matrix(&p, 10, &GroupSizes(vec![5, 5]), TargetMode::Density).unwrap();
        assert!((w.entry(0, 0) - 2.0 * 10.0 * 0.5 / (5.0 * 4.0)).abs() < 1e-12);
        assert!((w.entry(0, 1) - 2.0 * 10.0 * 0.5 / (5.0 * 5.0)).abs() < 1e-12);
    }

    #[test]
    fn density_mode_rejects_tiny_groups_with_diagonal_mass() {
        let p = two_value_joint(0.5, 0.5, 0.0);
        let err = build_target_matrix(&p, 10, &GroupSizes(vec![1, 9]), TargetMode::Density)
            .err()
            .unwrap();
        assert!(matches!(err, MatchError::DensityUndefined { group: 0, size: 1 }));
    }

    #[test]
    fn uniform_distribution_gives_equal_count_entries() {
        let k = 4usize;
        let pairs: Vec<(usize, usize, f64)> = (0..k)
            .flat_map(|i| (i..k).map(move |j| (i, j, 1.0 / unordered_pair_count(k) as f64)))
            .collect();
        let p = JointDistribution::from_pairs(
            (0..k).map(|i| i.to_string()).collect(),
            &pairs,
            1e-9,
        )
        .unwrap();
        let w = build_target_matrix(&p, 100, &GroupSizes(vec![25; 4]), TargetMode::Counts)
            .unwrap();
        let expected = 100.0 / unordered_pair_count(k) as f64;
        for (i, j, _) in p.iter_pairs() {
            assert!((w.entry(i, j) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicate_pairs_and_bad_sums_are_rejected() {
        let dup = JointDistribution::from_pairs(
            vec!["a".into(), "b".into()],
            &[(0, 1, 0.5), (1, 0, 0.5)],
            1e-9,
        );
        assert!(matches!(dup, Err(MatchError::DuplicatePair { .. })));
        let bad = JointDistribution::from_pairs(vec!["a".into()], &[(0, 0, 0.9)], 1e-6);
        assert!(matches!(bad, Err(MatchError::SumNotOne(_))));
    }

    #[test]
    fn joint_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let p = two_value_joint(0.6, 0.3, 0.1);
        p.write_csv(&path).unwrap();
        let back = JointDistribution::read_csv(&path).unwrap();
        assert_eq!(p.values(), back.values());
        for (i, j, prob) in p.iter_pairs() {
            assert!((prob - back.prob(i, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn group_sizes_come_from_table_frequencies() {
        let pt = PropertyTable::from_values(
            "t",
            ValueType::Str,
            ["a", "b", "a", "a"].iter().map(|s| Value::Str(s.to_string())).collect(),
        )
        .unwrap();
        let q = GroupSizes::from_table(&pt, &["a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(q.0, vec![3, 1, 0]);
        let err = GroupSizes::from_table(&pt, &["a".into()]).err().unwrap();
        assert!(matches!(err, MatchError::ValueNotInVocabulary(v) if v == "b"));
    }

    fn str_table(values: &[&str]) -> PropertyTable {
        PropertyTable::from_values(
            "t",
            ValueType::Str,
            values.iter().map(|s| Value::Str(s.to_string())).collect(),
        )
        .unwrap()
    }

    #[test]
    fn two_node_mapping_swaps() {
        let pt = str_table(&["a", "b"]);
        let vocab = vec!["a".to_string(), "b".to_string()];
        // Node 0 landed in group b (1), node 1 in group a (0).
        let state = PartitionState::from_labels(vec![1, 0], 2);
        let f = build_mapping(&state, &pt, &vocab).unwrap();
        assert_eq!(f.as_slice(), &[1, 0]);
    }

    #[test]
    fn single_group_maps_in_id_order() {
        let pt = str_table(&["a", "a", "a"]);
        let state = PartitionState::from_labels(vec![0, 0, 0], 1);
        let f = build_mapping(&state, &pt, &["a".to_string()]).unwrap();
        assert_eq!(f.as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn frequency_mismatch_is_rejected() {
        let pt = str_table(&["a", "a"]);
        let state = PartitionState::from_labels(vec![0, 1], 2);
        let err =
            build_mapping(&state, &pt, &["a".to_string(), "b".to_string()]).err().unwrap();
        assert!(matches!(err, MatchError::FrequencyMismatch { .. }), "{err}");
    }

    mod mapping_properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// f is a bijection onto 0..n and value(f(v)) = group(v).
            #[test]
            fn mapping_is_a_value_preserving_bijection(
                labels in proptest::collection::vec(0u32..4, 1..60),
            ) {
                let k = 4usize;
                let vocab: Vec<String> = (0..k).map(|i| format!("v{i}")).collect();
                // A table whose frequencies match the labels, scrambled so
                // ids of one value are not contiguous.
                let mut values: Vec<&str> = labels.iter().map(|&g| vocab[g as usize].as_str()).collect();
                let half = values.len() / 2;
                values.rotate_left(half);
                let pt = str_table(&values);
                let state = PartitionState::from_labels(labels.clone(), k);
                let f = build_mapping(&state, &pt, &vocab).unwrap();

                let mut seen = vec![false; labels.len()];
                for (node, &g) in labels.iter().enumerate() {
                    let id = f.apply(node as u64);
                    prop_assert!(!seen[id as usize]);
                    seen[id as usize] = true;
                    prop_assert_eq!(pt.value(id).to_string(), vocab[g as usize].clone());
                }
            }
        }
    }
}
