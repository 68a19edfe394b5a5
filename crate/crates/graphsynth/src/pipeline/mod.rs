//! Dependency analysis over a validated schema, size inference, and
//! ordered execution of the three task kinds: generate property, generate
//! structure, match graph.
//!
//! Sizes flow from the single scale directive: a node-denominated scale
//! pins its type directly; an edge-denominated scale is inverted through
//! the edge's structure generator; head types of one-to-many edges take
//! their count from the generated edge table. Everything else is an error.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use crate::matcher::{
    build_bipartite_target, build_mapping, empirical_bipartite, empirical_joint, sbm_part,
    sbm_part_bipartite, BiNode, BipartiteJoint, GroupSizes, JointDistribution, Mapping,
    MatchError, TargetMode, build_target_matrix,
};
use crate::propgen::{EdgePropertyEvaluators, GenError, NodePropertyEvaluators};
use crate::registry::Registry;
use crate::rng::{seeded_permutation, RandomStream};
use crate::schema::{Cardinality, Schema};
use crate::store::{EdgeTable, PropertyTable, StoreError};
use crate::structgen::{StructFactoryContext, StructGenError, StructureGenerator};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("schema has no scale directive")]
    MissingScale,
    #[error("undetermined size: {0}")]
    UndeterminedSize(String),
    #[error("size of `{node_type}` is both declared and derived from edge `{edge}`")]
    OverdeterminedSize { node_type: String, edge: String },
    #[error("dependency cycle among tasks: {}", .0.join(", "))]
    Cycle(Vec<String>),
    #[error("unknown type in schema: {0}")]
    UnknownType(String),
    #[error("task `{task}` failed: {source}")]
    Task { task: String, source: TaskError },
}

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Struct(#[from] StructGenError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn task_err(task: &str, source: impl Into<TaskError>) -> PipelineError {
    PipelineError::Task { task: task.to_string(), source: source.into() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskKind {
    GenProperty { owner: String, prop: String },
    GenStructure { edge: String },
    Match { edge: String },
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::GenProperty { owner, prop } => write!(f, "property {owner}.{prop}"),
            TaskKind::GenStructure { edge } => write!(f, "structure {edge}"),
            TaskKind::Match { edge } => write!(f, "match {edge}"),
        }
    }
}

/// Where a node type's instance count comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SizeSource {
    /// Directly from the scale directive.
    Declared(u64),
    /// The head count of this one-to-many edge (= its edge count).
    HeadsOf(String),
    /// Inverted from an edge-denominated scale through the edge's
    /// structure generator.
    InvertedFrom { edge: String, edges: u64 },
}

#[derive(Debug)]
pub struct TaskDag {
    pub tasks: Vec<TaskKind>,
    pub deps: Vec<Vec<usize>>,
    /// A topological execution order.
    pub topo: Vec<usize>,
    /// Size source per node type.
    pub size_sources: BTreeMap<String, SizeSource>,
}

impl TaskDag {
    fn index_of(&self, kind: &TaskKind) -> Option<usize> {
        self.tasks.iter().position(|t| t == kind)
    }

    /// Tasks in execution order, for inspection.
    pub fn ordered_tasks(&self) -> impl Iterator<Item = &TaskKind> {
        self.topo.iter().map(|&i| &self.tasks[i])
    }
}

/// Builds the task graph: one property task per (type, property), one
/// structure task per edge type, one match task per correlated edge type,
/// with property-dependency, structure-size and match-input edges.
pub fn build_task_dag(schema: &Schema) -> Result<TaskDag, PipelineError> {
    let scale = schema.scale.as_ref().ok_or(PipelineError::MissingScale)?;

    // Size sources first; they induce structure-size dependencies.
    let mut size_sources: BTreeMap<String, SizeSource> = BTreeMap::new();
    if schema.node_type(&scale.target).is_some() {
        size_sources.insert(scale.target.clone(), SizeSource::Declared(scale.count));
    } else if let Some(edge) = schema.edge_type(&scale.target) {
        size_sources.insert(
            edge.tail_type.clone(),
            SizeSource::InvertedFrom { edge: edge.name.clone(), edges: scale.count },
        );
    } else {
        return Err(PipelineError::UnknownType(scale.target.clone()));
    }
    for edge in &schema.edge_types {
        if edge.cardinality == Cardinality::OneToMany {
            if size_sources.contains_key(&edge.head_type) {
                return Err(PipelineError::OverdeterminedSize {
                    node_type: edge.head_type.clone(),
                    edge: edge.name.clone(),
                });
            }
            size_sources.insert(edge.head_type.clone(), SizeSource::HeadsOf(edge.name.clone()));
        }
    }
    for node in &schema.node_types {
        if !size_sources.contains_key(&node.name) {
            return Err(PipelineError::UndeterminedSize(node.name.clone()));
        }
    }

    let mut tasks: Vec<TaskKind> = Vec::new();
    for node in &schema.node_types {
        for prop in &node.properties {
            tasks.push(TaskKind::GenProperty { owner: node.name.clone(), prop: prop.name.clone() });
        }
    }
    for edge in &schema.edge_types {
        tasks.push(TaskKind::GenStructure { edge: edge.name.clone() });
        if edge.correlation.is_some() {
            tasks.push(TaskKind::Match { edge: edge.name.clone() });
        }
        for prop in &edge.properties {
            tasks.push(TaskKind::GenProperty { owner: edge.name.clone(), prop: prop.name.clone() });
        }
    }

    let mut dag =
        TaskDag { tasks, deps: Vec::new(), topo: Vec::new(), size_sources: size_sources.clone() };
    dag.deps = vec![Vec::new(); dag.tasks.len()];

    // The structure task whose table sizes a node type, if any.
    let size_dep = |dag: &TaskDag, type_name: &str| -> Option<usize> {
        match size_sources.get(type_name) {
            Some(SizeSource::HeadsOf(edge)) => {
                dag.index_of(&TaskKind::GenStructure { edge: edge.clone() })
            }
            _ => None,
        }
    };

    for node in &schema.node_types {
        for prop in &node.properties {
            let me = dag
                .index_of(&TaskKind::GenProperty { owner: node.name.clone(), prop: prop.name.clone() })
                .unwrap();
            for dep in &prop.depends_on {
                if let Some(d) =
                    dag.index_of(&TaskKind::GenProperty { owner: node.name.clone(), prop: dep.clone() })
                {
                    dag.deps[me].push(d);
                }
            }
            if let Some(d) = size_dep(&dag, &node.name) {
                dag.deps[me].push(d);
            }
        }
    }
    for edge in &schema.edge_types {
        let structure = dag.index_of(&TaskKind::GenStructure { edge: edge.name.clone() }).unwrap();
        if let Some(d) = size_dep(&dag, &edge.tail_type) {
            dag.deps[structure].push(d);
        }
        let after_structure = match &edge.correlation {
            Some(corr) => {
                let matching = dag.index_of(&TaskKind::Match { edge: edge.name.clone() }).unwrap();
                dag.deps[matching].push(structure);
                let mut sides = vec![&edge.tail_type];
                if edge.head_type != edge.tail_type {
                    sides.push(&edge.head_type);
                }
                for side in sides {
                    if let Some(d) = dag.index_of(&TaskKind::GenProperty {
                        owner: side.clone(),
                        prop: corr.property.clone(),
                    }) {
                        dag.deps[matching].push(d);
                    }
                }
                matching
            }
            None => structure,
        };
        for prop in &edge.properties {
            let me = dag
                .index_of(&TaskKind::GenProperty { owner: edge.name.clone(), prop: prop.name.clone() })
                .unwrap();
            dag.deps[me].push(after_structure);
            for dep in &prop.depends_on {
                for target in crate::schema::resolve_edge_dependency(schema, edge, &prop.name, dep)
                {
                    let owner = match target {
                        crate::schema::EdgeDepTarget::Own(_) => edge.name.clone(),
                        crate::schema::EdgeDepTarget::Tail(_) => edge.tail_type.clone(),
                        crate::schema::EdgeDepTarget::Head(_) => edge.head_type.clone(),
                    };
                    let name = match target {
                        crate::schema::EdgeDepTarget::Own(n)
                        | crate::schema::EdgeDepTarget::Tail(n)
                        | crate::schema::EdgeDepTarget::Head(n) => n,
                    };
                    if let Some(d) =
                        dag.index_of(&TaskKind::GenProperty { owner, prop: name })
                    {
                        dag.deps[me].push(d);
                    }
                }
            }
        }
    }

    dag.topo = topo_sort(&dag.tasks, &dag.deps)?;
    Ok(dag)
}

fn topo_sort(tasks: &[TaskKind], deps: &[Vec<usize>]) -> Result<Vec<usize>, PipelineError> {
    let n = tasks.len();
    let mut indegree = vec![0usize; n];
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (me, ds) in deps.iter().enumerate() {
        for &d in ds {
            indegree[me] += 1;
            successors[d].push(me);
        }
    }
    // Kahn's algorithm over task indices; ready tasks run in index order so
    // the schedule is deterministic.
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut topo = Vec::with_capacity(n);
    while let Some(&next) = ready.iter().min() {
        ready.retain(|&i| i != next);
        topo.push(next);
        for &s in &successors[next] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(s);
            }
        }
    }
    if topo.len() != n {
        let members: Vec<String> = (0..n)
            .filter(|i| !topo.contains(i))
            .map(|i| tasks[i].to_string())
            .collect();
        return Err(PipelineError::Cycle(members));
    }
    Ok(topo)
}

/// A node type's resolved size, or the structure it waits on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SizeValue {
    Known(u64),
    AfterStructure(String),
}

/// Resolves what can be resolved statically: declared scales directly,
/// edge-denominated scales through the generator's size inversion. Sizes
/// derived from one-to-many head counts stay pending until the structure
/// is generated.
pub fn infer_sizes(
    dag: &TaskDag,
    schema: &Schema,
    registry: &Registry,
    base_dir: &Path,
    seed: u64,
) -> Result<BTreeMap<String, SizeValue>, PipelineError> {
    let mut sizes = BTreeMap::new();
    for (type_name, source) in &dag.size_sources {
        let value = match source {
            SizeSource::Declared(n) => SizeValue::Known(*n),
            SizeSource::HeadsOf(edge) => SizeValue::AfterStructure(edge.clone()),
            SizeSource::InvertedFrom { edge, edges } => {
                let decl = schema
                    .edge_type(edge)
                    .ok_or_else(|| PipelineError::UnknownType(edge.clone()))?;
                let generator = instantiate_structure(schema, decl, registry, base_dir, seed)
                    .map_err(|e| task_err(&format!("structure {edge}"), e))?;
                let n = generator
                    .num_nodes_for_edges(*edges)
                    .map_err(|e| task_err(&format!("structure {edge}"), e))?;
                SizeValue::Known(n)
            }
        };
        sizes.insert(type_name.clone(), value);
    }
    Ok(sizes)
}

fn instantiate_structure(
    _schema: &Schema,
    edge: &crate::schema::EdgeTypeDecl,
    registry: &Registry,
    base_dir: &Path,
    seed: u64,
) -> Result<Box<dyn StructureGenerator>, StructGenError> {
    let stream = RandomStream::derive(seed, &format!("structure.{}", edge.name));
    registry.create_structure(
        &edge.structure,
        &StructFactoryContext { params: &edge.structure.parameters, base_dir, stream },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMethod {
    /// Seeded random pairing (uncorrelated edges).
    Random,
    SbmPart,
    SbmPartBipartite,
    /// Nothing to match (empty structure).
    Skipped,
}

impl fmt::Display for MatchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMethod::Random => "random",
            MatchMethod::SbmPart => "sbm-part",
            MatchMethod::SbmPartBipartite => "sbm-part-bipartite",
            MatchMethod::Skipped => "skipped",
        })
    }
}

/// How one edge type's structure ids were matched to property-table ids.
#[derive(Debug, Clone)]
pub struct EdgeMatching {
    pub method: MatchMethod,
    pub tail: Option<Mapping>,
    pub head: Option<Mapping>,
    /// L1 distance between the requested and achieved joint distribution
    /// (correlated edges only).
    pub l1: Option<f64>,
}

/// Everything one run generates, in deterministic order: node property
/// tables (schema order), edge property tables, edge tables, matchings and
/// the generation report.
#[derive(Debug)]
pub struct Dataset {
    pub property_tables: Vec<PropertyTable>,
    pub edge_tables: Vec<EdgeTable>,
    pub matchings: BTreeMap<String, EdgeMatching>,
    pub report: GenerationReport,
}

impl Dataset {
    /// Writes `<Type>.<prop>.csv` per property table, `<edge>.csv` per
    /// edge table and `report.json`.
    pub fn write(&self, out_dir: &Path) -> Result<(), StoreError> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| StoreError::Io { path: out_dir.to_path_buf(), source: e })?;
        for table in &self.property_tables {
            table.write_csv(&out_dir.join(format!("{}.csv", table.table_tag())))?;
        }
        for table in &self.edge_tables {
            table.write_csv(&out_dir.join(format!("{}.csv", table.edge_type())))?;
        }
        self.report.write_json(&out_dir.join("report.json"))
    }
}

/// Key/value generation report. The persisted form contains only
/// deterministic entries (sizes, seeds, match quality, fallback counts);
/// wall-clock timings stay in memory for logging.
#[derive(Debug, Default)]
pub struct GenerationReport {
    pub entries: BTreeMap<String, serde_json::Value>,
    pub timings: Vec<(String, f64)>,
}

impl GenerationReport {
    pub fn write_json(&self, path: &Path) -> Result<(), StoreError> {
        let mut text = serde_json::to_string_pretty(&self.entries).expect("report serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| StoreError::Io { path: path.to_path_buf(), source: e })
    }
}

#[derive(Debug, Clone)]
pub struct ExecuteOptions {
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default. The output is identical
    /// for every thread count.
    pub threads: usize,
    /// Directory that relative file parameters resolve against.
    pub base_dir: PathBuf,
    pub target_mode: TargetMode,
}

impl Default for ExecuteOptions {
    fn default() -> Self {
        Self { seed: 42, threads: 0, base_dir: PathBuf::from("."), target_mode: TargetMode::Counts }
    }
}

/// Runs the full pipeline: dependency analysis, size inference, generation
/// and matching. The schema must have passed validation.
pub fn execute_plan(
    schema: &Schema,
    registry: &Registry,
    opts: &ExecuteOptions,
) -> Result<Dataset, PipelineError> {
    if opts.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .expect("building a rayon pool");
        pool.install(|| execute_inner(schema, registry, opts))
    } else {
        execute_inner(schema, registry, opts)
    }
}

fn execute_inner(
    schema: &Schema,
    registry: &Registry,
    opts: &ExecuteOptions,
) -> Result<Dataset, PipelineError> {
    let dag = build_task_dag(schema)?;
    let inferred = infer_sizes(&dag, schema, registry, &opts.base_dir, opts.seed)?;

    let mut report = GenerationReport::default();
    report.entries.insert("seed".into(), json!(opts.seed));

    // Compile evaluators for every type up front; size-independent.
    let mut node_evals: BTreeMap<String, NodePropertyEvaluators> = BTreeMap::new();
    for node in &schema.node_types {
        let evals =
            NodePropertyEvaluators::compile(node, registry, &opts.base_dir, opts.seed)
                .map_err(|e| task_err(&format!("compile {}", node.name), e))?;
        node_evals.insert(node.name.clone(), evals);
    }
    let mut edge_evals: BTreeMap<String, EdgePropertyEvaluators> = BTreeMap::new();
    for edge in &schema.edge_types {
        let tail = &node_evals[&edge.tail_type];
        let head = &node_evals[&edge.head_type];
        let evals = EdgePropertyEvaluators::compile(
            schema,
            edge,
            tail,
            head,
            registry,
            &opts.base_dir,
            opts.seed,
        )
        .map_err(|e| task_err(&format!("compile {}", edge.name), e))?;
        edge_evals.insert(edge.name.clone(), evals);
    }

    let mut sizes: BTreeMap<String, u64> = BTreeMap::new();
    for (name, value) in &inferred {
        if let SizeValue::Known(n) = value {
            sizes.insert(name.clone(), *n);
        }
    }

    let mut node_tables: BTreeMap<(String, String), PropertyTable> = BTreeMap::new();
    let mut edge_prop_tables: BTreeMap<(String, String), PropertyTable> = BTreeMap::new();
    let mut edge_tables: BTreeMap<String, EdgeTable> = BTreeMap::new();
    let mut matchings: BTreeMap<String, EdgeMatching> = BTreeMap::new();

    for &ti in &dag.topo {
        let task = &dag.tasks[ti];
        let task_name = task.to_string();
        let started = Instant::now();
        match task {
            TaskKind::GenStructure { edge } => {
                let decl = schema.edge_type(edge).expect("edge declared");
                let generator =
                    instantiate_structure(schema, decl, registry, &opts.base_dir, opts.seed)
                        .map_err(|e| task_err(&task_name, e))?;
                let n_tail = *sizes
                    .get(&decl.tail_type)
                    .ok_or_else(|| PipelineError::UndeterminedSize(decl.tail_type.clone()))?;
                let mut et = generator.run(n_tail).map_err(|e| task_err(&task_name, e))?;
                let m = et.len();
                let n_head = if generator.heads_are_fresh() {
                    m
                } else {
                    *sizes
                        .get(&decl.head_type)
                        .ok_or_else(|| PipelineError::UndeterminedSize(decl.head_type.clone()))?
                };
                et.validate_endpoints(n_tail, n_head).map_err(|e| task_err(&task_name, e))?;
                if generator.heads_are_fresh() {
                    sizes.insert(decl.head_type.clone(), m);
                }
                report.entries.insert(format!("edges.{edge}"), json!(m));

                if decl.correlation.is_none() {
                    // "Matching is done randomly": seeded permutations of
                    // the property-table ids per endpoint column.
                    let (tail_map, head_map) =
                        random_matching(edge, opts.seed, n_tail, n_head, decl.tail_type == decl.head_type);
                    et.remap_endpoints(|t| tail_map.apply(t), |h| head_map.apply(h));
                    matchings.insert(
                        edge.clone(),
                        EdgeMatching {
                            method: MatchMethod::Random,
                            tail: Some(tail_map),
                            head: Some(head_map),
                            l1: None,
                        },
                    );
                    report.entries.insert(format!("match.{edge}.method"), json!("random"));
                }
                edge_tables.insert(edge.clone(), et.with_edge_type(edge.clone()));
            }
            TaskKind::Match { edge } => {
                let decl = schema.edge_type(edge).expect("edge declared");
                let corr = decl.correlation.as_ref().expect("match task implies correlation");
                let dist_path = resolve_path(&opts.base_dir, &corr.distribution_path);
                let raw = edge_tables.get(edge).expect("structure generated").clone();
                let matching = if raw.is_empty() {
                    report.entries.insert(format!("match.{edge}.method"), json!("skipped"));
                    EdgeMatching { method: MatchMethod::Skipped, tail: None, head: None, l1: None }
                } else if decl.tail_type == decl.head_type {
                    let pt = node_tables
                        .get(&(decl.tail_type.clone(), corr.property.clone()))
                        .expect("correlated property generated");
                    let (et, matching) =
                        match_unipartite(edge, &dist_path, raw, pt, opts)
                            .map_err(|e| task_err(&task_name, e))?;
                    edge_tables.insert(edge.clone(), et);
                    matching
                } else {
                    let tail_pt = node_tables
                        .get(&(decl.tail_type.clone(), corr.property.clone()))
                        .expect("correlated tail property generated");
                    let head_pt = node_tables
                        .get(&(decl.head_type.clone(), corr.property.clone()))
                        .expect("correlated head property generated");
                    let (et, matching) =
                        match_bipartite(edge, &dist_path, raw, tail_pt, head_pt, opts)
                            .map_err(|e| task_err(&task_name, e))?;
                    edge_tables.insert(edge.clone(), et);
                    matching
                };
                if let Some(l1) = matching.l1 {
                    report.entries.insert(format!("match.{edge}.l1"), json!(l1));
                }
                report
                    .entries
                    .insert(format!("match.{edge}.method"), json!(matching.method.to_string()));
                matchings.insert(edge.clone(), matching);
            }
            TaskKind::GenProperty { owner, prop } => {
                if let Some(evals) = node_evals.get(owner) {
                    let n = *sizes
                        .get(owner)
                        .ok_or_else(|| PipelineError::UndeterminedSize(owner.clone()))?;
                    let idx = evals.property_index(prop).expect("declared property");
                    let table =
                        evals.generate_table(idx, n).map_err(|e| task_err(&task_name, e))?;
                    let fallbacks = evals.fallback_uses(idx);
                    if fallbacks > 0 {
                        report
                            .entries
                            .insert(format!("fallbacks.{owner}.{prop}"), json!(fallbacks));
                    }
                    node_tables.insert((owner.clone(), prop.clone()), table);
                } else {
                    let decl = schema.edge_type(owner).expect("owner is a type");
                    let evals = &edge_evals[owner];
                    let et = edge_tables.get(owner).expect("structure generated");
                    let idx = evals.property_index(prop).expect("declared property");
                    let table = evals
                        .generate_table(
                            idx,
                            et,
                            &node_evals[&decl.tail_type],
                            &node_evals[&decl.head_type],
                        )
                        .map_err(|e| task_err(&task_name, e))?;
                    let fallbacks = evals.fallback_uses(idx);
                    if fallbacks > 0 {
                        report
                            .entries
                            .insert(format!("fallbacks.{owner}.{prop}"), json!(fallbacks));
                    }
                    edge_prop_tables.insert((owner.clone(), prop.clone()), table);
                }
            }
        }
        report.timings.push((task_name, started.elapsed().as_secs_f64()));
    }

    for (name, n) in &sizes {
        report.entries.insert(format!("size.{name}"), json!(n));
    }

    // Deterministic output order: schema declaration order.
    let mut property_tables = Vec::new();
    for node in &schema.node_types {
        for prop in &node.properties {
            property_tables
                .push(node_tables.remove(&(node.name.clone(), prop.name.clone())).unwrap());
        }
    }
    for edge in &schema.edge_types {
        for prop in &edge.properties {
            property_tables
                .push(edge_prop_tables.remove(&(edge.name.clone(), prop.name.clone())).unwrap());
        }
    }
    let edge_tables_ordered =
        schema.edge_types.iter().map(|e| edge_tables.remove(&e.name).unwrap()).collect();

    Ok(Dataset {
        property_tables,
        edge_tables: edge_tables_ordered,
        matchings,
        report,
    })
}

fn resolve_path(base: &Path, text: &str) -> PathBuf {
    let p = PathBuf::from(text);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn random_matching(
    edge: &str,
    seed: u64,
    n_tail: u64,
    n_head: u64,
    shared: bool,
) -> (Mapping, Mapping) {
    let tail_stream = RandomStream::derive(seed, &format!("match.{edge}.tail"));
    let tail = Mapping::from_permutation(seeded_permutation(&tail_stream, n_tail));
    let head = if shared {
        tail.clone()
    } else {
        let head_stream = RandomStream::derive(seed, &format!("match.{edge}.head"));
        Mapping::from_permutation(seeded_permutation(&head_stream, n_head))
    };
    (tail, head)
}

fn match_unipartite(
    edge: &str,
    dist_path: &Path,
    raw: EdgeTable,
    pt: &PropertyTable,
    opts: &ExecuteOptions,
) -> Result<(EdgeTable, EdgeMatching), MatchError> {
    let expected = JointDistribution::read_csv(dist_path)?;
    let q = GroupSizes::from_table(pt, expected.values())?;
    let w = build_target_matrix(&expected, raw.len(), &q, opts.target_mode)?;
    let order_stream = RandomStream::derive(opts.seed, &format!("match.{edge}.order"));
    let order = seeded_permutation(&order_stream, q.total());
    let state = sbm_part(&raw, &q, &w, &order)?;
    let observed = empirical_joint(&raw, state.labels(), expected.values())?;
    let l1 = crate::matcher::distribution_distance(&expected, &observed)?;
    let mapping = build_mapping(&state, pt, expected.values())?;
    let mut et = raw;
    et.remap_endpoints(|t| mapping.apply(t), |h| mapping.apply(h));
    Ok((
        et,
        EdgeMatching {
            method: MatchMethod::SbmPart,
            tail: Some(mapping.clone()),
            head: Some(mapping),
            l1: Some(l1),
        },
    ))
}

#[allow(clippy::too_many_arguments)]
fn match_bipartite(
    edge: &str,
    dist_path: &Path,
    raw: EdgeTable,
    tail_pt: &PropertyTable,
    head_pt: &PropertyTable,
    opts: &ExecuteOptions,
) -> Result<(EdgeTable, EdgeMatching), MatchError> {
    let expected = BipartiteJoint::read_csv(dist_path)?;
    let q_tail = GroupSizes::from_table(tail_pt, expected.tail_values())?;
    let q_head = GroupSizes::from_table(head_pt, expected.head_values())?;
    let w = build_bipartite_target(&expected, raw.len(), &q_tail, &q_head, opts.target_mode)?;
    let order_stream = RandomStream::derive(opts.seed, &format!("match.{edge}.order"));
    let combined = seeded_permutation(&order_stream, q_tail.total() + q_head.total());
    let order: Vec<BiNode> = combined
        .into_iter()
        .map(|i| {
            if i < q_tail.total() {
                BiNode::Tail(i)
            } else {
                BiNode::Head(i - q_tail.total())
            }
        })
        .collect();
    let (tail_state, head_state) = sbm_part_bipartite(&raw, &q_tail, &q_head, &w, &order)?;
    let observed = empirical_bipartite(
        &raw,
        tail_state.labels(),
        head_state.labels(),
        expected.tail_values(),
        expected.head_values(),
    )?;
    let l1 = expected.l1_distance(&observed)?;
    let tail_map = build_mapping(&tail_state, tail_pt, expected.tail_values())?;
    let head_map = build_mapping(&head_state, head_pt, expected.head_values())?;
    let mut et = raw;
    et.remap_endpoints(|t| tail_map.apply(t), |h| head_map.apply(h));
    Ok((
        et,
        EdgeMatching {
            method: MatchMethod::SbmPartBipartite,
            tail: Some(tail_map),
            head: Some(head_map),
            l1: Some(l1),
        },
    ))
}
