//! Compiled per-type evaluators: one generator + stream per property, with
//! dependency values recomputed in place by recursively invoking the
//! dependency chain's `run` methods at the same id. Nothing is ever joined
//! from a materialized table, which keeps generation embarrassingly
//! parallel and lets any single row be rebuilt from its id.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;

use super::{run_generator, GenError, PropFactoryContext, PropertyGenerator};
use crate::registry::Registry;
use crate::rng::RandomStream;
use crate::schema::{resolve_edge_dependency, EdgeDepTarget, EdgeTypeDecl, NodeTypeDecl, Schema};
use crate::store::{EdgeTable, PropertyTable, Value, ValueType};

struct PropEvaluator {
    name: String,
    generator_name: String,
    value_type: ValueType,
    generator: Box<dyn PropertyGenerator>,
    stream: RandomStream,
    deps: Vec<usize>,
}

/// Evaluators for every property of one node type.
pub struct NodePropertyEvaluators {
    type_name: String,
    props: Vec<PropEvaluator>,
    index: HashMap<String, usize>,
}

impl NodePropertyEvaluators {
    pub fn compile(
        decl: &NodeTypeDecl,
        registry: &Registry,
        base_dir: &Path,
        master_seed: u64,
    ) -> Result<Self, GenError> {
        let index: HashMap<String, usize> =
            decl.properties.iter().enumerate().map(|(i, p)| (p.name.clone(), i)).collect();
        let mut props = Vec::with_capacity(decl.properties.len());
        for prop in &decl.properties {
            let deps = prop
                .depends_on
                .iter()
                .map(|d| {
                    index.get(d).copied().ok_or_else(|| {
                        GenError::Invalid(format!(
                            "`{}.{}` depends on undeclared `{d}`",
                            decl.name, prop.name
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let dep_types: Vec<ValueType> =
                deps.iter().map(|&d| decl.properties[d].value_type).collect();
            let tag = format!("{}.{}", decl.name, prop.name);
            let generator = registry.create_property(
                &prop.generator,
                &PropFactoryContext {
                    params: &prop.generator.parameters,
                    base_dir,
                    declared: prop.value_type,
                    dep_types: &dep_types,
                },
            )?;
            props.push(PropEvaluator {
                name: prop.name.clone(),
                generator_name: prop.generator.generator_name.clone(),
                value_type: prop.value_type,
                generator,
                stream: RandomStream::derive(master_seed, &tag),
                deps,
            });
        }
        check_acyclic(&decl.name, &props.iter().map(|p| p.deps.clone()).collect::<Vec<_>>())?;
        Ok(Self { type_name: decl.name.clone(), props, index })
    }

    pub fn type_name(&self) -> &str {
        &self.type_name
    }

    pub fn property_names(&self) -> impl Iterator<Item = &str> {
        self.props.iter().map(|p| p.name.as_str())
    }

    pub fn property_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn value_type(&self, prop: usize) -> ValueType {
        self.props[prop].value_type
    }

    pub fn fallback_uses(&self, prop: usize) -> u64 {
        self.props[prop].generator.fallback_uses()
    }

    /// Recomputes the value of one property at one id, in place.
    pub fn evaluate(&self, prop: usize, id: u64) -> Result<Value, GenError> {
        let p = &self.props[prop];
        let deps = p
            .deps
            .iter()
            .map(|&d| self.evaluate(d, id))
            .collect::<Result<Vec<_>, _>>()?;
        run_generator(&p.generator_name, &*p.generator, id, p.stream.value_at(id), &deps)
    }

    /// Generates the full table for one property. Ids are evaluated
    /// independently, so the result does not depend on the worker count.
    pub fn generate_table(&self, prop: usize, n: u64) -> Result<PropertyTable, GenError> {
        let p = &self.props[prop];
        let values = (0..n)
            .into_par_iter()
            .map(|id| self.evaluate(prop, id))
            .collect::<Result<Vec<_>, _>>()?;
        PropertyTable::from_values(format!("{}.{}", self.type_name, p.name), p.value_type, values)
            .map_err(|e| GenError::Invalid(e.to_string()))
    }
}

enum EdgeDep {
    Own(usize),
    Tail(usize),
    Head(usize),
}

struct EdgePropEvaluator {
    inner: PropEvaluator,
    edge_deps: Vec<EdgeDep>,
}

/// Evaluators for the properties of one edge type. Edge properties receive
/// the edge id plus the (already matched) endpoint ids, and may recompute
/// endpoint node properties in place.
pub struct EdgePropertyEvaluators {
    edge_name: String,
    props: Vec<EdgePropEvaluator>,
    index: HashMap<String, usize>,
}

impl EdgePropertyEvaluators {
    pub fn compile(
        schema: &Schema,
        decl: &EdgeTypeDecl,
        tail: &NodePropertyEvaluators,
        head: &NodePropertyEvaluators,
        registry: &Registry,
        base_dir: &Path,
        master_seed: u64,
    ) -> Result<Self, GenError> {
        let index: HashMap<String, usize> =
            decl.properties.iter().enumerate().map(|(i, p)| (p.name.clone(), i)).collect();
        let mut props = Vec::with_capacity(decl.properties.len());
        for prop in &decl.properties {
            let mut edge_deps = Vec::new();
            let mut dep_types = Vec::new();
            for dep in &prop.depends_on {
                let targets = resolve_edge_dependency(schema, decl, &prop.name, dep);
                if targets.is_empty() {
                    return Err(GenError::Invalid(format!(
                        "`{}.{}` depends on unresolvable `{dep}`",
                        decl.name, prop.name
                    )));
                }
                for target in targets {
                    match target {
                        EdgeDepTarget::Own(name) => {
                            let i = index[&name];
                            edge_deps.push(EdgeDep::Own(i));
                            dep_types.push(decl.properties[i].value_type);
                        }
                        EdgeDepTarget::Tail(name) => {
                            let i = tail.property_index(&name).expect("resolved on tail");
                            edge_deps.push(EdgeDep::Tail(i));
                            dep_types.push(tail.value_type(i));
                        }
                        EdgeDepTarget::Head(name) => {
                            let i = head.property_index(&name).expect("resolved on head");
                            edge_deps.push(EdgeDep::Head(i));
                            dep_types.push(head.value_type(i));
                        }
                    }
                }
            }
            let tag = format!("{}.{}", decl.name, prop.name);
            let generator = registry.create_property(
                &prop.generator,
                &PropFactoryContext {
                    params: &prop.generator.parameters,
                    base_dir,
                    declared: prop.value_type,
                    dep_types: &dep_types,
                },
            )?;
            props.push(EdgePropEvaluator {
                inner: PropEvaluator {
                    name: prop.name.clone(),
                    generator_name: prop.generator.generator_name.clone(),
                    value_type: prop.value_type,
                    generator,
                    stream: RandomStream::derive(master_seed, &tag),
                    deps: Vec::new(),
                },
                edge_deps,
            });
        }
        // Only own-edge dependencies can cycle.
        let own_deps: Vec<Vec<usize>> = props
            .iter()
            .map(|p| {
                p.edge_deps
                    .iter()
                    .filter_map(|d| match d {
                        EdgeDep::Own(i) => Some(*i),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        check_acyclic(&decl.name, &own_deps)?;
        Ok(Self { edge_name: decl.name.clone(), props, index })
    }

    pub fn edge_name(&self) -> &str {
        &self.edge_name
    }

    pub fn property_names(&self) -> impl Iterator<Item = &str> {
        self.props.iter().map(|p| p.inner.name.as_str())
    }

    pub fn property_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn fallback_uses(&self, prop: usize) -> u64 {
        self.props[prop].inner.generator.fallback_uses()
    }

    pub fn evaluate(
        &self,
        prop: usize,
        edge_id: u64,
        tail_id: u64,
        head_id: u64,
        tail: &NodePropertyEvaluators,
        head: &NodePropertyEvaluators,
    ) -> Result<Value, GenError> {
        let p = &self.props[prop];
        let deps = p
            .edge_deps
            .iter()
            .map(|d| match d {
                EdgeDep::Own(i) => self.evaluate(*i, edge_id, tail_id, head_id, tail, head),
                EdgeDep::Tail(i) => tail.evaluate(*i, tail_id),
                EdgeDep::Head(i) => head.evaluate(*i, head_id),
            })
            .collect::<Result<Vec<_>, _>>()?;
        run_generator(
            &p.inner.generator_name,
            &*p.inner.generator,
            edge_id,
            p.inner.stream.value_at(edge_id),
            &deps,
        )
    }

    pub fn generate_table(
        &self,
        prop: usize,
        et: &EdgeTable,
        tail: &NodePropertyEvaluators,
        head: &NodePropertyEvaluators,
    ) -> Result<PropertyTable, GenError> {
        let p = &self.props[prop];
        let edges: Vec<(u64, u64)> = et.iter().map(|(_, t, h)| (t, h)).collect();
        let values = edges
            .par_iter()
            .enumerate()
            .map(|(id, &(t, h))| self.evaluate(prop, id as u64, t, h, tail, head))
            .collect::<Result<Vec<_>, _>>()?;
        PropertyTable::from_values(
            format!("{}.{}", self.edge_name, p.inner.name),
            p.inner.value_type,
            values,
        )
        .map_err(|e| GenError::Invalid(e.to_string()))
    }
}

/// Rejects dependency cycles that would make `evaluate` recurse forever.
/// Validation catches these earlier; this guards direct API use.
fn check_acyclic(type_name: &str, deps: &[Vec<usize>]) -> Result<(), GenError> {
    let mut state = vec![0u8; deps.len()]; // 0 unvisited, 1 on stack, 2 done
    fn visit(deps: &[Vec<usize>], state: &mut [u8], i: usize) -> bool {
        match state[i] {
            1 => return false,
            2 => return true,
            _ => {}
        }
        state[i] = 1;
        for &d in &deps[i] {
            if !visit(deps, state, d) {
                return false;
            }
        }
        state[i] = 2;
        true
    }
    for i in 0..deps.len() {
        if !visit(deps, &mut state, i) {
            return Err(GenError::Invalid(format!(
                "dependency cycle among properties of `{type_name}`"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propgen::run_generator;
    use crate::schema::parse_schema;
    use crate::store::Value;

    fn write(dir: &Path, name: &str, contents: &str) {
        std::fs::write(dir.join(name), contents).unwrap();
    }

    fn person_fixture(dir: &Path) -> (Schema, Registry) {
        write(dir, "countries.csv", "ES,1\nUS,1\n");
        write(
            dir,
            "sex_by_country.csv",
            "ES,male,0.7\nES,female,0.3\nUS,male,0.4\nUS,female,0.6\n*,other,1\n",
        );
        write(
            dir,
            "names.csv",
            "ES,male,Juan,1\nES,female,Lucia,1\nUS,male,John,1\nUS,female,Mary,1\n*,*,Alex,1\n",
        );
        let schema = parse_schema(
            "node Person {
                country: string = dictionary(countries.csv)
                sex: string = conditional(sex_by_country.csv) correlated(country)
                name: string = conditional(names.csv) correlated(country, sex)
            }
            scale Person = 100",
        )
        .unwrap();
        (schema, Registry::with_builtins())
    }

    #[test]
    fn recursion_mirrors_manual_composition() {
        let dir = tempfile::tempdir().unwrap();
        let (schema, registry) = person_fixture(dir.path());
        let evals =
            NodePropertyEvaluators::compile(&schema.node_types[0], &registry, dir.path(), 42)
                .unwrap();
        let sex = evals.property_index("sex").unwrap();
        let country = evals.property_index("country").unwrap();

        // Hand-build the same two generators and compose the calls the way
        // the evaluator should: pg_sex.run(i, r_sex(i), pg_country.run(i, r_country(i))).
        let country_decl = &schema.node_types[0].properties[0];
        let sex_decl = &schema.node_types[0].properties[1];
        let pg_country = registry
            .create_property(
                &country_decl.generator,
                &crate::propgen::PropFactoryContext {
                    params: &country_decl.generator.parameters,
                    base_dir: dir.path(),
                    declared: ValueType::Str,
                    dep_types: &[],
                },
            )
            .unwrap();
        let pg_sex = registry
            .create_property(
                &sex_decl.generator,
                &crate::propgen::PropFactoryContext {
                    params: &sex_decl.generator.parameters,
                    base_dir: dir.path(),
                    declared: ValueType::Str,
                    dep_types: &[ValueType::Str],
                },
            )
            .unwrap();
        let r_country = RandomStream::derive(42, "Person.country");
        let r_sex = RandomStream::derive(42, "Person.sex");

        for i in 0..500u64 {
            let c = run_generator("dictionary", &*pg_country, i, r_country.value_at(i), &[])
                .unwrap();
            let manual =
                run_generator("conditional", &*pg_sex, i, r_sex.value_at(i), &[c.clone()])
                    .unwrap();
            assert_eq!(evals.evaluate(sex, i).unwrap(), manual);
            assert_eq!(evals.evaluate(country, i).unwrap(), c);
        }
    }

    #[test]
    fn empty_table_for_zero_rows() {
        let dir = tempfile::tempdir().unwrap();
        let (schema, registry) = person_fixture(dir.path());
        let evals =
            NodePropertyEvaluators::compile(&schema.node_types[0], &registry, dir.path(), 42)
                .unwrap();
        let table = evals.generate_table(0, 0).unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn single_rows_regenerate_in_place() {
        let dir = tempfile::tempdir().unwrap();
        let (schema, registry) = person_fixture(dir.path());
        let evals =
            NodePropertyEvaluators::compile(&schema.node_types[0], &registry, dir.path(), 42)
                .unwrap();
        let name = evals.property_index("name").unwrap();
        let table = evals.generate_table(name, 5000).unwrap();
        let probe = RandomStream::derive(7, "regen.ids");
        for i in 0..1000 {
            let id = probe.bounded_at(i, 5000);
            assert_eq!(&evals.evaluate(name, id).unwrap(), table.value(id));
        }
    }

    #[test]
    fn worker_count_does_not_change_the_table() {
        let dir = tempfile::tempdir().unwrap();
        let (schema, registry) = person_fixture(dir.path());
        let evals =
            NodePropertyEvaluators::compile(&schema.node_types[0], &registry, dir.path(), 42)
                .unwrap();
        let name = evals.property_index("name").unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let eight = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let a = single.install(|| evals.generate_table(name, 20_000)).unwrap();
        let b = eight.install(|| evals.generate_table(name, 20_000)).unwrap();
        let pa = dir.path().join("a.csv");
        let pb = dir.path().join("b.csv");
        a.write_csv(&pa).unwrap();
        b.write_csv(&pb).unwrap();
        assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    }

    #[test]
    fn conditional_distributions_match_per_tuple() {
        let dir = tempfile::tempdir().unwrap();
        let (schema, registry) = person_fixture(dir.path());
        let evals =
            NodePropertyEvaluators::compile(&schema.node_types[0], &registry, dir.path(), 42)
                .unwrap();
        let n = 200_000u64; // two countries, ~1e5 samples per tuple
        let country_table = evals.generate_table(evals.property_index("country").unwrap(), n).unwrap();
        let sex_table = evals.generate_table(evals.property_index("sex").unwrap(), n).unwrap();
        let expected: std::collections::HashMap<&str, [(&str, f64); 2]> = [
            ("ES", [("male", 0.7), ("female", 0.3)]),
            ("US", [("male", 0.4), ("female", 0.6)]),
        ]
        .into_iter()
        .collect();
        for (country, dist) in expected {
            let ids: Vec<u64> = (0..n)
                .filter(|&i| country_table.value(i) == &Value::Str(country.into()))
                .collect();
            assert!(ids.len() > 50_000, "tuple {country} has {}", ids.len());
            let l1: f64 = dist
                .iter()
                .map(|(sex, p)| {
                    let got = ids
                        .iter()
                        .filter(|&&i| sex_table.value(i) == &Value::Str(sex.to_string()))
                        .count() as f64
                        / ids.len() as f64;
                    (got - p).abs()
                })
                .sum();
            assert!(l1 <= 0.02, "conditional L1 for {country}: {l1}");
        }
        // No fallback was needed: every tuple is covered.
        assert_eq!(evals.fallback_uses(evals.property_index("sex").unwrap()), 0);
    }

    #[test]
    fn distinct_property_streams_are_uncorrelated() {
        let a = RandomStream::derive(42, "Person.country");
        let b = RandomStream::derive(42, "Person.sex");
        let n = 1_000_000u64;
        let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let x = a.unit_at(i);
            let y = b.unit_at(i);
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
            sab += x * y;
        }
        let nf = n as f64;
        let cov = sab / nf - (sa / nf) * (sb / nf);
        let var_a = saa / nf - (sa / nf) * (sa / nf);
        let var_b = sbb / nf - (sb / nf) * (sb / nf);
        let rho = cov / (var_a * var_b).sqrt();
        assert!(rho.abs() <= 0.01, "Pearson correlation {rho}");
    }

    #[test]
    fn edge_properties_recompute_endpoint_values() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "d2.csv", "2,1.0\n");
        write(dir.path(), "topics.csv", "sports,1\n");
        let schema = parse_schema(
            "node Person {
                joined: date = date(lo=\"2010-01-01\", hi=\"2012-12-31\")
             }
             node Message {
                topic: string = dictionary(topics.csv)
             }
             edge creates: Person -> Message {
                structure = degree(d2.csv)
                sent: date = after(min=1, max=30) correlated(joined)
             }
             scale Person = 50",
        )
        .unwrap();
        let registry = Registry::with_builtins();
        let person =
            NodePropertyEvaluators::compile(&schema.node_types[0], &registry, dir.path(), 42)
                .unwrap();
        let message =
            NodePropertyEvaluators::compile(&schema.node_types[1], &registry, dir.path(), 42)
                .unwrap();
        let edge = EdgePropertyEvaluators::compile(
            &schema,
            &schema.edge_types[0],
            &person,
            &message,
            &registry,
            dir.path(),
            42,
        )
        .unwrap();
        let joined = person.property_index("joined").unwrap();
        let sent = edge.property_index("sent").unwrap();
        let et = EdgeTable::from_edges(
            "creates",
            (0..100u64).map(|e| (e / 2, e)).collect::<Vec<_>>(),
        );
        let table = edge.generate_table(sent, &et, &person, &message).unwrap();
        for (id, tail, _head) in et.iter() {
            let base = person.evaluate(joined, tail).unwrap();
            assert!(table.value(id) > &base, "edge {id}: {:?} !> {base:?}", table.value(id));
        }
    }
}
