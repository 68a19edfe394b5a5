//! Schema validation: pure, deterministic diagnostics.

use std::collections::BTreeSet;

use super::{Cardinality, EdgeTypeDecl, NodeTypeDecl, Schema, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Span,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev}: {}", self.span, self.message)
    }
}

/// Names of the registered property and structure generators; the schema
/// module stays decoupled from the generator implementations.
#[derive(Debug, Clone, Default)]
pub struct KnownGenerators {
    pub property: BTreeSet<String>,
    pub structure: BTreeSet<String>,
}

/// Where a dependency of an edge property resolves to. Edge properties may
/// depend on other properties of the same edge, or on properties of the
/// endpoint node types (recomputed in place at the endpoint ids). A name
/// that both endpoint types declare contributes two values, tail first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeDepTarget {
    Own(String),
    Tail(String),
    Head(String),
}

/// Resolution order for an edge-property dependency: the edge's own
/// properties (excluding the property being declared), then the tail type,
/// then the head type. Empty means unresolved.
pub fn resolve_edge_dependency(
    schema: &Schema,
    edge: &EdgeTypeDecl,
    declaring_property: &str,
    dep: &str,
) -> Vec<EdgeDepTarget> {
    if dep != declaring_property && edge.property(dep).is_some() {
        return vec![EdgeDepTarget::Own(dep.to_string())];
    }
    let mut out = Vec::new();
    if schema.node_type(&edge.tail_type).and_then(|t| t.property(dep)).is_some() {
        out.push(EdgeDepTarget::Tail(dep.to_string()));
    }
    if edge.head_type != edge.tail_type
        && schema.node_type(&edge.head_type).and_then(|t| t.property(dep)).is_some()
    {
        out.push(EdgeDepTarget::Head(dep.to_string()));
    }
    out
}

/// Validates a parsed schema against the registered generator names.
/// Returns an empty list iff the schema is executable. Pure: the same
/// input always yields the same diagnostics in the same order.
pub fn validate_schema(schema: &Schema, known: &KnownGenerators) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let error = |out: &mut Vec<Diagnostic>, message: String, span: Span| {
        out.push(Diagnostic { severity: Severity::Error, message, span });
    };

    for node in &schema.node_types {
        for prop in &node.properties {
            if !known.property.contains(&prop.generator.generator_name) {
                error(
                    &mut out,
                    format!(
                        "unknown property generator `{}` for `{}.{}`",
                        prop.generator.generator_name, node.name, prop.name
                    ),
                    prop.generator.span,
                );
            }
            for dep in &prop.depends_on {
                if node.property(dep).is_none() {
                    error(
                        &mut out,
                        format!(
                            "`{}.{}` depends on `{dep}`, which is not a property of `{}`",
                            node.name, prop.name, node.name
                        ),
                        prop.span,
                    );
                }
            }
        }
        check_cycles(&mut out, &node.name, node.span, node_dep_edges(node));
    }

    for edge in &schema.edge_types {
        for endpoint in [&edge.tail_type, &edge.head_type] {
            if schema.node_type(endpoint).is_none() {
                error(
                    &mut out,
                    format!("edge `{}` references undeclared node type `{endpoint}`", edge.name),
                    edge.span,
                );
            }
        }
        match edge.cardinality {
            Cardinality::ManyToMany if edge.tail_type != edge.head_type => {
                // Structure generators emit one shared id space [0, n); a
                // many-to-many edge therefore needs a single endpoint type.
                error(
                    &mut out,
                    format!(
                        "edge `{}`: many-to-many edges must connect a node type to itself",
                        edge.name
                    ),
                    edge.span,
                );
            }
            Cardinality::OneToOne => {
                error(
                    &mut out,
                    format!("edge `{}`: one-to-one cardinality is not supported", edge.name),
                    edge.span,
                );
            }
            _ => {}
        }
        if !known.structure.contains(&edge.structure.generator_name) {
            error(
                &mut out,
                format!(
                    "unknown structure generator `{}` for edge `{}`",
                    edge.structure.generator_name, edge.name
                ),
                edge.structure.span,
            );
        }
        if let Some(corr) = &edge.correlation {
            let mut sides = vec![&edge.tail_type];
            if edge.head_type != edge.tail_type {
                sides.push(&edge.head_type);
            }
            for side in sides {
                let declared =
                    schema.node_type(side).map(|t| t.property(&corr.property).is_some());
                if declared == Some(false) {
                    error(
                        &mut out,
                        format!(
                            "edge `{}` joins on `{}`, which is not a property of `{side}`",
                            edge.name, corr.property
                        ),
                        corr.span,
                    );
                }
            }
        }
        for prop in &edge.properties {
            if !known.property.contains(&prop.generator.generator_name) {
                error(
                    &mut out,
                    format!(
                        "unknown property generator `{}` for `{}.{}`",
                        prop.generator.generator_name, edge.name, prop.name
                    ),
                    prop.generator.span,
                );
            }
            for dep in &prop.depends_on {
                if resolve_edge_dependency(schema, edge, &prop.name, dep).is_empty() {
                    error(
                        &mut out,
                        format!(
                            "`{}.{}` depends on `{dep}`, which is not a property of the edge \
                             or of its endpoint types",
                            edge.name, prop.name
                        ),
                        prop.span,
                    );
                }
            }
        }
        check_cycles(&mut out, &edge.name, edge.span, edge_dep_edges(edge));
    }

    match &schema.scale {
        None => error(
            &mut out,
            "missing scale directive (`scale <Type> = <count>`)".into(),
            Span::default(),
        ),
        Some(scale) => {
            if schema.node_type(&scale.target).is_none() && schema.edge_type(&scale.target).is_none()
            {
                error(
                    &mut out,
                    format!("scale targets undeclared type `{}`", scale.target),
                    scale.span,
                );
            }
        }
    }

    out
}

/// Dependency pairs (from, to) among a node type's own properties.
fn node_dep_edges(node: &NodeTypeDecl) -> Vec<(String, String)> {
    let mut edges = Vec::new();
    for prop in &node.properties {
        for dep in &prop.depends_on {
            if node.property(dep).is_some() {
                edges.push((prop.name.clone(), dep.clone()));
            }
        }
    }
    edges
}

/// Dependency pairs among an edge type's own properties. Dependencies that
/// resolve to endpoint node properties cannot form cycles here.
fn edge_dep_edges(edge: &EdgeTypeDecl) -> Vec<(String, String)> {
    let mut edges = Vec::new();
    for prop in &edge.properties {
        for dep in &prop.depends_on {
            if dep != &prop.name && edge.property(dep).is_some() {
                edges.push((prop.name.clone(), dep.clone()));
            }
        }
    }
    edges
}

fn check_cycles(out: &mut Vec<Diagnostic>, type_name: &str, span: Span, edges: Vec<(String, String)>) {
    let mut nodes: Vec<&str> = Vec::new();
    for (a, b) in &edges {
        for n in [a.as_str(), b.as_str()] {
            if !nodes.contains(&n) {
                nodes.push(n);
            }
        }
    }
    // Iterative DFS with tri-state marks; reports each cycle once.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Gray,
        Black,
    }
    let index = |n: &str| nodes.iter().position(|&x| x == n).unwrap();
    let succ: Vec<Vec<usize>> = nodes
        .iter()
        .map(|&n| edges.iter().filter(|(a, _)| a == n).map(|(_, b)| index(b)).collect())
        .collect();
    let mut marks = vec![Mark::White; nodes.len()];
    for start in 0..nodes.len() {
        if marks[start] != Mark::White {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        let mut path = vec![start];
        marks[start] = Mark::Gray;
        while let Some((n, child)) = stack.last_mut() {
            if let Some(&next) = succ[*n].get(*child) {
                *child += 1;
                match marks[next] {
                    Mark::White => {
                        marks[next] = Mark::Gray;
                        stack.push((next, 0));
                        path.push(next);
                    }
                    Mark::Gray => {
                        let pos = path.iter().position(|&p| p == next).unwrap();
                        let mut members: Vec<&str> =
                            path[pos..].iter().map(|&p| nodes[p]).collect();
                        members.sort_unstable();
                        out.push(Diagnostic {
                            severity: Severity::Error,
                            message: format!(
                                "dependency cycle among properties of `{type_name}`: {}",
                                members.join(", ")
                            ),
                            span,
                        });
                    }
                    Mark::Black => {}
                }
            } else {
                marks[*n] = Mark::Black;
                stack.pop();
                path.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_schema;
    use super::*;

    fn known() -> KnownGenerators {
        KnownGenerators {
            property: ["dictionary", "conditional", "uniformInt", "uuid", "date", "after"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            structure: ["rmat", "planted", "degree"].iter().map(|s| s.to_string()).collect(),
        }
    }

    fn errors(src: &str) -> Vec<String> {
        validate_schema(&parse_schema(src).unwrap(), &known())
            .into_iter()
            .map(|d| d.message)
            .collect()
    }

    #[test]
    fn declared_dependencies_pass() {
        let src = "node Person {
            country: string = dictionary(c.csv)
            sex: string = conditional(s.csv) correlated(country)
            name: string = conditional(n.csv) correlated(country, sex)
        }
        scale Person = 10";
        assert!(errors(src).is_empty());
    }

    #[test]
    fn two_cycle_is_reported() {
        let src = "node A {
            x: string = conditional(f.csv) correlated(y)
            y: string = conditional(g.csv) correlated(x)
        }
        scale A = 1";
        let msgs = errors(src);
        assert_eq!(msgs.len(), 1, "{msgs:?}");
        assert!(msgs[0].contains("cycle") && msgs[0].contains("x, y"), "{msgs:?}");
    }

    #[test]
    fn self_dependency_is_a_cycle() {
        let msgs = errors(
            "node A { x: string = conditional(f.csv) correlated(x) } scale A = 1",
        );
        assert!(msgs.iter().any(|m| m.contains("cycle")), "{msgs:?}");
    }

    #[test]
    fn dangling_edge_endpoint_is_reported() {
        let msgs = errors(
            "node A { }
             edge e: A -- Ghost { structure = rmat() }
             scale A = 1",
        );
        assert!(msgs.iter().any(|m| m.contains("undeclared node type `Ghost`")), "{msgs:?}");
    }

    #[test]
    fn missing_scale_is_reported() {
        let msgs = errors("node A { }");
        assert!(msgs.iter().any(|m| m.contains("missing scale")), "{msgs:?}");
        assert!(errors("").iter().any(|m| m.contains("missing scale")));
    }

    #[test]
    fn unknown_generator_names_are_reported() {
        let msgs = errors(
            "node A { x: string = magic() }
             edge e: A -- A { structure = sorcery() }
             scale A = 1",
        );
        assert!(msgs.iter().any(|m| m.contains("unknown property generator `magic`")));
        assert!(msgs.iter().any(|m| m.contains("unknown structure generator `sorcery`")));
    }

    #[test]
    fn join_property_must_exist_on_both_sides() {
        let msgs = errors(
            "node A { p: string = dictionary(a.csv) }
             node B { }
             edge e: A -> B { structure = degree(d.csv) join = p ~ \"j.csv\" }
             scale A = 1",
        );
        assert!(msgs.iter().any(|m| m.contains("not a property of `B`")), "{msgs:?}");
    }

    #[test]
    fn edge_property_may_depend_on_endpoint_property() {
        let src = "node A { when: date = date(lo=\"2010-01-01\", hi=\"2011-01-01\") }
            node B { }
            edge e: A -> B {
              structure = degree(d.csv)
              when: date = after(min=1, max=9) correlated(when)
            }
            scale A = 5";
        assert!(errors(src).is_empty());
        let schema = parse_schema(src).unwrap();
        let edge = schema.edge_type("e").unwrap();
        assert_eq!(
            resolve_edge_dependency(&schema, edge, "when", "when"),
            vec![EdgeDepTarget::Tail("when".into())]
        );
    }

    #[test]
    fn diagnostics_are_deterministic() {
        let src = "node A { x: string = magic() } edge e: A -- Ghost { structure = sorcery() }";
        let a = errors(src);
        let b = errors(src);
        assert_eq!(a, b);
        assert!(a.len() >= 3);
    }

    #[test]
    fn spans_point_into_the_source() {
        let src = "node A { x: string = magic() }";
        let schema = parse_schema(src).unwrap();
        for d in validate_schema(&schema, &known()) {
            assert!(d.span.start <= d.span.end && d.span.end <= src.len(), "{d}");
        }
    }
}
