//! The schema DSL: declarations of node types, edge types, properties,
//! generator bindings, correlations and the scale directive.
//!
//! Grammar (whitespace-insensitive, `#` line comments):
//!
//! ```text
//! schema      := (node_decl | edge_decl | scale_decl)+
//! node_decl   := "node" IDENT "{" prop_decl* "}"
//! prop_decl   := IDENT ":" type "=" gen_call [ "correlated" "(" IDENT ("," IDENT)* ")" ]
//! type        := "string" | "integer" | "date"
//! edge_decl   := "edge" IDENT ":" IDENT arrow IDENT "{" ("structure" "=" gen_call)
//!                [ "join" "=" IDENT "~" STRING ] prop_decl* "}"
//! arrow       := "->" | "--"          # "--" = many-to-many, "->" = one-to-many
//! scale_decl  := "scale" IDENT "=" INTEGER
//! gen_call    := IDENT "(" [ arg ("," arg)* ] ")"
//! arg         := [ IDENT "=" ] (NUMBER | STRING | IDENT | PATH)
//! ```
//!
//! Bare words in argument position may contain `.` `/` `-` so dictionary
//! files can be named without quotes, e.g. `dictionary(names.csv)`.

mod lexer;
mod parser;
mod validate;

use std::fmt;

pub use parser::{parse_schema, ParseError};
pub use validate::{
    resolve_edge_dependency, validate_schema, Diagnostic, EdgeDepTarget, KnownGenerators, Severity,
};

pub use crate::store::ValueType;

/// Byte span plus the 1-based line/column of its start, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A parsed schema. `scale` is optional here; validation demands it.
#[derive(Debug, Clone, Default)]
pub struct Schema {
    pub node_types: Vec<NodeTypeDecl>,
    pub edge_types: Vec<EdgeTypeDecl>,
    pub scale: Option<ScaleDirective>,
}

impl Schema {
    pub fn node_type(&self, name: &str) -> Option<&NodeTypeDecl> {
        self.node_types.iter().find(|t| t.name == name)
    }

    pub fn edge_type(&self, name: &str) -> Option<&EdgeTypeDecl> {
        self.edge_types.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct NodeTypeDecl {
    pub name: String,
    pub properties: Vec<PropertyDecl>,
    pub span: Span,
}

impl NodeTypeDecl {
    pub fn property(&self, name: &str) -> Option<&PropertyDecl> {
        self.properties.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct PropertyDecl {
    pub name: String,
    pub value_type: ValueType,
    pub generator: GeneratorBinding,
    /// Dependency properties in declaration order; the generator receives
    /// their values in exactly this order.
    pub depends_on: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cardinality {
    OneToOne,
    OneToMany,
    ManyToMany,
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cardinality::OneToOne => "one-to-one",
            Cardinality::OneToMany => "one-to-many",
            Cardinality::ManyToMany => "many-to-many",
        })
    }
}

#[derive(Debug, Clone)]
pub struct EdgeTypeDecl {
    pub name: String,
    pub tail_type: String,
    pub head_type: String,
    pub cardinality: Cardinality,
    pub structure: GeneratorBinding,
    pub correlation: Option<CorrelationDecl>,
    pub properties: Vec<PropertyDecl>,
    pub span: Span,
}

impl EdgeTypeDecl {
    pub fn property(&self, name: &str) -> Option<&PropertyDecl> {
        self.properties.iter().find(|p| p.name == name)
    }
}

/// `join = property ~ "distribution.csv"`: the named endpoint property is
/// matched to the edge structure so connected-value pairs follow the joint
/// distribution in the file. For edges between two different node types the
/// property name is looked up on each side.
#[derive(Debug, Clone)]
pub struct CorrelationDecl {
    pub property: String,
    pub distribution_path: String,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct GeneratorBinding {
    pub generator_name: String,
    pub parameters: Vec<Param>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub key: Option<String>,
    pub value: ParamValue,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Text(s) => write!(f, "\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScaleDirective {
    pub target: String,
    pub count: u64,
    pub span: Span,
}

impl fmt::Display for GeneratorBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.generator_name)?;
        for (i, p) in self.parameters.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if let Some(key) = &p.key {
                write!(f, "{key}=")?;
            }
            write!(f, "{}", p.value)?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for PropertyDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} = {}", self.name, self.value_type, self.generator)?;
        if !self.depends_on.is_empty() {
            write!(f, " correlated({})", self.depends_on.join(", "))?;
        }
        Ok(())
    }
}

/// Canonical printing; `parse(print(s))` is structurally equal to `s`.
impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for node in &self.node_types {
            writeln!(f, "node {} {{", node.name)?;
            for p in &node.properties {
                writeln!(f, "  {p}")?;
            }
            writeln!(f, "}}")?;
        }
        for edge in &self.edge_types {
            let arrow = match edge.cardinality {
                Cardinality::ManyToMany => "--",
                _ => "->",
            };
            writeln!(f, "edge {}: {} {} {} {{", edge.name, edge.tail_type, arrow, edge.head_type)?;
            writeln!(f, "  structure = {}", edge.structure)?;
            if let Some(c) = &edge.correlation {
                writeln!(
                    f,
                    "  join = {} ~ \"{}\"",
                    c.property,
                    c.distribution_path.replace('\\', "\\\\").replace('"', "\\\"")
                )?;
            }
            for p in &edge.properties {
                writeln!(f, "  {p}")?;
            }
            writeln!(f, "}}")?;
        }
        if let Some(s) = &self.scale {
            writeln!(f, "scale {} = {}", s.target, s.count)?;
        }
        Ok(())
    }
}
