//! Recursive-descent parser for the schema DSL.
//!
//! Duplicate declarations (type names, property names within a type, a
//! second scale directive) are parse errors; everything that needs
//! cross-declaration knowledge is left to [`super::validate_schema`].

use super::lexer::{lex, Tok, Token};
use super::{
    Cardinality, CorrelationDecl, EdgeTypeDecl, GeneratorBinding, NodeTypeDecl, Param, ParamValue,
    PropertyDecl, ScaleDirective, Schema, Span, ValueType,
};

#[derive(Debug, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub message: String,
    pub span: Span,
}

impl ParseError {
    fn new(message: impl Into<String>, span: Span) -> Self {
        Self { message: message.into(), span }
    }
}

pub fn parse_schema(text: &str) -> Result<Schema, ParseError> {
    let tokens = lex(text).map_err(|e| ParseError::new(e.message, e.span))?;
    Parser { tokens, pos: 0 }.schema()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn current(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        if self.current().tok == tok {
            Ok(self.advance())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let t = self.current();
        ParseError::new(format!("expected {wanted}, found {}", t.tok.describe()), t.span)
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        match &self.current().tok {
            Tok::Ident(name) => {
                let name = name.clone();
                let span = self.current().span;
                self.advance();
                Ok((name, span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// Is the current token the given keyword (keywords are plain idents)?
    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.current().tok, Tok::Ident(s) if s == kw)
    }

    fn schema(mut self) -> Result<Schema, ParseError> {
        let mut schema = Schema::default();
        loop {
            match &self.current().tok {
                Tok::Eof => break,
                Tok::Ident(kw) if kw == "node" => {
                    let node = self.node_decl()?;
                    if schema.node_type(&node.name).is_some() || schema.edge_type(&node.name).is_some() {
                        return Err(ParseError::new(
                            format!("duplicate declaration of type `{}`", node.name),
                            node.span,
                        ));
                    }
                    schema.node_types.push(node);
                }
                Tok::Ident(kw) if kw == "edge" => {
                    let edge = self.edge_decl()?;
                    if schema.node_type(&edge.name).is_some() || schema.edge_type(&edge.name).is_some() {
                        return Err(ParseError::new(
                            format!("duplicate declaration of type `{}`", edge.name),
                            edge.span,
                        ));
                    }
                    schema.edge_types.push(edge);
                }
                Tok::Ident(kw) if kw == "scale" => {
                    let scale = self.scale_decl()?;
                    if schema.scale.is_some() {
                        return Err(ParseError::new("duplicate scale directive", scale.span));
                    }
                    schema.scale = Some(scale);
                }
                Tok::Ident(kw) => {
                    return Err(ParseError::new(
                        format!("unknown keyword `{kw}`, expected `node`, `edge` or `scale`"),
                        self.current().span,
                    ))
                }
                _ => return Err(self.unexpected("`node`, `edge` or `scale`")),
            }
        }
        Ok(schema)
    }

    fn node_decl(&mut self) -> Result<NodeTypeDecl, ParseError> {
        let kw = self.advance(); // "node"
        let (name, _) = self.ident("node type name")?;
        self.expect(Tok::LBrace)?;
        let mut properties: Vec<PropertyDecl> = Vec::new();
        while self.current().tok != Tok::RBrace {
            let prop = self.prop_decl()?;
            if properties.iter().any(|p| p.name == prop.name) {
                return Err(ParseError::new(
                    format!("duplicate declaration of property `{name}.{}`", prop.name),
                    prop.span,
                ));
            }
            properties.push(prop);
        }
        let close = self.expect(Tok::RBrace)?;
        Ok(NodeTypeDecl { name, properties, span: join(kw.span, close.span) })
    }

    fn prop_decl(&mut self) -> Result<PropertyDecl, ParseError> {
        let (name, start) = self.ident("property name")?;
        self.expect(Tok::Colon)?;
        let value_type = self.value_type()?;
        self.expect(Tok::Equals)?;
        let generator = self.gen_call()?;
        let mut depends_on = Vec::new();
        let mut end = generator.span;
        if self.at_keyword("correlated") {
            self.advance();
            self.expect(Tok::LParen)?;
            loop {
                let (dep, _) = self.ident("dependency property name")?;
                depends_on.push(dep);
                if self.current().tok == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
            end = self.expect(Tok::RParen)?.span;
        }
        Ok(PropertyDecl { name, value_type, generator, depends_on, span: join(start, end) })
    }

    fn value_type(&mut self) -> Result<ValueType, ParseError> {
        let (name, span) = self.ident("value type (`string`, `integer` or `date`)")?;
        match name.as_str() {
            "string" => Ok(ValueType::Str),
            "integer" => Ok(ValueType::Int),
            "date" => Ok(ValueType::Date),
            other => Err(ParseError::new(
                format!("unknown value type `{other}`, expected `string`, `integer` or `date`"),
                span,
            )),
        }
    }

    fn edge_decl(&mut self) -> Result<EdgeTypeDecl, ParseError> {
        let kw = self.advance(); // "edge"
        let (name, _) = self.ident("edge type name")?;
        self.expect(Tok::Colon)?;
        let (tail_type, _) = self.ident("tail node type")?;
        let cardinality = match self.current().tok {
            Tok::Arrow => Cardinality::OneToMany,
            Tok::DashDash => Cardinality::ManyToMany,
            _ => return Err(self.unexpected("`->` or `--`")),
        };
        self.advance();
        let (head_type, _) = self.ident("head node type")?;
        self.expect(Tok::LBrace)?;

        let structure_kw = self.current().span;
        if !self.at_keyword("structure") {
            return Err(self.unexpected("`structure = <generator>(...)`"));
        }
        self.advance();
        self.expect(Tok::Equals)?;
        let structure = self.gen_call()?;
        let _ = structure_kw;

        let mut correlation = None;
        if self.at_keyword("join") {
            let join_kw = self.advance();
            self.expect(Tok::Equals)?;
            let (property, _) = self.ident("correlated property name")?;
            self.expect(Tok::Tilde)?;
            let (path, path_span) = match &self.current().tok {
                Tok::Str(s) => (s.clone(), self.current().span),
                _ => return Err(self.unexpected("quoted distribution file path")),
            };
            self.advance();
            correlation = Some(CorrelationDecl {
                property,
                distribution_path: path,
                span: join(join_kw.span, path_span),
            });
        }

        let mut properties: Vec<PropertyDecl> = Vec::new();
        while self.current().tok != Tok::RBrace {
            let prop = self.prop_decl()?;
            if properties.iter().any(|p| p.name == prop.name) {
                return Err(ParseError::new(
                    format!("duplicate declaration of property `{name}.{}`", prop.name),
                    prop.span,
                ));
            }
            properties.push(prop);
        }
        let close = self.expect(Tok::RBrace)?;
        Ok(EdgeTypeDecl {
            name,
            tail_type,
            head_type,
            cardinality,
            structure,
            correlation,
            properties,
            span: join(kw.span, close.span),
        })
    }

    fn scale_decl(&mut self) -> Result<ScaleDirective, ParseError> {
        let kw = self.advance(); // "scale"
        let (target, _) = self.ident("scale target type name")?;
        self.expect(Tok::Equals)?;
        let (text, span) = match &self.current().tok {
            Tok::Number(text) => (text.clone(), self.current().span),
            _ => return Err(self.unexpected("integer count")),
        };
        self.advance();
        let count: u64 = text
            .parse()
            .map_err(|_| ParseError::new(format!("scale count must be a non-negative integer, got `{text}`"), span))?;
        Ok(ScaleDirective { target, count, span: join(kw.span, span) })
    }

    fn gen_call(&mut self) -> Result<GeneratorBinding, ParseError> {
        let (generator_name, start) = self.ident("generator name")?;
        self.expect(Tok::LParen)?;
        let mut parameters = Vec::new();
        if self.current().tok != Tok::RParen {
            loop {
                parameters.push(self.arg()?);
                if self.current().tok == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        let close = self.expect(Tok::RParen)?;
        Ok(GeneratorBinding { generator_name, parameters, span: join(start, close.span) })
    }

    fn arg(&mut self) -> Result<Param, ParseError> {
        // `IDENT =` introduces a keyed argument; otherwise positional.
        let key = if matches!(&self.current().tok, Tok::Ident(_))
            && self.tokens.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::Equals)
        {
            let (k, _) = self.ident("argument key")?;
            self.advance(); // '='
            Some(k)
        } else {
            None
        };
        let span = self.current().span;
        let value = match &self.current().tok {
            Tok::Number(text) => {
                if text.contains('.') {
                    ParamValue::Float(text.parse().map_err(|_| {
                        ParseError::new(format!("malformed number `{text}`"), span)
                    })?)
                } else {
                    ParamValue::Int(text.parse().map_err(|_| {
                        ParseError::new(format!("integer out of range `{text}`"), span)
                    })?)
                }
            }
            Tok::Str(s) => ParamValue::Text(s.clone()),
            Tok::Ident(s) => ParamValue::Text(s.clone()),
            Tok::Path(s) => ParamValue::Text(s.clone()),
            _ => return Err(self.unexpected("argument value")),
        };
        self.advance();
        Ok(Param { key, value, span })
    }
}

fn join(a: Span, b: Span) -> Span {
    Span { start: a.start, end: b.end.max(a.end), line: a.line, col: a.col }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const RUNNING_EXAMPLE: &str = r#"
# Social-network example: people who know each other and write messages.

node Person {
  country: string = dictionary(countries.csv)
  sex: string = conditional(sex_by_country.csv) correlated(country)
  name: string = conditional(names.csv) correlated(country, sex)
  interest: string = dictionary(interests.csv)
  creationDate: date = date(lo="2010-01-01", hi="2012-12-31")
}

node Message {
  topic: string = dictionary(topics.csv)
  text: string = dictionary(texts.csv)
}

edge knows: Person -- Person {
  structure = planted(avg_degree=20, max_degree=50, min_comm=10, max_comm=50, mixing=0.1)
  join = country ~ "p_country.csv"
}

edge creates: Person -> Message {
  structure = degree(d_creates.csv)
  creationDate: date = after(min=1, max=180) correlated(creationDate)
}

scale Person = 1000
"#;

    #[test]
    fn running_example_parses() {
        let s = parse_schema(RUNNING_EXAMPLE).unwrap();
        assert_eq!(s.node_types.len(), 2);
        assert_eq!(s.edge_types.len(), 2);
        let person = s.node_type("Person").unwrap();
        assert_eq!(person.properties.len(), 5);
        assert_eq!(s.node_type("Message").unwrap().properties.len(), 2);
        let knows = s.edge_type("knows").unwrap();
        assert_eq!(knows.cardinality, Cardinality::ManyToMany);
        assert_eq!(knows.correlation.as_ref().unwrap().property, "country");
        let creates = s.edge_type("creates").unwrap();
        assert_eq!(creates.cardinality, Cardinality::OneToMany);
        assert_eq!(creates.properties[0].depends_on, vec!["creationDate"]);
        assert_eq!(s.scale.as_ref().unwrap().count, 1000);
    }

    #[test]
    fn empty_input_parses_to_empty_schema() {
        let s = parse_schema("").unwrap();
        assert!(s.node_types.is_empty() && s.edge_types.is_empty() && s.scale.is_none());
    }

    #[test]
    fn schema_without_scale_parses() {
        let s = parse_schema("node Person { name: string = dictionary(names.csv) }").unwrap();
        assert!(s.scale.is_none());
        assert_eq!(s.node_types[0].properties[0].generator.generator_name, "dictionary");
        assert_eq!(
            s.node_types[0].properties[0].generator.parameters[0].value,
            ParamValue::Text("names.csv".into())
        );
    }

    #[test]
    fn unknown_keyword_is_reported_with_position() {
        let err = parse_schema("node A { }\nvertex B { }").unwrap_err();
        assert!(err.message.contains("unknown keyword `vertex`"), "{err}");
        assert_eq!((err.span.line, err.span.col), (2, 1));
    }

    #[test]
    fn syntax_error_carries_line_and_column() {
        let err = parse_schema("node A {\n  x string = g()\n}").unwrap_err();
        assert_eq!(err.span.line, 2);
        assert!(err.message.contains("expected"), "{err}");
    }

    #[test]
    fn duplicate_declarations_are_parse_errors() {
        assert!(parse_schema("node A { } node A { }")
            .unwrap_err()
            .message
            .contains("duplicate declaration of type `A`"));
        assert!(parse_schema("node A { x: string = g() x: string = g() }")
            .unwrap_err()
            .message
            .contains("duplicate declaration of property `A.x`"));
        assert!(parse_schema("node A { } scale A = 1 scale A = 2")
            .unwrap_err()
            .message
            .contains("duplicate scale"));
    }

    #[test]
    fn print_parse_round_trips() {
        let s1 = parse_schema(RUNNING_EXAMPLE).unwrap();
        let printed = s1.to_string();
        let s2 = parse_schema(&printed).unwrap();
        assert_eq!(printed, s2.to_string());
        assert_eq!(s1.node_types.len(), s2.node_types.len());
    }

    #[test]
    fn keyed_and_positional_args_coexist() {
        let s = parse_schema("node A { x: integer = uniformInt(1, hi=9) }").unwrap();
        let params = &s.node_types[0].properties[0].generator.parameters;
        assert_eq!(params[0].key, None);
        assert_eq!(params[0].value, ParamValue::Int(1));
        assert_eq!(params[1].key.as_deref(), Some("hi"));
    }

    #[test]
    fn one_to_many_requires_structure_clause() {
        let err = parse_schema("node A { } edge e: A -> A { }").unwrap_err();
        assert!(err.message.contains("structure"), "{err}");
    }
}
